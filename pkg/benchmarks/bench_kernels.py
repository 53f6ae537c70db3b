"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call of each kernel (compilation or cache load) is excluded.
"""

import argparse
import math
import time

import numpy as np

from isop import _kernels
from isop.domains import GeodesicBall, HalfspacePolytope, Intersection
from isop.model_geometry import ModelSpace, direction_grid, tangent_bases
from isop.sampler import sample_uniform


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    E2 = ModelSpace(2, 0.0)
    S2 = ModelSpace(2, 1.0)
    poly = HalfspacePolytope(E2, [[math.cos(a), math.sin(a)] for a in np.linspace(0, 2 * np.pi, 12, endpoint=False)],
                             [1.0] * 12)
    lens = Intersection([GeodesicBall(S2, [0, 0, 1], 0.6), GeodesicBall(S2, [math.sin(0.3), 0, math.cos(0.3)], 0.5)])
    rng = np.random.default_rng(0)
    out = []
    for name, K in (("12-gon", poly), ("spherical lens", lens)):
        P = sample_uniform(K, 20_000, 0)
        B = np.ascontiguousarray(np.broadcast_to(np.eye(2), (len(P), 2, 2))) if K.space.is_flat else tangent_bases(P)
        theta = rng.random(len(P)) * 2 * np.pi
        V = np.cos(theta)[:, None] * B[:, 0] + np.sin(theta)[:, None] * B[:, 1]
        args = K.primitives.args()
        out.append((f"exit_times   {name:15s} n=20000", lambda b, a=args, P=P, V=V: _kernels.exit_times(*a, P, V, backend=b)))
        Pm, Bm = P[:2000], np.ascontiguousarray(B[:2000])
        U = direction_grid(2, 512, half=True)
        cap = K.space.convexity_radius()
        out.append((f"chord_scan   {name:15s} m=2000 N=512",
                    lambda b, a=args, P=Pm, B=Bm, U=U, c=cap: _kernels.chord_scan(*a, P, B, U, c, backend=b)))
    cube = HalfspacePolytope.box([0] * 8, [1] * 8)
    G = rng.standard_normal((3000, 16, 8))
    W = rng.random((3000, 16))
    hargs = cube.primitives.args()[1:]
    out.append(("hit_and_run  8-cube          3000 steps x 16 chains",
                lambda b: _kernels.hit_and_run(*hargs, cube.witness, G, W, 1000, 10, backend=b)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':52s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for label, fn in cases():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        print(f"{label:52s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
