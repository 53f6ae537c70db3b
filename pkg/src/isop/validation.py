"""Acceptance suite shared by ``isop validate`` and ``tests/test_acceptance.py``.

Each criterion returns a :class:`Criterion`; its wall-clock budget is part
of the pass condition.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from . import bounds as B
from .chords import cat_theta_bound, theta_at, theta_mean
from .domains import GeodesicBall, HalfspacePolytope
from .model_geometry import GeometryError, ModelSpace, cat_inequality_check
from .oracle import NeedleMeasure, cut_search_2d, needle_cheeger
from .sampler import distance_stats

DISC_E = 2.0 / 3.0
DISC_S = math.sqrt(1.0 / 18.0)
DISC_CUT = 4.0 / math.pi


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.name} ({self.seconds:.2f}s / {self.budget:g}s): {self.detail}"

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": self.seconds, "budget": self.budget}


def _timed(number, name, budget, fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if dt >= budget:
        ok = False
        detail += f"; over time budget ({dt:.1f}s >= {budget:g}s)"
    return Criterion(number, name, bool(ok), detail, dt, budget)


def _flat2():
    return ModelSpace(2, 0.0)


def unit_disc():
    return GeodesicBall(_flat2(), [0.0, 0.0], 1.0)


def cap(radius, kappa=1.0, dim=2):
    space = ModelSpace(dim, kappa)
    return GeodesicBall(space, space.pole(), radius)


def random_polygon(seed: int, k: int = 10) -> HalfspacePolytope:
    pts = np.random.default_rng(seed).random((k, 2))
    hull = ConvexHull(pts)
    return HalfspacePolytope(_flat2(), hull.equations[:, :2], -hull.equations[:, 2])


# ---------------------------------------------------------------- criteria


def crit_cube():
    def run():
        M = 10.0
        errs = [abs(B.concentration_bound(0.5 - r0 / M, r0).value - 2.0 / M) for r0 in (0.5, 1.0, 2.5)]
        K = HalfspacePolytope.box([0.0, 0.0], [1.0, M])
        cut = cut_search_2d(K, ("lines",)).best_value
        ok = max(errs) <= 1e-12 and abs(cut - 0.2) <= 1e-3
        return ok, f"max |bound - 0.2| = {max(errs):.3g}, cut oracle = {cut:.12g}"

    return _timed(1, "cube sharpness", 10.0, run)


def _disc_reports(n=100_000, seed=0):
    K = unit_disc()
    x0 = [0.0, 0.0]
    st = distance_stats(K, x0, n, seed)
    tm = theta_mean(K, 2000, seed)
    reps = [
        B.kls_theta_bound(tm.value, tm.std_error),
        B.bobkov_bound(K, x0, st, mode="mc", n=n, seed=seed),
        B.bobkov_bound(K, x0, st, mode="analytic", n=n, seed=seed),
    ]
    return st, reps


def crit_disc():
    def run():
        st, reps = _disc_reports()
        zE = abs(st.E - DISC_E) / st.se_E
        zS = abs(st.S - DISC_S) / st.se_S
        bad = [r.name for r in reps if not r.valid or r.value > DISC_CUT + 1e-3]
        ok = zE <= 3 and zS <= 3 and not bad
        vals = ", ".join(f"{r.name}={r.value:.5g}" for r in reps)
        return ok, f"E z={zE:.2f}, S z={zS:.2f}; {vals} vs oracle {DISC_CUT:.6f}" + (f"; failing {bad}" if bad else "")

    return _timed(2, "disc sandwich", 30.0, run)


def crit_chord_sharpness():
    def run():
        worst = 0.0
        for kappa in (0.0, 1.0, 4.0):
            radii = (0.5, 1.0) if kappa == 0 else tuple(f * math.pi / (2 * math.sqrt(kappa)) for f in (0.3, 0.6))
            space = ModelSpace(2, kappa)
            for R2 in radii:
                ball = GeodesicBall(space, space.pole(), R2)
                for R1 in (0.0, R2 / 2):
                    x = space.from_polar([1.0, 0.3], R1)
                    err = abs(theta_at(ball, x).value - cat_theta_bound(kappa, R1, R2))
                    worst = max(worst, err)
        return worst <= 1e-3, f"max |theta - bound| = {worst:.3g}"

    return _timed(3, "chord bound sharpness on balls", 20.0, run)


def crit_cat_equality(count=1000, seed=0):
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        done = 0
        skipped = 0
        for dim in (2, 3):
            space = ModelSpace(dim, 1.0)
            k = 0
            while k < count:
                P = rng.standard_normal((3, dim + 1))
                P /= np.linalg.norm(P, axis=1, keepdims=True)
                sides = [math.acos(np.clip(P[i] @ P[(i + 1) % 3], -1, 1)) for i in range(3)]
                if sum(sides) >= 2 * math.pi:
                    skipped += 1
                    continue
                i, j = (int(v) for v in rng.integers(3, size=2))
                x = (i, float(rng.random() * sides[i]))
                y = (j, float(rng.random() * sides[j]))
                try:
                    slack = cat_inequality_check(space, P[0], P[1], P[2], x, y)
                except GeometryError:
                    skipped += 1
                    continue
                worst = max(worst, abs(slack))
                k += 1
                done += 1
        return worst <= 1e-9, f"{done} triangles, max |slack| = {worst:.3g}, {skipped} redrawn"

    return _timed(4, "CAT equality on constant curvature", 5.0, run)


def crit_polygons(count=50):
    def run():
        worst = -math.inf
        fails = []
        for seed in range(count):
            K = random_polygon(seed)
            tm = theta_mean(K, 2000, seed)
            rep = B.kls_theta_bound(tm.value, tm.std_error)
            cut = cut_search_2d(K, ("lines", "arcs")).best_value
            slack = rep.value - (cut + 3.0 * rep.std_error)
            worst = max(worst, rep.value / cut)
            if slack > 0:
                fails.append(seed)
        return not fails, f"{count} polygons, max bound/oracle = {worst:.4f}" + (f"; failing seeds {fails}" if fails else "")

    return _timed(5, "random polygon sandwich", 120.0, run)


def _cap_reports(r, n=100_000, seed=0):
    K = cap(r)
    x0 = K.center
    st = distance_stats(K, x0, n, seed)
    mc = B.bobkov_bound(K, x0, st, mode="mc", n=n, seed=seed)
    an = B.bobkov_bound(K, x0, st, mode="analytic", n=n, seed=seed)
    return K, st, mc, an


def crit_caps():
    def run():
        parts = []
        ok = True
        for r in (0.3, 0.6):
            K, st, mc, an = _cap_reports(r)
            oracle = cut_search_2d(K, ("great_circles", "arcs")).best_value
            radius_ok = st.R < math.pi / 2
            for rep in (mc, an):
                ok &= rep.valid and radius_ok and rep.value <= oracle + 3.0 * rep.std_error
            parts.append(f"r={r}: R={st.R:.4f}, mc={mc.value:.5g}, analytic={an.value:.5g}, oracle={oracle:.6g}")
        return ok, "; ".join(parts)

    return _timed(6, "spherical cap sandwich", 60.0, run)


def crit_analytic_majorant():
    def run():
        parts = []
        ok = True
        _, reps = _disc_reports()
        cases = [("disc", reps[1], reps[2])]
        for r in (0.3, 0.6):
            _, _, mc, an = _cap_reports(r)
            cases.append((f"cap {r}", mc, an))
        for name, mc, an in cases:
            se = math.hypot(mc.std_error, an.std_error)
            ok &= an.value <= mc.value + 3.0 * se
            parts.append(f"{name}: analytic {an.value:.5g} <= mc {mc.value:.5g}")
        return ok, "; ".join(parts)

    return _timed(7, "analytic majorant", 60.0, run)


def crit_needles():
    def run():
        u = needle_cheeger(NeedleMeasure(10.0))
        lin = needle_cheeger(NeedleMeasure(1.0, 0.0, 1.0, 1))
        ok = u == 0.2 and abs(lin - 2.0 * math.sqrt(2.0)) <= 1e-6
        return ok, f"uniform L=10 -> {u!r}, l(s)=s m=1 -> {lin:.12g} (err {abs(lin - 2 * math.sqrt(2)):.2g})"

    return _timed(8, "needle oracle", 10.0, run)


def _cli(args, out):
    cmd = [sys.executable, "-m", "isop", *args, "--output", out]
    return subprocess.run(cmd, capture_output=True, text=True, env=os.environ.copy())


def crit_determinism():
    def run():
        cmds = [
            ["stats", "--domain", "disc", "--basepoint", "0,0", "--samples", "20000"],
            ["bound", "--domain", "disc", "--basepoint", "0,0", "--bounds", "bobkov_mc,kls_theta,kls_E",
             "--samples", "20000", "--theta-samples", "500"],
            ["oracle", "--domain", "square", "--families", "lines,arcs", "--resolution", "90"],
        ]
        same = []
        with tempfile.TemporaryDirectory() as tmp:
            for i, c in enumerate(cmds):
                blobs = []
                for rep in range(2):
                    path = os.path.join(tmp, f"{i}_{rep}.json")
                    proc = _cli(c, path)
                    if proc.returncode != 0:
                        return False, f"`{' '.join(c)}` exited {proc.returncode}: {proc.stderr.strip()[-200:]}"
                    with open(path, "rb") as fh:
                        blobs.append(fh.read())
                json.loads(blobs[0])
                same.append(blobs[0] == blobs[1])
        return all(same), f"{sum(same)}/{len(same)} commands byte-identical"

    return _timed(9, "determinism", 120.0, run)


CRITERIA = [crit_cube, crit_disc, crit_chord_sharpness, crit_cat_equality, crit_polygons, crit_caps,
            crit_analytic_majorant, crit_needles, crit_determinism]


def run_all(only=None, stream=None) -> list[Criterion]:
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        c = fn()
        out.append(c)
        if stream is not None:
            print(c.line(), file=stream, flush=True)
    return out
