"""Seeded uniform sampling from convex domains and distance statistics.

Samples are produced in fixed-size chunks, each drawing from its own
``SeedSequence`` child, and merged in chunk order. Thread-parallel and
serial runs therefore return bit-identical arrays for a given seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .domains import ConvexDomain
from .model_geometry import direction_grid, distances

CHUNK = 16384
HR_BURN_IN = 1000
HR_THIN = 10
HR_CHAINS = 16
HR_MIN_DIM = 6
MIN_ACCEPTANCE = 1e-6
DEFAULT_SAMPLES = 100_000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleStats:
    """Mean ``E`` and standard deviation ``S`` of ``d(X, x)`` for uniform ``X``."""

    x: np.ndarray
    n_samples: int
    E: float
    S: float
    se_E: float
    se_S: float

    @property
    def R(self) -> float:
        return self.E + 2.0 * self.S

    def as_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "n_samples": self.n_samples,
            "E": self.E,
            "S": self.S,
            "R": self.R,
            "se_E": self.se_E,
            "se_S": self.se_S,
        }


def sample_uniform(K: ConvexDomain, n: int, seed: int = 0, method: str = "auto") -> np.ndarray:
    """``n`` points (rows) approximately i.i.d. uniform in ``K``.

    ``method`` is ``"rejection"``, ``"hit_and_run"`` (flat space only) or
    ``"auto"``, which picks hit-and-run for flat domains of dimension >= 6.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "auto":
        method = "hit_and_run" if K.space.is_flat and K.space.dim >= HR_MIN_DIM else "rejection"
    if method == "hit_and_run":
        if not K.space.is_flat:
            raise ValueError("hit-and-run is implemented for flat space only")
        draw = _hit_and_run_chunk
    elif method == "rejection":
        draw = _rejection_chunk_flat if K.space.is_flat else _rejection_chunk_sphere
    else:
        raise ValueError(f"unknown sampling method {method!r}")

    n_chunks = -(-n // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(CHUNK, n - i * CHUNK) for i in range(n_chunks)]
    jobs = [(K, m, np.random.default_rng(s)) for m, s in zip(sizes, seqs)]
    workers = min(_kernels.thread_cap(), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: draw(*job), jobs))
    else:
        parts = [draw(*job) for job in jobs]
    return np.vstack(parts)


def _rejection_loop(K, m, propose):
    got, trials, parts = 0, 0, []
    batch = max(1024, m)
    while got < m:
        X = propose(batch)
        X = X[K.contains_batch(X, tol=0.0)]
        trials += batch
        got += X.shape[0]
        parts.append(X)
        rate = got / trials
        if trials >= 2_000_000 and rate < MIN_ACCEPTANCE:
            raise SamplingError(
                f"rejection acceptance rate {rate:.2e} is below {MIN_ACCEPTANCE:g}; use hit-and-run"
            )
        need = m - got
        batch = int(min(1_000_000, max(1024, 1.2 * need / max(rate, 1e-3))))
    return np.vstack(parts)[:m]


def _rejection_chunk_flat(K, m, rng):
    c, rad = K.bounding_ball()
    D = c.shape[0]
    return _rejection_loop(K, m, lambda k: c + rad * (2.0 * rng.random((k, D)) - 1.0))


def _rejection_chunk_sphere(K, m, rng):
    space = K.space
    c, rad = K.bounding_ball()
    s = math.sqrt(space.kappa)
    big = rad * s
    basis = space.tangent_basis(c)
    n = space.dim

    def propose(k):
        # polar angle has density sin^(n-1) on [0, big]; sin is increasing there
        th = big * rng.random(k)
        ok = rng.random(k) <= (np.sin(th) / math.sin(big)) ** (n - 1)
        g = rng.standard_normal((k, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        th = th[ok]
        V = g[ok] @ basis
        return np.cos(th)[:, None] * c + (np.sin(th) / s)[:, None] * V

    return _rejection_loop(K, m, propose)


def _hit_and_run_chunk(K, m, rng):
    prims = K.primitives
    chains = HR_CHAINS
    keep = -(-m // chains)
    steps = HR_BURN_IN + keep * HR_THIN
    D = K.space.ambient_dim
    G = rng.standard_normal((steps, chains, D))
    W = rng.random((steps, chains))
    out = _kernels.hit_and_run(prims.normals, prims.offsets, prims.centers, prims.radii,
                               K.witness, G, W, HR_BURN_IN, HR_THIN)
    return out.transpose(1, 0, 2).reshape(-1, D)[:m]


def _stats_from_distances(x, d) -> SampleStats:
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples")
    E = float(d.mean())
    S = float(d.std(ddof=1))
    m4 = float(np.mean((d - E) ** 4))
    se_S = math.sqrt(max(m4 - S**4, 0.0) / n) / (2.0 * S) if S > 0 else 0.0
    return SampleStats(x=np.array(x, dtype=float), n_samples=n, E=E, S=S, se_E=S / math.sqrt(n), se_S=se_S)


def distance_stats(K: ConvexDomain, x, n: int = DEFAULT_SAMPLES, seed: int = 0, samples=None) -> SampleStats:
    """Monte-Carlo ``E_x``, ``S_x`` (and ``R_x = E_x + 2 S_x``) with CLT standard errors."""
    x = K.space.point(x)
    X = sample_uniform(K, n, seed) if samples is None else samples
    return _stats_from_distances(x, distances(K.space, X, x))


def choose_basepoint(K: ConvexDomain, candidates, n: int = DEFAULT_SAMPLES, seed: int = 0):
    """Candidate minimizing ``E_x * S_x`` together with its statistics.

    All candidates share one sample set. Products within three combined
    standard errors of the best count as ties; ties go to the smaller ``E_x``
    when that difference is itself significant, else to list order.
    """
    candidates = [K.space.point(c) for c in candidates]
    if not candidates:
        raise ValueError("need at least one candidate")
    X = sample_uniform(K, n, seed)
    stats = [distance_stats(K, c, samples=X) for c in candidates]
    prod = [st.E * st.S for st in stats]
    se = [math.hypot(st.S * st.se_E, st.E * st.se_S) for st in stats]
    b = int(np.argmin(prod))
    tied = [i for i in range(len(stats)) if prod[i] - prod[b] <= 3.0 * math.hypot(se[i], se[b])]
    best = tied[0]
    for i in tied[1:]:
        gap = stats[best].E - stats[i].E
        if gap > 3.0 * math.hypot(stats[best].se_E, stats[i].se_E):
            best = i
    return candidates[best], stats[best]


def halfspace_concentration(K: ConvexDomain, r0: float, n: int = DEFAULT_SAMPLES, seed: int = 0,
                            cut_resolution: int = 64) -> float:
    """Largest ``1 - mu(A_r0)`` over half-space cuts ``A`` of measure 1/2.

    Only the half-space (flat) or parallel-circle (sphere) family is scanned
    and distances to ``A`` are measured to the bounding hyperplane, so the
    result is a lower estimate of the true concentration parameter.
    """
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    space = K.space
    X = sample_uniform(K, n, seed)
    c, _ = K.bounding_ball()
    U = direction_grid(space.dim, cut_resolution) @ space.tangent_basis(c)
    worst = 0.0
    for u in U:
        if space.is_flat:
            proj = X @ u
            dist = proj - np.median(proj)
        else:
            s = math.sqrt(space.kappa)
            psi = np.arccos(np.clip((X @ u) * s, -1.0, 1.0))
            dist = (np.median(psi) - psi) / s
        worst = max(worst, float(np.mean(dist >= r0)))
    return min(worst, 0.5)
