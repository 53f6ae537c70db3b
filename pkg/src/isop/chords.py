"""The chord functional theta_K(x): length of the longest minimizing geodesic
inside ``K`` whose midpoint is ``x``.

``theta_at`` evaluates ``2 * max_xi min(e(x, xi), e(x, -xi), cap)`` where ``e``
is the exit time and ``cap = pi / (2 sqrt(kappa))`` keeps the chord minimizing
on the sphere. The maximum over directions is found by a grid scan followed
by local refinement, and is run over a ladder of resolutions
``N, N/2, N/4, ...`` so that doubling the resolution can never lower the
result. Values are lower estimates of the true theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .domains import ConvexDomain, DomainError
from .model_geometry import GeometryError, direction_grid, tangent_bases
from .sampler import sample_uniform

MIN_LADDER_RESOLUTION = 16
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def default_resolution(dim: int) -> int:
    return 512 if dim <= 2 else 4096


@dataclass(frozen=True)
class ThetaEstimate:
    value: float
    argmax_direction: np.ndarray
    coarse_resolution: int
    refinement_iters: int


@dataclass(frozen=True)
class ThetaMean:
    """Monte-Carlo mean of theta with its standard error."""

    value: float
    std_error: float
    n_samples: int
    resolution: int
    refinement_iters: int
    converged: bool


def _cap(K: ConvexDomain) -> float:
    return K.space.convexity_radius()


def _bases(K: ConvexDomain, P: np.ndarray) -> np.ndarray:
    if K.space.is_flat:
        return np.broadcast_to(np.eye(K.space.dim), (P.shape[0], K.space.dim, K.space.dim))
    return tangent_bases(P)


def _objective(K, P, V, cap):
    ep = K.exit_times(P, V)
    em = K.exit_times(P, -V)
    return np.minimum(np.minimum(ep, em), cap)


def _refine_2d(K, P, B, ang, best, h, iters, cap):
    """Golden-section search on the angle in ``[ang - h, ang + h]`` for every point."""

    def f(theta):
        U = np.column_stack([np.cos(theta), np.sin(theta)])
        return _objective(K, P, np.einsum("ik,ikd->id", U, B), cap), U

    a, b = ang - h, ang + h
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, Uc = f(c)
    fd, Ud = f(d)
    bestU = np.column_stack([np.cos(ang), np.sin(ang)])
    for arr_f, arr_U in ((fc, Uc), (fd, Ud)):
        up = arr_f > best
        best = np.where(up, arr_f, best)
        bestU[up] = arr_U[up]
    history = [best.copy()]
    for _ in range(iters):
        left = fc >= fd
        # keep [a, d] where the left probe is better, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        x = np.where(left, new_c, new_d)
        fx, Ux = f(x)
        fc, fd = np.where(left, fx, fd), np.where(left, fc, fx)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        up = fx > best
        best = np.where(up, fx, best)
        bestU[up] = Ux[up]
        history.append(best.copy())
    return best, bestU, history


def _refine_nd(K, P, B, U0, best, step, iters, cap):
    """Pattern search on the unit sphere of tangent directions."""
    U = U0.copy()
    k = U.shape[1]
    step = np.full(P.shape[0], step)
    history = [best.copy()]
    for _ in range(iters):
        # orthonormal frame of U^perp in R^k, per point
        frame = tangent_bases(U)
        improved = np.zeros(P.shape[0], dtype=bool)
        candU = U.copy()
        candf = best.copy()
        for j in range(k - 1):
            for sgn in (1.0, -1.0):
                W = np.cos(step)[:, None] * U + (sgn * np.sin(step))[:, None] * frame[:, j, :]
                fx = _objective(K, P, np.einsum("ik,ikd->id", W, B), cap)
                up = fx > candf
                candf = np.where(up, fx, candf)
                candU[up] = W[up]
                improved |= up
        best = candf
        U = candU
        step = np.where(improved, step, 0.5 * step)
        history.append(best.copy())
    return best, U, history


def _scan_refine(K, P, resolution, refine_iters):
    """One ladder level: grid scan plus refinement. Returns (half_chord, unit_tangent_dir, history)."""
    space = K.space
    k = space.dim
    cap = _cap(K)
    B = _bases(K, P)
    U = direction_grid(k, resolution, half=True)
    best, j = _kernels.chord_scan(*K.primitives.args(), P, np.ascontiguousarray(B), U, cap)
    if k == 1:
        return best, U[j], [best]
    if k == 2:
        ang = np.pi * j / resolution
        best, Ub, hist = _refine_2d(K, P, B, ang, best, np.pi / resolution, refine_iters, cap)
        return best, Ub, hist
    area = 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)
    step = (area / resolution) ** (1.0 / (k - 1))
    return _refine_nd(K, P, B, U[j], best, step, refine_iters, cap)


def _ladder(resolution):
    levels = [resolution]
    while levels[-1] // 2 >= MIN_LADDER_RESOLUTION:
        levels.append(levels[-1] // 2)
    return levels


def theta_batch(K: ConvexDomain, P, resolution: int | None = None, refine_iters: int = 20):
    """theta at every row of ``P``. Returns ``(values, tangent_dirs, converged)``."""
    P = np.ascontiguousarray(P, dtype=float)
    resolution = resolution or default_resolution(K.space.dim)
    best = np.full(P.shape[0], -1.0)
    bestU = None
    converged = True
    for level in _ladder(resolution):
        half, Ut, hist = _scan_refine(K, P, level, refine_iters)
        if level == resolution and len(hist) >= 2:
            prev, last = hist[-2].mean(), hist[-1].mean()
            converged = abs(last - prev) <= 1e-4 * max(abs(last), 1e-300)
        if bestU is None:
            bestU = Ut.copy()
        up = half > best
        best = np.where(up, half, best)
        bestU[up] = Ut[up]
    B = _bases(K, P)
    V = np.einsum("ik,ikd->id", bestU, B)
    return 2.0 * best, V, bool(converged)


def theta_at(K: ConvexDomain, x, resolution: int | None = None, refine_iters: int = 20) -> ThetaEstimate:
    """Longest minimizing geodesic in ``K`` centered at ``x`` (lower estimate)."""
    try:
        x = K.space.point(x)
    except GeometryError as exc:
        raise DomainError(str(exc)) from exc
    if not K.contains(x):
        raise DomainError("theta_at needs a point inside the domain")
    resolution = resolution or default_resolution(K.space.dim)
    vals, V, _ = theta_batch(K, x[None, :], resolution, refine_iters)
    return ThetaEstimate(
        value=float(vals[0]), argmax_direction=V[0], coarse_resolution=resolution, refinement_iters=refine_iters
    )


def theta_mean(K: ConvexDomain, n: int = 2000, seed: int = 0, resolution: int | None = None,
               refine_iters: int = 20) -> ThetaMean:
    """Monte-Carlo estimate of the mean of theta_K(X) for uniform X in K."""
    resolution = resolution or default_resolution(K.space.dim)
    X = sample_uniform(K, n, seed)
    vals, _, conv = theta_batch(K, X, resolution, refine_iters)
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return ThetaMean(float(vals.mean()), se, n, resolution, refine_iters, conv)


def cat_theta_bound(kappa: float, R1: float, R2: float) -> float:
    """Upper bound on theta at distance >= R1 from the center of a convex set inside B(p, R2),
    valid in CAT(kappa) spaces; attained by the ball itself in the model space."""
    if R1 < 0 or R2 < 0:
        raise ValueError("radii must be >= 0")
    if R1 > R2:
        raise ValueError("R1 must not exceed R2")
    if kappa == 0:
        return 2.0 * math.sqrt((R2 - R1) * (R2 + R1))
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    s = math.sqrt(kappa)
    if R2 * s > math.pi / 2.0 * (1.0 + 1e-15):
        raise ValueError("R2 exceeds pi/(2 sqrt(kappa)), outside the bound's hypothesis")
    ratio = math.cos(R2 * s) / math.cos(R1 * s)
    return 2.0 / s * math.acos(min(1.0, max(-1.0, ratio)))
