"""Hot inner loops: geodesic exit times, chord direction scans, hit-and-run.

Every kernel exists twice, a numba ``@njit`` version and a pure-numpy one
with identical semantics. ``ISOP_DISABLE_NUMBA=1`` (or a missing numba
install) selects the numpy path at import time; ``ISOP_THREADS`` caps the
numba thread pool.

Domains reach the kernels flattened into primitive arrays:

    kappa            curvature (0 flat, > 0 sphere in ambient coordinates)
    A (h, D), b (h)  half-spaces <a_i, x> <= b_i          (flat only)
    C (k, D), r (k)  geodesic balls d(x, c_i) <= r_i
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ISOP_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes")


def thread_cap() -> int:
    raw = os.environ.get("ISOP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


if HAVE_NUMBA:
    # the bundled TBB is too old; OpenMP is safe for calls from several Python threads
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "omp"
    numba.set_num_threads(min(thread_cap(), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------- numpy path


def exit_times_numpy(kappa, A, b, C, r, P, V):
    P = np.atleast_2d(np.asarray(P, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    P, V = np.broadcast_arrays(P, V)
    t = np.full(P.shape[:-1], np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kappa == 0.0:
            if A.shape[0]:
                av = V @ A.T
                ap = P @ A.T
                ti = np.where(av > 0.0, (b - ap) / av, np.inf)
                t = np.minimum(t, ti.min(axis=-1))
            for i in range(C.shape[0]):
                w = P - C[i]
                bb = np.einsum("...d,...d->...", V, w)
                c0 = np.einsum("...d,...d->...", w, w) - r[i] * r[i]
                disc = bb * bb - c0
                sq = np.sqrt(np.maximum(disc, 0.0))
                ti = np.where(bb > 0.0, -c0 / (bb + sq), sq - bb)
                ti = np.where((disc <= 0.0) | (c0 > 0.0), 0.0, ti)
                t = np.minimum(t, ti)
        else:
            s = math.sqrt(kappa)
            for i in range(C.shape[0]):
                alpha = kappa * (P @ C[i])
                beta = s * (V @ C[i])
                amp = np.hypot(alpha, beta)
                cr = math.cos(s * r[i])
                delta = np.arctan2(np.sqrt(np.maximum((amp - cr) * (amp + cr), 0.0)), cr)
                ti = (np.arctan2(beta, alpha) + delta) / s
                ti = np.where((amp <= cr) | (alpha < cr - 1e-12), 0.0, ti)
                t = np.minimum(t, ti)
            t = np.minimum(t, math.pi / s)
    return np.maximum(t, 0.0)


def chord_scan_numpy(kappa, A, b, C, r, P, B, U, cap):
    """Best symmetric half-chord over the direction set for every point.

    ``B`` is a ``(m, k, D)`` stack of tangent bases, ``U`` a ``(N, k)`` set of
    unit directions in tangent coordinates. Returns ``(best, argbest)``.
    """
    m = P.shape[0]
    N, k = U.shape
    D = P.shape[1]
    best = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    chunk = max(1, int(2_000_000 // max(1, N * D)))
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        V = np.einsum("jk,ikd->ijd", U, B[lo:hi])
        Pc = np.broadcast_to(P[lo:hi, None, :], V.shape)
        ep = exit_times_numpy(kappa, A, b, C, r, Pc, V)
        em = exit_times_numpy(kappa, A, b, C, r, Pc, -V)
        val = np.minimum(np.minimum(ep, em), cap)
        j = np.argmax(val, axis=1)
        arg[lo:hi] = j
        best[lo:hi] = val[np.arange(hi - lo), j]
    return best, arg


def hit_and_run_numpy(A, b, C, r, start, G, W, burn, thin):
    """Euclidean hit-and-run for ``G.shape[1]`` independent chains.

    ``G`` holds Gaussian direction draws ``(steps, chains, D)``, ``W``
    uniforms ``(steps, chains)``. Returns ``(chains, n_keep, D)``.
    """
    steps, chains, D = G.shape
    n_keep = (steps - burn) // thin
    x = np.repeat(np.asarray(start, dtype=float)[None, :], chains, axis=0)
    out = np.empty((chains, n_keep, D))
    for k in range(steps):
        d = G[k] / np.linalg.norm(G[k], axis=1, keepdims=True)
        tp = exit_times_numpy(0.0, A, b, C, r, x, d)
        tm = exit_times_numpy(0.0, A, b, C, r, x, -d)
        x = x + (W[k] * (tp + tm) - tm)[:, None] * d
        j = k - burn
        if j >= 0 and (j + 1) % thin == 0 and j // thin < n_keep:
            out[:, j // thin, :] = x
    return out


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _exit_one(kappa, A, b, C, r, p, v):
        D = p.shape[0]
        t = np.inf
        if kappa == 0.0:
            for i in range(A.shape[0]):
                av = 0.0
                ap = 0.0
                for d in range(D):
                    av += A[i, d] * v[d]
                    ap += A[i, d] * p[d]
                if av > 0.0:
                    ti = (b[i] - ap) / av
                    if ti < t:
                        t = ti
            for i in range(C.shape[0]):
                bb = 0.0
                c0 = 0.0
                for d in range(D):
                    w = p[d] - C[i, d]
                    bb += v[d] * w
                    c0 += w * w
                c0 -= r[i] * r[i]
                disc = bb * bb - c0
                if disc <= 0.0 or c0 > 0.0:
                    ti = 0.0
                else:
                    sq = math.sqrt(disc)
                    if bb > 0.0:
                        ti = -c0 / (bb + sq)
                    else:
                        ti = sq - bb
                if ti < t:
                    t = ti
        else:
            s = math.sqrt(kappa)
            for i in range(C.shape[0]):
                pc = 0.0
                vc = 0.0
                for d in range(D):
                    pc += p[d] * C[i, d]
                    vc += v[d] * C[i, d]
                alpha = kappa * pc
                beta = s * vc
                amp = math.hypot(alpha, beta)
                cr = math.cos(s * r[i])
                if amp <= cr or alpha < cr - 1e-12:
                    ti = 0.0
                else:
                    delta = math.atan2(math.sqrt(max((amp - cr) * (amp + cr), 0.0)), cr)
                    ti = (math.atan2(beta, alpha) + delta) / s
                if ti < t:
                    t = ti
            if t > math.pi / s:
                t = math.pi / s
        if t < 0.0:
            t = 0.0
        return t

    @njit(parallel=True, cache=True)
    def exit_times_numba(kappa, A, b, C, r, P, V):
        m = P.shape[0]
        out = np.empty(m)
        for i in prange(m):
            out[i] = _exit_one(kappa, A, b, C, r, P[i], V[i])
        return out

    @njit(parallel=True, cache=True)
    def chord_scan_numba(kappa, A, b, C, r, P, B, U, cap):
        m = P.shape[0]
        N, k = U.shape
        D = P.shape[1]
        best = np.empty(m)
        arg = np.empty(m, dtype=np.int64)
        for i in prange(m):
            v = np.empty(D)
            w = np.empty(D)
            bi = -1.0
            bj = 0
            for j in range(N):
                for d in range(D):
                    acc = 0.0
                    for q in range(k):
                        acc += U[j, q] * B[i, q, d]
                    v[d] = acc
                    w[d] = -acc
                val = _exit_one(kappa, A, b, C, r, P[i], v)
                if val > bi:
                    vm = _exit_one(kappa, A, b, C, r, P[i], w)
                    if vm < val:
                        val = vm
                    if val > cap:
                        val = cap
                    if val > bi:
                        bi = val
                        bj = j
            best[i] = bi
            arg[i] = bj
        return best, arg

    @njit(parallel=True, cache=True)
    def hit_and_run_numba(A, b, C, r, start, G, W, burn, thin):
        steps, chains, D = G.shape
        n_keep = (steps - burn) // thin
        out = np.empty((chains, n_keep, D))
        for c in prange(chains):
            x = start.copy()
            d = np.empty(D)
            md = np.empty(D)
            for k in range(steps):
                nrm = 0.0
                for q in range(D):
                    nrm += G[k, c, q] * G[k, c, q]
                nrm = math.sqrt(nrm)
                for q in range(D):
                    d[q] = G[k, c, q] / nrm
                    md[q] = -d[q]
                tp = _exit_one(0.0, A, b, C, r, x, d)
                tm = _exit_one(0.0, A, b, C, r, x, md)
                step = W[k, c] * (tp + tm) - tm
                for q in range(D):
                    x[q] += step * d[q]
                j = k - burn
                if j >= 0 and (j + 1) % thin == 0 and j // thin < n_keep:
                    for q in range(D):
                        out[c, j // thin, q] = x[q]
        return out


# ---------------------------------------------------------------- dispatch


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def exit_times(kappa, A, b, C, r, P, V, backend: str | None = None) -> np.ndarray:
    """Exit times for rows of ``P`` moving with unit velocities ``V`` (same shape)."""
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    shape = np.broadcast_shapes(P.shape, V.shape)
    if _use_numba(backend):
        P2 = _f(np.broadcast_to(P, shape).reshape(-1, shape[-1]))
        V2 = _f(np.broadcast_to(V, shape).reshape(-1, shape[-1]))
        out = exit_times_numba(float(kappa), _f(A), _f(b), _f(C), _f(r), P2, V2)
        return out.reshape(shape[:-1])
    return exit_times_numpy(float(kappa), A, b, C, r, P, V).reshape(shape[:-1])


def chord_scan(kappa, A, b, C, r, P, B, U, cap, backend: str | None = None):
    cap = float(min(cap, 1e300))
    if _use_numba(backend):
        return chord_scan_numba(float(kappa), _f(A), _f(b), _f(C), _f(r), _f(P), _f(B), _f(U), cap)
    return chord_scan_numpy(float(kappa), A, b, C, r, P, B, U, cap)


def hit_and_run(A, b, C, r, start, G, W, burn: int, thin: int, backend: str | None = None):
    if _use_numba(backend):
        return hit_and_run_numba(_f(A), _f(b), _f(C), _f(r), _f(start), _f(G), _f(W), int(burn), int(thin))
    return hit_and_run_numpy(A, b, C, r, start, G, W, burn, thin)


def _use_numba(backend: str | None) -> bool:
    if backend is None:
        return USE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
