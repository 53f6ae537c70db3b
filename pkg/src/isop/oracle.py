"""Independent upper estimates of the Cheeger constant.

These never use the bounds machinery. Three routes:

* ``needle_cheeger``: the exact 1-D problem on an interval carrying the
  density ``l(s)^m`` with ``l`` affine. In 1-D the optimal sets are half-lines.
* ``cut_search_2d``: the best cut of measure 1/2 within a family of lines,
  circular arcs or great circles. The Cheeger constant of a convex domain
  is twice the isoperimetric profile at 1/2, so ``2 * length / area`` of any
  such cut is an upper bound.
* ``grid_cheeger_2d``: spectral sweep cuts on the 4-neighbour cell graph.

Polytopes are clipped exactly for line cuts; everything else is integrated
in polar coordinates around a centre inside ``K`` with the trapezoid rule
on ``QUAD_NODES`` rays. Chord lengths come from exact exit times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse
from scipy.sparse.linalg import eigsh

from .domains import ConvexDomain, HalfspacePolytope
from .model_geometry import exp_maps

QUAD_NODES = 4096
MEASURE_TOL = 1e-4
DEFAULT_LINE_RESOLUTION = 360
FAMILIES = ("lines", "arcs", "great_circles")


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------- needles


@dataclass(frozen=True)
class NeedleMeasure:
    """Interval ``[0, L]`` with density proportional to ``l(s)^m``, ``l`` affine from ``l0`` to ``l1``."""

    length: float
    l0: float = 1.0
    l1: float = 1.0
    m: int = 0

    def __post_init__(self):
        if not self.length > 0:
            raise OracleError("needle length must be positive")
        if self.l0 < 0 or self.l1 < 0 or (self.l0 == 0 and self.l1 == 0):
            raise OracleError("profile must be >= 0 and not identically zero")
        if self.m < 0 or int(self.m) != self.m:
            raise OracleError("exponent m must be a nonnegative integer")

    def profile(self, s):
        return self.l0 + (self.l1 - self.l0) * np.asarray(s, dtype=float) / self.length

    def _primitive(self, s):
        # integral of l^m from 0 to s, in closed form
        s = np.asarray(s, dtype=float)
        slope = (self.l1 - self.l0) / self.length
        if slope == 0:
            return self.l0 ** self.m * s
        m1 = self.m + 1
        return (self.profile(s) ** m1 - self.l0 ** m1) / (m1 * slope)

    @property
    def Z(self) -> float:
        return float(self._primitive(self.length))

    def density(self, s):
        return self.profile(s) ** self.m / self.Z

    def cdf(self, s):
        return np.clip(self._primitive(s) / self.Z, 0.0, 1.0)


def _needle_ratio(nd: NeedleMeasure, t):
    F = nd.cdf(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = nd.density(t) / np.minimum(F, 1.0 - F)
    return np.where(np.isfinite(r), r, np.inf)


def needle_cheeger(nd: NeedleMeasure, grid: int = 100_000) -> float:
    """Cheeger constant of a needle: ``min_t f(t) / min(F(t), 1 - F(t))``."""
    if not nd.Z > 0 or not math.isfinite(nd.Z):
        raise OracleError("degenerate normalisation")
    if nd.m == 0 or nd.l0 == nd.l1:
        return 2.0 / nd.length
    L = nd.length
    t = L * (np.arange(1, grid) / grid)
    r = _needle_ratio(nd, t)
    j = int(np.argmin(r))
    best = float(r[j])
    median = optimize.brentq(lambda s: float(nd.cdf(s)) - 0.5, 0.0, L, xtol=1e-15, rtol=1e-15)
    best = min(best, float(_needle_ratio(nd, median)))
    lo, hi = t[max(j - 1, 0)], t[min(j + 1, grid - 2)]
    res = optimize.minimize_scalar(lambda s: float(_needle_ratio(nd, s)), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-13})
    return min(best, float(res.fun))


# ---------------------------------------------------------------- 2-D cuts


@dataclass
class CutFamilyResult:
    best_value: float
    best_cut: dict
    family: str
    resolution: int
    by_family: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"best_value": self.best_value, "best_cut": self.best_cut, "family": self.family,
                "resolution": self.resolution, "by_family": dict(self.by_family)}


def _polygon_clip(poly, n, c):
    """Part of the convex polygon ``poly`` with ``n . x <= c`` (Sutherland-Hodgman, one plane)."""
    s = poly @ n - c
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        sp, sq = s[i], s[(i + 1) % k]
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            out.append(p + (sp / (sp - sq)) * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def _shoelace(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _chord(K, p, v):
    return float(K.exit_times(p[None, :], v[None, :])[0] + K.exit_times(p[None, :], -v[None, :])[0])


def _polar_nodes(K, z, nodes=QUAD_NODES):
    """Unit tangent directions around ``z`` and the exit times along them.

    The grid is shifted by half a cell so that no ray lies along a symmetry
    axis: a ray parallel to a cut through ``z`` makes the measure jump.
    """
    psi = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    B = K.space.tangent_basis(z)
    U = np.cos(psi)[:, None] * B[0] + np.sin(psi)[:, None] * B[1]
    e = K.exit_times(np.broadcast_to(z, U.shape), U)
    return psi, U, e


def _ring_area(kappa, t0, t1):
    """Area of the polar sector element between radii ``t0 <= t1`` per unit angle."""
    if kappa == 0:
        return 0.5 * (t1 * t1 - t0 * t0)
    s = math.sqrt(kappa)
    return (np.cos(s * t0) - np.cos(s * t1)) / kappa


def _circ(kappa, rho):
    """Circumference density of a geodesic circle of radius ``rho`` per unit angle."""
    if kappa == 0:
        return rho
    s = math.sqrt(kappa)
    return math.sin(s * rho) / s


def _line_scan_polytope(K: HalfspacePolytope, resolution):
    poly = K.vertices
    area = _shoelace(poly)

    def evaluate(phi):
        n = np.array([math.cos(phi), math.sin(phi)])
        proj = poly @ n
        lo, hi = float(proj.min()), float(proj.max())
        c = optimize.brentq(lambda c: _shoelace(_polygon_clip(poly, n, c)) / area - 0.5, lo, hi,
                            xtol=1e-14 * max(1.0, hi - lo), rtol=1e-15)
        v = np.array([-n[1], n[0]])
        p = _line_point_inside(K, n, c)
        length = _chord(K, p, v)
        frac = _shoelace(_polygon_clip(poly, n, c)) / area
        return 2.0 * length / area, {"type": "line", "angle": phi, "offset": c, "measure": frac, "length": length}

    return _scan_angles(evaluate, resolution)


def _line_point_inside(K, n, c):
    # the witness projected onto the line, pulled back along the line if it leaves K
    w = K.witness
    p = w + (c - float(n @ w)) * n
    if K.contains(p):
        return p
    v = np.array([-n[1], n[0]])
    ts = np.linspace(-1.0, 1.0, 4097) * 2.0 * K.diameter_bound()
    P = p[None, :] + ts[:, None] * v[None, :]
    m = K.primitives.margin(P)
    return P[int(np.argmax(m))]


def _line_scan_polar(K: ConvexDomain, resolution):
    w = K.witness
    psi, U, e = _polar_nodes(K, w)
    total = float(np.mean(_ring_area(0.0, 0.0, e)))

    def frac(n, h):
        nu = U @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = h / nu
        pos = nu > 0
        neg = nu < 0
        t0 = np.where(neg, np.clip(tstar, 0.0, e), 0.0)
        t1 = np.where(pos, np.clip(tstar, 0.0, e), e)
        t1 = np.where((nu == 0) & (h < 0), 0.0, t1)
        return float(np.mean(_ring_area(0.0, t0, np.maximum(t0, t1)))) / total

    def evaluate(phi):
        n = np.array([math.cos(phi), math.sin(phi)])
        reach = float(np.abs((e[:, None] * U) @ n).max())
        h = optimize.brentq(lambda h: frac(n, h) - 0.5, -reach, reach, xtol=1e-14, rtol=1e-15)
        c = h + float(n @ w)
        v = np.array([-n[1], n[0]])
        p = _line_point_inside(K, n, c)
        length = _chord(K, p, v)
        area = total * 2.0 * np.pi
        return 2.0 * length / area, {"type": "line", "angle": phi, "offset": c, "measure": frac(n, h),
                                     "length": length}

    return _scan_angles(evaluate, resolution)


def _scan_angles(evaluate, resolution, period=math.pi):
    phis = period * np.arange(resolution) / resolution
    vals = []
    cuts = []
    for phi in phis:
        v, cut = evaluate(float(phi))
        vals.append(v)
        cuts.append(cut)
    j = int(np.argmin(vals))
    best, best_cut = vals[j], cuts[j]
    h = period / resolution
    res = optimize.minimize_scalar(lambda a: evaluate(a)[0], bounds=(phis[j] - h, phis[j] + h), method="bounded",
                                   options={"xatol": 1e-10})
    if res.fun < best:
        best, best_cut = evaluate(float(res.x))
    return float(best), best_cut


def _arc_centers(K, count):
    """Candidate arc centres: polygon corners and points on the boundary, nudged into ``K``."""
    w = K.witness
    _, U, e = _polar_nodes(K, w, nodes=count)
    pts = list(_exp(K, w, U, e))
    if isinstance(K, HalfspacePolytope):
        pts = list(K.vertices) + pts
    out = []
    for p in pts:
        q = p + 1e-9 * (w - p)
        out.append(K.space.project(q) if not K.space.is_flat else q)
    return out


def _exp(K, z, U, t):
    return exp_maps(K.space, np.broadcast_to(z, U.shape), U, t)


def _arc_value(K, z, kappa):
    _, _, e = _polar_nodes(K, z)
    total = float(np.mean(_ring_area(kappa, 0.0, e)))
    emax = float(e.max())

    def frac(rho):
        return float(np.mean(_ring_area(kappa, 0.0, np.minimum(e, rho)))) / total

    if frac(emax) < 0.5:
        return math.inf, None
    rho = optimize.brentq(lambda r: frac(r) - 0.5, 0.0, emax, xtol=1e-14, rtol=1e-15)
    inside = e >= rho
    # crossing-based angular length of {e >= rho}
    d = e - rho
    nxt = np.roll(d, -1)
    full = np.where(inside & (nxt >= 0), 1.0, 0.0)
    cross = (d >= 0) != (nxt >= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        part = np.where(d >= 0, d / (d - nxt), nxt / (nxt - d))
    full = full + np.where(cross, part, 0.0)
    length = float(full.mean()) * 2.0 * np.pi * _circ(kappa, rho)
    area = total * 2.0 * np.pi
    cut = {"type": "arc", "center": [float(x) for x in z], "radius": rho, "measure": frac(rho), "length": length}
    return 2.0 * length / area, cut


def _arc_scan(K, resolution):
    kappa = K.space.kappa
    best, best_cut = math.inf, None
    for z in _arc_centers(K, max(16, resolution // 4)):
        v, cut = _arc_value(K, z, kappa)
        if v < best:
            best, best_cut = v, cut
    return best, best_cut


def _great_circle_scan(K, resolution):
    space = K.space
    s = math.sqrt(space.kappa)
    w = K.witness
    what = w * s
    E = space.tangent_basis(w)
    psi, U, e = _polar_nodes(K, w)
    tau_max = s * e
    total = float(np.mean(_ring_area(space.kappa, 0.0, e)))

    def frac(phi, alpha):
        c = np.cos(psi - phi)
        delta = np.arctan2(math.sin(alpha), math.cos(alpha) * c)
        # rays enter {x . nu <= 0} on [0, -delta] when delta <= 0, on [pi - delta, ...) otherwise
        t0 = np.where(delta <= 0, 0.0, np.minimum(np.pi - delta, tau_max))
        t1 = np.where(delta <= 0, np.minimum(-delta, tau_max), tau_max)
        return float(np.mean(_ring_area(space.kappa, t0 / s, np.maximum(t0, t1) / s))) / total

    def evaluate(phi):
        alpha = optimize.brentq(lambda a: frac(phi, a) - 0.5, -math.pi / 2, math.pi / 2, xtol=1e-14, rtol=1e-15)
        n = math.cos(phi) * E[0] + math.sin(phi) * E[1]
        nu = math.cos(alpha) * n + math.sin(alpha) * what
        length = _great_circle_length(K, nu)
        area = total * 2.0 * np.pi
        cut = {"type": "great_circle", "normal": [float(x) for x in nu], "angle": phi, "tilt": alpha,
               "measure": frac(phi, alpha), "length": length}
        return 2.0 * length / area, cut

    return _scan_angles(evaluate, resolution, period=2.0 * math.pi)


def _great_circle_length(K, nu):
    space = K.space
    s = math.sqrt(space.kappa)
    # orthonormal frame of nu^perp
    a = np.linalg.svd(nu[None, :])[2][1:]
    g = 2.0 * np.pi * np.arange(8192) / 8192
    P = (np.cos(g)[:, None] * a[0] + np.sin(g)[:, None] * a[1]) / s
    m = K.primitives.margin(P)
    j = int(np.argmax(m))
    if m[j] <= 0:
        return 0.0
    p = P[j]
    v = -math.sin(g[j]) * a[0] + math.cos(g[j]) * a[1]
    return _chord(K, p, v)


def cut_search_2d(K: ConvexDomain, families=("lines",), resolution: int = DEFAULT_LINE_RESOLUTION) -> CutFamilyResult:
    """Smallest ``2 * length(cut) / area(K)`` over measure-1/2 cuts in the given families."""
    if K.space.dim != 2:
        raise OracleError("cut_search_2d needs a 2-dimensional domain")
    families = tuple(families)
    if not families:
        raise OracleError("no cut family requested")
    flat = K.space.is_flat
    by_family = {}
    cuts = {}
    for fam in families:
        if fam not in FAMILIES:
            raise OracleError(f"unknown cut family {fam!r}")
        if fam == "lines":
            if not flat:
                raise OracleError("family 'lines' needs a flat domain; use great_circles on the sphere")
            if isinstance(K, HalfspacePolytope):
                by_family[fam], cuts[fam] = _line_scan_polytope(K, resolution)
            else:
                by_family[fam], cuts[fam] = _line_scan_polar(K, resolution)
        elif fam == "great_circles":
            if flat:
                raise OracleError("family 'great_circles' needs a spherical domain")
            by_family[fam], cuts[fam] = _great_circle_scan(K, resolution)
        else:
            by_family[fam], cuts[fam] = _arc_scan(K, resolution)
    # deterministic tie-break: family order as given
    best_fam = min(families, key=lambda f: (by_family[f], families.index(f)))
    return CutFamilyResult(float(by_family[best_fam]), cuts[best_fam], best_fam, resolution,
                           {f: float(v) for f, v in by_family.items()})


# ---------------------------------------------------------------- grid graph


def grid_cheeger_2d(K: ConvexDomain, h: float, min_cells: int = 1000, angles: int = 90) -> float:
    """Best spectral sweep cut of the 4-neighbour cell graph, as ``cut / (h * min(k, N - k))``.

    Cut length is measured in the l1 metric of the grid, so diagonal cuts are
    overestimated; the value is an upper estimate biased upward by O(h).
    """
    if K.space.dim != 2 or not K.space.is_flat:
        raise OracleError("grid_cheeger_2d needs a flat 2-dimensional domain")
    if not h > 0:
        raise OracleError("grid spacing must be positive")
    c, r = K.bounding_ball()
    nx = int(math.ceil(2 * r / h)) + 2
    xs = c[0] - r - h + h * (np.arange(nx) + 0.5)
    ys = c[1] - r - h + h * (np.arange(nx) + 0.5)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = K.contains_batch(np.column_stack([X.ravel(), Y.ravel()]), tol=0.0).reshape(nx, nx)
    N = int(inside.sum())
    if N < min_cells:
        raise OracleError(f"grid too coarse: {N} cells inside the domain, need >= {min_cells}")
    idx = -np.ones((nx, nx), dtype=np.int64)
    idx[inside] = np.arange(N)
    ei = []
    ej = []
    for a, b in ((idx[:-1, :], idx[1:, :]), (idx[:, :-1], idx[:, 1:])):
        ok = (a >= 0) & (b >= 0)
        ei.append(a[ok])
        ej.append(b[ok])
    ei = np.concatenate(ei)
    ej = np.concatenate(ej)
    W = sparse.coo_matrix((np.ones(len(ei)), (ei, ej)), shape=(N, N))
    W = (W + W.T).tocsc()
    L = sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    v0 = np.cos(np.arange(N) * 0.618)
    _, vecs = eigsh(L.tocsc(), k=3, sigma=-1e-3, which="LM", v0=v0)
    v2, v3 = vecs[:, 1], vecs[:, 2]
    best = math.inf
    for a in np.pi * np.arange(angles) / angles:
        best = min(best, _sweep(math.cos(a) * v2 + math.sin(a) * v3, ei, ej, N, h))
    return best


def _sweep(f, ei, ej, N, h):
    order = np.argsort(f, kind="stable")
    pos = np.empty(N, dtype=np.int64)
    pos[order] = np.arange(N)
    lo = np.minimum(pos[ei], pos[ej])
    hi = np.maximum(pos[ei], pos[ej])
    # edge (i, j) is cut by prefixes of size k with lo < k <= hi
    diff = np.zeros(N + 1)
    np.add.at(diff, lo + 1, 1.0)
    np.add.at(diff, hi + 1, -1.0)
    cut = np.cumsum(diff)[1:N]
    k = np.arange(1, N)
    return float((cut / (h * np.minimum(k, N - k))).min())
