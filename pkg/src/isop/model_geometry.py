"""Metric geometry of the constant-curvature model spaces with curvature >= 0.

Euclidean space is represented by plain coordinates in R^n. The sphere of
curvature ``kappa`` is embedded extrinsically as ``{x in R^(n+1) : |x| = 1/sqrt(kappa)}``
so that distance, exponential and logarithm maps all have closed forms.

Curvature is compared to zero exactly: ``kappa == 0`` selects the flat
formulas, anything positive the spherical ones. Near-zero positive curvature
is accepted but loses precision; callers should pass 0 for flat space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ON_MANIFOLD_RTOL = 1e-12
UNIT_TOL = 1e-9


class GeometryError(ValueError):
    """Raised for inputs outside an operation's domain."""


@dataclass(frozen=True)
class ModelSpace:
    """Simply connected space of dimension ``dim`` and constant curvature ``kappa``."""

    dim: int
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise GeometryError(f"dim must be a positive integer, got {self.dim!r}")
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise GeometryError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def is_flat(self) -> bool:
        return self.kappa == 0.0

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.is_flat else self.dim + 1

    @property
    def radius(self) -> float:
        """Radius of the embedding sphere (inf when flat)."""
        return math.inf if self.is_flat else 1.0 / math.sqrt(self.kappa)

    def diameter_bound(self) -> float:
        """D_kappa: pi/sqrt(kappa) on the sphere, +inf in flat space."""
        return math.inf if self.is_flat else math.pi / math.sqrt(self.kappa)

    def convexity_radius(self) -> float:
        """Balls strictly smaller than this are strongly convex."""
        return math.inf if self.is_flat else math.pi / (2.0 * math.sqrt(self.kappa))

    def point(self, coords) -> np.ndarray:
        """Validate ``coords`` as a point of this space and return it as an array."""
        p = np.asarray(coords, dtype=float)
        if p.shape != (self.ambient_dim,):
            raise GeometryError(
                f"point needs {self.ambient_dim} coordinates, got shape {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise GeometryError("point has non-finite coordinates")
        if not self.is_flat:
            rho = self.radius
            if abs(np.linalg.norm(p) - rho) > ON_MANIFOLD_RTOL * rho * 10:
                raise GeometryError(f"point is not on the sphere of radius {rho}")
        return p

    def project(self, coords) -> np.ndarray:
        """Nearest point of the manifold (radial projection on the sphere)."""
        p = np.asarray(coords, dtype=float)
        if self.is_flat:
            return p.copy()
        return p * (self.radius / np.linalg.norm(p, axis=-1, keepdims=True))

    def pole(self) -> np.ndarray:
        """Canonical origin: 0 in flat space, ``radius * e_0`` on the sphere."""
        p = np.zeros(self.ambient_dim)
        if not self.is_flat:
            p[0] = self.radius
        return p

    def from_polar(self, direction, t: float) -> np.ndarray:
        """Point at distance ``t`` from :meth:`pole` along intrinsic ``direction`` (length ``dim``)."""
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
        o = self.pole()
        if self.is_flat:
            return o + t * u
        v = np.concatenate([[0.0], u])
        return exp_map(self, o, v, t)

    def tangent_basis(self, p) -> np.ndarray:
        """Orthonormal basis of the tangent space at ``p`` as a ``(dim, ambient_dim)`` array."""
        p = np.asarray(p, dtype=float)
        if self.is_flat:
            return np.eye(self.dim)
        return tangent_bases(p[None, :])[0]

    def check_tangent(self, p, v, unit: bool = True) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.ambient_dim,):
            raise GeometryError(
                f"tangent vector needs {self.ambient_dim} components, got shape {v.shape}"
            )
        if not self.is_flat:
            p = np.asarray(p, dtype=float)
            if abs(v @ p) > UNIT_TOL * max(1.0, self.radius) * max(1.0, np.linalg.norm(v)):
                raise GeometryError("tangent vector is not orthogonal to its base point")
        if unit and abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise GeometryError(f"expected a unit vector, got norm {np.linalg.norm(v)!r}")
        return v


def tangent_bases(P: np.ndarray) -> np.ndarray:
    """Orthonormal bases of ``P[i]^perp`` for a batch of ambient vectors.

    Uses the Householder reflection sending ``e_0`` to ``P[i]/|P[i]|``; its
    remaining columns span the orthogonal complement. Returns ``(m, D-1, D)``.
    """
    P = np.asarray(P, dtype=float)
    m, D = P.shape
    u = P / np.linalg.norm(P, axis=1, keepdims=True)
    # w = u - alpha*e0 with alpha = -sign(u0) avoids cancellation
    sign = np.where(u[:, 0] > 0, -1.0, 1.0)
    w = u.copy()
    w[:, 0] -= sign
    wn2 = np.einsum("ij,ij->i", w, w)
    eye = np.eye(D)
    H = eye[None, :, :] - 2.0 * w[:, :, None] * w[:, None, :] / wn2[:, None, None]
    return H[:, 1:, :].copy()


def _angle_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Angle between unit vectors, computed as 2*atan2(|u-v|, |u+v|)."""
    return 2.0 * np.arctan2(
        np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1)
    )


def distance(space: ModelSpace, p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.shape[-1] != space.ambient_dim:
        raise GeometryError(f"dimension mismatch: {p.shape} vs {q.shape}")
    if space.is_flat:
        return float(np.linalg.norm(p - q))
    s = math.sqrt(space.kappa)
    return float(_angle_between(p * s, q * s)) / s


def distances(space: ModelSpace, P, q) -> np.ndarray:
    """Distances from each row of ``P`` to the point ``q``."""
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    if P.shape[-1] != space.ambient_dim or q.shape != (space.ambient_dim,):
        raise GeometryError(f"dimension mismatch: {P.shape} vs {q.shape}")
    if space.is_flat:
        return np.linalg.norm(P - q, axis=-1)
    s = math.sqrt(space.kappa)
    Pu = P / np.linalg.norm(P, axis=-1, keepdims=True)
    qu = q / np.linalg.norm(q)
    return _angle_between(Pu, qu) / s


def exp_map(space: ModelSpace, p, v, t: float) -> np.ndarray:
    """Point reached after arc length ``t`` along the geodesic from ``p`` with unit velocity ``v``."""
    p = np.asarray(p, dtype=float)
    v = space.check_tangent(p, v, unit=True)
    if t < 0:
        raise GeometryError("t must be >= 0")
    if space.is_flat:
        return p + t * v
    s = math.sqrt(space.kappa)
    return p * math.cos(s * t) + v * (math.sin(s * t) / s)


def exp_maps(space: ModelSpace, P, V, t) -> np.ndarray:
    """Batch exponential map without input validation."""
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    if space.is_flat:
        return P + t * V
    s = math.sqrt(space.kappa)
    return P * np.cos(s * t) + V * (np.sin(s * t) / s)


def log_map(space: ModelSpace, p, q) -> np.ndarray:
    """Initial velocity of the minimizing geodesic from ``p`` to ``q``, scaled to length d(p, q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.shape[-1] != space.ambient_dim:
        raise GeometryError(f"dimension mismatch: {p.shape} vs {q.shape}")
    if space.is_flat:
        return q - p
    d = distance(space, p, q)
    w = q - (q @ p) / (p @ p) * p
    nw = np.linalg.norm(w)
    if d >= space.diameter_bound() * (1.0 - 1e-12):
        raise GeometryError("unique geodesic undefined: points are antipodal")
    # w vanishes for (numerically) coincident points as well; only d decides antipodality
    if d == 0.0 or nw == 0.0:
        return np.zeros_like(p)
    return w * (d / nw)


def law_of_cosines(kappa: float, b: float, c: float, gamma: float) -> float:
    """Side opposite the angle ``gamma`` in a triangle of M_kappa with adjacent sides ``b``, ``c``.

    Evaluated in haversine form, which stays accurate for near-degenerate
    triangles where the plain cosine rule loses half the digits.
    """
    if kappa < 0:
        raise GeometryError("kappa must be >= 0")
    if b < 0 or c < 0:
        raise GeometryError("side lengths must be >= 0")
    if not 0.0 <= gamma <= math.pi:
        raise GeometryError("gamma must lie in [0, pi]")
    if kappa == 0:
        a2 = (b - c) ** 2 + 4.0 * b * c * math.sin(gamma / 2.0) ** 2
        return math.sqrt(max(a2, 0.0))
    s = math.sqrt(kappa)
    if b * s > math.pi + 1e-12 or c * s > math.pi + 1e-12:
        raise GeometryError("sides must not exceed the diameter pi/sqrt(kappa)")
    hb, hc = b * s, c * s
    h = math.sin((hb - hc) / 2.0) ** 2 + math.sin(hb) * math.sin(hc) * math.sin(gamma / 2.0) ** 2
    h = min(max(h, 0.0), 1.0)
    return 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h)) / s


def _angle_from_sides(kappa: float, a: float, b: float, c: float) -> float:
    """Angle opposite side ``a`` by the half-angle formula."""
    if kappa == 0:
        s = 0.5 * (a + b + c)
        num = max((s - b) * (s - c), 0.0)
        den = max(s * (s - a), 0.0)
    else:
        k = math.sqrt(kappa)
        a, b, c = a * k, b * k, c * k
        s = 0.5 * (a + b + c)
        num = max(math.sin(s - b) * math.sin(s - c), 0.0)
        den = max(math.sin(s) * math.sin(s - a), 0.0)
    return 2.0 * math.atan2(math.sqrt(num), math.sqrt(den))


@dataclass(frozen=True)
class ComparisonTriangle:
    """Triangle in the 2-dimensional model space with prescribed side lengths.

    ``sides`` are ``(d_pq, d_qr, d_rp)``; ``vertices`` rows are ``p0, q0, r0``.
    """

    kappa: float
    sides: tuple
    vertices: np.ndarray = field(repr=False)

    @property
    def space(self) -> ModelSpace:
        return ModelSpace(2, self.kappa)

    @property
    def perimeter(self) -> float:
        return float(sum(self.sides))

    def side_endpoints(self, side_index: int):
        if side_index not in (0, 1, 2):
            raise GeometryError("side_index must be 0 (pq), 1 (qr) or 2 (rp)")
        return self.vertices[side_index], self.vertices[(side_index + 1) % 3]


def comparison_triangle(kappa: float, d_pq: float, d_qr: float, d_rp: float) -> ComparisonTriangle:
    """Realize a triangle with the given sides in M_kappa.

    ``p0`` sits at the canonical origin and ``q0`` on the first canonical axis.
    """
    space = ModelSpace(2, kappa)
    sides = (float(d_pq), float(d_qr), float(d_rp))
    if min(sides) < 0:
        raise GeometryError("side lengths must be >= 0")
    a, b, c = sides[1], sides[0], sides[2]  # a opposite p
    scale = max(sides) if max(sides) > 0 else 1.0
    tol = 1e-12 * scale
    if a > b + c + tol or b > a + c + tol or c > a + b + tol:
        raise GeometryError(f"triangle inequality violated by sides {sides}")
    if sum(sides) >= 2.0 * space.diameter_bound():
        raise GeometryError("no comparison triangle: perimeter >= 2 D_kappa")
    gamma = _angle_from_sides(kappa, a, b, c)
    p0 = space.pole()
    if space.is_flat:
        q0 = np.array([b, 0.0])
        r0 = c * np.array([math.cos(gamma), math.sin(gamma)])
    else:
        q0 = exp_map(space, p0, np.array([0.0, 1.0, 0.0]), b)
        r0 = exp_map(space, p0, np.array([0.0, math.cos(gamma), math.sin(gamma)]), c)
    return ComparisonTriangle(kappa=float(kappa), sides=sides, vertices=np.vstack([p0, q0, r0]))


def _point_on_segment(space: ModelSpace, a, b, s: float) -> np.ndarray:
    length = distance(space, a, b)
    if s < -1e-12 or s > length + 1e-12 * max(1.0, length):
        raise GeometryError(f"offset {s} outside side of length {length}")
    s = min(max(s, 0.0), length)
    if length == 0.0:
        return np.array(a, dtype=float)
    if s == length:
        return np.array(b, dtype=float)
    v = log_map(space, a, b) / length
    return exp_map(space, a, v, s)


def comparison_point(tri: ComparisonTriangle, side_index: int, s: float) -> np.ndarray:
    """Point on side ``side_index`` of ``tri`` at distance ``s`` from the side's first endpoint."""
    a, b = tri.side_endpoints(side_index)
    return _point_on_segment(tri.space, a, b, s)


def cat_inequality_check(space: ModelSpace, p, q, r, x, y, kappa: float | None = None) -> float:
    """Signed slack ``d_kappa(x0, y0) - d(x, y)`` of the CAT(kappa) comparison inequality.

    ``x`` and ``y`` are ``(side_index, offset)`` pairs locating points on the
    geodesic triangle ``pqr`` (sides 0: p->q, 1: q->r, 2: r->p). ``kappa`` is
    the comparison curvature and defaults to the curvature of ``space``.
    """
    kappa = space.kappa if kappa is None else float(kappa)
    verts = [space.point(p), space.point(q), space.point(r)]
    sides = [distance(space, verts[i], verts[(i + 1) % 3]) for i in range(3)]
    if min(sides) == 0.0:
        raise GeometryError("degenerate triangle: two vertices coincide")
    cmp_diam = math.inf if kappa == 0 else math.pi / math.sqrt(kappa)
    limit = min(cmp_diam, space.diameter_bound())
    if max(sides) >= limit or sum(sides) >= 2.0 * cmp_diam:
        raise GeometryError("triangle too large for the comparison (needs sides < D and perimeter < 2D)")
    tri = comparison_triangle(kappa, *sides)

    def locate(spec):
        side, off = spec
        a, b = verts[side], verts[(side + 1) % 3]
        return _point_on_segment(space, a, b, off), comparison_point(tri, side, off)

    xp, x0 = locate(x)
    yp, y0 = locate(y)
    return distance(tri.space, x0, y0) - distance(space, xp, yp)


def direction_grid(k: int, n: int, half: bool = False) -> np.ndarray:
    """Quasi-uniform unit vectors in R^k as an ``(n, k)`` array.

    k == 2 uses equally spaced angles (over [0, pi) when ``half``, else the
    full circle), k == 3 a spherical Fibonacci lattice, k >= 4 an unscrambled
    Halton sequence pushed through the normal quantile function.
    """
    if n < 1:
        raise GeometryError("need at least one direction")
    if k == 1:
        return np.array([[1.0]]) if half else np.array([[1.0], [-1.0]])
    if k == 2:
        span = math.pi if half else 2.0 * math.pi
        ang = span * np.arange(n) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if k == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(n)
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    from scipy.stats import norm, qmc

    h = qmc.Halton(d=k, scramble=False).random(n + 1)[1:]
    g = norm.ppf(h)
    return g / np.linalg.norm(g, axis=1, keepdims=True)
