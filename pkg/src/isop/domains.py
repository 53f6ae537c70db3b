"""Geodesically convex bounded domains in the model spaces.

Three shapes are supported: H-representation polytopes (flat space only),
geodesic balls, and intersections of those. Every domain flattens to a set
of primitive constraints (half-spaces and balls) which is what the numeric
kernels consume.

Spherical domains are balls and intersections of balls of radius below
``pi / (2 sqrt(kappa))``, so every spherical domain sits inside the
strong-convexity regime by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.optimize

from . import _kernels
from .model_geometry import GeometryError, ModelSpace, distances, tangent_bases

BOUNDARY_TOL = 1e-9


class DomainError(ValueError):
    """Invalid domain construction or a point outside a domain."""


@dataclass(frozen=True)
class Primitives:
    """Flattened constraint arrays for the kernels."""

    kappa: float
    normals: np.ndarray
    offsets: np.ndarray
    centers: np.ndarray
    radii: np.ndarray

    def args(self):
        return self.kappa, self.normals, self.offsets, self.centers, self.radii

    def margin(self, P) -> np.ndarray:
        """Signed distance-like depth: positive inside, negative outside."""
        P = np.atleast_2d(P)
        m = np.full(P.shape[0], np.inf)
        if self.normals.shape[0]:
            m = np.minimum(m, (self.offsets - P @ self.normals.T).min(axis=1))
        space = ModelSpace(P.shape[1] if self.kappa == 0 else P.shape[1] - 1, self.kappa)
        for c, rad in zip(self.centers, self.radii):
            m = np.minimum(m, rad - distances(space, P, c))
        return m


@dataclass(frozen=True)
class HypothesisClass:
    """Which curvature/topology hypotheses of the Bobkov-type bound hold."""

    strongly_convex: bool
    injectivity_ok: bool
    loop_length_ok: bool
    synge_ok: bool

    def any(self) -> bool:
        return self.strongly_convex or self.injectivity_ok or self.loop_length_ok or self.synge_ok

    def as_dict(self) -> dict:
        return {
            "strongly_convex": self.strongly_convex,
            "injectivity_ok": self.injectivity_ok,
            "loop_length_ok": self.loop_length_ok,
            "synge_ok": self.synge_ok,
        }


class ConvexDomain:
    """Base class; subclasses set ``space`` and implement the shape-specific parts."""

    space: ModelSpace

    # subclasses provide: primitives, witness, bounding_ball(), to_json()

    def contains(self, p) -> bool:
        p = self._check_point(p)
        return bool(self.contains_batch(p[None, :])[0])

    def contains_batch(self, P, tol: float = BOUNDARY_TOL) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        if P.ndim != 2 or P.shape[1] != self.space.ambient_dim:
            raise DomainError(f"points must have shape (m, {self.space.ambient_dim})")
        return self.primitives.margin(P) >= -tol

    def exit_time(self, p, v) -> float:
        """First time the unit-speed geodesic from ``p`` with velocity ``v`` leaves the domain."""
        p = self._check_point(p)
        v = self.space.check_tangent(p, v, unit=True)
        if not self.contains(p):
            raise DomainError("exit_time needs a base point inside the domain")
        return float(self.exit_times(p[None, :], v[None, :])[0])

    def exit_times(self, P, V) -> np.ndarray:
        """Batch exit times without validation."""
        return _kernels.exit_times(*self.primitives.args(), P, V)

    def hypothesis(self) -> HypothesisClass:
        space = self.space
        if space.is_flat:
            return HypothesisClass(True, True, True, False)
        # round sphere: inj = pi/sqrt(kappa), shortest closed geodesic 2 pi/sqrt(kappa)
        return HypothesisClass(True, True, True, space.dim % 2 == 0)

    def _check_point(self, p) -> np.ndarray:
        try:
            return self.space.point(p)
        except GeometryError as exc:
            raise DomainError(str(exc)) from exc

    def _check_bounded_convex(self):
        _, rad = self.bounding_ball()
        if not math.isfinite(rad):
            raise DomainError("domain is unbounded")
        if not self.space.is_flat and rad >= self.space.convexity_radius():
            raise DomainError(
                "spherical domains must lie in a ball of radius < pi/(2 sqrt(kappa))"
            )

    def diameter_bound(self) -> float:
        return 2.0 * self.bounding_ball()[1]


class HalfspacePolytope(ConvexDomain):
    """Bounded polytope ``{x : <a_i, x> <= b_i}`` in flat space."""

    def __init__(self, space: ModelSpace, normals, offsets):
        if not space.is_flat:
            raise DomainError("half-space polytopes are only supported in flat space")
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if A.shape != (b.shape[0], space.dim):
            raise DomainError(f"normals must have shape ({b.shape[0]}, {space.dim}), got {A.shape}")
        nrm = np.linalg.norm(A, axis=1)
        if np.any(nrm == 0) or not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise DomainError("normals must be finite and nonzero")
        self.space = space
        self.normals = A / nrm[:, None]
        self.offsets = b / nrm
        self._check_lp_bounded()
        center, depth = _chebyshev_center(self.normals, self.offsets)
        if depth <= BOUNDARY_TOL:
            raise DomainError("polytope has empty interior")
        self.witness = center
        self._check_bounded_convex()

    @classmethod
    def box(cls, lower, upper) -> "HalfspacePolytope":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        n = lo.shape[0]
        A = np.vstack([-np.eye(n), np.eye(n)])
        return cls(ModelSpace(n, 0.0), A, np.concatenate([-lo, hi]))

    @cached_property
    def primitives(self) -> Primitives:
        D = self.space.ambient_dim
        return Primitives(0.0, self.normals, self.offsets, np.zeros((0, D)), np.zeros(0))

    def _check_lp_bounded(self):
        n = self.space.dim
        for i in range(n):
            for sgn in (1.0, -1.0):
                c = np.zeros(n)
                c[i] = -sgn
                res = scipy.optimize.linprog(c, A_ub=self.normals, b_ub=self.offsets, bounds=(None, None))
                if res.status == 3:
                    raise DomainError("polytope is unbounded")
                if res.status == 2:
                    raise DomainError("polytope is empty")
                if res.status != 0:
                    raise DomainError(f"boundedness LP failed: {res.message}")

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertex enumeration; rows ordered counter-clockwise in dimension 2."""
        from scipy.spatial import HalfspaceIntersection

        hs = np.hstack([self.normals, -self.offsets[:, None]])
        V = HalfspaceIntersection(hs, self.witness).intersections
        V = _unique_rows(V)
        if self.space.dim == 2:
            c = V.mean(axis=0)
            V = V[np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))]
        return V

    def bounding_ball(self):
        V = self.vertices
        center = 0.5 * (V.min(axis=0) + V.max(axis=0))
        return center, float(np.linalg.norm(V - center, axis=1).max())

    def to_json(self) -> dict:
        return {
            "space": _space_json(self.space),
            "shape": {"kind": "polytope", "normals": self.normals.tolist(), "offsets": self.offsets.tolist()},
        }


class GeodesicBall(ConvexDomain):
    """Open geodesic ball ``B(center, radius)`` (membership is boundary inclusive)."""

    def __init__(self, space: ModelSpace, center, radius: float):
        if not radius > 0 or not math.isfinite(radius):
            raise DomainError("ball radius must be positive and finite")
        self.space = space
        try:
            self.center = space.point(center)
        except GeometryError as exc:
            raise DomainError(str(exc)) from exc
        self.radius = float(radius)
        self.witness = self.center.copy()
        self._check_bounded_convex()

    @cached_property
    def primitives(self) -> Primitives:
        D = self.space.ambient_dim
        return Primitives(
            self.space.kappa, np.zeros((0, D)), np.zeros(0), self.center[None, :].copy(), np.array([self.radius])
        )

    def bounding_ball(self):
        return self.center.copy(), self.radius

    def to_json(self) -> dict:
        return {
            "space": _space_json(self.space),
            "shape": {"kind": "ball", "center": self.center.tolist(), "radius": self.radius},
        }


class Intersection(ConvexDomain):
    """Intersection of convex domains living in one space."""

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise DomainError("intersection needs at least one part")
        self.space = parts[0].space
        flat = []
        for part in parts:
            if part.space != self.space:
                raise DomainError("intersection parts live in different spaces")
            flat.extend(part.parts if isinstance(part, Intersection) else [part])
        self.parts = tuple(flat)
        self.witness = self._find_witness()
        self._check_bounded_convex()

    @cached_property
    def primitives(self) -> Primitives:
        prims = [p.primitives for p in self.parts]
        return Primitives(
            self.space.kappa,
            np.vstack([p.normals for p in prims]),
            np.concatenate([p.offsets for p in prims]),
            np.vstack([p.centers for p in prims]),
            np.concatenate([p.radii for p in prims]),
        )

    def bounding_ball(self):
        balls = [p.bounding_ball() for p in self.parts]
        i = min(range(len(balls)), key=lambda k: balls[k][1])
        return balls[i][0].copy(), balls[i][1]

    def _find_witness(self) -> np.ndarray:
        prims = self.primitives
        starts = [p.witness for p in self.parts]
        best_p, best_m = None, -np.inf
        for s in starts:
            p, m = _maximize_margin(self.space, prims, s)
            if m > best_m:
                best_p, best_m = p, m
        if best_m <= BOUNDARY_TOL:
            raise DomainError("intersection has empty interior")
        return best_p

    def to_json(self) -> dict:
        return {
            "space": _space_json(self.space),
            "shape": {"kind": "intersection", "parts": [p.to_json()["shape"] for p in self.parts]},
        }


def intersect_ball(K: ConvexDomain, x0, R: float) -> Intersection:
    """``K ∩ B(x0, R)``; on the sphere ``R`` must stay below ``pi / (2 sqrt(kappa))``."""
    space = K.space
    if not space.is_flat and R >= space.convexity_radius():
        raise DomainError("ball radius must be < pi/(2 sqrt(kappa)) to stay convex")
    return Intersection([K, GeodesicBall(space, x0, R)])


# ---------------------------------------------------------------- helpers


def _chebyshev_center(A, b):
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = scipy.optimize.linprog(
        c, A_ub=np.hstack([A, np.ones((A.shape[0], 1))]), b_ub=b, bounds=[(None, None)] * n + [(0, None)]
    )
    if res.status != 0:
        raise DomainError(f"cannot find an interior point: {res.message}")
    return res.x[:-1], float(res.x[-1])


def _maximize_margin(space: ModelSpace, prims: Primitives, start):
    """Deepest interior point by Nelder-Mead on a chart around ``start``."""
    start = np.asarray(start, dtype=float)
    if space.is_flat:
        to_point = lambda y: start + y  # noqa: E731
    else:
        basis = tangent_bases(start[None, :])[0]
        to_point = lambda y: space.project(start + y @ basis)  # noqa: E731
    f = lambda y: -float(prims.margin(to_point(y)[None, :])[0])  # noqa: E731
    scale = max(1e-3, abs(f(np.zeros(space.dim))))
    simplex = np.vstack([np.zeros(space.dim), scale * np.eye(space.dim)])
    res = scipy.optimize.minimize(
        f, np.zeros(space.dim), method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000 * space.dim},
    )
    y = res.x if res.fun <= f(np.zeros(space.dim)) else np.zeros(space.dim)
    p = to_point(y)
    return p, float(prims.margin(p[None, :])[0])


def _unique_rows(V, tol=1e-10):
    keep = []
    for v in V:
        if not any(np.linalg.norm(v - k) <= tol * max(1.0, np.linalg.norm(v)) for k in keep):
            keep.append(v)
    return np.array(keep)


# ---------------------------------------------------------------- JSON schema


class SchemaError(ValueError):
    """Domain JSON does not match the schema; ``path`` locates the offending node."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _space_json(space: ModelSpace) -> dict:
    kind = "euclidean" if space.is_flat else "sphere"
    return {"kind": kind, "dim": space.dim, "kappa": space.kappa}


def _req(obj, key, path):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return obj[key]


def _number(x, path):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(path, "expected a number")
    return float(x)


def _vector(x, n, path):
    if not isinstance(x, list) or len(x) != n:
        raise SchemaError(path, f"expected a list of {n} numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(x)]


def parse_space(obj, path="$.space") -> ModelSpace:
    kind = _req(obj, "kind", path)
    dim = _req(obj, "dim", path)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"{path}.dim", "expected a positive integer")
    if kind == "euclidean":
        kappa = _number(obj.get("kappa", 0.0), f"{path}.kappa")
        if kappa != 0.0:
            raise SchemaError(f"{path}.kappa", "euclidean space has kappa 0")
    elif kind == "sphere":
        kappa = _number(_req(obj, "kappa", path), f"{path}.kappa")
        if not kappa > 0:
            raise SchemaError(f"{path}.kappa", "sphere needs kappa > 0")
    else:
        raise SchemaError(f"{path}.kind", "expected 'euclidean' or 'sphere'")
    return ModelSpace(dim, kappa)


def parse_shape(space: ModelSpace, obj, path="$.shape") -> ConvexDomain:
    kind = _req(obj, "kind", path)
    D = space.ambient_dim
    try:
        if kind == "polytope":
            normals = _req(obj, "normals", path)
            offsets = _req(obj, "offsets", path)
            if not isinstance(normals, list) or not normals:
                raise SchemaError(f"{path}.normals", "expected a non-empty list")
            if not isinstance(offsets, list) or len(offsets) != len(normals):
                raise SchemaError(f"{path}.offsets", "expected one offset per normal")
            A = [_vector(a, space.dim, f"{path}.normals[{i}]") for i, a in enumerate(normals)]
            b = [_number(v, f"{path}.offsets[{i}]") for i, v in enumerate(offsets)]
            return HalfspacePolytope(space, A, b)
        if kind == "ball":
            c = _vector(_req(obj, "center", path), D, f"{path}.center")
            rad = _number(_req(obj, "radius", path), f"{path}.radius")
            return GeodesicBall(space, c, rad)
        if kind == "intersection":
            parts = _req(obj, "parts", path)
            if not isinstance(parts, list) or not parts:
                raise SchemaError(f"{path}.parts", "expected a non-empty list")
            return Intersection([parse_shape(space, p, f"{path}.parts[{i}]") for i, p in enumerate(parts)])
    except (DomainError, GeometryError) as exc:
        raise SchemaError(path, str(exc)) from exc
    raise SchemaError(f"{path}.kind", "expected 'polytope', 'ball' or 'intersection'")


def domain_from_json(obj) -> ConvexDomain:
    space = parse_space(_req(obj, "space", "$"))
    return parse_shape(space, _req(obj, "shape", "$"))


def domain_to_json(K: ConvexDomain) -> dict:
    return K.to_json()
