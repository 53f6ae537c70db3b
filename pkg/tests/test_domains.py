import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isop.domains import (DomainError, GeodesicBall, HalfspacePolytope, Intersection, SchemaError, domain_from_json,
                          domain_to_json, intersect_ball)
from isop.model_geometry import ModelSpace

E2 = ModelSpace(2, 0.0)
S2 = ModelSpace(2, 1.0)


def brute_exit(K, p, v, tmax=10.0, steps=200_000):
    t = np.linspace(0, tmax, steps)
    if K.space.is_flat:
        P = p + t[:, None] * v
    else:
        P = np.cos(t)[:, None] * p + np.sin(t)[:, None] * v
    inside = K.contains_batch(P, tol=0.0)
    k = np.argmin(inside) if not inside.all() else steps - 1
    return t[k]


def test_square_basics():
    K = HalfspacePolytope.box([0, 0], [1, 1])
    assert np.allclose(K.witness, [0.5, 0.5])
    c, r = K.bounding_ball()
    assert np.allclose(c, [0.5, 0.5]) and r == pytest.approx(math.sqrt(0.5))
    assert K.exit_time([0.5, 0.5], [1, 0]) == pytest.approx(0.5)
    assert K.contains([1.0, 1.0]) and not K.contains([1.1, 0.5])


def test_unbounded_polytope_rejected():
    with pytest.raises(DomainError):
        HalfspacePolytope(E2, [[1, 0], [0, 1]], [1, 1])


def test_empty_polytope_rejected():
    with pytest.raises(DomainError):
        HalfspacePolytope(E2, [[1, 0], [-1, 0], [0, 1], [0, -1]], [0, -1, 1, 0])


def test_large_cap_rejected():
    with pytest.raises(DomainError):
        GeodesicBall(S2, [0, 0, 1], math.pi / 2)


def test_cap_exit_time_from_center():
    K = GeodesicBall(S2, [0, 0, 1], 0.5)
    assert K.exit_time([0, 0, 1], [1, 0, 0]) == pytest.approx(0.5, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.25, 0.25), st.floats(-0.25, 0.25), st.floats(0, 2 * math.pi))
def test_exit_time_matches_bruteforce_lens(x, y, ang):
    K = Intersection([GeodesicBall(E2, [-0.5, 0], 1.0), GeodesicBall(E2, [0.5, 0], 1.0)])
    p = np.array([x, y])
    v = np.array([math.cos(ang), math.sin(ang)])
    assert K.exit_time(p, v) == pytest.approx(brute_exit(K, p, v, 3.0), abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(0, 2 * math.pi))
def test_exit_time_matches_bruteforce_cap_polygon(a, b, ang):
    K = Intersection([GeodesicBall(S2, [0, 0, 1], 0.6), GeodesicBall(S2, [math.sin(0.3), 0, math.cos(0.3)], 0.5)])
    w = K.witness
    B = S2.tangent_basis(w)
    p = S2.project(w + a * B[0] + b * B[1])
    if not K.contains(p):
        return
    Bp = S2.tangent_basis(p)
    v = math.cos(ang) * Bp[0] + math.sin(ang) * Bp[1]
    assert K.exit_time(p, v) == pytest.approx(brute_exit(K, p, v, 2.0), abs=1e-4)


def test_intersect_ball_membership():
    K = intersect_ball(HalfspacePolytope.box([0, 0], [1, 1]), [0, 0], 0.5)
    assert K.contains([0.3, 0.3]) and not K.contains([0.45, 0.45])
    with pytest.raises(DomainError):
        intersect_ball(GeodesicBall(S2, [0, 0, 1], 0.5), [0, 0, 1], math.pi / 2)


def test_hypothesis_flags():
    assert GeodesicBall(E2, [0, 0], 1).hypothesis().any()
    h = GeodesicBall(S2, [0, 0, 1], 0.3).hypothesis()
    assert h.strongly_convex and h.synge_ok
    assert not GeodesicBall(ModelSpace(3, 1.0), [0, 0, 0, 1], 0.3).hypothesis().synge_ok


@pytest.mark.parametrize("doc", [
    {"space": {"kind": "euclidean", "dim": 2}, "shape": {"kind": "ball", "center": [0, 0], "radius": 1}},
    {"space": {"kind": "sphere", "dim": 2, "kappa": 1}, "shape": {"kind": "ball", "center": [0, 0, 1], "radius": 0.4}},
    {"space": {"kind": "euclidean", "dim": 2},
     "shape": {"kind": "intersection", "parts": [
         {"kind": "polytope", "normals": [[1, 0], [-1, 0], [0, 1], [0, -1]], "offsets": [1, 1, 1, 1]},
         {"kind": "ball", "center": [0.5, 0], "radius": 1}]}},
])
def test_json_roundtrip(doc):
    K = domain_from_json(doc)
    K2 = domain_from_json(json.loads(json.dumps(domain_to_json(K))))
    P = np.random.default_rng(0).standard_normal((200, K.space.ambient_dim))
    if not K.space.is_flat:
        P = K.space.project(P)
    assert np.array_equal(K.contains_batch(P), K2.contains_batch(P))


@pytest.mark.parametrize("doc, path", [
    ({"shape": {}}, "$.space"),
    ({"space": {"kind": "hyperbolic", "dim": 2}, "shape": {}}, "$.space.kind"),
    ({"space": {"kind": "sphere", "dim": 2, "kappa": -1}, "shape": {}}, "$.space.kappa"),
    ({"space": {"kind": "euclidean", "dim": 2}, "shape": {"kind": "ball", "center": [0, 0], "radius": "x"}},
     "$.shape.radius"),
    ({"space": {"kind": "euclidean", "dim": 2},
      "shape": {"kind": "intersection", "parts": [{"kind": "ball", "center": [0], "radius": 1}]}},
     "$.shape.parts[0].center"),
    ({"space": {"kind": "euclidean", "dim": 2}, "shape": {"kind": "cone"}}, "$.shape.kind"),
])
def test_schema_errors_carry_json_path(doc, path):
    with pytest.raises(SchemaError) as exc:
        domain_from_json(doc)
    assert exc.value.path == path
