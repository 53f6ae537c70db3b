import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isop.model_geometry import (GeometryError, ModelSpace, cat_inequality_check, comparison_point,
                                 comparison_triangle, direction_grid, distance, exp_map, law_of_cosines, log_map,
                                 tangent_bases)

unit = st.floats(-1, 1, allow_nan=False)


def sphere_point(rng_vals, dim, kappa=1.0):
    v = np.asarray(rng_vals[: dim + 1], dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-3:
        return None
    return v / n / math.sqrt(kappa)


def test_sphere_distance_quarter_circle():
    S2 = ModelSpace(2, 1.0)
    assert distance(S2, [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2, abs=1e-15)
    S2k = ModelSpace(2, 4.0)
    assert distance(S2k, [0.5, 0, 0], [0, 0.5, 0]) == pytest.approx(math.pi / 4, abs=1e-15)


def test_point_validation():
    with pytest.raises(GeometryError):
        ModelSpace(2, 1.0).point([1, 1, 0])
    with pytest.raises(GeometryError):
        ModelSpace(2, 0.0).point([1, 1, 0])


def test_log_map_antipodal_raises():
    with pytest.raises(GeometryError):
        log_map(ModelSpace(2, 1.0), [1, 0, 0], [-1, 0, 0])


@settings(max_examples=60, deadline=None)
@given(st.lists(unit, min_size=8, max_size=8), st.sampled_from([1.0, 4.0]), st.sampled_from([2, 3]))
def test_exp_log_roundtrip(vals, kappa, dim):
    space = ModelSpace(dim, kappa)
    p = sphere_point(vals[:4], dim, kappa)
    q = sphere_point(vals[4:], dim, kappa)
    if p is None or q is None or distance(space, p, q) > 0.95 * math.pi / math.sqrt(kappa):
        return
    v = log_map(space, p, q)
    t = np.linalg.norm(v)
    if t < 1e-9:
        return
    back = exp_map(space, p, v / t, t)
    assert np.allclose(back, q, atol=1e-10)
    assert t == pytest.approx(distance(space, p, q), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 1.5), st.floats(0.01, 1.5), st.floats(0.01, math.pi - 0.01), st.sampled_from([0.0, 1.0]))
def test_law_of_cosines_matches_embedded_triangle(b, c, gamma, kappa):
    space = ModelSpace(2, kappa)
    p = space.pole()
    q = space.from_polar([1.0, 0.0], b)
    r = space.from_polar([math.cos(gamma), math.sin(gamma)], c)
    assert law_of_cosines(kappa, b, c, gamma) == pytest.approx(distance(space, q, r), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.sampled_from([0.0, 1.0, 4.0]))
def test_comparison_triangle_has_requested_sides(a, b, c, kappa):
    sides = sorted([a, b, c])
    if sides[2] >= sides[0] + sides[1] - 1e-6:
        return
    if kappa > 0 and sum(sides) >= 2 * math.pi / math.sqrt(kappa):
        return
    tri = comparison_triangle(kappa, a, b, c)
    V = tri.vertices
    got = [distance(tri.space, V[i], V[(i + 1) % 3]) for i in range(3)]
    assert np.allclose(got, [a, b, c], atol=1e-10)


def test_comparison_triangle_rejects_bad_sides():
    with pytest.raises(GeometryError):
        comparison_triangle(0.0, 1.0, 1.0, 3.0)
    with pytest.raises(GeometryError):
        comparison_triangle(1.0, 2.5, 2.5, 2.5)


def test_comparison_point_endpoints():
    tri = comparison_triangle(0.0, 3.0, 4.0, 5.0)
    assert np.allclose(comparison_point(tri, 0, 0.0), tri.vertices[0])
    assert np.allclose(comparison_point(tri, 0, 3.0), tri.vertices[1])


@settings(max_examples=100, deadline=None)
@given(st.lists(unit, min_size=16, max_size=16), st.floats(0, 1), st.floats(0, 1), st.integers(0, 2),
       st.integers(0, 2))
def test_cat_check_is_zero_on_model_space(vals, s1, s2, i, j):
    space = ModelSpace(3, 1.0)
    P = [sphere_point(vals[4 * k: 4 * k + 4], 3) for k in range(3)]
    if any(p is None for p in P):
        return
    sides = [distance(space, P[k], P[(k + 1) % 3]) for k in range(3)]
    if min(sides) < 1e-3 or max(sides) > math.pi - 1e-3 or sum(sides) >= 2 * math.pi - 1e-3:
        return
    try:
        slack = cat_inequality_check(space, *P, (i, s1 * sides[i]), (j, s2 * sides[j]))
    except GeometryError:
        return
    assert abs(slack) <= 1e-9


def test_sphere_fails_cat_zero_but_meets_cat_one():
    # an octant triangle is fatter than its flat comparison triangle
    S2 = ModelSpace(2, 1.0)
    p, q, r = [1, 0, 0], [0, 1, 0], [0, 0, 1]
    slack = cat_inequality_check(S2, p, q, r, (0, math.pi / 4), (1, math.pi / 4), kappa=0.0)
    assert slack < 0
    assert cat_inequality_check(S2, p, q, r, (0, math.pi / 4), (1, math.pi / 4), kappa=1.0) == pytest.approx(0, abs=1e-12)


def test_tangent_bases_orthonormal():
    P = np.random.default_rng(1).standard_normal((50, 4))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    B = tangent_bases(P)
    assert B.shape == (50, 3, 4)
    assert np.allclose(np.einsum("ikd,id->ik", B, P), 0, atol=1e-12)
    assert np.allclose(np.einsum("ikd,ijd->ikj", B, B), np.eye(3), atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_direction_grid_unit(k):
    U = direction_grid(k, 64)
    assert U.shape == (64, k) if k > 1 else U.shape[1] == 1
    assert np.allclose(np.linalg.norm(U, axis=1), 1)


def test_log_map_nearly_coincident_points():
    v = log_map(ModelSpace(2, 1.0), [1, 0, 1.5e-158], [1, 0, 0])
    assert np.linalg.norm(v) < 1e-150
