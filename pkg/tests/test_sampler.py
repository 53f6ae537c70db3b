import math

import numpy as np
import pytest

from isop.domains import GeodesicBall, HalfspacePolytope
from isop.model_geometry import ModelSpace, distances
from isop.sampler import (SampleStats, choose_basepoint, distance_stats, halfspace_concentration, sample_uniform)
from reference import FROZEN

E2 = ModelSpace(2, 0.0)


def disc():
    return GeodesicBall(E2, [0, 0], 1.0)


def test_deterministic_and_seed_dependent():
    a = sample_uniform(disc(), 5000, seed=3)
    b = sample_uniform(disc(), 5000, seed=3)
    c = sample_uniform(disc(), 5000, seed=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_prefix_stable_across_n():
    # chunked streams: the first chunk does not depend on the total count
    a = sample_uniform(disc(), 20000, seed=1)
    b = sample_uniform(disc(), 40000, seed=1)
    assert np.array_equal(a[:16384], b[:16384])


def test_samples_inside():
    K = HalfspacePolytope.box([0, 0], [1, 10])
    X = sample_uniform(K, 10000, 0)
    assert K.contains_batch(X).all()


def test_disc_stats_match_reference():
    st = distance_stats(disc(), [0, 0], 100_000, 0)
    assert abs(st.E - FROZEN["disc_E"]) <= 3 * st.se_E
    assert abs(st.S - FROZEN["disc_S"]) <= 3 * st.se_S
    assert st.R == pytest.approx(st.E + 2 * st.S)


@pytest.mark.parametrize("rho", [0.3, 0.6])
def test_cap_stats_match_reference(rho):
    S2 = ModelSpace(2, 1.0)
    K = GeodesicBall(S2, [0, 0, 1], rho)
    st = distance_stats(K, [0, 0, 1], 100_000, 0)
    assert abs(st.E - FROZEN[f"cap_{rho}_E"]) <= 3 * st.se_E
    assert abs(st.S - FROZEN[f"cap_{rho}_S"]) <= 3 * st.se_S


def test_sphere_sampler_is_uniform_in_area():
    # cap of radius pi/2 - eps: the height z = cos(angle) is uniform on [cos r, 1]
    S2 = ModelSpace(2, 1.0)
    r = 1.5
    X = sample_uniform(GeodesicBall(S2, [0, 0, 1], r), 100_000, 0)
    z = X[:, 2]
    u = (z - math.cos(r)) / (1 - math.cos(r))
    assert abs(u.mean() - 0.5) < 3 * math.sqrt(1 / 12 / len(u))


def test_hit_and_run_cube6_moments():
    K = HalfspacePolytope.box([0] * 6, [1] * 6)
    X = sample_uniform(K, 20_000, 0)
    assert K.contains_batch(X).all()
    assert np.allclose(X.mean(axis=0), 0.5, atol=0.02)
    assert np.allclose(X.var(axis=0), 1 / 12, atol=0.01)


def test_choose_basepoint_prefers_center():
    x, st = choose_basepoint(disc(), [[0.5, 0.0], [0.0, 0.0], [0.0, -0.7]], 20_000, 0)
    assert np.allclose(x, [0, 0])
    assert isinstance(st, SampleStats)


def test_choose_basepoint_tie_keeps_list_order():
    x, _ = choose_basepoint(disc(), [[1e-9, 0.0], [0.0, 0.0]], 20_000, 0)
    assert np.allclose(x, [1e-9, 0.0])


def test_halfspace_concentration_box():
    # [0,1]x[0,10], r0 = 2.5: the half box {y <= 5} leaves 1/4 of the mass at distance >= 2.5
    K = HalfspacePolytope.box([0, 0], [1, 10])
    lam = halfspace_concentration(K, 2.5, 100_000, 0)
    assert lam == pytest.approx(0.25, abs=0.01)


def test_distance_helper_consistency():
    X = sample_uniform(disc(), 100, 0)
    st = distance_stats(disc(), [0, 0], samples=X)
    assert st.E == pytest.approx(distances(E2, X, np.zeros(2)).mean())
