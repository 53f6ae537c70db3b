import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isop import bounds as B
from isop.domains import GeodesicBall, HalfspacePolytope, HypothesisClass
from isop.model_geometry import ModelSpace
from isop.sampler import SampleStats, distance_stats
from reference import FROZEN

E2 = ModelSpace(2, 0.0)
S2 = ModelSpace(2, 1.0)


def stats(E, S, se=1e-3, x=(0.0, 0.0)):
    return SampleStats(np.asarray(x), 1000, E, S, se, se)


def assert_recomputes(rep):
    assert rep.value == pytest.approx(B.recompute(rep), rel=1e-15, abs=0)
    if not rep.valid:
        assert rep.value == 0.0


def test_concentration_examples():
    assert B.concentration_bound(0.25, 2.5).value == pytest.approx(0.2, abs=1e-15)
    assert B.concentration_bound(0.0, 4.0).value == 0.25
    rep = B.concentration_bound(0.5, 1.0)
    assert not rep.valid and rep.value == 0.0
    assert B.concentration_bound(0.1, 1.0).constant_chain == []


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 5.0 - 1e-6))
def test_cube_family_is_sharp(r0):
    # [0,1]x[0,10]: lambda0 = 1/2 - r0/10 for the half-box. Rounding lambda0 costs ~1e-16/r0,
    # so below r0 ~ 1e-4 the input itself, not the formula, limits the 1e-12 agreement.
    assert B.concentration_bound(0.5 - r0 / 10.0, r0).value == pytest.approx(0.2, abs=1e-12)


def test_kls_theta_examples():
    assert B.kls_theta_bound(1.0).value == 0.0625
    assert B.kls_theta_bound(0.5).value == 0.125
    assert B.kls_theta_bound(math.inf).value == 0.0
    assert B.kls_theta_bound(1.0).constant_chain == [("kls_constant", 1 / 16)]
    with pytest.raises(ValueError):
        B.kls_theta_bound(0.0)


def test_bobkov_mc_disc_with_exact_stats_matches_quadrature():
    K = GeodesicBall(E2, [0, 0], 1.0)
    rep = B.bobkov_bound(K, [0, 0], stats(FROZEN["disc_E"], FROZEN["disc_S"]), mode="mc", n=100_000, seed=0)
    assert rep.valid
    assert abs(rep.value - FROZEN["disc_bobkov_mc_exact_stats"]) <= 3 * rep.std_error
    assert rep.value <= FROZEN["disc_line_cut"]
    assert_recomputes(rep)


@pytest.mark.parametrize("rho", [0.3, 0.6])
def test_bobkov_mc_cap_with_exact_stats_matches_quadrature(rho):
    K = GeodesicBall(S2, [0, 0, 1], rho)
    st_ = stats(FROZEN[f"cap_{rho}_E"], FROZEN[f"cap_{rho}_S"], x=(0, 0, 1))
    rep = B.bobkov_bound(K, [0, 0, 1], st_, mode="mc", n=100_000, seed=0)
    assert abs(rep.value - FROZEN[f"cap_{rho}_bobkov_mc"]) <= 3 * rep.std_error
    assert rep.value <= FROZEN[f"cap_{rho}_cut"]


def test_small_mean_branch():
    K = GeodesicBall(E2, [0, 0], 1.0)
    rep = B.bobkov_bound(K, [0, 0], stats(0.3, 0.2), mode="mc")
    assert rep.inputs["branch"] == "E<2S"
    assert rep.value == pytest.approx(0.5 / (8 * 0.2), rel=1e-15)
    assert [v for _, v in rep.constant_chain] == [0.5, 0.125]


def test_analytic_kappa_zero_shape():
    K = GeodesicBall(E2, [0, 0], 1.0)
    E, S = 0.7, 0.2
    rep = B.bobkov_bound(K, [0, 0], stats(E, S), mode="analytic")
    assert rep.value == pytest.approx(FROZEN["bobkov_analytic_constant"] / math.sqrt(E * S), rel=1e-14)
    assert rep.constant == pytest.approx(FROZEN["bobkov_analytic_constant"], rel=1e-15)


def test_invalid_when_radius_too_large():
    K = GeodesicBall(S2, [0, 0, 1], 0.6)
    rep = B.bobkov_bound(K, [0, 0, 1], stats(1.2, 0.3, x=(0, 0, 1)), mode="mc")
    assert not rep.valid and rep.value == 0.0
    rep = B.bobkov_bound(K, [0, 0, 1], stats(math.pi / 2, 0.01, x=(0, 0, 1)), mode="analytic")
    assert not rep.valid


def test_invalid_hypothesis_gives_invalid_report():
    K = GeodesicBall(E2, [0, 0], 1.0)
    none = HypothesisClass(False, False, False, False)
    rep = B.bobkov_bound(K, [0, 0], stats(0.7, 0.2), hypothesis=none)
    assert not rep.valid and rep.value == 0.0


def test_kappa_below_space_curvature_rejected():
    K = GeodesicBall(S2, [0, 0, 1], 0.3)
    with pytest.raises(ValueError):
        B.bobkov_bound(K, [0, 0, 1], stats(0.2, 0.07, x=(0, 0, 1)), kappa_x0=0.5)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.01, 0.3), st.lists(st.floats(0.0, 3.0), min_size=2, max_size=6))
def test_analytic_monotone_in_kappa(E, S, kappas):
    if E < 2 * S:
        return
    K = GeodesicBall(E2, [0, 0], 10.0)
    vals = []
    for kappa in sorted(kappas):
        rep = B.bobkov_bound(K, [0, 0], stats(E, S), kappa_x0=kappa, mode="analytic")
        assert_recomputes(rep)
        valid_expected = kappa == 0 or E + 2 * S < math.pi / (2 * math.sqrt(kappa))
        assert rep.valid == valid_expected
        vals.append(rep.value)
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("rho", [0.3, 0.6])
def test_mc_dominates_analytic(rho):
    K = GeodesicBall(S2, [0, 0, 1], rho)
    st_ = distance_stats(K, [0, 0, 1], 50_000, 1)
    mc = B.bobkov_bound(K, [0, 0, 1], st_, mode="mc", n=50_000, seed=1)
    an = B.bobkov_bound(K, [0, 0, 1], st_, mode="analytic")
    assert an.value <= mc.value + 3 * math.hypot(mc.std_error, an.std_error)


def test_kls_E():
    rep = B.kls_E_bound(stats(0.7, 0.2))
    assert rep.value == pytest.approx(1 / (64 * 1.1), rel=1e-15)
    assert not B.kls_E_bound(stats(1.2, 0.3), kappa=1.0).valid


def test_loose_bounds_double_evaluation():
    c = B.bobkov_analytic_constant()
    E, kappa = 1.0, 0.25
    first, second = B.loose_bounds(E, kappa, c)
    # substitute S by its upper bound in the analytic formula
    v = 1 - 2 / math.pi * E * math.sqrt(kappa)
    S_max = math.pi / (4 * math.sqrt(kappa)) * v
    direct = c * math.sqrt(v) / math.sqrt(E * S_max)
    assert first.value == pytest.approx(direct, rel=1e-12)
    assert second.value == pytest.approx(direct * math.sqrt(2 / math.pi) * math.sqrt(kappa) / (kappa ** 0.25 / math.sqrt(E)), rel=1e-12)
    assert second.value <= first.value


def test_loose_bounds_kappa_zero_vacuous():
    first, second = B.loose_bounds(1.0, 0.0)
    assert second.valid and second.value == 0.0 and "vacuous" in second.validity_reason


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_loose_first_grows_like_kappa_quarter(E, k1, dk):
    k2 = k1 + dk
    if E * math.sqrt(k2) >= math.pi / 2:
        return
    a = B.loose_bounds(E, k1)[0].value
    b = B.loose_bounds(E, k2)[0].value
    assert b / a == pytest.approx((k2 / k1) ** 0.25, rel=1e-12)


def test_report_json_roundtrip():
    K = GeodesicBall(E2, [0, 0], 1.0)
    rep = B.bobkov_bound(K, [0, 0], stats(0.7, 0.2), mode="analytic")
    d = json.loads(json.dumps(rep.as_dict()))
    assert set(d) == {"name", "value", "valid", "validity_reason", "inputs", "constant_chain", "std_error"}
    back = B.BoundReport.from_dict(d)
    assert back.value == rep.value and back.constant_chain == rep.constant_chain
    assert B.recompute(back) == pytest.approx(rep.value, rel=1e-15)


def test_sandwich_on_square():
    K = HalfspacePolytope.box([0, 0], [1, 1])
    st_ = distance_stats(K, [0.5, 0.5], 50_000, 0)
    for mode in ("mc", "analytic"):
        rep = B.bobkov_bound(K, [0.5, 0.5], st_, mode=mode, n=50_000)
        assert rep.valid and rep.value <= FROZEN["square_line_cut"]
