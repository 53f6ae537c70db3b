"""Lower bounds on the Cheeger constant with every numeric constant traced.

Each bound is returned as a :class:`BoundReport` whose ``value`` equals
``prod(constant_chain) * core`` where ``core`` is recomputed from ``inputs``
by :func:`core_value`. Bounds fed by Monte-Carlo inputs are estimates,
never certificates; their ``std_error`` is propagated by the delta method.

Constants used throughout:

    1/16        Cheeger >= (1/16) / E[theta]   (chord bound)
    1/2         restriction from K to K ∩ B(x0, R), which keeps >= 3/4 of the mass
    1/8         Cheeger >= 1/(8 S) on K ∩ B(x0, R) when E < 2S (diameter < 8S)
    pi/2        sup of arccos(x)/sqrt(1-x) on [0, 1], attained at x = 0
    4/3         Chebyshev factor for the mass of {d(x0, .) <= t} inside K ∩ B(x0, R)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domains import ConvexDomain, DomainError, HypothesisClass, intersect_ball
from .model_geometry import distances
from .sampler import SampleStats, sample_uniform

KLS_CONSTANT = 1.0 / 16.0
RESTRICTION = 0.5
SMALL_MEAN_BRANCH = 1.0 / 8.0
ARCCOS_C = math.pi / 2.0
CHEBYSHEV_FACTOR = 4.0 / 3.0
# A <= 2*sqrt(2)*C * sqrt(kappa S E)/sqrt(1 - 2 E sqrt(kappa)/pi),  B <= (1/3) * same shape
A_COEFF = 2.0 * math.sqrt(2.0) * ARCCOS_C
B_COEFF = CHEBYSHEV_FACTOR / 4.0

BOUND_NAMES = ("concentration", "kls_theta", "bobkov_mc", "bobkov_analytic", "loose_kappa", "kls_E")


@dataclass
class BoundReport:
    name: str
    value: float
    valid: bool
    validity_reason: str
    inputs: dict = field(default_factory=dict)
    constant_chain: list = field(default_factory=list)
    std_error: float = 0.0

    @property
    def constant(self) -> float:
        return math.prod(v for _, v in self.constant_chain)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "valid": self.valid,
            "validity_reason": self.validity_reason,
            "inputs": dict(self.inputs),
            "constant_chain": [[label, v] for label, v in self.constant_chain],
            "std_error": self.std_error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(
            name=d["name"], value=d["value"], valid=d["valid"], validity_reason=d["validity_reason"],
            inputs=dict(d["inputs"]), constant_chain=[(lab, v) for lab, v in d["constant_chain"]],
            std_error=d["std_error"],
        )


def _invalid(name, reason, inputs, chain=()) -> BoundReport:
    return BoundReport(name, 0.0, False, reason, inputs, list(chain), 0.0)


def _vacuity(kappa, E):
    """1 - (2/pi) E sqrt(kappa)."""
    return 1.0 - 2.0 / math.pi * E * math.sqrt(kappa)


def core_value(report: BoundReport) -> float:
    """Recompute the bound's core expression from ``report.inputs``."""
    x = report.inputs
    name = report.name
    if name == "concentration":
        return (1.0 - 2.0 * x["lambda0"]) / x["r0"]
    if name == "kls_theta":
        return 1.0 / x["theta_mean"]
    if name == "kls_E":
        return 1.0 / x["R"]
    if name in ("bobkov_mc", "bobkov_analytic"):
        if x["branch"] == "E<2S":
            return 1.0 / x["S"]
        if name == "bobkov_mc":
            return 1.0 / x["integral"]
        return math.sqrt(_vacuity(x["kappa"], x["E"])) / math.sqrt(x["E"] * x["S"])
    if name == "loose_kappa":
        if x["form"] == "kappa^(1/4)/sqrt(E)":
            return x["kappa"] ** 0.25 / math.sqrt(x["E"])
        return math.sqrt(x["kappa"])
    raise ValueError(f"unknown bound {name!r}")


def recompute(report: BoundReport) -> float:
    return report.constant * core_value(report) if report.valid else 0.0


def _finish(name, inputs, chain, reason="ok", rel_se=0.0) -> BoundReport:
    rep = BoundReport(name, 0.0, True, reason, inputs, list(chain))
    rep.value = rep.constant * core_value(rep)
    rep.std_error = abs(rep.value) * rel_se
    return rep


def concentration_bound(lambda0: float, r0: float, lambda0_se: float = 0.0) -> BoundReport:
    """Cheeger >= (1 - 2 lambda0) / r0 under the concentration pair (lambda0, r0)."""
    inputs = {"lambda0": float(lambda0), "r0": float(r0)}
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    if lambda0 < 0:
        raise ValueError("lambda0 must be >= 0")
    if lambda0 >= 0.5:
        return _invalid("concentration", "lambda0 >= 1/2: bound is vacuous", inputs)
    rel = 2.0 * lambda0_se / (1.0 - 2.0 * lambda0)
    return _finish("concentration", inputs, [], rel_se=rel)


def kls_theta_bound(theta_mean: float, theta_se: float = 0.0) -> BoundReport:
    """Cheeger >= (1/16) / E[theta_K(X)]."""
    if not theta_mean > 0:
        raise ValueError("theta_mean must be positive")
    inputs = {"theta_mean": float(theta_mean)}
    if math.isinf(theta_mean):
        rep = _finish("kls_theta", {"theta_mean": math.inf}, [("kls_constant", KLS_CONSTANT)])
        return rep
    return _finish("kls_theta", inputs, [("kls_constant", KLS_CONSTANT)], rel_se=theta_se / theta_mean)


def _check_kappa(K: ConvexDomain, kappa_x0):
    kappa = K.space.kappa if kappa_x0 is None else float(kappa_x0)
    if kappa < K.space.kappa:
        raise ValueError("kappa_x0 must bound the sectional curvature of the space from above")
    return kappa


def _base_inputs(stats: SampleStats, kappa):
    return {"E": stats.E, "S": stats.S, "R": stats.R, "kappa": kappa,
            "se_E": stats.se_E, "se_S": stats.se_S}


def _radius_ok(R, kappa):
    return kappa == 0 or R < math.pi / (2.0 * math.sqrt(kappa))


def bobkov_bound(K: ConvexDomain, x0, stats: SampleStats, kappa_x0: float | None = None,
                 hypothesis: HypothesisClass | None = None, mode: str = "mc",
                 n: int = 100_000, seed: int = 0) -> BoundReport:
    """Bobkov-type bound ``c sqrt(1 - 2 E sqrt(kappa)/pi) / sqrt(E S)`` via the chord bound.

    ``mode="mc"`` integrates the comparison chord bound over ``K ∩ B(x0, R)``
    by Monte Carlo; ``mode="analytic"`` replaces the integral by its closed
    form majorant, giving an explicit constant.
    """
    if mode not in ("mc", "analytic"):
        raise ValueError("mode must be 'mc' or 'analytic'")
    name = f"bobkov_{mode}"
    kappa = _check_kappa(K, kappa_x0)
    hyp = K.hypothesis() if hypothesis is None else hypothesis
    E, S, R = stats.E, stats.S, stats.R
    inputs = _base_inputs(stats, kappa)
    if not hyp.any():
        return _invalid(name, "no curvature/topology hypothesis holds", inputs)
    if not _radius_ok(R, kappa):
        return _invalid(name, "R = E + 2S is not < pi/(2 sqrt(kappa))", inputs)
    if S <= 0 or E <= 0:
        return _invalid(name, "degenerate distance statistics", inputs)

    if E < 2.0 * S:
        inputs["branch"] = "E<2S"
        chain = [("restriction_half", RESTRICTION), ("small_mean_1_over_8S", SMALL_MEAN_BRANCH)]
        return _finish(name, inputs, chain, rel_se=stats.se_S / S)

    inputs["branch"] = "E>=2S"
    if mode == "analytic":
        inputs["arccos_C"] = ARCCOS_C
        inputs["chebyshev_factor"] = CHEBYSHEV_FACTOR
        chain = [
            ("restriction_half", RESTRICTION),
            ("kls_constant", KLS_CONSTANT),
            ("half_from_theta_comparison", 0.5),
            ("inverse_A_plus_B_coeff", 1.0 / (A_COEFF + B_COEFF)),
        ]
        a = 2.0 / math.pi * math.sqrt(kappa)
        v = _vacuity(kappa, E)
        dlnE = -a / (2.0 * v) - 1.0 / (2.0 * E)
        dlnS = -1.0 / (2.0 * S)
        rel = math.hypot(dlnE * stats.se_E, dlnS * stats.se_S)
        return _finish(name, inputs, chain, rel_se=rel)

    x0 = K.space.point(x0)
    try:
        Kx = intersect_ball(K, x0, R)
    except DomainError as exc:
        return _invalid(name, f"cannot form K ∩ B(x0, R): {exc}", inputs)
    X = sample_uniform(Kx, n, seed)
    d = np.minimum(distances(K.space, X, x0), R)
    if kappa == 0:
        g = 2.0 * np.sqrt((R - d) * (R + d))
        chain = [("restriction_half", RESTRICTION), ("kls_constant", KLS_CONSTANT)]
    else:
        s = math.sqrt(kappa)
        g = np.arccos(np.clip(math.cos(R * s) / np.cos(d * s), -1.0, 1.0))
        chain = [("restriction_half", RESTRICTION), ("kls_constant", KLS_CONSTANT), ("half_sqrt_kappa", s / 2.0)]
    integral = float(g.mean())
    integral_se = float(g.std(ddof=1) / math.sqrt(n))
    inputs["integral"] = integral
    inputs["integral_se"] = integral_se
    inputs["n_integral"] = n
    return _finish(name, inputs, chain, rel_se=integral_se / integral)


def kls_E_bound(stats: SampleStats, kappa: float = 0.0) -> BoundReport:
    """Cheeger >= 1 / (64 R): the chord route with the comparison bound at R1 = 0 (theta <= 2R)."""
    inputs = _base_inputs(stats, kappa)
    if not _radius_ok(stats.R, kappa):
        return _invalid("kls_E", "R = E + 2S is not < pi/(2 sqrt(kappa))", inputs)
    chain = [("restriction_half", RESTRICTION), ("kls_constant", KLS_CONSTANT), ("theta_le_2R", 0.5)]
    rel = math.hypot(stats.se_E, 2.0 * stats.se_S) / stats.R
    return _finish("kls_E", inputs, chain, rel_se=rel)


def bobkov_analytic_constant() -> float:
    """The constant ``c`` in ``Cheeger >= c sqrt(1 - 2 E sqrt(kappa)/pi) / sqrt(E S)`` (branch E >= 2S)."""
    return RESTRICTION * KLS_CONSTANT * 0.5 / (A_COEFF + B_COEFF)


def loose_bounds(E: float, kappa: float, chain_constant: float | None = None):
    """The two curvature-only consequences of the Bobkov-type bound.

    Substituting ``S < pi/(4 sqrt(kappa)) (1 - 2 E sqrt(kappa)/pi)`` gives
    ``c * (2/sqrt(pi)) * kappa^(1/4)/sqrt(E)``; then ``E < pi/(2 sqrt(kappa))``
    gives ``c * (2/sqrt(pi)) * sqrt(2/pi) * sqrt(kappa)``.
    """
    if not E > 0:
        raise ValueError("E must be positive")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    c = bobkov_analytic_constant() if chain_constant is None else float(chain_constant)
    chain1 = [("bobkov_constant", c), ("substitute_S_bound", 2.0 / math.sqrt(math.pi))]
    chain2 = chain1 + [("substitute_E_bound", math.sqrt(2.0 / math.pi))]
    in1 = {"E": float(E), "kappa": float(kappa), "form": "kappa^(1/4)/sqrt(E)"}
    in2 = {"E": float(E), "kappa": float(kappa), "form": "sqrt(kappa)"}
    if kappa > 0 and E * math.sqrt(kappa) >= math.pi / 2.0:
        reason = "E sqrt(kappa) >= pi/2: hypotheses cannot hold"
        return _invalid("loose_kappa", reason, in1, chain1), _invalid("loose_kappa", reason, in2, chain2)
    reason = "ok" if kappa > 0 else "vacuous: kappa = 0"
    return (_finish("loose_kappa", in1, chain1, reason=reason),
            _finish("loose_kappa", in2, chain2, reason=reason))
