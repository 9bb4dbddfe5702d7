import json
import math

import numpy as np
import pytest
from scipy import optimize

from lrdlab.errors import EstimationError, InputDomainError, ModelError
from lrdlab.innovations import InnovationModel
from lrdlab.linproc import FunctionalK, ProcessSpec, K_infinity_prime_zero
from lrdlab.regvar import SlowVary, partial_sum_L
from lrdlab.scaling import (
    LimitSpec,
    Region,
    C_pm,
    Hbar_exact,
    classify,
    gamma_from_C,
    limit_constants,
    region_one_bracket,
    scaling_factor,
    theta2_sequence,
    truncated_H,
)

CONST = SlowVary.constant()
PARETO = InnovationModel(1.5, 0.5, 0.5)
SYM1 = InnovationModel(1.0, 0.5, 0.5, centering="Symmetric")
EDGE = InnovationModel(2.0, 0.5, 0.5)
GAUSS = FunctionalK.gauss_bump()
ODD = FunctionalK.odd_bump()

REGION_ONE = ProcessSpec(1.0, CONST, PARETO)
CURVE_LONG = ProcessSpec(2.0, CONST, SYM1)
CURVE_SHORT = ProcessSpec(2.0, SlowVary.neglog_power(3.0), SYM1)
POINT_LONG = ProcessSpec(1.0, CONST, EDGE)
DYADIC = [2.0**k for k in range(10, 21)]


# -- classification -------------------------------------------------------------------

def test_classification_examples():
    assert classify(REGION_ONE, ODD).tag == "RegionI"
    assert classify(CURVE_LONG, GAUSS).tag == "CurveLong"
    assert classify(CURVE_SHORT, GAUSS).tag == "CurveShort"
    assert classify(POINT_LONG, ODD).tag == "PointLong"
    assert classify(POINT_LONG, GAUSS).tag == "PointLongDeriv0"


def test_out_of_scope_regions_cite_prior_work():
    inner = classify(ProcessSpec(1.2, CONST, PARETO), ODD)
    short = classify(ProcessSpec(1.5, CONST, PARETO), ODD)
    assert inner.tag == short.tag == "OutOfScope"
    assert "Surgailis" in inner.reason and "Hsing" in short.reason
    with pytest.raises(InputDomainError):
        scaling_factor(inner, REGION_ONE, 100)
    assert limit_constants(inner, REGION_ONE, ODD).limit["kind"] == "None"


def test_nonexistent_process_is_rejected():
    with pytest.raises(ModelError):
        ProcessSpec(0.5, CONST, SYM1)


def test_critical_point_with_loglog_partial_sum_fails_t2():
    spec = ProcessSpec(1.0, SlowVary.neglog_power(1.0), EDGE)
    assert classify(spec, ODD).tag == "OutOfScope"


# -- scaling factors ----------------------------------------------------------------------

def test_region_one_scaling_example():
    A = scaling_factor(Region("RegionI"), REGION_ONE, 1e6)
    # independent root of x = 1e4 (L(1e6) - L(x)) with L the interpolated harmonic sum
    LN = partial_sum_L(CONST, 1e6)
    ref = optimize.brentq(lambda x: x - 1e4 * (LN - partial_sum_L(CONST, x)), 1.0, 1e6, xtol=1e-10, rtol=1e-14)
    assert A == pytest.approx(ref, rel=1e-8)
    assert A == pytest.approx(3.39e4, rel=0.005)


@pytest.mark.parametrize("N", [2.0**10, 2.0**12, 2.0**14, 1e6])
def test_region_one_bracket_identity(N):
    A = scaling_factor(Region("RegionI"), REGION_ONE, N)
    lo, hi = region_one_bracket(REGION_ONE, N, A)
    assert lo <= A < hi


def test_curve_short_is_root_n():
    assert scaling_factor(Region("CurveShort"), CURVE_SHORT, 1e6) == pytest.approx(1000.0, rel=1e-15)


def test_critical_curve_scaling_uses_exact_hbar():
    # Hbar(x) = 1/2 + ln x for the Cauchy-type desk law, so Hbar_2 solves y = 1/2 + ln(sqrt(N y))
    N = 2.0**16
    y = optimize.brentq(lambda y: y - 0.5 - 0.5 * math.log(N * y), 1.0, 100.0, xtol=1e-14)
    assert scaling_factor(Region("CurveLong"), CURVE_LONG, N) == pytest.approx(math.sqrt(N * y), rel=1e-7)
    for x in (10.0, 1e3, 1e5):
        assert Hbar_exact(CURVE_LONG, x) == pytest.approx(0.5 + math.log(x), rel=1e-8)


def test_point_scaling_uses_truncated_second_moment():
    for t in (10.0, 100.0, 1e4):
        assert truncated_H(EDGE, t) == pytest.approx(2 * math.log(t), rel=1e-8)
    N = 2.0**14
    y = optimize.brentq(lambda y: y - math.log(N * y), 1.0, 100.0, xtol=1e-14)
    expect = math.sqrt(N * y) * partial_sum_L(CONST, N)
    assert scaling_factor(Region("PointLong"), POINT_LONG, N) == pytest.approx(expect, rel=1e-7)


@pytest.mark.parametrize("tag,spec", [("RegionI", REGION_ONE), ("CurveLong", CURVE_LONG), ("PointLong", POINT_LONG),
                                      ("PointLongDeriv0", POINT_LONG), ("CurveShort", CURVE_SHORT)])
def test_scaling_factor_is_monotone(tag, spec):
    A = [scaling_factor(Region(tag), spec, N) for N in DYADIC]
    assert np.all(np.diff(A) > 0)


def test_root_n_dichotomy():
    sq = np.sqrt(DYADIC)
    for tag, spec in (("RegionI", REGION_ONE), ("CurveLong", CURVE_LONG), ("PointLong", POINT_LONG)):
        ratio = np.array([scaling_factor(Region(tag), spec, N) for N in DYADIC]) / sq
        assert np.all(np.diff(ratio) > 0)
    short = np.array([scaling_factor(Region("CurveShort"), CURVE_SHORT, N) for N in DYADIC]) / sq
    assert np.all(short == 1.0)


@pytest.mark.parametrize("ell", [CONST, SlowVary.log_power(1.0), SlowVary.neglog_power(1.0)],
                         ids=["constant", "log", "neglog"])
def test_region_one_slow_variation_ratios(ell):
    spec = ProcessSpec(1.0, ell, PARETO)
    r1, r2 = [], []
    for N in [2.0**k for k in range(10, 31, 4)]:
        A = scaling_factor(Region("RegionI"), spec, N)
        gap = partial_sum_L(ell, N) - partial_sum_L(ell, A)
        r1.append(float(ell(A)) / gap)
        r2.append(float(ell(N)) / gap)
    assert np.all(np.diff(r1) < 0) and np.all(np.diff(r2) < 0)


def _order_ratio(ell, N):
    A = scaling_factor(Region("RegionI"), ProcessSpec(1.0, ell, PARETO), N)
    return A / (N ** (1 / 1.5) * partial_sum_L(ell, N))


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_region_one_order_of_magnitude(kappa):
    ell = SlowVary.log_power(kappa)
    for N in [2.0**k for k in range(10, 41, 5)]:
        assert 0.1 <= _order_ratio(ell, N) <= 10


def test_region_one_order_ratio_outside_the_band():
    # kappa = 2 dips below 0.1 before climbing toward 1 - (2/3)^3
    steep = [_order_ratio(SlowVary.log_power(2.0), 2.0**k) for k in (15, 25, 40)]
    assert steep[0] < 0.1 and steep[0] < steep[1] < steep[2]
    # kappa = -1 has L(N) ~ ln ln N, so the ratio decays like 1/ln ln N
    flat = [_order_ratio(SlowVary.log_power(-1.0), 2.0**k) for k in (10, 20, 30, 40)]
    assert np.all(np.diff(flat) < 0)


# -- limit constants -----------------------------------------------------------------------

def test_region_one_constants():
    lim = limit_constants(Region("RegionI"), REGION_ONE, ODD)
    assert lim.limit["kind"] == "Stable"
    assert lim.limit["D"] == 0.0
    assert lim.limit["sigma"] == pytest.approx(math.gamma(-0.5) * math.cos(0.75 * math.pi), rel=1e-12)
    assert lim.limit["multiplier"] == pytest.approx(K_infinity_prime_zero(REGION_ONE.with_horizon(None), ODD), rel=1e-10)
    skew = limit_constants(Region("RegionI"), ProcessSpec(1.0, CONST, InnovationModel(1.5, 0.2, 0.8)), ODD)
    assert skew.limit["D"] == pytest.approx(0.6 * math.tan(0.75 * math.pi), rel=1e-12)


def test_point_constants_c_Lh():
    lim = limit_constants(Region("PointLong"), POINT_LONG, ODD)
    assert lim.constants["c_Lh"] == pytest.approx(7 / 12, abs=1e-6)
    assert lim.limit["gamma"] == pytest.approx(math.sqrt(7 / 12) * abs(lim.constants["K_prime_0"]), rel=1e-6)


def test_curve_constants_symmetry():
    lim = limit_constants(Region("CurveLong"), CURVE_LONG, GAUSS)
    c = lim.constants
    assert c["C_plus"] == pytest.approx(c["C_minus"], rel=1e-9)
    assert lim.limit["gamma"] == pytest.approx(math.sqrt(2) * abs(c["C_plus"]) * math.sqrt(1.0), rel=1e-9)


def test_C_plus_against_plain_quadrature():
    from scipy import integrate
    from lrdlab.fourier import engine_for

    eng = engine_for(CURVE_LONG.with_horizon(None), GAUSS)
    f = lambda t: float(eng.K_inf(t**-2.0)) - eng.K0_table
    ref = integrate.quad(f, 0, 1, limit=500)[0] + integrate.quad(f, 1, np.inf, limit=500)[0]
    assert C_pm(CURVE_LONG, GAUSS, 1.0) == pytest.approx(ref, abs=1e-6)


def test_gamma_split_by_sign():
    assert gamma_from_C(-1.0, -2.0, 0.3, 0.7) == pytest.approx((0.7 + 0.3 * 4, 0.0, math.sqrt(2 * 1.9)))
    assert gamma_from_C(1.0, 2.0, 0.3, 0.7)[1] == pytest.approx(1.9)


@pytest.mark.parametrize("tag,spec,K", [("CurveLong", CURVE_LONG, GAUSS), ("PointLong", POINT_LONG, ODD)])
def test_gamma_scales_with_functional(tag, spec, K):
    g1 = limit_constants(Region(tag), spec, K).limit["gamma"]
    g2 = limit_constants(Region(tag), spec, K.scaled(-3.0)).limit["gamma"]
    assert g2 == pytest.approx(3 * g1, rel=1e-6)


def test_limit_spec_validation_and_json():
    with pytest.raises(ModelError):
        LimitSpec(Region("RegionI"), "x", {"kind": "BrownianMotion", "gamma": 1.0})
    with pytest.raises(ModelError):
        LimitSpec(Region("CurveShort"), "x", {"kind": "BrownianMotion"}, {"theta2": -1.0})
    lim = limit_constants(Region("PointLong"), POINT_LONG, ODD)
    doc = json.loads(lim.to_json())
    assert doc["region"] == "PointLong" and doc["limit"]["kind"] == "BrownianMotion"


def test_theta2_sequence_is_cauchy():
    spec = CURVE_SHORT.with_horizon(4096)
    est = theta2_sequence(spec, GAUSS, N=2**12, replicates=200, seed=1)
    assert est["theta2"] > 0
    g = est["gaps"]
    i = est["lags"].index(est["cauchy_run_start"])
    assert g[i] > g[i + 1] > g[i + 2] and max(g[i:]) == g[i]
    assert est["cauchy_gap"] < 1e-3 * est["theta2"]
    # the same innovations drive every lag, so a rescaled functional rescales exactly
    est2 = theta2_sequence(spec, GAUSS.scaled(2.0), N=2**12, replicates=200, seed=1)
    assert est2["theta2"] == pytest.approx(4 * est["theta2"], rel=1e-9)


def test_theta2_sequence_rejects_wide_lags():
    with pytest.raises(InputDomainError):
        theta2_sequence(CURVE_SHORT.with_horizon(64), GAUSS, N=256, replicates=10, lags=(16, 128))


def test_theta2_sequence_flags_non_cauchy_input():
    with pytest.raises(EstimationError):
        theta2_sequence(CURVE_SHORT.with_horizon(64), GAUSS, N=64, replicates=20, seed=3, lags=(16, 32, 64))
