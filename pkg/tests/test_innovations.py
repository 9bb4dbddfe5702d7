import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from lrdlab.errors import InputDomainError, ModelError
from lrdlab.innovations import (
    InnovationModel,
    _tail_D,
    innovation_char_fn,
    innovation_char_fn_quad,
    sample_innovations,
    tail_calibration_check,
)
from lrdlab.regvar import SlowVary

PARETO = InnovationModel(1.5, 0.5, 0.5)
SKEWED = InnovationModel(1.5, 0.2, 0.8)
CAUCHY_LIKE = InnovationModel(1.0, 0.5, 0.5, centering="Symmetric")
GAUSS_EDGE = InnovationModel(2.0, 0.5, 0.5)
CORED = InnovationModel(1.3, 0.1, 0.3, x0=1.5)
LIGHT = InnovationModel(0.7, 0.2, 0.3, x0=2.0, centering="None")
LOGTAIL = InnovationModel(1.5, 0.1, 0.3, h=SlowVary.log_power(1.0), x0=3.0)
NEGLOG = InnovationModel(1.0, 0.4, 0.4, h=SlowVary.neglog_power(2.0), x0=2.0, centering="Symmetric")
LOGLOG = InnovationModel(2.0, 0.4, 0.4, h=SlowVary.loglog_power(1.0), x0=16.0)
MODELS = [PARETO, SKEWED, CAUCHY_LIKE, GAUSS_EDGE, CORED, LIGHT, LOGTAIL, NEGLOG, LOGLOG]
IDS = ["pareto", "skewed", "alpha1", "alpha2", "cored", "alpha07", "logtail", "neglog", "loglog"]


def test_model_validation():
    with pytest.raises(ModelError):
        InnovationModel(1.0, 0.5, 0.5, centering="MeanZero")
    with pytest.raises(ModelError):
        InnovationModel(1.0, 0.3, 0.5, centering="Symmetric")
    with pytest.raises(ModelError):
        InnovationModel(0.8, 0.5, 0.5, centering="MeanZero")
    with pytest.raises(ModelError):
        InnovationModel(1.5, 0.8, 0.8)  # tail mass above one
    with pytest.raises(ModelError):
        InnovationModel(2.5, 0.5, 0.5)
    with pytest.raises(ModelError):
        InnovationModel(1.5, 0.1, 0.1, h=SlowVary.log_power(1.0), x0=1.0)


@pytest.mark.parametrize("p", [1.3, 1.5, 2.0, 2.2, 2.5, 2.9, 3.0])
def test_tail_integral_matches_mpmath(p):
    mp.mp.dps = 30
    for v in [1e-6, 1e-3, 0.5, 3.0, 5.9, 6.1, 20.0, 1e3, -2.0, -50.0]:
        ref = complex(1 / mp.mpf(p - 1) - mp.expint(p, mp.mpc(0, -v)))
        got = _tail_D(p, np.array([-1j * v]))[0]
        assert abs(got - ref) <= 1e-11 * max(1.0, abs(ref))


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_char_fn_matches_quadrature_oracle(model):
    u = np.array([1e-4, 1e-2, 0.3, 1.0, 2.5, 7.0, 8.1, 30.0, 200.0, -0.7, -40.0])
    fast = innovation_char_fn(model, u)
    slow = np.array([innovation_char_fn_quad(model, x) for x in u])
    assert np.max(np.abs(fast - slow)) <= 1e-9


@pytest.mark.parametrize("model", [PARETO, SKEWED, GAUSS_EDGE, LIGHT], ids=["pareto", "skewed", "alpha2", "alpha07"])
def test_contour_route_matches_closed_form(model):
    u = np.array([1e-8, 1e-4, 1e-2, 0.3, 0.9, 1.1, 2.5, 7.9, 8.1, 30.0, 200.0, -3.0])
    assert np.max(np.abs(model._remainder_contour(u) - model._remainder_closed(u))) <= 1e-12


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_char_fn_basic_properties(model):
    assert innovation_char_fn(model, 0.0) == 1.0
    u = np.linspace(-1e3, 1e3, 20001)
    phi = innovation_char_fn(model, u)
    assert np.all(np.abs(phi) <= 1 + 1e-12)
    assert np.max(np.abs(phi) * (1 + np.abs(u))) < 10 * (1 + model.x0)
    if model.is_symmetric:
        assert np.max(np.abs(phi.imag)) <= 1e-9


def test_small_u_constant_of_pareto_law():
    # (1 - Re phi)/u^1.5 tends to 2 Gamma(-0.5) cos(0.75 pi) (quadrature oracle, frozen)
    limit = (0.5 + 0.5) * math.gamma(-0.5) * math.cos(0.75 * math.pi)
    sigma, D = PARETO.stable_params()
    assert sigma == pytest.approx(limit, rel=1e-14)
    assert D == 0.0
    ratios = [(1 - innovation_char_fn_quad(PARETO, u).real) / u**1.5 for u in (1e-2, 1e-3, 1e-4)]
    assert ratios == pytest.approx([2.3566285, 2.4591941, 2.4916283], rel=1e-6)
    assert abs(ratios[1] / limit - 1) < 0.05


def test_skew_sign_of_stable_parameters():
    sigma, D = SKEWED.stable_params()
    u = 1e-7
    ratio = SKEWED.one_minus_cf(u) / u**1.5
    assert ratio.real == pytest.approx(sigma, rel=1e-3)
    assert ratio.imag == pytest.approx(-sigma * D, rel=1e-3)
    assert D == pytest.approx(0.6 * math.tan(0.75 * math.pi))
    assert CAUCHY_LIKE.stable_params() == (math.pi / 2, 0.0)


@pytest.mark.parametrize("model", [PARETO, SKEWED, CORED, LOGTAIL], ids=["pareto", "skewed", "cored", "logtail"])
def test_analytic_mean_is_shift(model):
    lo, hi = -model.shift - model.x0, -model.shift + model.x0
    f = lambda x: x * model.density(x)
    mean = (
        integrate.quad(f, -np.inf, lo, epsabs=1e-13, limit=500)[0]
        + integrate.quad(f, lo, hi, epsabs=1e-13)[0]
        + integrate.quad(f, hi, np.inf, epsabs=1e-13, limit=500)[0]
    )
    assert abs(mean) <= 1e-10 * max(1.0, abs(model.shift)) + 1e-10


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_density_integrates_to_one_and_matches_survival(model):
    lo, hi = -model.shift - model.x0, -model.shift + model.x0
    total = sum(
        integrate.quad(model.density, a, b, epsabs=1e-12, limit=500)[0]
        for a, b in ((-np.inf, lo), (lo, hi), (hi, np.inf))
    )
    assert total == pytest.approx(1.0, abs=1e-9)
    x = hi + 3.7
    assert model.survival(x) == pytest.approx(integrate.quad(model.density, x, np.inf, limit=500)[0], rel=1e-8)


def test_pareto_exceedance_frequency():
    x = sample_innovations(PARETO, 10**6, np.random.default_rng(11))
    assert abs(np.mean(np.abs(x) > 2) - 2**-1.5) < 0.003


def test_symmetric_sample_mean():
    for seed, model in enumerate((PARETO, GAUSS_EDGE)):
        x = sample_innovations(model, 10**6, np.random.default_rng(12 + seed))
        assert abs(x.mean()) <= 3 * np.std(x) / math.sqrt(x.size)
    # alpha = 1 has no mean; the sign balance is the symmetric statistic
    x = sample_innovations(CAUCHY_LIKE, 10**6, np.random.default_rng(15))
    assert abs(np.mean(np.sign(x))) <= 3 / math.sqrt(x.size)


def test_truncated_second_moment_alpha_two():
    # exact density: E[eps^2; |eps| <= t] = 2 (sigma1 + sigma2) ln t beyond the cutoff
    model = GAUSS_EDGE
    x = sample_innovations(model, 10**6, np.random.default_rng(14))
    for t in (10.0, 100.0, 1000.0):
        oracle = integrate.quad(lambda y: y * y * model.density(y), -t, t, points=[-1, 1], limit=500)[0]
        assert oracle / (2 * math.log(t)) == pytest.approx(1.0, rel=1e-8)
        y = np.where(np.abs(x) <= t, x * x, 0.0)
        assert abs(y.mean() - oracle) <= 3 * y.std() / math.sqrt(y.size)


def test_sampler_is_deterministic():
    a = sample_innovations(LOGTAIL, 5000, np.random.default_rng(7))
    b = sample_innovations(LOGTAIL, 5000, np.random.default_rng(7))
    assert np.array_equal(a, b)
    with pytest.raises(InputDomainError):
        sample_innovations(LOGTAIL, 0, np.random.default_rng(7))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=1e-15, max_value=1.0), min_size=1, max_size=50))
def test_tail_inverse_transform_residual(ws):
    w = np.array(ws)
    for model in (LOGTAIL, NEGLOG, LOGLOG):
        x = model.tail_quantile(w)
        assert np.all(np.abs(model.tail_fn(x) / model.tail_at_cutoff - w) <= 1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_quantile_inverts_survival(u):
    for model in (PARETO, SKEWED, CORED, LOGTAIL):
        x = model.quantile(np.array([u]))[0]
        assert 1 - model.survival(x) == pytest.approx(u, abs=1e-11)


@pytest.mark.parametrize("model", [PARETO, SKEWED, LOGTAIL], ids=["pareto", "skewed", "logtail"])
def test_tail_calibration_passes_on_exact_model(model):
    x = sample_innovations(model, 10**6, np.random.default_rng(21))
    report = tail_calibration_check(model, x)
    assert report.status == "PASS"
    assert report.right_ratio == pytest.approx(model.sigma2, rel=0.1)


def test_tail_calibration_rejects_gaussian_and_handles_guards():
    rng = np.random.default_rng(22)
    assert tail_calibration_check(PARETO, rng.standard_normal(10**6)).status == "FAIL"
    tiny = rng.uniform(-0.5, 0.5, 10**5)
    assert tail_calibration_check(PARETO, tiny).status == "INCONCLUSIVE"
    with pytest.raises(InputDomainError):
        tail_calibration_check(PARETO, tiny[:10])


def test_cdf_complements_survival_and_keeps_left_tail_precision():
    model = InnovationModel(1.5, 0.3, 0.7)
    x = np.linspace(-20, 20, 81)
    assert np.allclose(model.cdf(x) + model.survival(x), 1.0, atol=1e-15)
    far = 1e12
    assert model.cdf(-far) == pytest.approx(0.3 * (far - model.shift) ** -1.5, rel=1e-12)
