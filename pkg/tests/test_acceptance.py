"""Acceptance criteria 1 to 8, each asserted at its stated tolerance.

Every criterion records one PASS/FAIL line (plus sub-lines) that the
terminal summary prints.  Criteria that do not hold at the stated sizes
stay red; the companion ``*_corrected_form`` tests assert the asymptotic
statement that the data do support.  README.md explains each red line.
"""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, signal

from lrdlab.fourier import engine_for
from lrdlab.innovations import InnovationModel, sample_innovations, tail_calibration_check
from lrdlab.labcli import ExperimentConfig, run_experiment, write_report
from lrdlab.linproc import K_infinity, K_infinity_prime_zero, eta_K
from lrdlab.process import FunctionalK, ProcessSpec, coefficients, simulate_paths
from lrdlab.regvar import (
    RegVary,
    SlowVary,
    R_inverse,
    composed_ratio,
    conjugate_slowvary,
    partial_sum_L_log,
    self_composed_L_ratio,
)
from lrdlab.scaling import C_pm
from lrdlab.stable import StableLaw, gaussian_law, ks_distance, sample_stable, stable_cdf

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
NAMES = ("region_one", "curve_long", "curve_short", "point_long")

CONST = SlowVary.constant()
ODD = FunctionalK.odd_bump()
GAUSS = FunctionalK.gauss_bump()
REGION_ONE = ProcessSpec(1.0, CONST, InnovationModel(1.5, 0.5, 0.5))
CURVE_LONG = ProcessSpec(2.0, CONST, InnovationModel(1.0, 0.5, 0.5, centering="Symmetric"))
POINT_LONG = ProcessSpec(1.0, CONST, InnovationModel(2.0, 0.5, 0.5))
TAIL_MODELS = (InnovationModel(1.5, 0.5, 0.5), InnovationModel(1.5, 0.2, 0.8))
FAMILY = {
    "Constant": CONST,
    "LogPower(1)": SlowVary.log_power(1.0),
    "LogPower(2)": SlowVary.log_power(2.0),
    "NegLogPower(3)": SlowVary.neglog_power(3.0),
    "LogLogPower(1)": SlowVary.loglog_power(1.0),
}


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    """The four shipped configs, run once; reports go to LRDLAB_ACCEPTANCE_OUT if set."""
    out = Path(os.environ.get("LRDLAB_ACCEPTANCE_OUT") or tmp_path_factory.mktemp("acceptance"))
    runs = {}
    for name in NAMES:
        report = run_experiment(ExperimentConfig.load(CONFIGS / f"{name}.json"))
        write_report(report, out / name)
        runs[name] = report
    return runs


def _verdict(report, name):
    return next(v for v in report.verdicts if v["name"] == name)


def _ks(report):
    return [r["ks_t1"] for r in report.rows]


def _fmt(values, digits=4):
    return ", ".join(f"{v:.{digits}f}" for v in values)


def _strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


# -- 1. convolution oracle ---------------------------------------------------------------

def test_criterion_1_convolution_oracle(acceptance_log):
    spec = ProcessSpec(1.0, CONST, InnovationModel(1.5, 0.5, 0.5), J=4096)
    t0 = time.perf_counter()
    batch = simulate_paths(spec, 4096, 1, seed=5, keep_innovations=True)
    elapsed = time.perf_counter() - t0
    direct = np.convolve(batch.eps[0, :-1], coefficients(spec), mode="valid")
    err = float(np.max(np.abs(batch.X[0] - direct)))
    ok = acceptance_log("1 convolution oracle", err <= 1e-8 and elapsed <= 5.0,
                        f"max abs error {err:.2e} (<= 1e-8), runtime {elapsed:.2f} s (<= 5 s)")
    assert ok


# -- 2. sampler fidelity -----------------------------------------------------------------

def test_criterion_2_sampler_fidelity(acceptance_log):
    ok = True
    for alpha, mult in ((1.3, 0.0), (1.5, 0.5), (1.9, -0.5)):
        law = StableLaw(alpha, 1.0, mult * math.tan(math.pi * alpha / 2))
        x = sample_stable(law, 10**5, np.random.default_rng(31))
        ks = ks_distance(x, lambda v: stable_cdf(law, v))
        ok &= acceptance_log(f"2 stable sampler alpha={alpha} D={law.D:+.3f}", ks <= 0.015, f"KS {ks:.4f} (<= 0.015)")
    for model in TAIL_MODELS:
        draws = sample_innovations(model, 10**6, np.random.default_rng(21))
        rep = tail_calibration_check(model, draws)
        ok &= acceptance_log(f"2 innovation tails sigma1={model.sigma1} sigma2={model.sigma2}",
                             rep.status == "PASS",
                             f"{rep.status}: right ratio {rep.right_ratio:.3f}, left ratio {rep.left_ratio:.3f} (+-10%)")
    assert ok


def test_criterion_2_tail_check_pass_rate(acceptance_log):
    # about 550 exceedances give a 4% standard error, so the 10% band is near 2.4 sigma per side
    for model in TAIL_MODELS:
        passes = sum(tail_calibration_check(model, sample_innovations(model, 10**6, np.random.default_rng(s))).status
                     == "PASS" for s in range(20))
        acceptance_log(f"2 diagnostic: tail check pass rate sigma1={model.sigma1}", True, f"{passes}/20 seeds")
        assert passes >= 16


# -- 3 to 6. desk runs --------------------------------------------------------------------

def test_criterion_3_region_one_desk_run(desk_runs, acceptance_log):
    rep = desk_runs["region_one"]
    ks = _ks(rep)
    runtime = rep.timing["total_seconds"]
    parts = [
        acceptance_log("3 Region I KS strictly decreasing", _strictly_decreasing(ks), f"KS(t=1) = {_fmt(ks)}"),
        acceptance_log("3 Region I final KS", ks[-1] <= 0.08, f"KS = {ks[-1]:.4f} (<= 0.08)"),
        acceptance_log("3 Region I bracket", _verdict(rep, "bracket")["status"] == "PASS",
                       _verdict(rep, "bracket")["detail"]),
        acceptance_log("3 Region I runtime", runtime <= 600, f"{runtime:.1f} s (<= 600 s)"),
    ]
    assert all(parts)


def test_criterion_4_curve_long_desk_run(desk_runs, acceptance_log):
    rep = desk_runs["curve_long"]
    ks = _ks(rep)
    parts = [
        acceptance_log("4 critical curve final KS", ks[-1] <= 0.08, f"KS = {ks[-1]:.4f} (<= 0.08)"),
        acceptance_log("4 critical curve KS decreasing", _strictly_decreasing(ks), f"KS(t=1) = {_fmt(ks)}"),
    ]
    assert all(parts)


def test_criterion_5_curve_short_desk_run(desk_runs, acceptance_log):
    rep = desk_runs["curve_short"]
    c = rep.limit["constants"]
    gaps = c["theta2_gaps"]
    i = c["theta2_lags"].index(c["cauchy_run_start"])
    run = gaps[i:]
    cauchy = len(run) >= 3 and run[0] > run[1] > run[2] and max(run) == run[0]
    v = rep.rows[-1]["var_ratio"]
    ks = _ks(rep)[-1]
    parts = [
        acceptance_log("5 short memory Cauchy gaps", cauchy,
                       f"gaps from lag {c['cauchy_run_start']}: {_fmt(run, 7)} (theta2 = {c['theta2']:.6f})"),
        acceptance_log("5 short memory variance ratio", 0.75 <= v <= 1.25, f"{v:.4f} at N=2^16 (in [0.75, 1.25])"),
        acceptance_log("5 short memory KS", ks <= 0.08, f"KS = {ks:.4f} (<= 0.08)"),
    ]
    assert all(parts)


def test_criterion_6_point_long_desk_run(desk_runs, acceptance_log):
    rep = desk_runs["point_long"]
    c_Lh = rep.limit["constants"]["c_Lh"]
    v = rep.rows[-1]["var_ratio"]
    ks = _ks(rep)
    parts = [
        acceptance_log("6 critical point c_Lh", abs(c_Lh - 7 / 12) <= 1e-6, f"{c_Lh:.12f} vs 7/12"),
        acceptance_log("6 critical point variance ratio", 0.7 <= v <= 1.3, f"{v:.4f} (in [0.7, 1.3])"),
        acceptance_log("6 critical point KS decreasing", _strictly_decreasing(ks), f"KS(t=1) = {_fmt(ks)}"),
    ]
    assert all(parts)


def test_criterion_6_ks_noise_floor(acceptance_log):
    # KS between 1000 exact draws and their own law: the floor the decreasing check operates at
    rng = np.random.default_rng(61)
    law = gaussian_law(1.0)
    floor = [ks_distance(rng.standard_normal(1000), lambda v: stable_cdf(law, v)) for _ in range(200)]
    mean, sd = float(np.mean(floor)), float(np.std(floor))
    acceptance_log("6 diagnostic: KS under the exact law, M=1000", True, f"mean {mean:.4f}, sd {sd:.4f}")
    assert 0.02 < mean < 0.035


# -- 7. invariant suites ------------------------------------------------------------------

def _regvar_literal_lines(log):
    ok = True
    worst = 0.0
    for sv in FAMILY.values():
        for beta in (1.0, 1.5, 2.0):
            rv = RegVary(beta, sv, beta)
            for x in np.geomspace(max(50.0, 2 * float(rv(rv.monotone_threshold))), 1e12, 25):
                worst = max(worst, abs(float(rv(R_inverse(beta, sv, x))) - x) / x)
    ok &= log("7 regvar round trip", worst <= 1e-10, f"max relative residual {worst:.1e} (<= 1e-10)")

    worst = 0.0
    for sv in FAMILY.values():
        G = lambda t, sv=sv: float(sv(t))
        for p in (1.0, 1.5, 2.0):
            for N in np.geomspace(20.0, 1e12, 12):
                y = conjugate_slowvary(G, p, N)
                worst = max(worst, abs(G(N ** (1 / p) * y ** (1 / p)) - y) / y)
    ok &= log("7 regvar conjugate residual", worst <= 1e-8, f"max relative residual {worst:.1e} (<= 1e-8)")

    s = np.log(np.geomspace(1e6, 1e300, 30))
    for name in ("Constant", "LogPower(1)", "LogPower(2)"):
        sv = FAMILY[name]
        r = np.array([float(sv.eval_log(x)) / partial_sum_L_log(sv, x) for x in s])
        ok &= log(f"7 Karamata {name}", bool(np.all(np.diff(r) < 0) and r[0] < 0.05),
                  f"ell/L at 1e6 = {r[0]:.4f} (< 0.05), decreasing on [1e6, 1e300]")

    grid = (1e8, 1e16, 1e64, 1e256)
    for name, sv in FAMILY.items():
        if not sv.satisfies_t1():
            continue
        vals = {a: [composed_ratio(sv, x, a) for x in grid] for a in (-1, 1)}
        lo = min(min(v) for v in vals.values())
        hi = max(max(v) for v in vals.values())
        ok &= log(f"7 composed ratio {name}", 0.9 <= lo and hi <= 1.1,
                  f"range over x >= 1e8, a = +-1: [{lo:.4f}, {hi:.4f}] (in [0.9, 1.1])")

    for name in ("Constant", "LogPower(1)", "LogLogPower(1)"):
        vals = [self_composed_L_ratio(FAMILY[name], x) for x in grid]
        ok &= log(f"7 self-composed L ratio {name}", 0.95 <= min(vals) and max(vals) <= 1.2,
                  f"range over x >= 1e8: [{min(vals):.4f}, {max(vals):.4f}] (in [0.95, 1.2])")
    return ok


def _eta_literal_lines(log):
    C = C_pm(CURVE_LONG, GAUSS, 1.0)
    r = eta_K(CURVE_LONG, GAUSS, 1e5) / math.sqrt(1e5)
    ok = log("7 eta asymptote (critical curve)", abs(r / C - 1) <= 0.10,
             f"eta(1e5)/sqrt(1e5) = {r:.6f}, C+ = {C:.6f}, off by {abs(r / C - 1):.1%} (<= 10%)")
    d1 = K_infinity_prime_zero(POINT_LONG, ODD)
    L = float(np.sum(1.0 / np.arange(1, 10**5 + 1)))
    r = eta_K(POINT_LONG, ODD, 1e5, linear_correction=True) / (1e5 * L)
    ok &= log("7 linear-corrected eta asymptote", abs(r / -d1 - 1) <= 0.10,
              f"eta~(1e5)/(x L(x)) = {r:.6e}, -K'(0) = {-d1:.6e}, off by {abs(r / -d1 - 1):.1%} (<= 10%)")
    return ok


def test_criterion_7_invariant_suites(desk_runs, acceptance_log):
    ok = _regvar_literal_lines(acceptance_log)
    for spec, label in ((REGION_ONE, "Region I"), (POINT_LONG, "critical point")):
        d = K_infinity_prime_zero(spec, ODD)
        fd = (K_infinity(spec, ODD, 1e-3) - K_infinity(spec, ODD, -1e-3)) / 2e-3
        ok &= acceptance_log(f"7 K'(0) vs finite difference, {label}", abs(d - fd) <= 0.02 * abs(d),
                             f"{d:.8f} vs {fd:.8f} ({abs(d / fd - 1):.2e}, <= 2%)")
    ok &= _eta_literal_lines(acceptance_log)
    gaps = [r["surrogate_gap"] for r in desk_runs["region_one"].rows]
    ok &= acceptance_log("7 surrogate gap decreasing (Region I config)", _strictly_decreasing(gaps),
                         "E|S_N - T_N|^2 / A_N^2 = " + ", ".join(f"{g:.3e}" for g in gaps))
    assert ok


def test_criterion_7_corrected_forms(acceptance_log):
    # Karamata ratio with its log rate: ell/L * ln N / (kappa + 1) -> 1
    for kappa in (0.0, 1.0, 2.0):
        sv = SlowVary.log_power(kappa)
        s = math.log(1e300)
        scaled = float(sv.eval_log(s)) / partial_sum_L_log(sv, s) * s / (kappa + 1)
        assert acceptance_log(f"7 corrected: Karamata rate, kappa={kappa:g}", abs(scaled - 1) <= 0.02,
                              f"(ell/L) ln N/(kappa+1) at 1e300 = {scaled:.4f} (within 2% of 1)")
    grid = (1e8, 1e16, 1e64, 1e256)
    for name, sv in FAMILY.items():
        dev = [max(abs(composed_ratio(sv, x, a) - 1) for a in (-1, 1)) for x in grid]
        assert acceptance_log(f"7 corrected: composed ratio {name} trends to 1", all(np.diff(dev) <= 1e-15),
                              "max |ratio - 1| = " + ", ".join(f"{d:.3g}" for d in dev))
    for name in ("Constant", "LogPower(1)", "LogLogPower(1)"):
        dev = [self_composed_L_ratio(FAMILY[name], x) - 1 for x in grid]
        assert acceptance_log(f"7 corrected: self-composed L ratio {name} trends to 1",
                              all(np.diff(dev) < 0) and dev[-1] < 0.05,
                              "ratio - 1 = " + ", ".join(f"{d:.3g}" for d in dev))
    # eta~(x)/x = -K'(0) L(x) + c + K'(0)/(2x), c from the integral of K_inf(1/s) - K0 - K'(0)/s 1{s>1}
    eng = engine_for(POINT_LONG.with_horizon(None), ODD)
    d1, K0 = eng.derivatives[1], eng.K0_table
    f = lambda s: eng.K_inf(1 / s) - K0 - d1 / s * (s > 1)
    c = integrate.quad(f, 0, 1, limit=400)[0] + integrate.quad(f, 1, np.inf, limit=400)[0]
    x = 1e5
    L = float(np.sum(1.0 / np.arange(1, int(x) + 1)))
    e = eta_K(POINT_LONG, ODD, x, linear_correction=True) / x
    two_term = -d1 * L + c + d1 * 0.5 / x
    assert acceptance_log("7 corrected: linear-corrected eta two-term form", abs(e / two_term - 1) <= 1e-5,
                          f"eta~(1e5)/x = {e:.8e} vs {two_term:.8e}; constant term c/K'(0) = {c / d1:.4f}")


# -- 8. finite-dimensional check ---------------------------------------------------------

def test_criterion_8_finite_dimensional(desk_runs, acceptance_log):
    ok = True
    for name, rep in desk_runs.items():
        ind = _verdict(rep, "increment_independence")
        mar = _verdict(rep, "marginal_ks")
        ok &= acceptance_log(f"8 {name} increment correlation", ind["status"] == "PASS", ind["detail"])
        ok &= acceptance_log(f"8 {name} marginal KS", mar["status"] == "PASS", mar["detail"])
    assert ok


def _linear_proxy_correlation(N, J):
    # correlation of the two half-window sums of sum_j a_j eps_{n-j} with a_j = 1/j, finite variance
    a = 1.0 / np.arange(1, J + 1)
    w = signal.fftconvolve(np.ones(N // 2), a)
    first = np.concatenate([w, np.zeros(N // 2)])
    second = np.concatenate([np.zeros(N // 2), w])
    return float(first @ second / math.sqrt((first @ first) * (second @ second)))


def test_criterion_8_correlation_matches_linear_proxy(desk_runs, acceptance_log):
    rep = desk_runs["point_long"]
    M = rep.config["replicates"]
    N = rep.rows[-1]["N"]
    pred = _linear_proxy_correlation(N, rep.diagnostics[-1]["J"])
    got = rep.rows[-1]["corr_incr"]
    assert acceptance_log("8 diagnostic: critical point correlation vs linear proxy", abs(got - pred) <= 3 / math.sqrt(M),
                          f"empirical {got:.4f}, predicted {pred:.4f} at N={N}; proxy falls below "
                          f"3/sqrt(M) = {3 / math.sqrt(M):.4f} only near N = 4e6")
