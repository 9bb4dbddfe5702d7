"""Region classification, scaling factors and limit constants."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import quad
from .errors import ClassificationError, EstimationError, InputDomainError, ModelError, NumericError
from .fourier import TAYLOR_ORDER, engine_for
from .innovations import InnovationModel
from .process import FunctionalK, ProcessSpec, overlap_save, replicate_stream
from .regvar import RegVary, SlowVary, c_Lh, conjugate_slowvary, partial_sum_L, partial_sum_L_log, t2_limits

__all__ = [
    "REGIONS",
    "Region",
    "LimitSpec",
    "classify",
    "memory_exponents",
    "truncated_H",
    "tail_slowvary_exact",
    "Hbar_exact",
    "scaling_factor",
    "region_one_bracket",
    "C_pm",
    "gamma_from_C",
    "theta2_sequence",
    "limit_constants",
]

REGIONS = ("RegionI", "CurveLong", "PointLongDeriv0", "PointLong", "CurveShort", "OutOfScope")
DERIV_ZERO_REL = 1e-6
CRITICAL_TOL = 1e-12
THETA_PURPOSE = 7


@dataclass(frozen=True)
class Region:
    """Classification tag; ``reason`` explains ``OutOfScope``."""

    tag: str
    reason: str = ""

    def __post_init__(self):
        if self.tag not in REGIONS:
            raise InputDomainError(f"unknown region {self.tag!r}")


@dataclass
class LimitSpec:
    """Region, scaling description, limit law and named constants."""

    region: Region
    scaling: str
    limit: dict
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = self.limit.get("kind")
        if self.region.tag == "RegionI" and kind != "Stable":
            raise ModelError("Region I has a stable limit")
        if self.region.tag not in ("RegionI", "OutOfScope") and kind != "BrownianMotion":
            raise ModelError("critical-curve regions have Brownian limits")
        for key in ("gamma", "theta2"):
            if key in self.constants and not self.constants[key] >= 0:
                raise ModelError(f"{key} must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "region": self.region.tag,
            "reason": self.region.reason,
            "scaling": self.scaling,
            "limit": dict(self.limit),
            "constants": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                          for k, v in sorted(self.constants.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# -- symbolic memory analysis ----------------------------------------------------------

def _H_exponents(h: SlowVary, alpha: float) -> tuple[float, float]:
    """``(p, q)`` with ``H(x) ~ c (ln x)^p (ln ln x)^q``."""
    p, q = h.asymptotic_order()
    if alpha < 2:
        return p, q
    # H(x) ~ 2 int^x h(s)/s ds
    if p > -1:
        return p + 1, q
    if p == -1 and q > -1:
        return 0.0, q + 1
    return 0.0, 0.0


def memory_exponents(spec: ProcessSpec) -> tuple[float, float]:
    """``(P, Q)`` with ``a_j^{alpha/2} H^{1/2}(1/a_j) ~ c j^-1 (ln j)^P (ln ln j)^Q`` on the critical curve."""
    a = spec.alpha
    pl, ql = spec.ell.asymptotic_order()
    ph, qh = _H_exponents(spec.innovations.h, a)
    return a * pl / 2 + ph / 2, a * ql / 2 + qh / 2


def _series_diverges(P: float, Q: float) -> bool:
    return P > -1 or (P == -1 and Q >= -1)


def _deriv_is_zero(spec: ProcessSpec, K: FunctionalK) -> tuple[bool, float]:
    eng = engine_for(spec.with_horizon(None), K)
    d1 = float(eng.derivatives[1])
    return abs(d1) <= DERIV_ZERO_REL * K.l1_norm, d1


def classify(spec: ProcessSpec, K: FunctionalK) -> Region:
    """Region of ``(alpha, beta)`` and the memory verdict on the critical curve.

    Raises
    ------
    ModelError
        If ``alpha * beta <= 1`` (the process does not exist).
    """
    a, b = spec.alpha, spec.beta
    if a * b <= 1:
        raise ModelError("the linear process exists only for alpha*beta > 1")
    if 1 < a < 2 and b == 1:
        return Region("RegionI")
    if abs(a * b - 2) <= CRITICAL_TOL and b >= 1:
        if not spec.ell.satisfies_t1():
            return Region("OutOfScope", "coefficient slowly varying function violates the regularity condition (T1)")
        P, Q = memory_exponents(spec)
        if not _series_diverges(P, Q):
            return Region("CurveShort")
        if b > 1:
            return Region("CurveLong")
        zero, _ = _deriv_is_zero(spec, K)
        if zero:
            return Region("PointLongDeriv0")
        try:
            _t2_estimates(spec.ell, spec.innovations.h, (0.25,))
        except ClassificationError as exc:
            return Region("OutOfScope", f"critical point without (T2): {exc}")
        return Region("PointLong")
    if a * b < 2:
        return Region("OutOfScope", "1 < alpha*beta < 2 outside Region I: stable limits of Koul and Surgailis (2001), "
                                    "Surgailis (2002) and Honda (2009)")
    if a * b > 2:
        return Region("OutOfScope", "alpha*beta > 2: short memory, central limit theorem of Hsing (1999) "
                                    "and Pipiras and Taqqu (2003)")
    return Region("OutOfScope", "alpha*beta = 2 with beta < 1 is not a critical configuration")


# -- slowly varying factors of the innovation law -----------------------------------------

def _abs_survival(model: InnovationModel, s):
    s = np.asarray(s, dtype=float)
    return model.survival(s) + model.cdf(-s)


def tail_slowvary_exact(model: InnovationModel, s):
    """``s^alpha P(|eps| > s) / (sigma1 + sigma2)``: the tail slowly varying function of the actual law."""
    s = np.asarray(s, dtype=float)
    return s**model.alpha * _abs_survival(model, s) / (model.sigma1 + model.sigma2)


@lru_cache(maxsize=4096)
def _truncated_second_moment(model: InnovationModel, t: float) -> float:
    """``int_0^t 2 s P(|eps| > s) ds - t^2 P(|eps| > t) = E[eps^2; |eps| <= t]``."""
    f = lambda s: 2 * s * float(_abs_survival(model, s))
    kinks = sorted({abs(model.x0 - model.shift), model.x0 + abs(model.shift)})
    a = min(t, 2 * kinks[-1])
    total = integrate.quad(f, 0.0, a, points=[k for k in kinks if 0 < k < a] or None,
                           epsabs=0.0, epsrel=1e-11, limit=200)[0]
    if t > a:
        g = lambda r: f(math.exp(r)) * math.exp(r)
        edges = np.arange(math.log(a), math.log(t), 4.0).tolist() + [math.log(t)]
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    return total - t * t * float(_abs_survival(model, t))


def truncated_H(model: InnovationModel, t: float) -> float:
    """Slowly varying factor ``H`` of the actual innovation law.

    ``H = h`` for ``alpha < 2``; for ``alpha = 2`` it is the truncated second
    moment ``E[eps^2; |eps| <= t] / (sigma1 + sigma2)``, the exact form of
    ``-int_0^t s^2 d(h(s)/s^2)`` when ``h`` is the law's own tail function.
    """
    if t <= 0:
        raise InputDomainError("H needs t > 0")
    if model.alpha < 2:
        return float(tail_slowvary_exact(model, t))
    return _truncated_second_moment(model, float(t)) / (model.sigma1 + model.sigma2)


@lru_cache(maxsize=4096)
def Hbar_exact(spec: ProcessSpec, x: float) -> float:
    """``int_0^x t h(R^-1(t)) / R^-1(t)^alpha dt`` with ``h`` the law's own tail function.

    For constant ``ell = c`` the inverse ``R^-1(t) = t^beta / c`` holds on the
    whole half-line and the integral starts at zero; otherwise it starts at
    the image of the monotone threshold of ``R``.
    """
    a, b, model = spec.alpha, spec.beta, spec.innovations
    if abs(a * b - 2) > CRITICAL_TOL:
        raise InputDomainError("Hbar is defined on the critical curve alpha*beta = 2")
    ell = spec.ell
    rv = RegVary(b, ell, b)
    if ell.is_constant:
        c = float(ell.eval_log(0.0))
        inv = lambda t: t**b / c
        lower = 0.0
    else:
        inv = rv.inverse
        lower = max(ell.domain_floor, float(rv(rv.monotone_threshold)) * (1 + 1e-9))
    if x <= lower:
        return 0.0

    def integrand_log(r):
        t = math.exp(r)
        s = inv(t)
        return t * t * float(tail_slowvary_exact(model, s)) / s**a

    total = 0.0
    start = lower
    if lower == 0.0:
        # below t1 the argument of h lies inside the core of the law
        t1 = min(x, (model.x0 + abs(model.shift)) ** (1 / b) * float(ell.eval_log(0.0)) ** (1 / b))
        g = lambda t: t * float(tail_slowvary_exact(model, inv(t))) / inv(t) ** a if t > 0 else 0.0
        total += integrate.quad(g, 0.0, t1, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
        start = t1
    if x > start:
        r0, r1 = math.log(start), math.log(x)
        edges = np.arange(r0, r1, 2.0).tolist() + [r1]
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(integrand_log, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    return total


# -- scaling factors ----------------------------------------------------------------------

def _region_one_parts(spec: ProcessSpec, N: float):
    model = spec.innovations
    H_alpha = conjugate_slowvary(lambda x: truncated_H(model, x), spec.alpha, N)
    NaH = N ** (1 / spec.alpha) * H_alpha ** (1 / spec.alpha)
    return NaH, partial_sum_L(spec.ell, N)


def region_one_bracket(spec: ProcessSpec, N: float, A: float) -> tuple[float, float]:
    """Lower and upper bounds ``N_a (L(N) - L(A))`` and ``N_a (L(N) - L(A-1)) + 1`` of the bracket identity."""
    NaH, LN = _region_one_parts(spec, N)
    lower = NaH * (LN - partial_sum_L(spec.ell, A))
    upper = NaH * (LN - partial_sum_L(spec.ell, max(A - 1, 1.0))) + 1
    return lower, upper


def scaling_factor(limit, spec: ProcessSpec, N: float) -> float:
    """Scaling factor ``A_N`` for the region of ``limit`` (a :class:`LimitSpec` or :class:`Region`).

    Raises
    ------
    NumericError
        If the Region I bisection bracket does not straddle the root.
    """
    region = limit.region if isinstance(limit, LimitSpec) else limit
    tag = region.tag
    if N < 1:
        raise InputDomainError("N must be >= 1")
    if tag == "OutOfScope":
        raise InputDomainError(f"no scaling factor out of scope: {region.reason}")
    if tag == "CurveShort":
        return math.sqrt(N)
    model = spec.innovations
    if tag == "RegionI":
        NaH, LN = _region_one_parts(spec, N)
        f = lambda x: x - NaH * (LN - partial_sum_L(spec.ell, x))
        lo, hi = 1.0, NaH * LN + 1.0
        if not (f(lo) < 0 <= f(hi)):
            if f(lo) >= 0:
                return lo
            raise NumericError("Region I bisection bracket does not contain the root")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) >= 0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-9 * hi:
                break
        return hi
    if tag in ("CurveLong", "PointLongDeriv0"):
        H2 = conjugate_slowvary(lambda x: Hbar_exact(spec, float(x)), 2.0, N)
        return math.sqrt(N * H2)
    if tag == "PointLong":
        H2 = conjugate_slowvary(lambda x: truncated_H(model, float(x)), 2.0, N)
        return math.sqrt(N * H2) * partial_sum_L(spec.ell, N)
    raise InputDomainError(f"unknown region {tag!r}")


# -- limit constants ----------------------------------------------------------------------

def C_pm(spec: ProcessSpec, K: FunctionalK, sign: float) -> float:
    """``int_0^inf (K_inf(sign t^-beta) - K_inf(0)) dt`` for the infinite-horizon process.

    The part ``t <= 1`` is integrated in ``s = t^-beta`` on logarithmic panels
    up to ``s = 1e12`` with the remainder in closed form; the part ``t >= 1``
    is integrated up to ``t = 1e3`` and the rest from the Taylor expansion of
    ``K_inf`` at zero.
    """
    b = spec.beta
    eng = engine_for(spec.with_horizon(None), K)
    K0 = eng.K0_table
    r_max = math.log(1e12)
    r, w = quad.panel_rule(np.linspace(0.0, r_max, int(r_max / 0.25) + 1), 16)
    s = np.exp(r)
    inner = w @ ((eng.K_inf(sign * s) - K0) * s ** (-1 / b)) / b
    inner += -K0 * math.exp(-r_max / b)
    T = 1e3
    q, v = quad.panel_rule(np.linspace(0.0, math.log(T), 4 * int(math.log(T)) + 1), 16)
    t = np.exp(q)
    outer = v @ ((eng.K_inf(sign * t ** (-b)) - K0) * t)
    der = eng.derivatives
    for k in range(1, TAYLOR_ORDER + 1):
        if k * b > 1:
            outer += der[k] / math.factorial(k) * sign**k * T ** (1 - k * b) / (k * b - 1)
    return float(inner + outer)


def gamma_from_C(Cp: float, Cm: float, sigma1: float, sigma2: float) -> tuple[float, float, float]:
    """``(gamma1, gamma2, gamma)`` from the one-sided constants."""
    g1 = sigma2 * Cp**2 * (Cp < 0) + sigma1 * Cm**2 * (Cm < 0)
    g2 = sigma2 * Cp**2 * (Cp > 0) + sigma1 * Cm**2 * (Cm > 0)
    return float(g1), float(g2), math.sqrt(2 * (g1 + g2))


def _t2_estimates(ell: SlowVary, h: SlowVary, lams):
    L_like = lambda s: partial_sum_L_log(ell, s)
    return [t2_limits(L_like, h, lam) for lam in lams]


@lru_cache(maxsize=1024)
def _t2_at(ell: SlowVary, h: SlowVary, lam: float):
    return _t2_estimates(ell, h, (lam,))[0]


def _c_Lh_from_t2(ell: SlowVary, h: SlowVary) -> float:
    return c_Lh(lambda y: _t2_at(ell, h, y).g_L if y > 0 else 0.0,
                lambda y: _t2_at(ell, h, max(y, 1e-6)).g_h)


def theta2_sequence(spec: ProcessSpec, K: FunctionalK, N: int = 2**14, replicates: int = 1000, seed: int = 0,
                    lags=tuple(2**k for k in range(4, 13))) -> dict:
    """Coupled Monte Carlo estimates of ``Var(S_{N,l}) / N`` over dyadic truncation lags.

    All lags reuse the same innovation records, so the differences between
    consecutive estimates are far less noisy than the estimates themselves.

    The sequence is accepted as Cauchy once three consecutive gaps decrease
    and no later gap exceeds the first of them; later gaps typically sit at
    the Monte Carlo floor reported in ``gap_se``.  ``cauchy_gap`` is the
    largest gap from the end of that run onward.

    Raises
    ------
    EstimationError
        If no such run exists.
    """
    lags = [int(l) for l in lags]
    J = spec.J
    if J is None or max(lags) > J:
        raise InputDomainError("truncation lags must not exceed the finite horizon J")
    from .linproc import expect_K

    a = spec.coef_array(J)
    centers = [expect_K(spec.with_horizon(l), K) for l in lags]
    sums = np.empty((replicates, len(lags)))
    model = spec.innovations
    from .innovations import sample_innovations

    for r in range(replicates):
        eps = sample_innovations(model, N + max(lags), replicate_stream(seed, r, THETA_PURPOSE))
        for i, l in enumerate(lags):
            Xl = overlap_save(eps[max(lags) - l: N + max(lags) - 1], a[:l])
            sums[r, i] = np.sum(K(Xl) - centers[i])
    theta = sums.var(axis=0, ddof=1) / N
    dev2 = (sums - sums.mean(axis=0)) ** 2
    # Monte Carlo standard error of a variance estimate from the fourth moment
    se = np.sqrt(np.maximum(np.mean(dev2**2, axis=0) - (theta * N) ** 2, 0.0) / replicates) / N
    # coupled differences are much less noisy than either estimate
    gap_se = np.std(np.diff(dev2, axis=1), axis=0, ddof=1) / math.sqrt(replicates) / N
    gaps = np.abs(np.diff(theta))
    start = _cauchy_run(gaps)
    if start is None:
        raise EstimationError(f"theta_l^2 gaps never decrease over three consecutive dyads: {gaps}")
    return {"lags": lags, "theta2_l": theta.tolist(), "gaps": gaps.tolist(), "gap_se": gap_se.tolist(),
            "mc_se": se.tolist(), "theta2": float(theta[-1]), "cauchy_run_start": lags[start],
            "cauchy_gap": float(gaps[start + 2:].max())}


def _cauchy_run(gaps: np.ndarray) -> int | None:
    """First index of three strictly decreasing gaps after which no gap exceeds the first of the three."""
    for i in range(gaps.size - 2):
        if gaps[i] > gaps[i + 1] > gaps[i + 2] and np.all(gaps[i + 1:] <= gaps[i]):
            return i
    return None


def limit_constants(region: Region, spec: ProcessSpec, K: FunctionalK, theta_replicates: int = 1000,
                    theta_N: int = 2**14, seed: int = 0) -> LimitSpec:
    """Populate the limit law and its constants for ``region``.

    Fourier quantities use the infinite-horizon process.  ``theta_*`` control
    the Monte Carlo estimate of ``theta^2`` in the short-memory case.
    """
    tag = region.tag
    model = spec.innovations
    s1, s2 = model.sigma1, model.sigma2
    full = spec.with_horizon(None)
    if tag == "OutOfScope":
        return LimitSpec(region, "none", {"kind": "None", "reason": region.reason})
    if tag == "RegionI":
        sigma, D = model.stable_params()
        d1 = float(engine_for(full, K).derivatives[1])
        return LimitSpec(region, "inf{x > 0: x - N^(1/alpha) H_alpha^(1/alpha)(N) (L(N) - L(x)) >= 0}",
                         {"kind": "Stable", "alpha": model.alpha, "sigma": sigma, "D": D, "multiplier": d1},
                         {"sigma": sigma, "D": D, "K_prime_0": d1})
    if tag in ("CurveLong", "PointLongDeriv0"):
        Cp, Cm = C_pm(full, K, 1.0), C_pm(full, K, -1.0)
        g1, g2, gamma = gamma_from_C(Cp, Cm, s1, s2)
        d1 = float(engine_for(full, K).derivatives[1])
        return LimitSpec(region, "N^(1/2) Hbar_2^(1/2)(N)", {"kind": "BrownianMotion", "gamma": gamma},
                         {"C_plus": Cp, "C_minus": Cm, "gamma1": g1, "gamma2": g2, "gamma": gamma, "K_prime_0": d1})
    if tag == "PointLong":
        c = _c_Lh_from_t2(spec.ell, model.h)
        d1 = float(engine_for(full, K).derivatives[1])
        gamma = math.sqrt(c * (s1 + s2)) * abs(d1)
        return LimitSpec(region, "N^(1/2) H_2^(1/2)(N) L(N)", {"kind": "BrownianMotion", "gamma": gamma},
                         {"c_Lh": c, "K_prime_0": d1, "gamma": gamma})
    if tag == "CurveShort":
        est = theta2_sequence(spec, K, theta_N, theta_replicates, seed)
        th = est["theta2"]
        return LimitSpec(region, "N^(1/2)", {"kind": "BrownianMotion", "gamma": math.sqrt(th)},
                         {"theta2": th, "cauchy_gap": est["cauchy_gap"], "theta2_mc_se": est["mc_se"][-1],
                          "theta2_lags": est["lags"], "theta2_gaps": est["gaps"],
                          "cauchy_run_start": est["cauchy_run_start"], "gamma": math.sqrt(th)})
    raise InputDomainError(f"unknown region {tag!r}")
