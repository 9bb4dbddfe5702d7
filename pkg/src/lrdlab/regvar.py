"""Slowly and regularly varying functions used to build scaling factors.

The lab works with a closed family of slowly varying functions so that every
regularity check is decidable.  Each member can be evaluated on ordinary
arguments, in the logarithmic domain (``x = e^s`` with ``s`` possibly far
beyond the float range of ``x``) and, for the analytic kinds, off the real
axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ClassificationError, ConvergenceError, InputDomainError, NumericError

__all__ = [
    "SlowVary",
    "RegVary",
    "T2Estimate",
    "eval_slowvary",
    "partial_sum_L",
    "partial_sum_L_log",
    "H_from_h",
    "conjugate_slowvary",
    "R_inverse",
    "Hbar",
    "t2_limits",
    "c_Lh",
    "composed_ratio",
    "self_composed_L_ratio",
]

KINDS = ("Constant", "LogPower", "LogLogPower", "NegLogPower", "Tabulated")
EXACT_SUM_MAX = 1 << 22  # direct summation limit for partial_sum_L


@dataclass(frozen=True)
class SlowVary:
    """A member of the closed slowly varying family.

    Parameters
    ----------
    kind : str
        One of ``Constant`` (value ``param``), ``LogPower`` ((ln x)^param),
        ``LogLogPower`` ((ln ln x)^param), ``NegLogPower`` ((ln x)^-param)
        or ``Tabulated`` (log-log linear interpolation of ``grid``).
    param : float
        Constant value or exponent.
    domain_floor : float
        Arguments below the floor are clamped to it.
    grid : tuple of (x, value) pairs, optional
        Data for the ``Tabulated`` kind; flat beyond the last point.
    """

    kind: str
    param: float = 1.0
    domain_floor: float = 2.0
    grid: tuple[tuple[float, float], ...] | None = field(default=None, compare=True)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputDomainError(f"unknown slowly varying kind {self.kind!r}")
        if not (math.isfinite(self.domain_floor) and self.domain_floor > 1.0):
            raise InputDomainError("domain_floor must be a finite real > 1")
        if not math.isfinite(self.param):
            raise InputDomainError("parameter must be finite")
        if self.kind == "Constant" and self.param <= 0:
            raise InputDomainError("Constant value must be positive")
        if self.kind == "LogLogPower" and self.domain_floor <= math.e:
            raise InputDomainError("LogLogPower needs domain_floor > e so that ln ln x > 0")
        if self.kind == "Tabulated":
            if not self.grid or len(self.grid) < 2:
                raise InputDomainError("Tabulated kind needs at least two grid points")
            xs = np.array([g[0] for g in self.grid], dtype=float)
            vs = np.array([g[1] for g in self.grid], dtype=float)
            if np.any(np.diff(xs) <= 0) or xs[0] < 1.0 or np.any(vs <= 0) or not np.all(np.isfinite(vs)):
                raise InputDomainError("Tabulated grid needs increasing x >= 1 and positive values")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: float = 1.0, floor: float = 2.0) -> "SlowVary":
        return cls("Constant", float(c), floor)

    @classmethod
    def log_power(cls, kappa: float, floor: float = 2.0) -> "SlowVary":
        return cls("LogPower", float(kappa), floor)

    @classmethod
    def loglog_power(cls, kappa: float, floor: float = 16.0) -> "SlowVary":
        return cls("LogLogPower", float(kappa), floor)

    @classmethod
    def neglog_power(cls, kappa: float, floor: float = 2.0) -> "SlowVary":
        return cls("NegLogPower", float(kappa), floor)

    @classmethod
    def tabulated(cls, xs, values, floor: float | None = None) -> "SlowVary":
        grid = tuple((float(x), float(v)) for x, v in zip(xs, values))
        return cls("Tabulated", 0.0, float(floor if floor is not None else max(grid[0][0], 1.0 + 1e-9)), grid)

    @property
    def is_constant(self) -> bool:
        return self.kind == "Constant" or (self.kind in ("LogPower", "NegLogPower", "LogLogPower") and self.param == 0.0)

    # -- evaluation -------------------------------------------------------
    def _grid_arrays(self):
        xs = np.log(np.array([g[0] for g in self.grid]))
        vs = np.log(np.array([g[1] for g in self.grid]))
        return xs, vs

    def eval_log(self, s):
        """Value at ``x = exp(s)``; valid for arbitrarily large ``s``."""
        s = np.maximum(np.asarray(s, dtype=float), math.log(self.domain_floor))
        k = self.param
        if self.kind == "Constant":
            out = np.full_like(s, k)
        elif self.kind == "LogPower":
            out = s**k
        elif self.kind == "NegLogPower":
            out = s ** (-k)
        elif self.kind == "LogLogPower":
            out = np.log(s) ** k
        else:
            lx, lv = self._grid_arrays()
            out = np.exp(np.interp(s, lx, lv))
        return out if out.ndim else float(out)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            raise InputDomainError("slowly varying functions need finite positive arguments")
        return self.eval_log(np.log(x))

    def log_derivative_log(self, s):
        """``x h'(x) / h(x)`` at ``x = exp(s)`` (zero on the clamped region)."""
        s = np.asarray(s, dtype=float)
        inside = s > math.log(self.domain_floor)
        k = self.param
        ss = np.maximum(s, math.log(self.domain_floor))
        if self.kind == "Constant":
            out = np.zeros_like(ss)
        elif self.kind == "LogPower":
            out = k / ss
        elif self.kind == "NegLogPower":
            out = -k / ss
        elif self.kind == "LogLogPower":
            out = k / (ss * np.log(ss))
        else:
            lx, lv = self._grid_arrays()
            slopes = np.diff(lv) / np.diff(lx)
            idx = np.clip(np.searchsorted(lx, ss, side="right") - 1, 0, len(slopes) - 1)
            out = np.where(ss >= lx[-1], 0.0, slopes[idx])
        out = np.where(inside, out, 0.0)
        return out if out.ndim else float(out)

    def log_derivative(self, x):
        return self.log_derivative_log(np.log(np.asarray(x, dtype=float)))

    def derivative(self, x):
        """Ordinary derivative ``h'(x)``."""
        x = np.asarray(x, dtype=float)
        return self(x) * self.log_derivative(x) / x

    def eval_complex(self, z):
        """Analytic continuation for the closed-form kinds (no clamping)."""
        z = np.asarray(z, dtype=complex)
        k = self.param
        if self.kind == "Constant":
            return np.full(z.shape, k, dtype=complex)
        lz = np.log(z)
        if self.kind == "LogPower":
            return lz**k
        if self.kind == "NegLogPower":
            return lz ** (-k)
        if self.kind == "LogLogPower":
            return np.log(lz) ** k
        raise InputDomainError("Tabulated functions have no analytic continuation")

    # -- symbolic metadata -------------------------------------------------
    def asymptotic_order(self) -> tuple[float, float]:
        """Exponents ``(p, q)`` with ``h(x) ~ c (ln x)^p (ln ln x)^q``."""
        k = self.param
        if self.kind == "Constant":
            return 0.0, 0.0
        if self.kind == "LogPower":
            return k, 0.0
        if self.kind == "NegLogPower":
            return -k, 0.0
        if self.kind == "LogLogPower":
            return 0.0, k
        lx, lv = self._grid_arrays()
        if len(lx) < 2 or lx[-2] <= 1.0:
            return 0.0, 0.0
        p = (lv[-1] - lv[-2]) / (math.log(lx[-1]) - math.log(lx[-2]))
        return float(p), 0.0

    def satisfies_t1(self, gamma: float = 0.6) -> bool:
        """Whether ``|x h'(x)/h(x)| <= (ln x)^-gamma`` eventually, with ``gamma > 1/2``.

        Closed-form kinds have log-derivatives of order ``1/ln x`` and satisfy
        the bound by construction; tabulated inputs are checked on the upper
        half of their grid.
        """
        if self.kind != "Tabulated":
            return True
        lx, _ = self._grid_arrays()
        s = np.linspace(lx[len(lx) // 2], lx[-1], 200)
        s = s[s > 1.0]
        if s.size == 0:
            return True
        eta = np.abs(self.log_derivative_log(s))
        return bool(np.all(eta <= s ** (-gamma) + 1e-15))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "domain_floor": self.domain_floor}
        if self.kind == "Constant":
            d["c"] = self.param
        elif self.kind == "Tabulated":
            d["x"] = [g[0] for g in self.grid]
            d["v"] = [g[1] for g in self.grid]
        else:
            d["kappa"] = self.param
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SlowVary":
        d = dict(d)
        kind = d.pop("kind", None)
        floor = d.pop("domain_floor", None)
        if kind == "Constant":
            sv = cls.constant(d.pop("c", 1.0), floor or 2.0)
        elif kind == "LogPower":
            sv = cls.log_power(d.pop("kappa"), floor or 2.0)
        elif kind == "NegLogPower":
            sv = cls.neglog_power(d.pop("kappa"), floor or 2.0)
        elif kind == "LogLogPower":
            sv = cls.loglog_power(d.pop("kappa"), floor or 16.0)
        elif kind == "Tabulated":
            sv = cls.tabulated(d.pop("x"), d.pop("v"), floor)
        else:
            raise InputDomainError(f"unknown slowly varying kind {kind!r}")
        if d:
            raise InputDomainError(f"unknown keys for {kind}: {sorted(d)}")
        return sv


def eval_slowvary(sv: SlowVary, x: float) -> float:
    """Evaluate ``sv`` at ``x`` (clamped to the domain floor)."""
    if not math.isfinite(x):
        raise InputDomainError("non-finite argument")
    return float(sv(x))


# -- coefficient partial sums ------------------------------------------------

@lru_cache(maxsize=8)
def _cumulative_L(ell: SlowVary, n: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    out = np.empty(n + 1)
    out[0] = 0.0
    np.cumsum(ell(j) / j, out=out[1:])
    out.setflags(write=False)
    return out


def _cumulative_upto(ell: SlowVary, n: int) -> np.ndarray:
    size = 1 << max(10, int(math.ceil(math.log2(max(n, 1)))))
    return _cumulative_L(ell, min(size, EXACT_SUM_MAX))


def _log_integral(ell: SlowVary, s0: float, s1: float) -> float:
    """``int_{s0}^{s1} ell(e^r) dr`` for ``s1 >= s0 >= ln floor``."""
    k = ell.param
    if ell.kind == "Constant":
        return k * (s1 - s0)
    if ell.kind == "LogPower" and k != -1.0:
        return (s1 ** (k + 1) - s0 ** (k + 1)) / (k + 1)
    if ell.kind == "NegLogPower":
        if k == 1.0:
            return math.log(s1 / s0)
        return (s1 ** (1 - k) - s0 ** (1 - k)) / (1 - k)
    # ln-substitution keeps the integrand smooth over many decades
    f = lambda w: float(ell.eval_log(math.exp(w))) * math.exp(w)
    val, _ = integrate.quad(f, math.log(s0), math.log(s1), epsabs=0, epsrel=1e-13, limit=400)
    return val


def _em_continuation(ell: SlowVary, s: float) -> float:
    """Euler-Maclaurin continuation of the partial sum beyond the exact range."""
    n0 = EXACT_SUM_MAX
    s0 = math.log(n0)
    base = float(_cumulative_L(ell, EXACT_SUM_MAX)[n0])

    def f(t_log):
        return float(ell.eval_log(t_log)) * math.exp(-t_log)

    def fprime(t_log):  # d/dt [ell(t)/t] = ell(t) (eta(t) - 1) / t^2
        return float(ell.eval_log(t_log)) * (float(ell.log_derivative_log(t_log)) - 1.0) * math.exp(-2 * t_log)

    return base + _log_integral(ell, s0, s) + 0.5 * (f(s) - f(s0)) + (fprime(s) - fprime(s0)) / 12.0


def partial_sum_L(ell: SlowVary, N: float) -> float:
    """Coefficient partial sum ``L(N) = sum_{j<=N} ell(j)/j``.

    Integer arguments up to ``2**22`` are summed directly; larger arguments use
    an Euler-Maclaurin continuation whose error is far below double precision
    relative to ``L``.  Non-integer arguments interpolate linearly.
    """
    if not math.isfinite(N) or N < 1:
        raise InputDomainError("partial_sum_L needs N >= 1")
    lo = math.floor(N)
    frac = N - lo
    if lo + 1 <= EXACT_SUM_MAX:
        c = _cumulative_upto(ell, lo + 1)
        return float(c[lo] + frac * (c[lo + 1] - c[lo])) if frac else float(c[lo])
    a = _em_continuation(ell, math.log(lo))
    if not frac:
        return a
    b = _em_continuation(ell, math.log(lo + 1))
    return a + frac * (b - a)


def partial_sum_L_vec(ell: SlowVary, x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`partial_sum_L` for arguments within the exact range."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1) or np.any(x >= EXACT_SUM_MAX):
        raise InputDomainError("vectorized partial sums need 1 <= x < 2**22")
    c = _cumulative_upto(ell, int(np.max(np.floor(x))) + 1)
    lo = np.floor(x).astype(np.int64)
    return c[lo] + (x - lo) * (c[lo + 1] - c[lo])


def partial_sum_L_log(ell: SlowVary, s: float) -> float:
    """``L(e^s)`` for possibly huge ``s`` (continuous version of the sum)."""
    if s <= math.log(EXACT_SUM_MAX) - 1:
        return partial_sum_L(ell, math.exp(s))
    return _em_continuation(ell, s)


# -- truncated-moment transform -------------------------------------------------

def H_from_h(h: SlowVary, alpha: float, t: float) -> float:
    """Slowly varying part of the truncated second moment.

    For ``alpha < 2`` this is ``h`` itself; for ``alpha = 2`` it is
    ``-int s^2 d(h(s)/s^2)`` integrated from the domain floor, which equals
    ``int (2 h(s)/s - h'(s)) ds``.
    """
    if not (0 < alpha <= 2):
        raise InputDomainError("alpha must lie in (0, 2]")
    if alpha < 2:
        return float(h(t))
    if t < h.domain_floor:
        raise InputDomainError("H_from_h with alpha=2 needs t >= domain_floor")
    r0, r1 = math.log(h.domain_floor), math.log(t)
    if r1 == r0:
        return 0.0
    f = lambda r: float(h.eval_log(r)) * (2.0 - float(h.log_derivative_log(r)))
    val, _ = integrate.quad(f, r0, r1, epsabs=1e-12, epsrel=1e-13, limit=400)
    return val


# -- conjugate slowly varying functions -------------------------------------------

def conjugate_slowvary(G: Callable[[float], float], p: float, N: float, tol: float = 1e-10,
                       max_iter: int = 200) -> float:
    """Solve ``G(N^{1/p} y^{1/p}) = y`` by (damped) fixed-point iteration.

    Starts from ``y0 = G(N^{1/p})``; after 50 iterations each update is damped
    by one half.

    Raises
    ------
    ConvergenceError
        If the relative defining residual is still above ``tol`` after
        ``max_iter`` iterations.
    """
    if p <= 0 or N <= 0:
        raise InputDomainError("conjugate_slowvary needs p > 0 and N > 0")
    root = N ** (1.0 / p)
    y = float(G(root))
    resid = float("inf")
    for it in range(max_iter):
        if y <= 0 or not math.isfinite(y):
            raise NumericError("conjugate iteration left the positive reals")
        gy = float(G(root * y ** (1.0 / p)))
        resid = abs(gy - y)
        if resid <= tol * y:
            return y
        y = gy if it < 50 else y + 0.5 * (gy - y)
    raise ConvergenceError("conjugate slowly varying iteration did not converge", resid)


# -- regularly varying functions -----------------------------------------------

@dataclass(frozen=True)
class RegVary:
    """``x^{1/index} G^{1/index}(x^{1/inner})`` for slowly varying ``G``.

    ``inner = 1`` is the plain composition; ``inner = kappa`` gives the
    inner-power variant.
    """

    index: float
    sv: SlowVary
    inner: float = 1.0

    def log_eval(self, w):
        """``ln R(e^w)``."""
        w = np.asarray(w, dtype=float)
        return (w + np.log(self.sv.eval_log(w / self.inner))) / self.index

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(self.log_eval(np.log(x)))

    def _log_slope(self, w):
        return (1.0 + self.sv.log_derivative_log(np.asarray(w) / self.inner) / self.inner) / self.index

    @property
    def monotone_threshold(self) -> float:
        """Smallest ``x`` beyond which ``R`` is strictly increasing."""
        return _monotone_threshold(self)

    def inverse(self, y: float) -> float:
        """Solve ``R(x) = y`` on the monotone branch by bisection in ``ln x``."""
        a = self.monotone_threshold
        ly = math.log(y)
        if ly <= float(self.log_eval(math.log(a))):
            raise InputDomainError("argument lies below the image of the monotone threshold")
        if self.sv.is_constant:
            c = float(self.sv.eval_log(0.0))
            x = math.exp(self.index * ly - math.log(c))
            if x >= a:
                return x
        lo = math.log(a)
        step = 1.0
        hi = lo + step
        while float(self.log_eval(hi)) < ly:
            lo = hi
            step *= 2.0
            hi = lo + step
            if hi > 1e6:
                raise NumericError("inverse bracket search overflowed")
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if float(self.log_eval(mid)) < ly:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
        return math.exp(hi)


@lru_cache(maxsize=256)
def _monotone_threshold(rv: RegVary) -> float:
    floor_w = math.log(rv.sv.domain_floor) * rv.inner
    if rv.sv.is_constant:
        return 1.0
    w = np.concatenate([np.linspace(0.0, floor_w + 60.0, 20001), np.geomspace(floor_w + 60.0, 1e6, 2001)[1:]])
    bad = np.nonzero(rv._log_slope(w) <= 0)[0]
    if bad.size == 0:
        return 1.0
    w_bad = w[bad[-1]]
    if bad[-1] == len(w) - 1:
        raise ClassificationError("regularly varying function is not eventually increasing")
    lo, hi = w_bad, w[bad[-1] + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rv._log_slope(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return math.exp(hi)


def R_inverse(beta: float, ell: SlowVary, x: float) -> float:
    """Inverse of ``R(s) = s^{1/beta} ell^{1/beta}(s^{1/beta})`` on its monotone branch."""
    if beta < 1:
        raise InputDomainError("R_inverse needs beta >= 1")
    return RegVary(beta, ell, beta).inverse(x)


# -- critical-curve slowly varying function ----------------------------------------

def Hbar(beta: float, alpha: float, ell: SlowVary, h: SlowVary, x: float) -> float:
    """``int t h(R^{-1}(t)) / R^{-1}(t)^alpha dt`` from the domain floor to ``x``.

    The lower limit is the larger of the floor of ``ell`` and the image of the
    monotone threshold of ``R``; the integral is taken in ``ln t``.
    """
    if abs(alpha * beta - 2.0) > 1e-12:
        raise InputDomainError("Hbar is defined on the critical curve alpha*beta = 2")
    rv = RegVary(beta, ell, beta)
    lower = max(ell.domain_floor, float(rv(rv.monotone_threshold)) * (1 + 1e-9))
    if x <= lower:
        if x < ell.domain_floor:
            raise InputDomainError("Hbar needs x >= domain_floor")
        return 0.0
    return _hbar_cached(beta, alpha, ell, h, lower, float(x))


@lru_cache(maxsize=4096)
def _hbar_cached(beta, alpha, ell, h, lower, x):
    rv = RegVary(beta, ell, beta)
    if ell.is_constant:
        c = float(ell.eval_log(0.0))

        def integrand(r):
            ls = beta * r - math.log(c)
            return math.exp(2 * r - alpha * ls) * float(h.eval_log(ls))
    else:
        def integrand(r):
            s = rv.inverse(math.exp(r))
            return math.exp(2 * r - alpha * math.log(s)) * float(h(s))

    r0, r1 = math.log(lower), math.log(x)
    edges = np.arange(r0, r1, 4.0).tolist() + [r1]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad(integrand, a, b, epsabs=1e-11, epsrel=1e-12, limit=200)
        total += v
    return total


# -- (T2) limits -----------------------------------------------------------------

@dataclass(frozen=True)
class T2Estimate:
    """Grid estimates of the two limit functions at a single ``lambda``."""

    lam: float
    g_L: float
    g_h: float
    spread_L: float
    spread_h: float
    geometric_L: bool


def _ratio_grid(fn_log: Callable[[float], float], lam: float) -> np.ndarray:
    xs = 2.0 ** np.arange(20, 41)
    return np.array([fn_log(lam * x) / fn_log(x) for x in xs])


def _stabilizes_geometrically(r: np.ndarray) -> bool:
    d = np.abs(np.diff(r[-6:]))
    if np.all(d <= 1e-12):
        return True
    d = np.maximum(d, 1e-300)
    return bool(np.all((d[1:] <= 0.9 * d[:-1]) | (d[1:] <= 1e-12)))


def t2_limits(L_like: Callable[[float], float], h: SlowVary, lam: float, tol: float = 1e-2) -> T2Estimate:
    """Estimate ``lim L(e^{lam x})/L(e^x)`` and the same ratio for ``h``.

    ``L_like`` is a log-domain callable: ``L_like(s)`` returns ``L(e^s)``.
    Ratios are evaluated at ``x = 2^k`` for ``k = 20..40``; the last value is
    the estimate and the spread is max - min over the last five.

    Raises
    ------
    ClassificationError
        ``"T2 fails"`` if a spread exceeds ``tol``, if the ``L`` ratios drift
        sub-geometrically (limit not reached on the grid, as for ``ln ln``), or
        if the ``L`` limit is not strictly below one.
    """
    if not (0 < lam < 1):
        raise InputDomainError("lambda must lie in (0, 1)")
    rl = _ratio_grid(L_like, lam)
    rh = _ratio_grid(lambda s: float(h.eval_log(s)), lam)
    spread_l = float(np.ptp(rl[-5:]))
    spread_h = float(np.ptp(rh[-5:]))
    geo = _stabilizes_geometrically(rl)
    est = T2Estimate(lam, float(rl[-1]), float(rh[-1]), spread_l, spread_h, geo)
    if spread_l > tol or spread_h > tol:
        raise ClassificationError(f"T2 fails: ratios do not stabilize (spreads {spread_l:.2e}, {spread_h:.2e})")
    if not geo:
        raise ClassificationError("T2 fails: L ratio drifts toward its limit sub-geometrically")
    if est.g_L >= 1 - tol:
        raise ClassificationError("T2 fails: limit of the L ratio is not below one")
    return est


def c_Lh(g_L: Callable[[float], float], g_h: Callable[[float], float]) -> float:
    """``int_0^{1/2} (1 - g_L)^2 g_h / int_0^{1/2} g_h``."""
    num, _ = integrate.quad(lambda y: (1.0 - g_L(y)) ** 2 * g_h(y), 0.0, 0.5, epsabs=1e-10, epsrel=1e-12, limit=200)
    den, _ = integrate.quad(g_h, 0.0, 0.5, epsabs=1e-10, epsrel=1e-12, limit=200)
    if not den > 0:
        raise NumericError("denominator quadrature is not positive")
    return num / den


# -- diagnostic ratios --------------------------------------------------------------

def composed_ratio(ell: SlowVary, x: float, a: float) -> float:
    """``ell(x ell^a(x)) / ell(x)`` evaluated in the log domain."""
    s = math.log(x)
    inner = s + a * math.log(float(ell.eval_log(s)))
    return float(ell.eval_log(inner)) / float(ell.eval_log(s))


def self_composed_L_ratio(ell: SlowVary, x: float) -> float:
    """``L(x L(x)) / L(x)`` with ``L`` the coefficient partial sum."""
    s = math.log(x)
    L = partial_sum_L_log(ell, s)
    return partial_sum_L_log(ell, s + math.log(L)) / L
