"""Stable and Gaussian target laws: characteristic function, sampler, CDF and KS distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from . import quad
from .errors import InputDomainError, NumericError

__all__ = [
    "StableLaw",
    "gaussian_law",
    "stable_char",
    "sample_stable",
    "sampler_parameters",
    "stable_cdf",
    "stable_cdf_direct",
    "ks_distance",
]

TABLE_HALF_WIDTH = 40.0  # in units of the law's scale
TABLE_POINTS = 8001
DECAY_EXPONENT = 45.0  # integrate the inversion formula until t sigma u^alpha reaches this
TAIL_TERMS = 12


@dataclass(frozen=True)
class StableLaw:
    """Law with characteristic function ``exp(-t sigma |u|^alpha (1 - i D sgn u))``.

    ``alpha = 2`` is the centred Gaussian law with variance ``2 t sigma``;
    ``D`` is then ignored.
    """

    alpha: float
    sigma: float
    D: float = 0.0
    t: float = 1.0

    def __post_init__(self):
        if not (0 < self.alpha <= 2):
            raise InputDomainError("alpha must lie in (0, 2]")
        if not (self.sigma > 0 and self.t > 0):
            raise InputDomainError("sigma and t must be positive")
        if self.alpha == 2 and self.D != 0:
            object.__setattr__(self, "D", 0.0)

    @property
    def c(self) -> float:
        return self.t * self.sigma

    @property
    def scale(self) -> float:
        return self.c ** (1 / self.alpha)

    def at_time(self, t: float) -> "StableLaw":
        return StableLaw(self.alpha, self.sigma, self.D, t)

    def reflected(self) -> "StableLaw":
        """Law of ``-Z``."""
        return StableLaw(self.alpha, self.sigma, -self.D, self.t)


def gaussian_law(variance: float) -> StableLaw:
    """Centred normal law with the given variance as an ``alpha = 2`` law."""
    if not variance > 0:
        raise InputDomainError("variance must be positive")
    return StableLaw(2.0, variance / 2.0)


def stable_char(law: StableLaw, u):
    u = np.asarray(u, dtype=float)
    au = np.abs(u) ** law.alpha
    val = np.exp(-law.c * au * (1 - 1j * law.D * np.sign(u)))
    return val if val.ndim else complex(val)


def sampler_parameters(law: StableLaw) -> dict:
    """Skewness and scale of the standard ``S(alpha, skew, scale, 0)`` parameterization."""
    if law.alpha == 2 or law.alpha == 1:
        skew = 0.0
    else:
        skew = law.D / math.tan(math.pi * law.alpha / 2)
    return {"skew": skew, "scale": law.scale}


def sample_stable(law: StableLaw, n: int, stream: np.random.Generator) -> np.ndarray:
    """Exact draws by the Chambers-Mallows-Stuck transformation.

    Raises
    ------
    InputDomainError
        For ``alpha = 1`` with ``D != 0`` or a skewness outside ``[-1, 1]``.
    """
    if n < 1:
        raise InputDomainError("n must be >= 1")
    a = law.alpha
    if a == 1 and law.D != 0:
        raise InputDomainError("alpha = 1 is supported only with D = 0")
    if a == 2:
        return stream.standard_normal(n) * math.sqrt(2 * law.c)
    par = sampler_parameters(law)
    skew = par["skew"]
    if abs(skew) > 1 + 1e-12:
        raise InputDomainError("skewness parameter outside [-1, 1]")
    V = stream.uniform(-math.pi / 2, math.pi / 2, n)
    W = stream.standard_exponential(n)
    if a == 1:
        return par["scale"] * np.tan(V)
    zeta = skew * math.tan(math.pi * a / 2)
    B = math.atan(zeta) / a
    S = (1 + zeta * zeta) ** (1 / (2 * a))
    X = S * np.sin(a * (V + B)) / np.cos(V) ** (1 / a) * (np.cos(V - a * (V + B)) / W) ** ((1 - a) / a)
    return par["scale"] * X


# -- distribution function ----------------------------------------------------------

def _inversion_nodes(law: StableLaw, xmax: float):
    U = (DECAY_EXPONENT / law.c) ** (1 / law.alpha)
    width = min(U / 8, math.pi / (2 * (1 + xmax)))
    bend = min(U / 8, 1.0 / (1 + xmax))
    return quad.panel_rule(quad.cusp_edges(U, width, bend, smallest=1e-16 * U), 16)


def stable_cdf_direct(law: StableLaw, x) -> np.ndarray:
    """``F(x) = 1/2 - (1/pi) int_0^inf Im(e^{-iux} phi(u)) / u du`` by panel quadrature."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    if xmax > 1e4 * law.scale:
        raise InputDomainError("direct inversion is limited to |x| <= 1e4 scales")
    u, w = _inversion_nodes(law, xmax)
    ua = u**law.alpha
    amp = w * np.exp(-law.c * ua) / u
    phase = law.c * law.D * ua
    out = np.empty(x.shape)
    for start in range(0, x.size, 256):
        xs = x[start:start + 256]
        out[start:start + 256] = 0.5 - np.sin(phase[None, :] - np.outer(xs, u)) @ amp / math.pi
    return out


def _tail_series(law: StableLaw, x: np.ndarray) -> np.ndarray:
    """``P(Z > x)`` for large positive ``x`` from the series in ``x^-alpha``."""
    z = law.c * (1 - 1j * law.D)
    a = law.alpha
    total = np.zeros(x.shape)
    for k in range(1, TAIL_TERMS + 1):
        coef = (-z) ** k / math.factorial(k) * special.gamma(k * a) * np.exp(-1j * math.pi * k * a / 2)
        total += (coef * x ** (-k * a)).imag
    return total / math.pi


class _CDFTable:
    def __init__(self, law: StableLaw):
        self.law = law
        self.edge = TABLE_HALF_WIDTH * law.scale
        xs = np.linspace(-self.edge, self.edge, TABLE_POINTS)
        F = stable_cdf_direct(law, xs)
        if np.any(np.diff(F) < -1e-9):
            raise NumericError("inversion produced a decreasing distribution function")
        F = np.clip(np.maximum.accumulate(F), 0.0, 1.0)
        self.interp = PchipInterpolator(xs, F)
        right = _tail_series(law, np.array([self.edge]))[0]
        left = _tail_series(law.reflected(), np.array([self.edge]))[0]
        # the tail series and the table must meet at the table edge
        if abs(right - (1 - F[-1])) > 1e-6 or abs(left - F[0]) > 1e-6:
            raise NumericError("tail series does not match the inversion table")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.interp(np.clip(x, -self.edge, self.edge))
        hi = x > self.edge
        lo = x < -self.edge
        if np.any(hi):
            out[hi] = 1.0 - _tail_series(self.law, x[hi])
        if np.any(lo):
            out[lo] = _tail_series(self.law.reflected(), -x[lo])
        return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=64)
def _table(law: StableLaw) -> _CDFTable:
    return _CDFTable(law)


def stable_cdf(law: StableLaw, x):
    """Distribution function of ``law`` (monotone interpolation of the inversion formula)."""
    x = np.asarray(x, dtype=float)
    out = _table(law)(x.ravel()).reshape(x.shape)
    return out if out.ndim else float(out)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 1:
        raise InputDomainError("KS distance needs at least one sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
