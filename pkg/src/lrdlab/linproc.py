"""Linear process operations: simulation, centering, ``K_inf``, ``eta_K`` and surrogate sums."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InputDomainError, NumericError
from .fourier import TAYLOR_ORDER, engine_for
from .process import (
    FunctionalK,
    PathBatch,
    ProcessSpec,
    coefficients,
    innovation_record,
    iter_path_chunks,
    overlap_save,
    partial_sum_process,
    replicate_stream,
    simulate_paths,
    step_index,
)

__all__ = [
    "FunctionalK",
    "ProcessSpec",
    "PathBatch",
    "coefficients",
    "simulate_paths",
    "iter_path_chunks",
    "innovation_record",
    "overlap_save",
    "partial_sum_process",
    "step_index",
    "process_char_fn",
    "expect_K",
    "expect_K_mc",
    "ExpectationCheck",
    "check_expect_K",
    "K_infinity",
    "K_infinity_prime_zero",
    "eta_K",
    "SurrogateSums",
    "surrogate_sums",
]

RESIDUAL_TOL = 1e-6
SERIES_MAX = 2**22 - 1


def process_char_fn(spec: ProcessSpec, u):
    """Characteristic function ``phi(u) = prod_j phi_eps(a_j u)`` of ``X_1``.

    Small factors come from a spline of the innovation log characteristic
    function, and for long horizons the far factors are summed in log form by
    Euler-Maclaurin.  ``spec.J = None`` gives the infinite-horizon law.
    """
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) > 1e3):
        raise InputDomainError("|u| must not exceed 1e3")
    K = FunctionalK.gauss_bump()
    val = engine_for(spec, K).phi(u)
    return val if val.ndim else complex(val)


def _checked(values, residual):
    if np.any(residual > RESIDUAL_TOL):
        raise NumericError(f"Fourier integral has imaginary residual {float(np.max(residual)):.2e}")
    return values


def expect_K(spec: ProcessSpec, K: FunctionalK) -> float:
    """``E K(X_1) = (1/2pi) int Khat(u) phi(u) du``."""
    vals, res = engine_for(spec, K).direct(0.0)
    return float(_checked(vals, res)[0])


def K_infinity(spec: ProcessSpec, K: FunctionalK, x):
    """``K_inf(x) = E K(X_1 + x)`` by direct Fourier quadrature."""
    x = np.asarray(x, dtype=float)
    vals, res = engine_for(spec, K).direct(x.ravel())
    vals = _checked(vals, res).reshape(x.shape)
    return vals if vals.ndim else float(vals)


def K_infinity_prime_zero(spec: ProcessSpec, K: FunctionalK) -> float:
    """``K_inf'(0) = (1/2pi) int (iu) Khat(u) phi(u) du``."""
    vals, res = engine_for(spec, K).direct(0.0, order=1)
    return float(_checked(vals, res)[0])


def expect_K_mc(spec: ProcessSpec, K: FunctionalK, samples: int = 10**6, seed: int = 0,
                path_length: int = 4000) -> tuple[float, float]:
    """Monte Carlo estimate of ``E K(X_1)`` and its standard error.

    Samples are grouped into independent paths; the standard error comes from
    the spread of the path means, so serial dependence within a path is
    accounted for.
    """
    R = max(2, samples // path_length)
    batch = simulate_paths(spec, path_length, R, seed)
    means = K(batch.X).mean(axis=1)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(R))


@dataclass(frozen=True)
class ExpectationCheck:
    fourier: float
    monte_carlo: float
    std_error: float
    status: str  # "OK" or "WARN"


def check_expect_K(spec: ProcessSpec, K: FunctionalK, samples: int = 10**6, seed: int = 0) -> ExpectationCheck:
    """Compare the Fourier centering with Monte Carlo; ``WARN`` beyond three standard errors."""
    f = expect_K(spec, K)
    m, se = expect_K_mc(spec, K, samples, seed)
    return ExpectationCheck(f, m, se, "OK" if abs(f - m) <= 3 * se else "WARN")


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def eta_K(spec: ProcessSpec, K: FunctionalK, x, Jtail: int = 2**16, linear_correction: bool = False):
    """``eta_K(x) = sum_j (K_inf(a_j x) - E K_inf(a_j eps))`` over the infinite horizon.

    With ``linear_correction`` each term also subtracts ``K_inf'(0) a_j x``.
    Terms with ``|a_j x| < 1/4`` are expanded to eighth order in ``a_j x`` and
    summed through coefficient power sums; the series beyond ``Jtail`` is
    extrapolated from the last two dyadic blocks.

    Raises
    ------
    DivergenceError
        If a contributing series has non-decreasing dyadic blocks.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    full = spec.with_horizon(None)
    eng = engine_for(full, K)
    need = 1
    if flat.size:
        probe = eng.series(_next_pow2(max(Jtail, 4)) - 1)
        need = int(probe.cut_index(flat).max())
    n = _next_pow2(max(Jtail, 2 * need, 4)) - 1
    if n > SERIES_MAX:
        raise InputDomainError("argument too large for the coefficient tables")
    tabs = eng.series(n)
    power_tails, d_tail = tabs.tails
    if isinstance(d_tail, DivergenceError):
        raise d_tail
    jc = tabs.cut_index(flat)
    linear = float(eng.derivatives[1]) if linear_correction else 0.0
    out = tabs.explicit_sums(flat, np.ones_like(jc), jc - 1, linear)
    out += tabs.taylor_sums(flat, jc, np.full_like(jc, n), skip_linear=linear_correction)
    xk = np.ones_like(flat)
    for k in range(1, TAYLOR_ORDER + 1):
        xk = xk * flat
        if (k == 1 and linear_correction) or tabs.coefs[k] == 0.0:
            continue
        tail = power_tails[k]
        if isinstance(tail, DivergenceError):
            raise tail
        out += tabs.coefs[k] * xk * tail
    out -= tabs.d_suffix[1] + d_tail
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


@dataclass
class SurrogateSums:
    """Per-replicate sums over one batch: the centred partial sum and its surrogates.

    ``S_N`` is ``sum_n (K(X_n) - E K(X_1))``; ``T_N`` replaces each
    ``K(X_n)`` by the sum of ``K_inf(a_j eps_{n-j})`` over ``j``; ``T_tilde``
    is ``sum_n eta(eps_n)`` with the series cut at the horizon ``J``; and
    ``S_Nl`` is the centred sum of the process truncated to ``l`` lags.
    """

    replicates: np.ndarray
    S_N: np.ndarray
    T_N: np.ndarray
    T_tilde: np.ndarray
    S_Nl: np.ndarray
    l: int


def surrogate_sums(batch: PathBatch, K: FunctionalK, l: int | None = None,
                   replicates: int | None = None) -> SurrogateSums:
    """Coupled surrogate sums for the first ``replicates`` replicates of ``batch``.

    Parameters
    ----------
    batch : PathBatch
        Paths together with the innovation records that built them.
    K : FunctionalK
        Functional applied to the process.
    l : int, optional
        Truncation lag for ``S_Nl``; defaults to the full horizon.
    replicates : int, optional
        Number of leading replicates to process (all by default).
    """
    spec = batch.spec
    J, N = spec.J, batch.N
    if batch.eps is None:
        raise InputDomainError("surrogate sums need the innovation record of the batch")
    l = J if l is None else int(l)
    if not 1 <= l <= J:
        raise InputDomainError("truncation lag must satisfy 1 <= l <= J")
    R = batch.replicates if replicates is None else min(replicates, batch.replicates)
    eng = engine_for(spec, K)
    tabs = eng.series(J)
    center = expect_K(spec, K)
    center_l = center if l == J else expect_K(spec.with_horizon(l), K)
    a = coefficients(spec)
    i = np.arange(N + J - 1)
    lo = np.maximum(1, J - i)
    hi = np.minimum(J, N + J - 1 - i)
    d_total = float(tabs.d_sums(lo, hi).sum())
    full = np.ones(N, dtype=np.int64)
    S, T, Tt, Sl = (np.empty(R) for _ in range(4))
    for r in range(R):
        eps = batch.eps[r]
        S[r] = np.sum(K(batch.X[r]) - center)
        x = eps[: N + J - 1]
        jc = tabs.cut_index(x)
        T[r] = (tabs.explicit_sums(x, lo, np.minimum(hi, jc - 1)).sum()
                + tabs.taylor_sums(x, np.maximum(lo, jc), hi).sum() - d_total)
        y = eps[J:]
        jy = tabs.cut_index(y)
        Tt[r] = (tabs.explicit_sums(y, full, np.minimum(J, jy - 1)).sum()
                 + tabs.taylor_sums(y, jy, np.full(N, J)).sum() - N * tabs.d_suffix[1])
        if l == J:
            Sl[r] = S[r]
        else:
            Xl = overlap_save(eps[J - l: N + J - 1], a[:l])
            Sl[r] = np.sum(K(Xl) - center_l)
    return SurrogateSums(np.arange(batch.first_replicate, batch.first_replicate + R), S, T, Tt, Sl, l)
