"""Process specification, functionals and fast path simulation."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import fft as sfft
from scipy import integrate

from .errors import ConfigurationError, FormatError, InputDomainError, ModelError
from .innovations import InnovationModel, sample_innovations
from .regvar import SlowVary

__all__ = [
    "FunctionalK",
    "ProcessSpec",
    "PathBatch",
    "coefficients",
    "overlap_save",
    "replicate_stream",
    "innovation_record",
    "simulate_paths",
    "iter_path_chunks",
    "partial_sum_process",
]

K_KINDS = ("GaussBump", "OddBump", "Indicator")
CACHE_MAGIC = b"LPCACHE1"


@dataclass(frozen=True)
class FunctionalK:
    """Integrable, square-integrable functional ``K`` with a closed-form transform.

    ``GaussBump`` is ``exp(-x^2/2)``, ``OddBump`` is ``x exp(-x^2)`` and
    ``Indicator`` is the indicator of ``[a, b]``; every kind is multiplied by
    ``scale``.  The transform convention is ``Khat(u) = int K(x) e^{-iux} dx``.
    """

    kind: str
    a: float = -1.0
    b: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in K_KINDS:
            raise InputDomainError(f"unknown functional kind {self.kind!r}")
        if self.kind == "Indicator" and not (self.a < self.b):
            raise InputDomainError("Indicator needs a < b")

    @classmethod
    def gauss_bump(cls, scale: float = 1.0) -> "FunctionalK":
        return cls("GaussBump", scale=scale)

    @classmethod
    def odd_bump(cls, scale: float = 1.0) -> "FunctionalK":
        return cls("OddBump", scale=scale)

    @classmethod
    def indicator(cls, a: float, b: float, scale: float = 1.0) -> "FunctionalK":
        return cls("Indicator", a, b, scale)

    def scaled(self, c: float) -> "FunctionalK":
        return replace(self, scale=self.scale * c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "GaussBump":
            out = np.exp(-0.5 * x * x)
        elif self.kind == "OddBump":
            out = x * np.exp(-x * x)
        else:
            out = ((x >= self.a) & (x <= self.b)).astype(float)
        return self.scale * out

    def hat(self, u):
        """Closed-form transform ``int K(x) exp(-iux) dx``."""
        u = np.asarray(u, dtype=float)
        if self.kind == "GaussBump":
            out = math.sqrt(2 * math.pi) * np.exp(-0.5 * u * u) + 0j
        elif self.kind == "OddBump":
            out = -0.5j * math.sqrt(math.pi) * u * np.exp(-0.25 * u * u)
        else:
            small = np.abs(u) < 1e-8
            us = np.where(small, 1.0, u)
            val = (np.exp(-1j * us * self.a) - np.exp(-1j * us * self.b)) / (1j * us)
            out = np.where(small, (self.b - self.a) - 0.5j * u * (self.b**2 - self.a**2), val)
        return self.scale * out

    @property
    def is_even(self) -> bool:
        return self.kind == "GaussBump" or (self.kind == "Indicator" and self.a == -self.b)

    @property
    def is_odd(self) -> bool:
        return self.kind == "OddBump"

    @property
    def l1_norm(self) -> float:
        c = abs(self.scale)
        if self.kind == "GaussBump":
            return c * math.sqrt(2 * math.pi)
        if self.kind == "OddBump":
            return c
        return c * (self.b - self.a)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "Indicator":
            d.update(a=self.a, b=self.b)
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionalK":
        d = dict(d)
        kind = d.pop("kind", None)
        scale = float(d.pop("scale", 1.0))
        if kind == "Indicator":
            out = cls.indicator(float(d.pop("a")), float(d.pop("b")), scale)
        elif kind in ("GaussBump", "OddBump"):
            out = cls(kind, scale=scale)
        else:
            raise InputDomainError(f"unknown functional kind {kind!r}")
        if d:
            raise InputDomainError(f"unknown functional keys {sorted(d)}")
        return out


@dataclass(frozen=True)
class ProcessSpec:
    """Linear process ``X_n = sum_{j=1}^J a_j eps_{n-j}`` with ``a_j = j^-beta ell(j)``.

    ``J = None`` denotes the infinite-horizon process; it is accepted by the
    Fourier-side computations but not by the simulator.  ``kernel`` replaces
    the coefficient formula by an explicit finite sequence.
    """

    beta: float
    ell: SlowVary
    innovations: InnovationModel
    J: int | None = 4096
    kernel: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.kernel is None:
            if not self.beta > 0:
                raise ModelError("beta must be positive")
            if self.alpha * self.beta <= 1:
                raise ModelError("the linear process exists only for alpha*beta > 1")
            if self.J is not None and self.J < 1:
                raise ModelError("truncation J must be >= 1")
        else:
            if len(self.kernel) < 1 or not all(math.isfinite(v) for v in self.kernel):
                raise ModelError("explicit kernel must be a non-empty finite sequence")
            object.__setattr__(self, "J", len(self.kernel))

    @property
    def alpha(self) -> float:
        return self.innovations.alpha

    @property
    def infinite(self) -> bool:
        return self.J is None

    def with_horizon(self, J: int | None) -> "ProcessSpec":
        if self.kernel is not None:
            if J is None or J > len(self.kernel):
                raise InputDomainError("explicit kernels cannot be extended")
            return replace(self, kernel=self.kernel[:J], J=J)
        return replace(self, J=J)

    def coef(self, t):
        """Continuous coefficient ``a(t) = t^-beta ell(t)``."""
        t = np.asarray(t, dtype=float)
        return np.exp(self.log_coef(np.log(t)))

    def log_coef(self, s):
        """``ln a(e^s)``; valid far beyond the float range of ``t``."""
        s = np.asarray(s, dtype=float)
        return -self.beta * s + np.log(self.ell.eval_log(s))

    def coef_array(self, jmax: int) -> np.ndarray:
        if self.kernel is not None:
            a = np.zeros(jmax)
            k = np.asarray(self.kernel[:jmax], dtype=float)
            a[: k.size] = k
            return a
        return self.coef(np.arange(1, jmax + 1, dtype=float))

    def truncation_metadata(self) -> dict:
        """Bounds on the neglected coefficients ``j > J``.

        ``alpha_scale`` is ``(int_J^inf a(t)^alpha dt)^(1/alpha)``, which
        bounds the stable scale of the neglected part relative to one
        innovation for eventually decreasing ``a``.  ``l1`` is the
        integral-comparison bound ``a_J J/(beta - 1)`` (finite only for
        ``beta > 1``).
        """
        if self.kernel is not None:
            return {"J": self.J, "alpha_scale": 0.0, "l1": 0.0}
        if self.J is None:
            return {"J": None, "alpha_scale": 0.0, "l1": 0.0}
        J, a = self.J, self.alpha
        aJ = float(self.coef(J))
        l1 = aJ * J / (self.beta - 1) if self.beta > 1 else math.inf
        s0 = math.log(J)
        f = lambda s: math.exp(a * float(self.log_coef(s)) + s)
        mass, _ = integrate.quad(f, s0, np.inf, epsabs=0, epsrel=1e-10, limit=400)
        return {"J": J, "alpha_scale": mass ** (1 / a), "l1": l1}

    def to_dict(self) -> dict:
        m = self.innovations
        d = {
            "alpha": m.alpha,
            "beta": self.beta,
            "sigma1": m.sigma1,
            "sigma2": m.sigma2,
            "x0": m.x0,
            "centering": m.centering,
            "ell": self.ell.to_dict(),
            "h": m.h.to_dict(),
            "J": self.J,
        }
        if self.kernel is not None:
            d["kernel"] = list(self.kernel)
        return d

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def coefficients(spec: ProcessSpec) -> np.ndarray:
    """Coefficients ``a_1..a_J``."""
    if spec.J is None:
        raise InputDomainError("coefficients need a finite horizon")
    return spec.coef_array(spec.J)


# -- convolution -----------------------------------------------------------------

def overlap_save(x: np.ndarray, h: np.ndarray, block: int | None = None, workers: int = 1) -> np.ndarray:
    """Valid-mode linear convolution along the last axis by overlap-save.

    Returns ``y[..., n] = sum_k h[k] x[..., n + len(h) - 1 - k]`` for
    ``n = 0 .. len(x) - len(h)``, identical to ``numpy.convolve(x, h, "valid")``
    up to rounding.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    J = h.size
    M = x.shape[-1]
    N = M - J + 1
    if N < 1:
        raise InputDomainError("signal shorter than kernel")
    if block is None:
        block = min(N, max(J, 8192))
    nfft = sfft.next_fast_len(block + J - 1, real=True)
    block = nfft - J + 1
    nb = -(-N // block)
    H = sfft.rfft(h, nfft)
    lead = x.shape[:-1]
    xp = np.zeros(lead + (nb * block + J - 1,))
    xp[..., :M] = x
    win = np.lib.stride_tricks.sliding_window_view(xp, nfft, axis=-1)[..., ::block, :][..., :nb, :]
    Y = sfft.irfft(sfft.rfft(win, axis=-1, workers=workers) * H, nfft, axis=-1, workers=workers)
    return Y[..., J - 1:].reshape(lead + (nb * block,))[..., :N]


# -- random streams and simulation ------------------------------------------------

def replicate_stream(seed: int, replicate: int, purpose: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, replicate)``."""
    if seed < 0 or replicate < 0:
        raise InputDomainError("seed and replicate index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(purpose, replicate)))


def innovation_record(spec: ProcessSpec, N: int, seed: int, replicate: int, purpose: int = 0) -> np.ndarray:
    """Innovations ``eps_{1-J} .. eps_N`` (length ``N + J``) of one replicate."""
    if spec.J is None:
        raise ConfigurationError("simulation needs a finite horizon J")
    return sample_innovations(spec.innovations, N + spec.J, replicate_stream(seed, replicate, purpose))


def _check_budget(spec: ProcessSpec, tol: float | None) -> None:
    if tol is None or spec.kernel is not None:
        return
    meta = spec.truncation_metadata()
    if meta["alpha_scale"] > tol:
        raise ConfigurationError(
            f"truncation J={spec.J} leaves neglected scale {meta['alpha_scale']:.3g} above tolerance {tol:.3g}"
        )


@dataclass
class PathBatch:
    """Simulated paths ``X[r, n-1] = X_n`` for replicates ``first .. first + R - 1``."""

    spec: ProcessSpec
    N: int
    seed: int
    X: np.ndarray
    eps: np.ndarray | None = None
    first_replicate: int = 0
    purpose: int = 0

    @property
    def replicates(self) -> int:
        return self.X.shape[0]

    def save(self, path) -> None:
        """Write the little-endian binary cache format."""
        arrays = [("X", self.X)] + ([("eps", self.eps)] if self.eps is not None else [])
        header = {
            "spec_hash": self.spec.spec_hash(),
            "spec": self.spec.to_dict(),
            "N": self.N,
            "J": self.spec.J,
            "replicates": self.replicates,
            "first_replicate": self.first_replicate,
            "seed": self.seed,
            "purpose": self.purpose,
            "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
        }
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for _, a in arrays:
                fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, spec: ProcessSpec) -> "PathBatch":
        """Read a cache file; the stored spec hash must match ``spec``."""
        data = Path(path).read_bytes()
        if data[:8] != CACHE_MAGIC:
            raise FormatError("not a path cache file")
        (n,) = struct.unpack("<I", data[8:12])
        header = json.loads(data[12:12 + n])
        if header["spec_hash"] != spec.spec_hash():
            raise FormatError("path cache was written for a different process")
        off = 12 + n
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            size = int(np.prod(shape)) * 8
            arrays[entry["name"]] = np.frombuffer(data[off:off + size], dtype="<f8").reshape(shape).copy()
            off += size
        if off != len(data):
            raise FormatError("path cache has trailing or missing bytes")
        return cls(spec, header["N"], header["seed"], arrays["X"], arrays.get("eps"),
                   header["first_replicate"], header.get("purpose", 0))


def iter_path_chunks(spec: ProcessSpec, N: int, replicates: int, seed: int, chunk: int | None = None,
                     workers: int = 1, keep_innovations: bool = False, first: int = 0,
                     purpose: int = 0, truncation_tol: float | None = None) -> Iterator[PathBatch]:
    """Yield consecutive replicate chunks in ascending replicate order."""
    if N < 1 or replicates < 1:
        raise InputDomainError("N and replicates must be >= 1")
    if spec.J is None:
        raise ConfigurationError("simulation needs a finite horizon J")
    _check_budget(spec, truncation_tol)
    a = coefficients(spec)
    if chunk is None:
        chunk = max(1, min(replicates, int(4e7 // (N + spec.J))))
    for start in range(first, first + replicates, chunk):
        stop = min(first + replicates, start + chunk)
        eps = np.stack([innovation_record(spec, N, seed, r, purpose) for r in range(start, stop)])
        X = overlap_save(eps[:, :-1], a, workers=workers)
        yield PathBatch(spec, N, seed, X, eps if keep_innovations else None, start, purpose)


def simulate_paths(spec: ProcessSpec, N: int, replicates: int, seed: int, workers: int = 1,
                   keep_innovations: bool = False, truncation_tol: float | None = None) -> PathBatch:
    """Simulate ``replicates`` independent stationary paths ``X_1..X_N``.

    Parameters
    ----------
    spec : ProcessSpec
        Finite-horizon process.
    N : int
        Path length.
    replicates : int
        Number of independent replicates; replicate ``r`` draws its
        ``N + J`` innovations from its own substream of ``seed``.
    seed : int
        Master seed.
    workers : int
        FFT worker threads; results do not depend on it.
    keep_innovations : bool
        Also return the innovation records.
    truncation_tol : float, optional
        Maximum allowed neglected stable scale (see
        :meth:`ProcessSpec.truncation_metadata`).

    Returns
    -------
    PathBatch
    """
    parts = list(iter_path_chunks(spec, N, replicates, seed, workers=workers,
                                  keep_innovations=keep_innovations, truncation_tol=truncation_tol))
    X = np.concatenate([p.X for p in parts])
    eps = np.concatenate([p.eps for p in parts]) if keep_innovations else None
    return PathBatch(spec, N, seed, X, eps)


def step_index(N: int, t):
    """``[N t]`` with a guard against representation error (``0.3*10`` maps to 3)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 1):
        raise InputDomainError("t must lie in [0, 1]")
    return np.floor(N * t + 1e-9).astype(np.int64)


def partial_sum_process(paths, K: FunctionalK, center: float, t_grid) -> np.ndarray:
    """``S[r, i] = sum_{n <= [N t_i]} (K(X[r, n]) - center)``.

    ``paths`` is a :class:`PathBatch` or an array of shape ``(R, N)``.
    """
    X = paths.X if isinstance(paths, PathBatch) else np.atleast_2d(np.asarray(paths, dtype=float))
    N = X.shape[1]
    idx = step_index(N, t_grid)
    c = np.zeros((X.shape[0], N + 1))
    np.cumsum(K(X) - center, axis=1, out=c[:, 1:])
    return c[:, idx]
