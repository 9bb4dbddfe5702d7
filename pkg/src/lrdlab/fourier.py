"""Fourier-side computations for a process/functional pair.

Everything that depends on the law of ``X_1`` is computed here through its
characteristic function ``phi(u) = prod_j phi_eps(a_j u)``: the centering
``E K(X_1)``, the smoothed functional ``K_inf(x) = E K(X_1 + x)`` with its
derivatives at zero, and ``g(a) = E K_inf(a eps)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline

from . import quad
from .errors import DivergenceError, InputDomainError, NumericError
from .innovations import InnovationModel
from .process import FunctionalK, ProcessSpec

VCUT = 0.25  # arguments a_j |u| below this use the tabulated log characteristic function
W_LO, W_STEP = -80.0, 0.005
EM_START = 64
DIRECT_MAX = 1 << 20
FFT_PERIOD = 8192.0
FFT_SIZE = 1 << 20
TABLE_RADIUS = 1024.0
DECAY_FLOOR = 1e-17
RATIO_MARGIN = 1e-4
TAYLOR_ORDER = 8
TAYLOR_RADIUS = 0.25

_GL10 = quad.gauss_legendre(10)


class LogCFTable:
    """``log phi_eps(v)`` for ``0 < v <= VCUT`` from a spline of ``log phi_eps(v) v^-alpha`` in ``ln v``."""

    def __init__(self, model: InnovationModel):
        self.alpha = model.alpha
        w = np.arange(W_LO, math.log(VCUT) + 4 * W_STEP, W_STEP)
        psi = np.log1p(-model.one_minus_cf(np.exp(w)))
        chi = psi * np.exp(-self.alpha * w)
        self._re = CubicSpline(w, chi.real)
        self._im = CubicSpline(w, chi.imag)
        self._slope = complex(self._re(W_LO, 1), self._im(W_LO, 1))
        self._base = complex(chi[0])

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        wc = np.maximum(w, W_LO)
        chi = self._re(wc) + 1j * self._im(wc)
        low = w < W_LO
        if np.any(low):
            chi = np.where(low, self._base + self._slope * (w - W_LO), chi)
        return chi * np.exp(self.alpha * w)


@lru_cache(maxsize=16)
def log_cf_table(model: InnovationModel) -> LogCFTable:
    return LogCFTable(model)


def _stencil_derivs(G):
    """First three derivatives at the centre of a 7-point stencil (rows = offsets -3..3)."""
    h = _STENCIL_H
    g = G
    d1 = (-g[0] + 9 * g[1] - 45 * g[2] + 45 * g[4] - 9 * g[5] + g[6]) / (60 * h)
    d2 = (2 * g[0] - 27 * g[1] + 270 * g[2] - 490 * g[3] + 270 * g[4] - 27 * g[5] + 2 * g[6]) / (180 * h * h)
    d3 = (g[0] / 8 - g[1] + 13 * g[2] / 8 - 13 * g[4] / 8 + g[5] - g[6] / 8) / h**3
    return d1, d2, d3


_STENCIL_H = 0.02


class FourierEngine:
    """Cached Fourier quantities for one ``(ProcessSpec, FunctionalK)`` pair."""

    def __init__(self, spec: ProcessSpec, K: FunctionalK):
        self.spec = spec
        self.K = K
        self.model = spec.innovations
        self._table = None
        self._derivs = None
        self._q = None
        self._series = {}
        self._cutoff = None
        self._direct_nodes = {}

    # -- characteristic function ----------------------------------------------
    def _log_cf_eps(self, v):
        """``log phi_eps(v)`` for signed ``v``, tabulated where ``|v|`` is small."""
        v = np.asarray(v, dtype=float)
        av = np.abs(v)
        out = np.zeros(v.shape, dtype=complex)
        small = (av <= VCUT) & (av > 0)
        if np.any(small):
            val = log_cf_table(self.model)(np.log(av[small]))
            out[small] = np.where(v[small] < 0, np.conj(val), val)
        big = av > VCUT
        if np.any(big):
            out[big] = np.log(1.0 - self.model.one_minus_cf(v[big]))
        return out

    def _em_start(self, umax: float) -> int:
        """First index beyond which ``a(t) umax <= VCUT`` holds for all ``t``."""
        spec = self.spec
        floor = spec.ell.domain_floor
        start = max(EM_START, int(math.ceil(4 * floor)))
        if umax <= 0:
            return start
        s = math.log(start) + np.arange(0, 20000) * 0.01
        la = spec.log_coef(s)
        env = np.maximum.accumulate(la[::-1])[::-1]
        ok = np.nonzero(env + math.log(umax) <= math.log(VCUT))[0]
        if ok.size == 0:
            raise NumericError("coefficients do not decay fast enough for the Fourier engine")
        return max(start, int(math.ceil(math.exp(s[ok[0]]))))

    def log_phi(self, u) -> np.ndarray:
        """``log phi(u)`` summed over the horizon (principal branches per factor)."""
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        au = np.abs(flat)
        spec = self.spec
        out = np.zeros(flat.shape, dtype=complex)
        if flat.size == 0:
            return out.reshape(u.shape)
        umax = float(au.max())
        if spec.kernel is not None:
            j_direct, tail = spec.J, False
        else:
            j0 = self._em_start(umax)
            if spec.J is not None and spec.J <= j0 + 8:
                j_direct, tail = spec.J, False
            else:
                j_direct, tail = j0 - 1, True
        if j_direct > DIRECT_MAX:
            raise NumericError("direct part of the characteristic-function product is too long")
        a = spec.coef_array(j_direct)
        rows = max(1, int(4e6 // max(1, flat.size)))
        for start in range(0, j_direct, rows):
            blk = a[start:start + rows]
            out += self._log_cf_eps(blk[:, None] * flat[None, :]).sum(axis=0)
        if tail:
            out += self._em_tail(flat, j_direct + 1)
        return out.reshape(u.shape)

    def _em_tail(self, u, j0):
        """Euler-Maclaurin sum of ``log phi_eps(a_j u)`` over ``j >= j0``."""
        spec = self.spec
        au = np.abs(u)
        nz = au > 0
        res = np.zeros(u.shape, dtype=complex)
        if not np.any(nz):
            return res
        lu = np.log(au[nz])
        s0 = math.log(j0)
        rate = spec.alpha * spec.beta - 1.0
        if spec.J is None:
            s1 = s0 + min(3000.0, 45.0 / rate)
        else:
            s1 = math.log(spec.J)
        width = min(2.0, 2.0 / rate)
        n_pan = max(1, int(math.ceil((s1 - s0) / width)))
        edges = np.linspace(s0, s1, n_pan + 1)
        nodes, weights = quad.panel_rule(edges, 10)
        lw = spec.log_coef(nodes)
        tab = log_cf_table(self.model)
        total = np.zeros(lu.shape, dtype=complex)
        chunk = max(1, int(2e6 // max(1, lu.size)))
        for start in range(0, nodes.size, chunk):
            sl = slice(start, start + chunk)
            vals = tab(lw[sl][:, None] + lu[None, :])
            total += (weights[sl] * np.exp(nodes[sl])) @ vals

        def endpoint(s):
            offs = s + _STENCIL_H * np.arange(-3, 4)
            G = np.array([self._log_cf_eps(np.exp(spec.log_coef(o) + lu)) for o in offs])
            t = math.exp(s)
            d1, d2, d3 = _stencil_derivs(G)
            return G[3], d1 / t, (d3 - 3 * d2 + 2 * d1) / t**3

        F0, F0p, F0ppp = endpoint(s0)
        if spec.J is None:
            F1 = F1p = F1ppp = 0.0
        else:
            F1, F1p, F1ppp = endpoint(s1)
        total += 0.5 * (F0 + F1) + (F1p - F0p) / 12.0 - (F1ppp - F0ppp) / 720.0
        total = np.where(u[nz] < 0, np.conj(total), total)
        res[nz] = total
        return res

    def phi(self, u):
        return np.exp(self.log_phi(u))

    # -- integration range ------------------------------------------------------
    @property
    def cutoff(self) -> float:
        """Frequency beyond which ``|Khat phi| (1+u)^8`` stays below the decay floor."""
        if self._cutoff is None:
            grid = np.geomspace(0.05, 1e3, 700)
            env = np.abs(self.K.hat(grid)) * (1 + grid) ** 8
            live = env >= DECAY_FLOOR
            if not np.any(live):
                self._cutoff = 0.05
                return self._cutoff
            last = np.nonzero(live)[0][-1]
            g = grid[: last + 1]
            val = np.abs(self.K.hat(g) * self.phi(g)) * (1 + g) ** 8
            above = np.nonzero(val >= DECAY_FLOOR)[0]
            if above.size and above[-1] == grid.size - 1:
                raise NumericError("integrand does not decay within |u| <= 1e3")
            self._cutoff = float(grid[min(above[-1] + 1, grid.size - 1)]) if above.size else 0.05
        return self._cutoff

    def _nodes(self, xmax: float):
        key = round(float(xmax), 6)
        if key not in self._direct_nodes:
            U = self.cutoff
            width = min(0.25, 1.0 / (1.0 + xmax))
            bend = min(1.0, 1.0 / (1.0 + xmax))
            nodes, weights = quad.panel_rule(quad.cusp_edges(U, width, bend), 12)
            both = np.concatenate([nodes, -nodes])
            G = self.K.hat(both) * self.phi(both)
            self._direct_nodes[key] = (both, np.concatenate([weights, weights]), G)
        return self._direct_nodes[key]

    def direct(self, x, order: int = 0):
        """``(1/2pi) int (iu)^order Khat(u) phi(u) e^{iux} du`` and the imaginary residual."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xmax = float(np.max(np.abs(x))) if x.size else 0.0
        if xmax > TABLE_RADIUS:
            raise InputDomainError(f"direct quadrature is limited to |x| <= {TABLE_RADIUS:g}")
        u, w, G = self._nodes(xmax)
        wg = w * G * (1j * u) ** order
        vals = np.empty(x.shape, dtype=complex)
        for start in range(0, x.size, 64):
            xs = x[start:start + 64]
            vals[start:start + 64] = np.exp(1j * np.outer(xs, u)) @ wg
        vals /= 2 * math.pi
        return vals.real, np.abs(vals.imag)

    # -- derivative table ---------------------------------------------------------
    @property
    def derivatives(self) -> np.ndarray:
        """``K_inf^{(k)}(0)`` for ``k = 0..8``."""
        if self._derivs is None:
            self._derivs = np.array([self.direct(0.0, k)[0][0] for k in range(TAYLOR_ORDER + 1)])
        return self._derivs

    @property
    def K0(self) -> float:
        return float(self.derivatives[0])

    # -- tabulated K_inf ------------------------------------------------------------
    def _build_table(self):
        du = 2 * math.pi / FFT_PERIOD
        kmax = int(math.ceil(self.cutoff / du))
        if kmax >= FFT_SIZE // 2:
            raise NumericError("frequency cutoff exceeds the FFT grid")
        uk = du * np.arange(kmax + 1)
        G = np.zeros(FFT_SIZE // 2 + 1, dtype=complex)
        G[: kmax + 1] = self.K.hat(uk) * self.phi(uk)
        vals = (du / (2 * math.pi)) * FFT_SIZE * sfft.irfft(G, FFT_SIZE)
        dx = FFT_PERIOD / FFT_SIZE
        m = int(TABLE_RADIUS / dx)
        xs = dx * np.arange(-m, m + 1)
        ys = np.concatenate([vals[-m:], vals[: m + 1]])
        spline = CubicSpline(xs, ys)
        tails = {}
        for side in (1.0, -1.0):
            xf = side * np.linspace(TABLE_RADIUS / 4, TABLE_RADIUS / 2, 200)
            yf = spline(xf)
            sign = np.sign(yf)
            if np.all(sign == sign[0]) and sign[0] != 0:
                slope, icpt = np.polyfit(np.log(np.abs(xf)), np.log(np.abs(yf)), 1)
                tails[side] = (float(sign[0]), float(icpt), float(slope))
            else:
                tails[side] = (0.0, 0.0, 0.0)
        self._table = (spline, tails)

    def K_inf(self, x):
        """``K_inf(x)`` from the FFT table (power-law continuation beyond the table)."""
        if self._table is None:
            self._build_table()
        spline, tails = self._table
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= TABLE_RADIUS
        out = spline(np.where(inside, x, 0.0))
        if not np.all(inside):
            ax = np.maximum(np.abs(x), TABLE_RADIUS)
            right, left = tails[1.0], tails[-1.0]
            tr = right[0] * np.exp(right[1] + right[2] * np.log(ax))
            tl = left[0] * np.exp(left[1] + left[2] * np.log(ax))
            out = np.where(inside, out, np.where(x > 0, tr, tl))
        return out

    @property
    def K0_table(self) -> float:
        return float(self.K_inf(0.0))

    # -- g(a) = E K_inf(a eps) -------------------------------------------------------
    def _eps_nodes(self, a_lo: float, a_hi: float):
        m = self.model
        xs, ws = [], []
        if m.core_mass > 0:
            n_core = max(8, int(math.ceil(8 * m.x0 * a_hi)))
            nodes, weights = quad.panel_rule(np.linspace(-m.x0, m.x0, n_core + 1), 16)
            xs.append(nodes - m.shift)
            ws.append(weights * m.core_mass / (2 * m.x0))
        w_min = 1e-13 * min(1.0, a_lo**m.alpha)
        kmax = int(math.ceil(-math.log2(w_min)))
        edges = 2.0 ** -np.arange(kmax, -1, -1.0)
        wn, ww = quad.panel_rule(edges, 16)
        q = m.tail_quantile(wn)
        if m.right_mass > 0:
            xs.append(q - m.shift)
            ws.append(ww * m.right_mass)
        if m.left_mass > 0:
            xs.append(-q - m.shift)
            ws.append(ww * m.left_mass)
        return np.concatenate(xs), np.concatenate(ws)

    def g_minus_K0_quad(self, a) -> np.ndarray:
        """``E K_inf(a eps) - K_inf(0)`` by quadrature against the innovation law."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        x, w = self._eps_nodes(float(a.min()), float(a.max()))
        K0 = self.K0_table
        out = np.empty(a.shape)
        for i, ai in enumerate(a):
            out[i] = w @ (self.K_inf(ai * x) - K0)
        return out

    def _ensure_q(self, a_lo: float, a_hi: float):
        if self._q is not None and self._q[0] <= a_lo and self._q[1] >= a_hi:
            return
        if self._q is not None:
            a_lo, a_hi = min(a_lo, self._q[0]), max(a_hi, self._q[1])
        lo, hi = math.log10(a_lo) - 0.1, math.log10(a_hi) + 0.1
        grid = 10 ** np.linspace(lo, hi, max(8, int((hi - lo) * 24) + 1))
        x, w = self._eps_nodes(grid[0], grid[-1])
        K0 = self.K0_table
        vals = np.array([w @ (self.K_inf(ai * x) - K0) for ai in grid])
        q = vals / grid**self.spec.alpha
        self._q = (grid[0], grid[-1], CubicSpline(np.log(grid), q))

    def g_minus_K0(self, a) -> np.ndarray:
        """Spline version of :meth:`g_minus_K0_quad` for many coefficients."""
        a = np.asarray(a, dtype=float)
        pos = a[a > 0]
        if pos.size == 0:
            return np.zeros(a.shape)
        self._ensure_q(float(pos.min()), float(pos.max()))
        out = np.zeros(a.shape)
        nz = a > 0
        out[nz] = self._q[2](np.log(a[nz])) * a[nz] ** self.spec.alpha
        return out

    # -- coefficient series --------------------------------------------------------
    def series(self, n_tab: int) -> "SeriesTables":
        if n_tab not in self._series:
            self._series[n_tab] = SeriesTables(self, n_tab)
        return self._series[n_tab]


class SeriesTables:
    """Suffix power sums of the coefficients and of ``g(a_j) - K_inf(0)``.

    ``pow_suffix[k, j] = sum_{i=j}^{n} a_i^k`` for ``k = 1..8`` and
    ``d_suffix[j] = sum_{i=j}^{n} (g(a_i) - K_inf(0))`` with 1-based ``j``;
    index ``n + 1`` holds zero.  Suffix sums keep small tails free of
    cancellation when they are multiplied by large powers of an innovation.
    """

    def __init__(self, engine: FourierEngine, n: int):
        self.engine = engine
        self.n = n
        a = engine.spec.coef_array(n)
        self.a = a
        self.env = np.maximum.accumulate(np.abs(a)[::-1])[::-1]
        d = engine.g_minus_K0(a)
        self.d = d
        P = np.zeros((TAYLOR_ORDER + 1, n + 2))
        ak = np.ones(n)
        for k in range(1, TAYLOR_ORDER + 1):
            ak = ak * a
            P[k, 1:n + 1] = np.cumsum(ak[::-1])[::-1]
        self.pow_suffix = P
        D = np.zeros(n + 2)
        D[1:n + 1] = np.cumsum(d[::-1])[::-1]
        self.d_suffix = D
        der = engine.derivatives.copy()
        der[np.abs(der) <= 1e-10 * np.max(np.abs(der))] = 0.0
        self.coefs = der / np.array([math.factorial(k) for k in range(TAYLOR_ORDER + 1)])

    def cut_index(self, x) -> np.ndarray:
        """First 1-based ``j`` with ``sup_{i>=j} |a_i x| < TAYLOR_RADIUS`` (``n+1`` if none)."""
        ax = np.abs(np.asarray(x, dtype=float))
        thr = np.where(ax > 0, TAYLOR_RADIUS / np.where(ax > 0, ax, 1.0), np.inf)
        return np.searchsorted(-self.env, -thr, side="right") + 1

    def explicit_sums(self, x, lo, hi, linear: float = 0.0) -> np.ndarray:
        """``sum_{j=lo}^{hi} (K_inf(a_j x) - K_inf(0) - linear a_j x)`` per entry."""
        x = np.asarray(x, dtype=float)
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        out = np.zeros(x.shape)
        K0 = self.engine.K0_table
        idx = np.nonzero(counts)[0]
        if idx.size == 0:
            return out
        csum = np.cumsum(counts[idx])
        start = 0
        while start < idx.size:
            base = csum[start - 1] if start else 0
            stop = int(np.searchsorted(csum, base + 4_000_000, side="right"))
            stop = max(stop, start + 1)
            sel = idx[start:stop]
            c = counts[sel]
            owner = np.repeat(np.arange(sel.size), c)
            first = np.repeat(np.cumsum(c) - c, c)
            j = np.repeat(lo[sel], c) + (np.arange(owner.size) - first)
            xv = x[sel][owner]
            aj = self.a[j - 1]
            vals = self.engine.K_inf(aj * xv) - K0
            if linear:
                vals -= linear * aj * xv
            out[sel] = np.bincount(owner, weights=vals, minlength=sel.size)
            start = stop
        return out

    def taylor_sums(self, x, lo, hi, skip_linear: bool = False) -> np.ndarray:
        """Taylor part ``sum_k c_k x^k sum_{j=lo}^{hi} a_j^k`` (empty ranges give zero)."""
        x = np.asarray(x, dtype=float)
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        ok = hi >= lo
        lo_c = np.clip(lo, 1, self.n + 1)
        hi_c = np.clip(hi + 1, 1, self.n + 1)
        out = np.zeros(x.shape)
        xk = np.ones(x.shape)
        for k in range(1, TAYLOR_ORDER + 1):
            xk = xk * x
            if k == 1 and skip_linear:
                continue
            ck = self.coefs[k]
            if ck == 0.0:
                continue
            seg = self.pow_suffix[k, lo_c] - self.pow_suffix[k, hi_c]
            out += ck * np.where(ok, xk * seg, 0.0)
        return out

    def d_sums(self, lo, hi) -> np.ndarray:
        lo = np.clip(np.asarray(lo, dtype=np.int64), 1, self.n + 1)
        hi = np.clip(np.asarray(hi, dtype=np.int64) + 1, 1, self.n + 1)
        return np.where(hi > lo, self.d_suffix[lo] - self.d_suffix[hi], 0.0)

    # -- infinite tails beyond the table -----------------------------------------
    def _blocks(self, seq_suffix):
        m = int(math.log2(self.n + 1))
        edges = 2 ** np.arange(m + 1)
        return np.array([seq_suffix[edges[k]] - seq_suffix[edges[k + 1]] for k in range(m)])

    def richardson_tail(self, seq_suffix, what: str, floor: float = 0.0) -> float:
        """Tail beyond the table from the last two dyadic blocks; raises on divergence."""
        if (self.n + 1) & self.n:
            raise InputDomainError("tail extrapolation needs a table of length 2^m - 1")
        B = self._blocks(seq_suffix)
        if np.max(np.abs(B)) <= floor:
            return 0.0
        mags = np.abs(B[-4:])
        if mags[-1] == 0.0:
            return 0.0
        if np.all(np.diff(mags[-3:]) >= 0):
            raise DivergenceError(f"dyadic blocks of the {what} series do not decrease")
        r = B[-1] / B[-2]
        # a harmonic-type series has ratios 1 - O(2^-m); no usable extrapolation exists
        if not (0 < r < 1 - RATIO_MARGIN):
            raise DivergenceError(f"dyadic blocks of the {what} series are not geometric (ratio {r:.3g})")
        return float(B[-1] * r / (1 - r))

    @property
    def tails(self):
        if not hasattr(self, "_tails"):
            pt = {}
            for k in range(1, TAYLOR_ORDER + 1):
                try:
                    pt[k] = self.richardson_tail(self.pow_suffix[k], f"a^{k}")
                except DivergenceError as exc:
                    pt[k] = exc
            try:
                # odd K against a symmetric law leaves only rounding noise here
                floor = 1e-12 * self.engine.K.l1_norm
                dt = self.richardson_tail(self.d_suffix, "E K_inf(a eps)", floor)
            except DivergenceError as exc:
                dt = exc
            self._tails = (pt, dt)
        return self._tails


@lru_cache(maxsize=32)
def engine_for(spec: ProcessSpec, K: FunctionalK) -> FourierEngine:
    return FourierEngine(spec, K)
