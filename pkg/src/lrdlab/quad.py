"""Composite Gauss-Legendre rules on explicit panel layouts.

Most integrals in the lab are over half-lines with a cusp at the origin and
oscillation further out.  These helpers build node/weight arrays once so the
integrands can be evaluated fully vectorized.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(edges: np.ndarray, n: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with ``n`` nodes on every panel ``[edges[k], edges[k+1]]``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def cusp_edges(upper: float, width: float, bend: float, smallest: float = 1e-13) -> np.ndarray:
    """Panel edges on [0, upper]: geometric up to ``bend``, then uniform of size ``width``.

    The geometric part resolves algebraic cusps at the origin; the uniform part
    resolves oscillation of period comparable to ``width``.
    """
    bend = min(bend, upper)
    n_geo = max(1, int(np.ceil(np.log2(bend / smallest))))
    geo = bend * 2.0 ** -np.arange(n_geo, -1, -1)
    geo = np.concatenate([[0.0], geo])
    if upper <= bend:
        return geo
    n_uni = max(1, int(np.ceil((upper - bend) / width)))
    uni = np.linspace(bend, upper, n_uni + 1)[1:]
    return np.concatenate([geo, uni])
