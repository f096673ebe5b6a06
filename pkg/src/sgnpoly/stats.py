"""Signed polygon statistics.

For a graph ``A`` and a centering vector ``c`` let ``M = A - c c'``.  The
order-m statistic sums ``M[i1,i2] M[i2,i3] ... M[im,i1]`` over ordered tuples
of distinct nodes.  For m = 3, 4 the sum has an exact expression in traces of
powers and Hadamard products of ``M``:

    m = 3:  tr M^3 - 3 tr(M o M^2) + 2 tr(M o M o M)
    m = 4:  tr M^4 - 4 tr(M o M^3) + 8 tr(M o M o M^2) - 6 tr(M o M o M o M)
            - 2 tr(M^2 o M^2) + 2 1'[diag(M)(M o M)diag(M)]1 + 1'[M o M o M o M]1

``method="rows"`` evaluates these from per-row reductions of ``M^2`` (sparse
``A^2`` plus a rank-one correction), never holding more than one dense row
per worker.  ``method="dense"`` evaluates the formulas literally on a dense
``M`` and is kept as a cross-check for small graphs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGraph, TooLarge, UnsupportedOrder
from .graph import AdjacencyMatrix
from .kernels import centered_square_rows

DENSE_CAP = 20_000
_BRUTE_LIMITS = {3: 30, 4: 14}
_BRUTE_MAX_TUPLES = 5_000_000


@dataclass(frozen=True)
class CenterVector:
    values: np.ndarray
    volume: int

    @property
    def norm_sq(self) -> float:
        """``||eta||^2``, evaluated as ``sum(d^2) / V`` without rounding through sqrt."""
        v = self.values
        return float(v @ v)


@dataclass(frozen=True)
class PolygonStatistic:
    order: int
    value: float
    method: str

    def __float__(self) -> float:
        return self.value


def eta_hat(adj: AdjacencyMatrix) -> CenterVector:
    """``A 1 / sqrt(V)``."""
    vol = adj.volume
    if vol == 0:
        raise DegenerateGraph("graph has no edges")
    return CenterVector(adj.degrees / math.sqrt(vol), vol)


def degree_ratio(adj: AdjacencyMatrix) -> float:
    """``1'A^2 1 / 1'A 1``, i.e. ``||eta_hat||^2`` from integer degree sums."""
    vol = adj.volume
    if vol == 0:
        raise DegenerateGraph("graph has no edges")
    d = adj.degrees
    return int(d @ d) / vol


def _check_order(m: int) -> None:
    if m not in (3, 4):
        raise UnsupportedOrder(f"matrix form exists only for m in (3, 4), got {m}")


def _as_center(adj: AdjacencyMatrix, center) -> np.ndarray:
    c = np.asarray(getattr(center, "values", center), dtype=np.float64).ravel()
    if c.shape[0] != adj.n:
        raise ValueError(f"center has length {c.shape[0]}, graph has n={adj.n}")
    return c


def _rows_terms(adj: AdjacencyMatrix, c: np.ndarray, m: int) -> float:
    a = adj.csr
    d2, d3, t4 = centered_square_rows(a, c)
    g = -(c * c)
    if m == 3:
        return math.fsum(np.concatenate([d3, -3.0 * g * d2, 2.0 * g**3]))
    # neighbour sums for the Hadamard-only terms
    coo = a.tocoo()
    ci, cj = c[coo.row], c[coo.col]
    prod = ci * cj
    s4 = math.fsum(c**4)
    w = np.bincount(coo.row, weights=(1.0 - 2.0 * prod) * g[coo.col], minlength=adj.n).astype(np.float64)
    w -= c**2 * s4
    f = np.bincount(coo.row, weights=(1.0 - prod) ** 4 - prod**4, minlength=adj.n).astype(np.float64)
    f += c**4 * s4
    return math.fsum(
        np.concatenate(
            [
                t4,
                -4.0 * g * d3,
                8.0 * g**2 * d2,
                -6.0 * g**4,
                -2.0 * d2**2,
                2.0 * g * w,
                f,
            ]
        )
    )


def _dense_terms(adj: AdjacencyMatrix, c: np.ndarray, m: int) -> float:
    mt = adj.toarray() - np.outer(c, c)
    m2 = mt @ mt
    dg = np.diag(mt)
    if m == 3:
        m3 = m2 @ mt
        return math.fsum([np.trace(m3), -3.0 * np.sum(dg * np.diag(m2)), 2.0 * np.sum(dg**3)])
    m3 = m2 @ mt
    had2 = mt * mt
    return math.fsum(
        [
            np.sum(m2 * m2.T),  # tr M^4
            -4.0 * np.sum(dg * np.diag(m3)),
            8.0 * np.sum(dg**2 * np.diag(m2)),
            -6.0 * np.sum(dg**4),
            -2.0 * np.sum(np.diag(m2) ** 2),
            2.0 * float(dg @ had2 @ dg),
            np.sum(had2 * had2),
        ]
    )


def distinct_cycle_sum(adj: AdjacencyMatrix, center, m: int, method: str = "rows") -> float:
    """Sum over ordered distinct m-tuples of products of ``(A - c c')`` around the cycle."""
    _check_order(m)
    c = _as_center(adj, center)
    if method == "rows":
        return _rows_terms(adj, c, m)
    if method == "dense":
        if adj.n > DENSE_CAP:
            raise TooLarge(f"dense evaluation capped at n={DENSE_CAP}")
        return _dense_terms(adj, c, m)
    raise ValueError(f"unknown method {method!r}")


def sgn_t(adj: AdjacencyMatrix, method: str = "rows") -> PolygonStatistic:
    """Signed triangle statistic, centred at ``eta_hat``."""
    return PolygonStatistic(3, distinct_cycle_sum(adj, eta_hat(adj), 3, method), "matrix-form")


def sgn_q(adj: AdjacencyMatrix, method: str = "rows") -> PolygonStatistic:
    """Signed quadrilateral statistic, centred at ``eta_hat``."""
    return PolygonStatistic(4, distinct_cycle_sum(adj, eta_hat(adj), 4, method), "matrix-form")


def brute_force_polygon(adj: AdjacencyMatrix, center, m: int) -> float:
    """Literal sum over every ordered tuple of ``m`` distinct nodes.

    Limited to n <= 30 for m = 3, n <= 14 for m = 4 and a few million tuples
    for larger m.
    """
    if m < 3:
        raise UnsupportedOrder(f"polygon order must be >= 3, got {m}")
    n = adj.n
    limit = _BRUTE_LIMITS.get(m)
    if (limit is not None and n > limit) or math.perm(n, m) > _BRUTE_MAX_TUPLES:
        raise TooLarge(f"brute force over {math.perm(n, m)} tuples refused (n={n}, m={m})")
    c = _as_center(adj, center)
    mt = adj.toarray() - np.outer(c, c)
    if n < m:
        return 0.0
    tuples = np.array(list(itertools.permutations(range(n), m)), dtype=np.int64)
    prod = np.ones(tuples.shape[0])
    for t in range(m):
        prod *= mt[tuples[:, t], tuples[:, (t + 1) % m]]
    return math.fsum(prod)


def ideal_polygon(adj: AdjacencyMatrix, eta_star, m: int) -> PolygonStatistic:
    """Polygon statistic centred at the population vector (brute force)."""
    return PolygonStatistic(m, brute_force_polygon(adj, eta_star, m), "ideal")


def er_density(adj: AdjacencyMatrix) -> float:
    """``V / (n (n - 1))``, the Erdos-Renyi edge-probability estimate."""
    vol = adj.volume
    if vol == 0:
        raise DegenerateGraph("graph has no edges")
    return vol / (adj.n * (adj.n - 1))


def signed_cycle(adj: AdjacencyMatrix, m: int, method: str = "rows") -> float:
    """Cycle sum with every pair centred by the scalar density estimate."""
    _check_order(m)
    alpha = er_density(adj)
    return distinct_cycle_sum(adj, np.full(adj.n, math.sqrt(alpha)), m, method)


def raw_cycle_count(adj: AdjacencyMatrix, m: int, method: str = "rows") -> float:
    """Number of ordered distinct m-cycles (``2m`` times the number of m-cycles)."""
    _check_order(m)
    return distinct_cycle_sum(adj, np.zeros(adj.n), m, method)
