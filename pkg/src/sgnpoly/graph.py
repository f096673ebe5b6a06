"""Undirected simple graphs as immutable sparse adjacency matrices."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import InvalidProbability, ParseError
from .kernels import keyed_bernoulli_edges


class AdjacencyMatrix:
    """Symmetric 0/1 adjacency with zero diagonal, backed by a CSR matrix.

    Build through :meth:`from_edges`, :func:`sample_adjacency` or
    :func:`read_edges`; the constructor expects a CSR matrix that already
    satisfies the invariants.
    """

    __slots__ = ("_csr", "_degrees")

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr, dtype=np.float64)
        csr.sort_indices()
        csr.data.setflags(write=False)
        self._csr = csr
        self._degrees = np.diff(csr.indptr).astype(np.int64)

    @classmethod
    def from_edges(cls, n: int, rows, cols) -> "AdjacencyMatrix":
        """Graph on ``n`` nodes from unordered pairs; self-loops and repeats are dropped."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols differ in length")
        keep = rows != cols
        lo = np.minimum(rows[keep], cols[keep])
        hi = np.maximum(rows[keep], cols[keep])
        if lo.size:
            pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
            lo, hi = pairs[:, 0], pairs[:, 1]
        data = np.ones(2 * lo.size)
        coo = sp.coo_matrix(
            (data, (np.concatenate([lo, hi]), np.concatenate([hi, lo]))), shape=(n, n)
        )
        return cls(coo.tocsr())

    @classmethod
    def from_dense(cls, a) -> "AdjacencyMatrix":
        a = np.asarray(a)
        r, c = np.nonzero(np.triu(a, 1))
        return cls.from_edges(a.shape[0], r, c)

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees.copy()

    @property
    def volume(self) -> int:
        """``V = 1' A 1`` (twice the edge count)."""
        return int(self._degrees.sum())

    @property
    def n_edges(self) -> int:
        return self.volume // 2

    @property
    def mean_degree(self) -> float:
        return self.volume / self.n if self.n else 0.0

    def has_edge(self, i: int, j: int) -> bool:
        lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
        k = np.searchsorted(self._csr.indices[lo:hi], j)
        return bool(k < hi - lo and self._csr.indices[lo + k] == j)

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of pairs ``i < j`` in ascending lexicographic order."""
        coo = sp.triu(self._csr, 1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.stack([coo.row[order], coo.col[order]], axis=1).astype(np.int64)

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def permute(self, perm) -> "AdjacencyMatrix":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        e = self.edges()
        return AdjacencyMatrix.from_edges(self.n, perm[e[:, 0]], perm[e[:, 1]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, AdjacencyMatrix) or other.n != self.n:
            return NotImplemented if not isinstance(other, AdjacencyMatrix) else False
        return np.array_equal(self.edges(), other.edges())

    __hash__ = None

    def __repr__(self) -> str:
        return f"AdjacencyMatrix(n={self.n}, edges={self.n_edges})"


def sample_adjacency(omega, seed: int) -> AdjacencyMatrix:
    """Independent Bernoulli(omega[i, j]) edges for i < j; the diagonal is ignored.

    Pair {i, j} uses a uniform that depends only on ``(seed, min, max)``, so the
    result does not depend on thread count or traversal order.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise InvalidProbability(f"omega must be square, got {omega.shape}")
    n = omega.shape[0]
    off = ~np.eye(n, dtype=bool)
    vals = omega[off]
    if vals.size and (not np.all(np.isfinite(vals)) or vals.min() < 0 or vals.max() >= 1):
        raise InvalidProbability("off-diagonal probabilities must lie in [0, 1)")
    if not np.array_equal(omega, omega.T):
        raise InvalidProbability("omega is not symmetric")
    rows, cols = keyed_bernoulli_edges(omega, seed)
    return AdjacencyMatrix.from_edges(n, rows, cols)


# ---------------------------------------------------------------------------
# edge lists
# ---------------------------------------------------------------------------


@dataclass
class ReadSummary:
    lines: int = 0
    self_loops: int = 0
    duplicates: int = 0
    notes: list[str] = field(default_factory=list)


def _open_text(source, mode):
    if isinstance(source, (str, os.PathLike)):
        return open(source, mode, encoding="utf-8"), True
    return source, False


def read_edges(
    source, n: int | None = None, indexing: int = 0, summary: ReadSummary | None = None
) -> AdjacencyMatrix:
    """Parse whitespace-separated ``i j`` lines; ``#`` starts a comment line.

    ``indexing`` is 0 or 1.  ``n`` defaults to max index + 1.  Self-loops and
    repeated pairs are dropped and counted in ``summary`` if one is given.
    """
    if indexing not in (0, 1):
        raise ValueError("indexing must be 0 or 1")
    fh, close = _open_text(source, "r")
    rows: list[int] = []
    cols: list[int] = []
    try:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected two indices, got {text!r}")
            try:
                i, j = int(parts[0]) - indexing, int(parts[1]) - indexing
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer index in {text!r}") from None
            if i < 0 or j < 0:
                raise ParseError(f"line {lineno}: index below {indexing}")
            rows.append(i)
            cols.append(j)
    finally:
        if close:
            fh.close()
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    top = int(max(r.max(initial=-1), c.max(initial=-1)))
    if n is None:
        n = top + 1
    elif top >= n:
        raise ParseError(f"index {top + indexing} out of range for n={n}")
    adj = AdjacencyMatrix.from_edges(n, r, c)
    if summary is not None:
        loops = int(np.count_nonzero(r == c))
        summary.lines = int(r.size)
        summary.self_loops = loops
        summary.duplicates = int(r.size) - loops - adj.n_edges
    return adj


def write_edges(adj: AdjacencyMatrix, dest, indexing: int = 0) -> None:
    """Each edge once as ``i j`` with ``i < j``, ascending lexicographic order."""
    if indexing not in (0, 1):
        raise ValueError("indexing must be 0 or 1")
    fh, close = _open_text(dest, "w")
    try:
        buf = io.StringIO()
        for i, j in adj.edges() + indexing:
            buf.write(f"{i} {j}\n")
        fh.write(buf.getvalue())
    finally:
        if close:
            fh.close()


def edge_io(target, direction: str, indexing: int = 0, adj: AdjacencyMatrix | None = None,
            n: int | None = None):
    """Single entry point: ``direction="read"`` returns a graph, ``"write"`` writes ``adj``."""
    if direction == "read":
        return read_edges(target, n=n, indexing=indexing)
    if direction == "write":
        if adj is None:
            raise ValueError("write needs a graph")
        write_edges(adj, target, indexing=indexing)
        return None
    raise ValueError(f"direction must be 'read' or 'write', got {direction!r}")


def complete_graph(n: int) -> AdjacencyMatrix:
    r, c = np.triu_indices(n, 1)
    return AdjacencyMatrix.from_edges(n, r, c)


def edges_from_pairs(n: int, pairs: Iterable[tuple[int, int]]) -> AdjacencyMatrix:
    pairs = list(pairs)
    if not pairs:
        return AdjacencyMatrix.from_edges(n, [], [])
    r, c = zip(*pairs)
    return AdjacencyMatrix.from_edges(n, r, c)
