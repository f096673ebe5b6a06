import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgnpoly import kernels
from sgnpoly.errors import InvalidProbability, ParseError
from sgnpoly.graph import (
    AdjacencyMatrix,
    ReadSummary,
    complete_graph,
    edge_io,
    read_edges,
    sample_adjacency,
    write_edges,
)


def test_zero_omega_gives_empty_graph():
    adj = sample_adjacency(np.zeros((10, 10)), seed=1)
    assert adj.volume == 0 and adj.n == 10


def test_near_one_gives_complete_graph():
    omega = np.full((30, 30), 1 - 1e-15)
    adj = sample_adjacency(omega, seed=2)
    assert adj.n_edges == 30 * 29 // 2


def test_edge_count_binomial(backend):
    n, p, seeds = 400, 0.3, 200
    pairs = n * (n - 1) // 2
    omega = np.full((n, n), p)
    counts = np.array([sample_adjacency(omega, s).n_edges for s in range(seeds)])
    sd_mean = np.sqrt(pairs * p * (1 - p) / seeds)
    assert abs(counts.mean() - p * pairs) <= 4 * sd_mean
    # and the spread across seeds matches the binomial variance
    assert 0.7 < counts.var(ddof=1) / (pairs * p * (1 - p)) < 1.4


@pytest.mark.parametrize(
    "omega",
    [
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        np.array([[0.0, -0.1], [-0.1, 0.0]]),
        np.array([[0.0, 0.2], [0.3, 0.0]]),
        np.zeros((2, 3)),
    ],
)
def test_invalid_probabilities(omega):
    with pytest.raises(InvalidProbability):
        sample_adjacency(omega, 0)


def test_diagonal_is_ignored():
    omega = np.full((5, 5), 0.5)
    np.fill_diagonal(omega, 7.0)
    with pytest.raises(InvalidProbability):
        sample_adjacency(np.full((5, 5), 1.0), 0)
    assert sample_adjacency(np.where(np.eye(5, dtype=bool), 0.99, 0.5), 0).n == 5


def test_pair_draw_is_local():
    # the outcome for {i, j} depends only on (seed, i, j, omega[i, j])
    rng = np.random.default_rng(0)
    n = 40
    a = np.triu(rng.uniform(0, 0.6, (n, n)), 1)
    a = a + a.T
    b = a.copy()
    b[5:, 5:] = 0.0
    ga, gb = sample_adjacency(a, 11), sample_adjacency(b, 11)
    for i in range(5):
        for j in range(i + 1, 5):
            assert ga.has_edge(i, j) == gb.has_edge(i, j)


def test_pair_draw_matches_reference_uniforms(backend):
    rng = np.random.default_rng(1)
    n = 30
    omega = np.triu(rng.uniform(0, 0.8, (n, n)), 1)
    omega = omega + omega.T
    adj = sample_adjacency(omega, 4)
    i, j = np.triu_indices(n, 1)
    u = kernels.pair_uniforms(kernels.pair_key(4), i, j)
    expected = set(zip(i[u < omega[i, j]].tolist(), j[u < omega[i, j]].tolist()))
    assert set(map(tuple, adj.edges().tolist())) == expected


def test_permutation_invariance_in_distribution():
    # relabelling nodes permutes which uniform each pair sees, so the law of
    # the graph (not the individual draw) is what stays fixed
    n = 60
    rng = np.random.default_rng(2)
    theta = rng.uniform(0.1, 0.7, n)
    omega = np.outer(theta, theta)
    perm = rng.permutation(n)
    inv = np.argsort(perm)
    reps = 300
    deg = np.zeros(n)
    deg_perm = np.zeros(n)
    for s in range(reps):
        deg += sample_adjacency(omega, s).degrees
        deg_perm += sample_adjacency(omega[np.ix_(perm, perm)], 10_000 + s).degrees[inv]
    expect = omega.sum(axis=1) - np.diag(omega)
    sd = np.sqrt((omega * (1 - omega)).sum(axis=1) / reps)
    assert np.all(np.abs(deg / reps - expect) < 5 * sd)
    assert np.all(np.abs(deg_perm / reps - expect) < 5 * sd)


@given(st.integers(2, 25), st.integers(0, 2**31))
def test_volume_is_twice_edges(n, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < 0.4, 1)
    adj = AdjacencyMatrix.from_dense(upper | upper.T)
    assert adj.volume == adj.degrees.sum() == 2 * adj.n_edges
    dense = adj.toarray()
    assert np.array_equal(dense, dense.T) and np.all(np.diag(dense) == 0)


def test_from_edges_drops_loops_and_repeats():
    adj = AdjacencyMatrix.from_edges(4, [0, 1, 2, 2, 3], [1, 0, 2, 3, 2])
    assert adj.n_edges == 2
    assert adj.has_edge(1, 0) and adj.has_edge(2, 3) and not adj.has_edge(2, 2)


# -- edge lists -------------------------------------------------------------------


def test_read_path_graph():
    adj = read_edges(io.StringIO("0 1\n1 2\n"))
    assert adj.n == 3
    assert adj.degrees.tolist() == [1, 2, 1]


def test_duplicate_edge_deduplicated():
    summary = ReadSummary()
    adj = read_edges(io.StringIO("0 1\n1 0\n"), summary=summary)
    assert adj.volume == 2
    assert summary.duplicates == 1 and summary.self_loops == 0


def test_comments_loops_and_one_based():
    text = "# header\n1 2\n\n2 3\n3 3\n"
    summary = ReadSummary()
    adj = read_edges(io.StringIO(text), indexing=1, summary=summary)
    assert adj.n == 3 and adj.n_edges == 2
    assert summary.self_loops == 1


def test_explicit_n_keeps_isolated_nodes():
    adj = read_edges(io.StringIO("0 1\n"), n=5)
    assert adj.n == 5 and adj.degrees.tolist() == [1, 1, 0, 0, 0]


@pytest.mark.parametrize("text", ["0 1 2\n", "0 x\n", "-1 2\n", "0\n"])
def test_malformed_lines(text):
    with pytest.raises(ParseError):
        read_edges(io.StringIO(text))


def test_index_out_of_range():
    with pytest.raises(ParseError):
        read_edges(io.StringIO("0 7\n"), n=5)


def test_write_order_and_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    upper = np.triu(rng.random((40, 40)) < 0.2, 1)
    adj = AdjacencyMatrix.from_dense(upper | upper.T)
    path = tmp_path / "g.txt"
    edge_io(path, "write", indexing=1, adj=adj)
    lines = path.read_text().splitlines()
    pairs = [tuple(map(int, ln.split())) for ln in lines]
    assert pairs == sorted(pairs) and all(i < j for i, j in pairs)
    back = edge_io(path, "read", indexing=1, n=40)
    assert back == adj


def test_write_to_stream():
    buf = io.StringIO()
    write_edges(complete_graph(3), buf)
    assert buf.getvalue() == "0 1\n0 2\n1 2\n"


def test_permute_relabels():
    adj = AdjacencyMatrix.from_edges(3, [0], [1])
    moved = adj.permute([2, 0, 1])
    assert moved.has_edge(2, 0) and moved.n_edges == 1
