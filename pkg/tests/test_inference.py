import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgnpoly.errors import DegenerateGraph, DomainError, NonpositiveNuisance
from sgnpoly.graph import AdjacencyMatrix, complete_graph, sample_adjacency
from sgnpoly.inference import (
    estimate_theta_norm_sq,
    normal_cdf,
    normal_quantile,
    normal_sf,
    run_test,
    sgnq_test,
    sgnq_z,
    sgnt_test,
    sgnt_z,
    signed_cycle3_test,
)
from sgnpoly.stats import sgn_q, sgn_t

# reference quantiles, 20 significant digits from arbitrary-precision inversion
QUANTILES = {
    0.975: 1.9599639845400538556,
    0.95: 1.6448536269514722843,
    0.995: 2.5758293035489004539,
    0.999: 3.0902323061678132778,
    0.6: 0.25334710313579974132,
}


@pytest.mark.parametrize("q,expected", sorted(QUANTILES.items()))
def test_normal_quantiles(q, expected):
    assert normal_quantile(q) == pytest.approx(expected, abs=1e-9)
    assert normal_quantile(1 - q) == pytest.approx(-expected, abs=1e-9)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_quantile_domain(q):
    with pytest.raises(DomainError):
        normal_quantile(q)


def test_cdf_sf_basic():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.96) + normal_sf(1.96) == pytest.approx(1.0, abs=1e-15)
    # the survival function keeps relative accuracy deep in the tail
    assert normal_sf(10.0) == pytest.approx(7.619853024160527e-24, rel=1e-12)


@given(st.floats(1e-6, 1 - 1e-6))
def test_quantile_inverts_cdf(q):
    assert normal_cdf(normal_quantile(q)) == pytest.approx(q, rel=1e-9, abs=1e-15)


def test_z_formulas():
    assert sgnt_z(0.0, 3.0) == 0.0
    assert sgnt_z(6.0, 1.0) == pytest.approx(6 / math.sqrt(6))
    assert sgnq_z(2.0, 1.0) == 0.0
    assert sgnq_z(2 * 4 + math.sqrt(8 * 16), 2.0) == pytest.approx(1.0)


def test_nuisance_estimate():
    adj = complete_graph(5)
    assert estimate_theta_norm_sq(adj) == pytest.approx(3.0)


def test_nonpositive_nuisance():
    # a single edge has ||eta_hat||^2 = 1
    with pytest.raises(NonpositiveNuisance):
        sgnt_test(AdjacencyMatrix.from_edges(3, [0], [1]))


def test_empty_graph():
    with pytest.raises(DegenerateGraph):
        sgnq_test(AdjacencyMatrix.from_edges(3, [], []))


def test_k3_report():
    rep = sgnt_test(complete_graph(3))
    assert rep.nuisance == pytest.approx(1.0)
    assert rep.statistic == pytest.approx(2 / 9)
    assert rep.z == pytest.approx(2 / 9 / math.sqrt(6))
    assert rep.p_value == pytest.approx(2 * normal_sf(rep.z))
    assert not rep.reject


def test_report_consistency():
    rng = np.random.default_rng(0)
    theta = rng.uniform(0.1, 0.4, 300)
    adj = sample_adjacency(np.outer(theta, theta), 1)
    for fn, stat in ((sgnt_test, sgn_t), (sgnq_test, sgn_q)):
        rep = fn(adj)
        assert rep.statistic == stat(adj).value
        assert rep.reject == (rep.p_value <= rep.alpha) or math.isclose(rep.p_value, rep.alpha, rel_tol=1e-12)


def test_reject_monotone_in_alpha():
    rng = np.random.default_rng(1)
    theta = rng.uniform(0.1, 0.5, 200)
    adj = sample_adjacency(np.outer(theta, theta), 3)
    for fn in (sgnt_test, sgnq_test):
        alphas = np.linspace(0.001, 0.999, 60)
        rejects = [fn(adj, a).reject for a in alphas]
        # once rejected at some alpha, rejected for every larger alpha
        first = rejects.index(True) if True in rejects else len(rejects)
        assert all(rejects[first:])


def test_two_sided_symmetry():
    # p-value depends on |z| only; flipping the sign of the statistic is the
    # same as negating z
    from sgnpoly.inference import two_sided_report

    a = two_sided_report("SgnT", 1.0, 1.0, 1.3, 0.05)
    b = two_sided_report("SgnT", -1.0, 1.0, -1.3, 0.05)
    assert a.p_value == b.p_value and a.reject == b.reject


def test_zero_z_gives_unit_p():
    from sgnpoly.inference import two_sided_report

    assert two_sided_report("SgnT", 0.0, 1.0, 0.0, 0.05).p_value == 1.0


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.2])
def test_bad_alpha(alpha):
    with pytest.raises(DomainError):
        sgnt_test(complete_graph(5), alpha)


def test_run_test_dispatch_and_json():
    adj = complete_graph(6)
    rep = run_test("SgnQ", adj)
    doc = json.loads(json.dumps(rep.to_json()))
    assert set(doc) == {"test", "statistic", "nuisance", "z", "p_value", "alpha", "reject"}
    with pytest.raises(DomainError):
        run_test("RawCycle", adj)


def test_signed_cycle3_on_dense_er():
    adj = sample_adjacency(np.full((80, 80), 0.3), 5)
    rep = signed_cycle3_test(adj)
    assert rep.test == "SignedCycle3"
    assert 0.2 < rep.nuisance < 0.4
    assert abs(rep.z) < 6
