"""Acceptance criteria, one test per check.

Every check reports through the ``acceptance`` fixture, which prints a
PASS/FAIL line and adds it to the end-of-run summary.  Checks that cannot be
met fail here rather than being loosened.
"""
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats as sps

from sgnpoly import _accel
from sgnpoly.graph import AdjacencyMatrix, sample_adjacency
from sgnpoly.harness import preset, run_experiment, snr_sweep
from sgnpoly.inference import estimate_theta_norm_sq, sgnq_test, sgnt_test
from sgnpoly.model import DcmmParams, MembershipLaw, ThetaLaw, build_omega, two_level_p, sample_params
from sgnpoly.scaling import chi_square_mc, scaling_residual, sinkhorn_dad, sinkhorn_multistart
from sgnpoly.spectral import omega_tilde, spectrum, tr_closed_form, tr_power_direct
from sgnpoly.stats import brute_force_polygon, distinct_cycle_sum

pytestmark = pytest.mark.acceptance


# -- 1: matrix form against the literal tuple sum ----------------------------------------


def test_c01_oracle_equivalence(acceptance):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst = 0.0
    graphs = 0
    for trial in range(300):
        n = int(rng.integers(5, 13))
        upper = np.triu(rng.random((n, n)) < rng.uniform(0.1, 0.9), 1)
        adj = AdjacencyMatrix.from_dense(upper | upper.T)
        center = rng.uniform(0, 1, n) if trial % 2 else rng.normal(0, 1, n)
        for m in (3, 4):
            ref = brute_force_polygon(adj, center, m)
            for name in ("numba", "numpy") if _accel.HAVE_NUMBA else ("numpy",):
                with _accel.backend(name):
                    got = distinct_cycle_sum(adj, center, m)
                worst = max(worst, abs(got - ref) / max(abs(ref), 1.0))
        graphs += 1
    elapsed = time.perf_counter() - start
    ok = acceptance(1, "oracle", worst <= 1e-8 and elapsed < 60,
                    f"{graphs} graphs, max rel err {worst:.2e}, {elapsed:.1f}s")
    assert ok


# -- 2, 3, 5: null calibration ---------------------------------------------------------------

NULL_N = 800
NULL_NORM = 8.0
NULL_LAW = ThetaLaw.pareto(12, 3 / 8, target_norm=NULL_NORM)


def null_graph(seed):
    params = sample_params(NULL_N, 1, NULL_LAW, MembershipLaw.uniform_basis(1), [[1.0]], seed=[seed, 0])
    return params, sample_adjacency(build_omega(params), seed)


@pytest.fixture(scope="module")
def null_runs():
    start = time.perf_counter()
    zt, zq, rt, rq = [], [], [], []
    for rep in range(500):
        _, adj = null_graph(rep)
        a, b = sgnt_test(adj), sgnq_test(adj)
        zt.append(a.z)
        zq.append(b.z)
        rt.append(a.reject)
        rq.append(b.reject)
    return {
        "SgnT": (np.array(zt), np.array(rt)),
        "SgnQ": (np.array(zq), np.array(rq)),
        "elapsed": time.perf_counter() - start,
    }


@pytest.mark.parametrize("test", ["SgnT", "SgnQ"])
def test_c02_null_calibration(null_runs, acceptance, test):
    z, _ = null_runs[test]
    mean, sd = float(z.mean()), float(z.std(ddof=1))
    ks = sps.kstest(z, "norm").pvalue
    ok = -0.2 <= mean <= 0.2 and 0.80 <= sd <= 1.15 and ks > 0.01 and null_runs["elapsed"] < 600
    acceptance(2, test, ok, f"mean {mean:.3f}, sd {sd:.3f}, KS p {ks:.3f}, {null_runs['elapsed']:.0f}s for 500 reps")
    assert ok


@pytest.mark.parametrize("test", ["SgnT", "SgnQ"])
def test_c03_type_one_error(null_runs, acceptance, test):
    _, rej = null_runs[test]
    rate = float(rej.mean())
    ok = 0.025 <= rate <= 0.085
    acceptance(3, test, ok, f"rejection rate {rate:.3f}")
    assert ok


def test_c05_norm_estimator(acceptance):
    hits = 0
    ratios = []
    for seed in range(100):
        params, adj = null_graph(10_000 + seed)
        r = (estimate_theta_norm_sq(adj) - 1.0) / params.theta_norm**2
        ratios.append(r)
        hits += 0.95 <= r <= 1.05
    ok = hits >= 95
    acceptance(5, "estimator", ok, f"{hits}/100 in [0.95, 1.05], ratio range [{min(ratios):.3f}, {max(ratios):.3f}]")
    assert ok


# -- 4: power ordering ---------------------------------------------------------------------


def test_c04_power_ordering(acceptance):
    cfg = preset("exp1a", n=500, sweep=snr_sweep(3.2, 3), reps_null=200, reps_alt=200)
    rows = run_experiment(cfg)
    by = {}
    for r in rows:
        by.setdefault(r.sweep_beta, {})[r.test] = r.sum
    detail = "; ".join(f"beta {b:.2f}: Q {v['SgnQ']:.3f} T {v['SgnT']:.3f}" for b, v in sorted(by.items()))
    ordered = all(v["SgnQ"] <= v["SgnT"] + 0.05 for v in by.values())
    top = by[max(by)]["SgnQ"] < 0.5
    ok = ordered and top
    acceptance(4, "ordering", ok, detail)
    assert ok


# -- 6: spectral identities ------------------------------------------------------------------


def test_c06_row_sums_vanish(acceptance):
    worst = 0.0
    for seed in range(5):
        mem = MembershipLaw((0.3, 0.3, 0.3), 0.1)
        params = sample_params(2000, 3, ThetaLaw.pareto(10, 0.375, 8.0), mem, two_level_p(3, 0.4), seed)
        worst = max(worst, float(np.max(np.abs(omega_tilde(build_omega(params)).sum(axis=1)))))
    ok = worst <= 1e-10
    acceptance(6, "row sums", ok, f"max |Omega_tilde 1| = {worst:.1e}")
    assert ok


def balanced_two_level(k, b, norm, n=2000):
    pi = np.eye(k)[np.arange(n) % k]
    return DcmmParams(np.full(n, norm / math.sqrt(n)), pi, two_level_p(k, b))


CASES = [(2, 0.4), (2, 0.8), (3, 0.5), (5, 0.6)]


def test_c06_two_level_literal_asymptotics(acceptance):
    # literal check: lambda_1 against (1 + (K-1) b) ||theta||^2 and lambda_2
    # against (1 - b) ||theta||^2.  With balanced communities the exact values
    # carry an extra 1/K, so this check cannot pass for any K >= 2.
    worst = 0.0
    for k, b in CASES:
        params = balanced_two_level(k, b, 10.0)
        spec = spectrum(build_omega(params), k)
        t2 = params.theta_norm**2
        worst = max(worst, abs(spec.lambda1 / ((1 + (k - 1) * b) * t2) - 1),
                    abs(spec.lambda2 / ((1 - b) * t2) - 1))
    ok = worst <= 0.02
    acceptance(6, "two-level literal", ok, f"max rel gap {worst:.3f} (exact values are 1/K of the stated ones)")
    assert ok


def test_c06_two_level_with_community_weight(acceptance):
    # the same eigenvalues with the 1/K community weight included
    worst = 0.0
    for k, b in CASES:
        params = balanced_two_level(k, b, 10.0)
        spec = spectrum(build_omega(params), k)
        t2 = params.theta_norm**2
        worst = max(worst, abs(spec.lambda1 / ((1 + (k - 1) * b) * t2 / k) - 1),
                    abs(spec.lambda2 / ((1 - b) * t2 / k) - 1))
    ok = worst <= 0.02
    acceptance(6, "two-level with 1/K", ok, f"max rel gap {worst:.1e}")
    assert ok


def test_c06_closed_form_traces(acceptance):
    n = 2000
    checked = 0
    worst = 0.0
    rng = np.random.default_rng(6)
    settings = []
    for b in (0.9, 0.95, 0.98):
        # strong degree imbalance between communities keeps h away from zero
        pi = np.eye(2)[(np.arange(n) < n // 2).astype(int)]
        theta = np.where(np.arange(n) < n // 2, 0.005, 0.08)
        settings.append(DcmmParams(theta, pi, two_level_p(2, b)))
    for b in (0.93, 0.96):
        pi = rng.dirichlet(np.ones(3), n)
        settings.append(DcmmParams(rng.uniform(0.02, 0.1, n), pi, two_level_p(3, b)))
    for params in settings:
        om = build_omega(params)
        spec = spectrum(om, params.k)
        if spec.ratio > 0.05:
            continue
        ot = omega_tilde(om)
        for m in (3, 4):
            err = abs(tr_closed_form(spec, m) - tr_power_direct(ot, m)) / abs(spec.lambda2) ** m
            worst = max(worst, err)
        checked += 1
    ok = checked >= 4 and worst <= 0.1
    acceptance(6, "closed-form traces", ok, f"{checked} settings, max err {worst:.2e} x |lambda_2|^m")
    assert ok


# -- 7: matrix scaling -------------------------------------------------------------------------


def test_c07_matrix_scaling(acceptance):
    rng = np.random.default_rng(7)
    worst_res, worst_spread = 0.0, 0.0
    for _ in range(100):
        k = int(rng.integers(2, 9))
        off = np.triu(rng.uniform(0, 1, (k, k)), 1)
        p = np.eye(k) + off + off.T
        h = rng.dirichlet(np.ones(k))
        res = sinkhorn_dad(p, h)
        worst_res = max(worst_res, scaling_residual(p, res.d, h))
        _, spread = sinkhorn_multistart(p, h, starts=10, seed=int(rng.integers(2**31)))
        worst_spread = max(worst_spread, spread)
    ok = worst_res < 1e-10 and worst_spread <= 1e-8
    acceptance(7, "scaling", ok, f"max residual {worst_res:.1e}, max start spread {worst_spread:.1e}")
    assert ok


# -- 8: chi-square monotonicity -------------------------------------------------------------


def test_c08_chi_square(acceptance):
    n, norm = 300, 5.0
    theta = np.full(n, norm / math.sqrt(n))
    law = MembershipLaw.uniform_basis(2)
    start = time.perf_counter()
    low = chi_square_mc(theta, two_level_p(2, 1 - 0.1 / norm), law, 10_000, seed=8)
    high = chi_square_mc(theta, two_level_p(2, 1 - 3.0 / norm), law, 10_000, seed=8)
    flat = chi_square_mc(theta, np.ones((2, 2)), law, 10_000, seed=8)
    elapsed = time.perf_counter() - start
    ok = abs(low.estimate) < 0.05 and high.estimate > low.estimate and flat.estimate == 0.0
    acceptance(8, "chi-square", ok,
               f"sep 0.1: {low.estimate:.2e}; sep 3: {high.estimate:.3g} (se {high.std_error:.2g}); "
               f"mu2=0: {flat.estimate}; {elapsed:.0f}s")
    assert ok


# -- 9: performance ----------------------------------------------------------------------------


def test_c09_performance(acceptance):
    n = 5000
    law = ThetaLaw.pareto(10, 0.375, 1.0)
    params = sample_params(n, 2, law, MembershipLaw.uniform_basis(2), two_level_p(2, 0.5), seed=9)
    # rescale theta so the expected mean degree is 20
    om = build_omega(params)
    mean_deg = (om.sum() - np.trace(om)) / n
    params = DcmmParams(params.theta * math.sqrt(20 / mean_deg), params.pi, params.p)
    del om
    adj = sample_adjacency(build_omega(params), 9)
    start = time.perf_counter()
    rep = sgnq_test(adj)
    elapsed = time.perf_counter() - start
    ok = elapsed < 30 and math.isfinite(rep.z)
    acceptance(9, "sgnQ n=5000", ok,
               f"mean degree {adj.mean_degree:.1f}, {elapsed:.2f}s on {_accel.backend_name()} "
               f"with {_accel.thread_count()} thread(s)")
    assert ok


# -- 10: determinism ---------------------------------------------------------------------------


def test_c10_determinism(acceptance):
    outs = {}
    for preset_name, n in (("exp1a", 400), ("exp3b", 400)):
        args = [sys.executable, "-m", "sgnpoly.cli", "simulate", "--preset", preset_name, "--n", str(n),
                "--reps", "10", "--points", "2", "--seed", "10"]
        for threads in ("1", "3", "1"):
            env = {**os.environ, "SGNPOLY_THREADS": threads}
            proc = subprocess.run(args, capture_output=True, env=env, check=True, timeout=600)
            outs.setdefault(preset_name, []).append(proc.stdout)
    ok = all(len(set(v)) == 1 and v[0] for v in outs.values())
    acceptance(10, "byte-identical", ok, f"{len(outs)} presets x threads 1/3/1")
    assert ok
