"""``sgnpoly`` command line.

Machine-readable payloads go to stdout, diagnostics to stderr.  Exit codes:
0 success, 1 internal error or failed oracle check, 2 usage error, 3 bad
input data.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import harness, inference, model, scaling, spectral, stats
from .errors import InvalidParams, SgnPolyError
from .graph import AdjacencyMatrix, ReadSummary, read_edges

log = logging.getLogger("sgnpoly")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, allow_nan=True) + "\n")


def _load_config(text: str) -> dict:
    if text.lstrip().startswith("{"):
        return json.loads(text)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_test(args) -> int:
    summary = ReadSummary()
    adj = read_edges(args.edges, n=args.n, indexing=args.index, summary=summary)
    if summary.self_loops or summary.duplicates:
        log.warning("dropped %d self-loops and %d duplicate edges", summary.self_loops, summary.duplicates)
    log.info("graph: n=%d edges=%d", adj.n, adj.n_edges)
    names = [t.strip() for t in args.tests.split(",") if t.strip()]
    reports = [inference.run_test(name, adj, args.alpha).to_json() for name in names]
    _emit(reports)
    return EXIT_OK


def cmd_simulate(args) -> int:
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.reps is not None:
        changes["reps_null"] = changes["reps_alt"] = args.reps
    if args.tests:
        changes["tests"] = tuple(t.strip() for t in args.tests.split(",") if t.strip())
    if args.points is not None:
        base = harness.preset(args.preset)
        if args.preset in harness.SNR:
            changes["sweep"] = harness.snr_sweep(harness.SNR[args.preset], args.points)
        elif args.points != len(base.sweep):
            raise InvalidParams(f"preset {args.preset} has a fixed sweep")
    cfg = harness.preset(args.preset, n=args.n, **changes)
    start = time.perf_counter()
    rows = harness.run_experiment(cfg)
    log.info("simulate %s finished in %.1fs", cfg.name, time.perf_counter() - start)
    text = harness.rows_to_csv(rows)
    if args.out:
        harness.write_results(rows, args.out, args.plot_data)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _theta_from(doc: dict) -> np.ndarray:
    if "theta" in doc:
        return np.asarray(doc["theta"], dtype=np.float64)
    law = model.ThetaLaw.from_dict(doc["theta_law"])
    rng = np.random.default_rng(doc.get("seed", 0))
    raw = law.sample_raw(rng, int(doc["n"]))
    return law.target_norm * raw / np.linalg.norm(raw)


def cmd_scale(args) -> int:
    doc = _load_config(args.config)
    mode = doc.get("mode", "sinkhorn")
    try:
        if mode == "sinkhorn":
            res = scaling.sinkhorn_dad(doc["A"], doc["h"], tol=float(doc.get("tol", 1e-12)))
            _emit(res.to_json())
        elif mode == "least-favorable":
            theta = _theta_from(doc)
            mem = model.MembershipLaw.from_dict(doc["mem_law"]) if "mem_law" in doc else np.asarray(doc["Pi"])
            pair = scaling.least_favorable(theta, doc["P"], mem, doc["construction"], seed=doc.get("seed", 0))
            _emit(pair.to_json())
        elif mode == "dirichlet-p":
            p = scaling.dirichlet_p_construct(doc["alpha"], float(doc["q"]))
            _emit({"P": p.tolist()})
        elif mode == "chi-square":
            est = scaling.chi_square_mc(
                _theta_from(doc), doc["P"], model.MembershipLaw.from_dict(doc["mem_law"]),
                int(doc.get("reps", 1000)), int(doc.get("seed", 0)),
                doc.get("construction", "matched-theta"),
            )
            _emit(est.to_json())
        else:
            raise InvalidParams(f"unknown scale mode {mode!r}")
    except KeyError as exc:
        raise InvalidParams(f"config missing field {exc}") from None
    return EXIT_OK


def cmd_phase(args) -> int:
    params = model.params_from_json(_load_config(args.config))
    omega = model.build_omega(params)
    point = spectral.phase_classify(omega, lo=args.lo, hi=args.hi, k=params.k)
    spec = spectral.spectrum_from_params(params)
    _emit({**point.to_json(), "spectrum": spec.to_json()})
    return EXIT_OK


def oracle_check(trials: int, seed: int = 0, tol: float = 1e-8) -> dict:
    """Matrix-form cycle sums against the literal tuple sum on small random graphs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for trial in range(trials):
        n = int(rng.integers(5, 13))
        dens = rng.uniform(0.1, 0.9)
        upper = np.triu(rng.random((n, n)) < dens, 1)
        adj = AdjacencyMatrix.from_dense(upper | upper.T)
        center = rng.uniform(0.0, 1.0, n) if trial % 3 else rng.normal(0.0, 1.0, n)
        for m in (3, 4):
            fast = stats.distinct_cycle_sum(adj, center, m)
            slow = stats.brute_force_polygon(adj, center, m)
            err = abs(fast - slow) / max(abs(slow), 1.0)
            worst = max(worst, err)
            if err > tol:
                failures.append({"trial": trial, "n": n, "m": m, "matrix_form": fast, "brute_force": slow})
    return {"trials": trials, "max_rel_error": worst, "tolerance": tol, "failures": failures}


def cmd_oracle_check(args) -> int:
    result = oracle_check(args.trials, args.seed)
    _emit(result)
    return EXIT_OK if not result["failures"] else EXIT_INTERNAL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgnpoly", description="Signed polygon network tests")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run SgnT / SgnQ on an edge list")
    p.add_argument("--edges", required=True, help="whitespace-separated 'i j' lines")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tests", default="sgnt,sgnq", help="comma list of sgnt, sgnq, signedcycle3")
    p.add_argument("--index", type=int, choices=(0, 1), default=0, help="node numbering base")
    p.add_argument("--n", type=int, default=None, help="node count (default: max index + 1)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte-Carlo error rates for a preset")
    p.add_argument("--preset", required=True, choices=sorted(harness.PRESETS))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--reps", type=int, default=None, help="reps per hypothesis")
    p.add_argument("--points", type=int, default=None, help="number of sweep points")
    p.add_argument("--tests", default=None, help="comma list of SgnT, SgnQ, SignedCycle3")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--plot-data", default=None, help="also write sorted rows here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scale", help="matrix scaling and least-favorable pairs")
    p.add_argument("--config", required=True, help="JSON file or inline JSON object")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("phase", help="phase-diagram position of a parameter set")
    p.add_argument("--config", required=True, help="params JSON file or inline object")
    p.add_argument("--lo", type=float, default=1 / 3)
    p.add_argument("--hi", type=float, default=3.0)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("oracle-check", help="matrix form vs brute force on random small graphs")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (SgnPolyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001 - last-resort boundary
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
