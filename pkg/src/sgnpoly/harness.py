"""Monte-Carlo error-rate experiments: null vs. alternative networks over a sweep.

Each sweep point ``(beta, b)`` fixes ``||theta|| = beta`` and the community
matrix.  Repetition ``r`` draws fresh (theta, Pi) for the alternative, derives
the degree-matched null from it, samples one network under each and runs
every requested test.  All randomness for ``(sweep point, rep, role)`` comes
from ``SeedSequence([master_seed, point, rep, role])``, so results do not
depend on how repetitions are scheduled across threads.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DegenerateGraph, InvalidParams, NonpositiveNuisance, UnknownPreset
from .graph import sample_adjacency
from .inference import signed_cycle3_test, sgnq_test, sgnt_test
from .model import (
    DcmmParams,
    MembershipLaw,
    ThetaLaw,
    build_omega,
    two_level_p,
    matched_null,
    randomized_offdiag_p,
    sample_params,
)

log = logging.getLogger(__name__)

TEST_FUNCS = {"SgnT": sgnt_test, "SgnQ": sgnq_test, "SignedCycle3": signed_cycle3_test}
SKIP_LIMIT = 0.05
CSV_HEADER = ("sweep_beta", "sweep_b", "test", "type1", "type2", "sum", "reps", "skipped")

_ROLE_NULL, _ROLE_ALT, _ROLE_PARAMS = 0, 1, 2
_P_NOISE_TAG = 0x9E


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    k: int
    theta_law: ThetaLaw
    mem_law: MembershipLaw
    sweep: tuple[tuple[float, float], ...]
    p_kind: str = "two-level"  # "two-level" | "random-offdiag" | "explicit"
    p_explicit: tuple[tuple[float, ...], ...] | None = None
    reps_null: int = 200
    reps_alt: int = 200
    alpha: float = 0.05
    tests: tuple[str, ...] = ("SgnT", "SgnQ")
    master_seed: int = 0
    null_norm: float | None = None  # fixed null ||theta|| instead of the matched null
    balanced: bool = False  # deterministic equal-size hard memberships
    name: str = "custom"

    def __post_init__(self):
        problems = []
        if self.n < 3 or self.k < 1:
            problems.append("need n >= 3 and K >= 1")
        if self.reps_null < 1 or self.reps_alt < 1:
            problems.append("reps must be positive")
        if not 0 < self.alpha < 1:
            problems.append("alpha must lie in (0, 1)")
        if self.mem_law.k != self.k:
            problems.append("membership law disagrees with K")
        if self.p_kind not in ("two-level", "random-offdiag", "explicit"):
            problems.append(f"unknown p_kind {self.p_kind!r}")
        if self.p_kind == "explicit" and self.p_explicit is None:
            problems.append("explicit P missing")
        unknown = [t for t in self.tests if t not in TEST_FUNCS]
        if unknown:
            problems.append(f"unknown tests {unknown}")
        if not self.sweep:
            problems.append("empty sweep")
        if self.master_seed < 0:
            problems.append("master_seed must be nonnegative")
        if problems:
            raise InvalidParams("; ".join(problems))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def community_matrix(self, b: float) -> np.ndarray:
        if self.p_kind == "explicit":
            return np.asarray(self.p_explicit, dtype=np.float64)
        if self.p_kind == "two-level":
            return two_level_p(self.k, b)
        rng = np.random.default_rng([self.master_seed, _P_NOISE_TAG])
        noise = rng.uniform(-1.0, 1.0, size=(self.k, self.k))
        return randomized_offdiag_p(self.k, b, noise)


@dataclass(frozen=True)
class ResultRow:
    sweep_beta: float
    sweep_b: float
    test: str
    type1: float
    type2: float
    reps: int
    skipped: int

    @property
    def sum(self) -> float:
        return self.type1 + self.type2

    @property
    def valid(self) -> bool:
        return not math.isnan(self.type1)

    def as_tuple(self) -> tuple:
        return (self.sweep_beta, self.sweep_b, self.test, self.type1, self.type2, self.sum,
                self.reps, self.skipped)


def snr_sweep(snr: float, points: int = 6, gap_hi: float = 0.8, gap_lo: float = 0.3):
    """``(beta, b)`` pairs with ``beta * (1 - b) = snr`` and ``1 - b`` evenly
    spaced from ``gap_hi`` down to ``gap_lo`` (so beta increases)."""
    gaps = np.linspace(gap_hi, gap_lo, points)
    return tuple((float(snr / g), float(1.0 - g)) for g in gaps)


def _seed(master: int, point: int, rep: int, role: int) -> int:
    ss = np.random.SeedSequence([master, point, rep, role])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _balanced_pi(n: int, k: int) -> np.ndarray:
    labels = (np.arange(n) * k) // n
    return np.eye(k)[labels]


def _pair_params(cfg: ExperimentConfig, point: int, beta: float, p: np.ndarray, rep: int):
    law = cfg.theta_law.with_norm(beta)
    alt = sample_params(cfg.n, cfg.k, law, cfg.mem_law, p, _seed(cfg.master_seed, point, rep, _ROLE_PARAMS))
    if cfg.balanced:
        alt = DcmmParams(alt.theta, _balanced_pi(cfg.n, cfg.k), p)
    if cfg.null_norm is not None:
        null = DcmmParams.null(alt.theta * (cfg.null_norm / alt.theta_norm))
    else:
        null = matched_null(alt, cfg.mem_law)
    return null, alt


def _outcomes(cfg: ExperimentConfig, params: DcmmParams, seed: int) -> tuple[int, ...]:
    # 1 reject, 0 accept, -1 skipped
    adj = sample_adjacency(build_omega(params), seed)
    out = []
    for name in cfg.tests:
        try:
            out.append(int(TEST_FUNCS[name](adj, cfg.alpha).reject))
        except (DegenerateGraph, NonpositiveNuisance):
            out.append(-1)
    return tuple(out)


def _run_rep(cfg: ExperimentConfig, point: int, beta: float, p: np.ndarray, rep: int):
    null, alt = _pair_params(cfg, point, beta, p, rep)
    res_null = _outcomes(cfg, null, _seed(cfg.master_seed, point, rep, _ROLE_NULL)) if rep < cfg.reps_null else None
    res_alt = _outcomes(cfg, alt, _seed(cfg.master_seed, point, rep, _ROLE_ALT)) if rep < cfg.reps_alt else None
    return res_null, res_alt


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[ResultRow]:
    """Type I / II error rates for each sweep point and test."""
    workers = workers or _accel.thread_count()
    rows: list[ResultRow] = []
    n_rep = max(cfg.reps_null, cfg.reps_alt)
    for point, (beta, b) in enumerate(cfg.sweep):
        p = cfg.community_matrix(b)
        log.info("%s: point %d/%d beta=%.4g b=%.4g", cfg.name, point + 1, len(cfg.sweep), beta, b)

        def task(rep, point=point, beta=beta, p=p):
            return _run_rep(cfg, point, beta, p, rep)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(task, range(n_rep)))
        else:
            results = [task(r) for r in range(n_rep)]
        for t, name in enumerate(cfg.tests):
            null_out = np.array([r[0][t] for r in results if r[0] is not None])
            alt_out = np.array([r[1][t] for r in results if r[1] is not None])
            skipped = int(np.count_nonzero(null_out < 0) + np.count_nonzero(alt_out < 0))
            attempted = null_out.size + alt_out.size
            ok_null, ok_alt = null_out[null_out >= 0], alt_out[alt_out >= 0]
            if skipped > SKIP_LIMIT * attempted or ok_null.size == 0 or ok_alt.size == 0:
                type1 = type2 = math.nan
            else:
                type1 = float(ok_null.sum()) / ok_null.size
                type2 = float(ok_alt.size - ok_alt.sum()) / ok_alt.size
            rows.append(ResultRow(float(beta), float(b), name, type1, type2, attempted, skipped))
    return rows


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.as_tuple()])
    return buf.getvalue()


def sorted_rows(rows: list[ResultRow]) -> list[ResultRow]:
    """Plot-data order: by test, then beta, then b."""
    return sorted(rows, key=lambda r: (r.test, r.sweep_beta, r.sweep_b))


def write_results(rows: list[ResultRow], path, plot_path=None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
    if plot_path is not None:
        with open(plot_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(sorted_rows(rows)))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _exp1(theta_law: ThetaLaw, name: str) -> ExperimentConfig:
    return ExperimentConfig(
        n=2000, k=2, theta_law=theta_law, mem_law=MembershipLaw.uniform_basis(2),
        sweep=snr_sweep(3.2), name=name,
    )


def _exp3(mem_law: MembershipLaw, snr: float, name: str) -> ExperimentConfig:
    return ExperimentConfig(
        n=2000, k=3, theta_law=ThetaLaw.uniform(2, 3), mem_law=mem_law,
        sweep=snr_sweep(snr), name=name,
    )


def _build_presets() -> dict:
    pareto10 = ThetaLaw.pareto(10, 0.375)
    two_point = ThetaLaw.two_point([1, 3], [0.95, 0.05])
    return {
        "exp1a": lambda: _exp1(ThetaLaw.uniform(2, 3), "exp1a"),
        "exp1b": lambda: _exp1(two_point, "exp1b"),
        "exp1c": lambda: _exp1(pareto10, "exp1c"),
        "exp2a": lambda: ExperimentConfig(
            n=1000, k=5, theta_law=pareto10, mem_law=MembershipLaw.uniform_basis(5),
            sweep=snr_sweep(4.5), p_kind="random-offdiag", name="exp2a",
        ),
        "exp2b": lambda: ExperimentConfig(
            n=3000, k=10, theta_law=two_point,
            mem_law=MembershipLaw((0.1, 0.1, 0.15, 0.15, 0.15, 0.15, 0.05, 0.05, 0.05, 0.05)),
            sweep=snr_sweep(5.2), p_kind="random-offdiag", name="exp2b",
        ),
        "exp3a": lambda: _exp3(MembershipLaw((0.4, 0.3, 0.3)), 4.2, "exp3a"),
        "exp3b": lambda: _exp3(MembershipLaw((0.3, 0.3, 0.3), 0.1), 4.2, "exp3b"),
        "exp3c": lambda: _exp3(MembershipLaw((0.25, 0.25, 0.25), 0.25), 4.5, "exp3c"),
        "fig2-null": lambda: ExperimentConfig(
            n=2000, k=2, theta_law=ThetaLaw.pareto(12, 3 / 8), mem_law=MembershipLaw.uniform_basis(2),
            sweep=((9.0, 0.6),), null_norm=8.0, balanced=True, name="fig2-null",
        ),
    }


PRESETS = _build_presets()
SNR = {"exp1a": 3.2, "exp1b": 3.2, "exp1c": 3.2, "exp2a": 4.5, "exp2b": 5.2,
       "exp3a": 4.2, "exp3b": 4.2, "exp3c": 4.5}


def preset(name: str, n: int | None = None, **changes) -> ExperimentConfig:
    """Named configuration; ``n`` overrides the node count for desk-scale runs."""
    try:
        cfg = PRESETS[name]()
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if n is not None:
        changes["n"] = int(n)
    return cfg.replace(**changes) if changes else cfg
