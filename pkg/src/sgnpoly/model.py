"""DCMM parameters, random generators and the edge-probability matrix.

A DCMM model is ``Omega = Theta Pi P Pi' Theta``: ``theta`` (n,) positive
degree parameters, ``pi`` (n, K) membership rows on the simplex and ``p``
(K, K) symmetric, nonnegative, unit diagonal.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidParams, OverflowProbability

_ROW_TOL = 1e-10


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaLaw:
    """Distribution of the raw degree parameters plus the target ``||theta||``.

    ``kind`` is one of ``"uniform"`` (params ``low, high``), ``"two-point"``
    (params ``values, probs``) or ``"pareto"`` (params ``shape, scale``).
    Pareto(a, s) has density ``a s^a / x^(a+1)`` on ``x >= s``.
    """

    kind: str
    params: dict[str, Any]
    target_norm: float = 1.0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise InvalidParams("; ".join(problems))

    @classmethod
    def uniform(cls, low: float, high: float, target_norm: float = 1.0) -> "ThetaLaw":
        return cls("uniform", {"low": float(low), "high": float(high)}, float(target_norm))

    @classmethod
    def two_point(cls, values, probs, target_norm: float = 1.0) -> "ThetaLaw":
        return cls(
            "two-point",
            {"values": [float(v) for v in values], "probs": [float(q) for q in probs]},
            float(target_norm),
        )

    @classmethod
    def pareto(cls, shape: float, scale: float, target_norm: float = 1.0) -> "ThetaLaw":
        return cls("pareto", {"shape": float(shape), "scale": float(scale)}, float(target_norm))

    def problems(self) -> list[str]:
        out = []
        if not self.target_norm > 0:
            out.append("target_norm must be > 0")
        prm = self.params
        if self.kind == "uniform":
            if not 0 < prm["low"] < prm["high"]:
                out.append("uniform law needs 0 < low < high")
        elif self.kind == "two-point":
            vals, probs = prm["values"], prm["probs"]
            if len(vals) != len(probs) or not vals:
                out.append("two-point law needs matching values/probs")
            elif min(vals) <= 0 or min(probs) < 0:
                out.append("two-point law needs positive values and nonnegative probs")
            elif abs(sum(probs) - 1.0) > 1e-12:
                out.append("two-point probs must sum to 1")
        elif self.kind == "pareto":
            if not (prm["shape"] > 0 and prm["scale"] > 0):
                out.append("pareto law needs shape > 0 and scale > 0")
        else:
            out.append(f"unknown theta law kind {self.kind!r}")
        return out

    def with_norm(self, target_norm: float) -> "ThetaLaw":
        return dataclasses.replace(self, target_norm=float(target_norm))

    def sample_raw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """i.i.d. draws from the law, before rescaling."""
        prm = self.params
        if self.kind == "uniform":
            return rng.uniform(prm["low"], prm["high"], size=n)
        if self.kind == "two-point":
            vals = np.asarray(prm["values"])
            return vals[rng.choice(len(vals), size=n, p=np.asarray(prm["probs"]))]
        # numpy's pareto is the Lomax (shifted) form
        return prm["scale"] * (1.0 + rng.pareto(prm["shape"], size=n))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params, "target_norm": self.target_norm}

    @classmethod
    def from_dict(cls, doc: dict) -> "ThetaLaw":
        doc = dict(doc)
        kind = doc.pop("kind")
        norm = float(doc.pop("target_norm", 1.0))
        if kind == "uniform":
            return cls.uniform(doc["low"], doc["high"], norm)
        if kind == "two-point":
            return cls.two_point(doc["values"], doc["probs"], norm)
        if kind == "pareto":
            return cls.pareto(doc["shape"], doc["scale"], norm)
        raise InvalidParams(f"unknown theta law kind {kind!r}")


@dataclass(frozen=True)
class MembershipLaw:
    """Mixture ``sum_k w_k delta_{e_k} + w_D Dirichlet(alpha)``."""

    point_weights: tuple[float, ...]
    dirichlet_weight: float = 0.0
    dirichlet_alpha: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "point_weights", tuple(float(w) for w in self.point_weights))
        if self.dirichlet_alpha is None:
            object.__setattr__(self, "dirichlet_alpha", (1.0,) * len(self.point_weights))
        else:
            object.__setattr__(self, "dirichlet_alpha", tuple(float(a) for a in self.dirichlet_alpha))
        w = np.asarray(self.point_weights)
        if w.size == 0:
            raise InvalidParams("membership law needs K >= 1")
        if np.any(w < 0) or self.dirichlet_weight < 0:
            raise InvalidParams("membership weights must be nonnegative")
        if abs(w.sum() + self.dirichlet_weight - 1.0) > 1e-12:
            raise InvalidParams("membership weights must sum to 1")
        if len(self.dirichlet_alpha) != w.size or min(self.dirichlet_alpha) <= 0:
            raise InvalidParams("dirichlet_alpha must be positive with length K")

    @classmethod
    def uniform_basis(cls, k: int) -> "MembershipLaw":
        return cls((1.0 / k,) * k)

    @classmethod
    def dirichlet(cls, alpha) -> "MembershipLaw":
        alpha = tuple(float(a) for a in alpha)
        return cls((0.0,) * len(alpha), 1.0, alpha)

    @property
    def k(self) -> int:
        return len(self.point_weights)

    def mean(self) -> np.ndarray:
        """Closed-form ``E[pi]``."""
        alpha = np.asarray(self.dirichlet_alpha)
        return np.asarray(self.point_weights) + self.dirichlet_weight * alpha / alpha.sum()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        k = self.k
        probs = np.append(np.asarray(self.point_weights), self.dirichlet_weight)
        comp = rng.choice(k + 1, size=n, p=probs / probs.sum())
        pi = np.zeros((n, k))
        pure = comp < k
        pi[np.nonzero(pure)[0], comp[pure]] = 1.0
        n_mixed = int(np.count_nonzero(~pure))
        if n_mixed:
            pi[~pure] = rng.dirichlet(np.asarray(self.dirichlet_alpha), size=n_mixed)
        return pi

    def to_dict(self) -> dict:
        return {
            "point_weights": list(self.point_weights),
            "dirichlet_weight": self.dirichlet_weight,
            "dirichlet_alpha": list(self.dirichlet_alpha),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MembershipLaw":
        alpha = doc.get("dirichlet_alpha")
        return cls(
            tuple(doc["point_weights"]),
            float(doc.get("dirichlet_weight", 0.0)),
            None if alpha is None else tuple(alpha),
        )


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DcmmParams:
    theta: np.ndarray
    pi: np.ndarray
    p: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        pi = np.asarray(self.pi, dtype=np.float64)
        p = np.atleast_2d(np.asarray(self.p, dtype=np.float64))
        if pi.ndim == 1:
            pi = pi.reshape(-1, 1)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def k(self) -> int:
        return self.p.shape[0]

    @property
    def theta_norm(self) -> float:
        return float(np.linalg.norm(self.theta))

    @classmethod
    def null(cls, theta) -> "DcmmParams":
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta, np.ones((theta.size, 1)), np.ones((1, 1)))

    def node_vectors(self) -> np.ndarray:
        """Rows ``theta_i * pi_i`` (the factor X in ``Omega = X P X'``)."""
        return self.theta[:, None] * self.pi

    def gram(self) -> np.ndarray:
        """``G = ||theta||^-2 Pi' Theta^2 Pi``."""
        x = self.node_vectors()
        return (x.T @ x) / float(self.theta @ self.theta)


def validate(params: DcmmParams) -> list[str]:
    """Every violated model invariant, as human readable strings."""
    out = []
    theta, pi, p = params.theta, params.pi, params.p
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return [f"P must be square, got shape {p.shape}"]
    if pi.shape != (theta.shape[0], p.shape[0]):
        out.append(f"Pi shape {pi.shape} inconsistent with n={theta.shape[0]}, K={p.shape[0]}")
    if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
        out.append("theta entries must be positive")
    if not np.array_equal(p, p.T):
        out.append("P not symmetric")
    if np.any(p < 0):
        out.append("P has negative entries")
    if np.any(np.abs(np.diag(p) - 1.0) > 1e-12):
        out.append("diag(P) ≠ 1")
    if pi.shape[1:] == p.shape[:1]:
        if np.any(pi < 0):
            out.append("Pi has negative entries")
        bad = np.nonzero(np.abs(pi.sum(axis=1) - 1.0) > _ROW_TOL)[0]
        if bad.size:
            out.append(f"row sum ≠ 1 (first offending row {int(bad[0])})")
    if not out:
        omax = _max_offdiag(params)
        if omax >= 1.0:
            out.append(f"max off-diagonal Omega = {omax:.6g} >= 1")
    return out


def _max_offdiag(params: DcmmParams) -> float:
    # cheap bound: theta_i theta_j max P over distinct nodes
    t = np.sort(params.theta)
    if t.size < 2:
        return 0.0
    return float(t[-1] * t[-2] * params.p.max())


def _check(params: DcmmParams) -> None:
    problems = [m for m in validate(params) if not m.startswith("max off-diagonal")]
    if problems:
        raise InvalidParams("; ".join(problems))


def build_omega(params: DcmmParams) -> np.ndarray:
    """Dense ``Omega = Theta Pi P Pi' Theta`` (diagonal included).

    The upper triangle is computed and mirrored, so the result is bitwise
    symmetric.  Raises :class:`OverflowProbability` if an off-diagonal entry
    reaches 1.
    """
    _check(params)
    x = params.node_vectors()
    full = (x @ params.p) @ x.T
    omega = np.triu(full)
    omega += np.triu(full, 1).T
    off = omega.copy()
    np.fill_diagonal(off, 0.0)
    if off.size and off.max() >= 1.0:
        i, j = np.unravel_index(np.argmax(off), off.shape)
        raise OverflowProbability(f"Omega[{i},{j}] = {off[i, j]:.6g} >= 1")
    return omega


def sample_params(
    n: int,
    k: int,
    theta_law: ThetaLaw,
    mem_law: MembershipLaw,
    p,
    seed: int,
) -> DcmmParams:
    """Draw theta i.i.d. from ``theta_law`` rescaled to ``||theta|| = target_norm``
    and membership rows i.i.d. from ``mem_law``."""
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    if p.shape != (k, k) or mem_law.k != k:
        raise InvalidParams(f"P is {p.shape}, membership law has K={mem_law.k}, expected K={k}")
    rng = np.random.default_rng(seed)
    raw = theta_law.sample_raw(rng, n)
    theta = theta_law.target_norm * raw / np.linalg.norm(raw)
    pi = mem_law.sample(rng, n)
    return DcmmParams(theta, pi, p, meta={"seed": seed})


def matched_null(params: DcmmParams, mem_law: MembershipLaw) -> DcmmParams:
    """K = 1 null with ``Omega_null = (a'Pa) theta theta'``, ``a = E[pi]``."""
    a = mem_law.mean()
    if a.shape[0] != params.k:
        raise InvalidParams("membership law and P disagree on K")
    scale = float(a @ params.p @ a)
    null = DcmmParams.null(params.theta * math.sqrt(scale))
    t = np.sort(null.theta)
    if t.size >= 2 and t[-1] * t[-2] >= 1.0:
        raise OverflowProbability(f"null probability {t[-1] * t[-2]:.6g} >= 1")
    return null


def two_level_p(k: int, b: float) -> np.ndarray:
    """``(1 - b) I_K + b 1 1'``."""
    return (1.0 - b) * np.eye(k) + b * np.ones((k, k))


def randomized_offdiag_p(k: int, b: float, noise: np.ndarray) -> np.ndarray:
    """Unit diagonal, off-diagonals ``b + eps * noise`` with ``eps = min(1-b, b)/6``.

    ``noise`` is a (K, K) array of Unif(-1, 1) draws; only its upper triangle
    is used, so the same draw can be re-scaled across sweep points.
    """
    eps = min(1.0 - b, b) / 6.0
    up = np.triu(np.asarray(noise, dtype=np.float64), 1)
    off = b * (np.triu(np.ones((k, k)), 1)) + eps * up
    return np.eye(k) + off + off.T


def mu2(p) -> float:
    """Second largest eigenvalue of P in magnitude (0 for K = 1)."""
    ev = np.linalg.eigvalsh(np.atleast_2d(p))
    if ev.size < 2:
        return 0.0
    ev = ev[np.argsort(-np.abs(ev), kind="stable")]
    return float(ev[1])


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def params_to_json(params: DcmmParams) -> dict:
    return {
        "n": params.n,
        "K": params.k,
        "theta": params.theta.tolist(),
        "P": params.p.tolist(),
        "Pi": params.pi.tolist(),
        "seed": params.meta.get("seed"),
    }


def params_from_json(doc: dict) -> DcmmParams:
    """Build params from the JSON document schema.

    ``theta`` or ``theta_law`` and ``Pi`` or ``mem_law`` may be mixed; laws are
    sampled with ``seed`` (theta first, then memberships, same stream as
    :func:`sample_params`).
    """
    try:
        p = np.atleast_2d(np.asarray(doc["P"], dtype=np.float64))
        k = int(doc.get("K", p.shape[0]))
        seed = doc.get("seed", 0)
        rng = np.random.default_rng(seed)
        if "theta" in doc:
            theta = np.asarray(doc["theta"], dtype=np.float64)
            n = int(doc.get("n", theta.size))
        else:
            n = int(doc["n"])
            law = ThetaLaw.from_dict(doc["theta_law"])
            raw = law.sample_raw(rng, n)
            theta = law.target_norm * raw / np.linalg.norm(raw)
        if "Pi" in doc:
            pi = np.asarray(doc["Pi"], dtype=np.float64)
        elif "mem_law" in doc:
            pi = MembershipLaw.from_dict(doc["mem_law"]).sample(rng, n)
        elif k == 1:
            pi = np.ones((n, 1))
        else:
            raise InvalidParams("need Pi or mem_law when K > 1")
    except KeyError as exc:
        raise InvalidParams(f"missing field {exc}") from None
    if theta.size != n:
        raise InvalidParams(f"theta has {theta.size} entries, n={n}")
    if p.shape != (k, k):
        raise InvalidParams(f"P has shape {p.shape}, K={k}")
    return DcmmParams(theta, pi, p, meta={"seed": seed})
