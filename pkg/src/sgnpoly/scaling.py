"""Diagonal matrix scaling and least-favorable (null, alternative) pairs.

``sinkhorn_dad`` finds positive ``d`` with ``diag(d) A diag(d) h = 1``.  The
pairs built by :func:`least_favorable` share expected degrees between the
null and the alternative, so their separation is governed by
``||theta|| * |mu_2(P)|`` alone.  :func:`chi_square_mc` estimates the
chi-square distance between the two edge distributions by Monte Carlo over
memberships.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConditionViolated,
    Infeasible,
    InvalidParams,
    NonConvergence,
    NumericalOverflow,
    TooLarge,
)
from .kernels import chi2_log_products
from .model import DcmmParams, MembershipLaw, mu2

# ---------------------------------------------------------------------------
# DAD scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingResult:
    d: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def to_json(self) -> dict:
        return {
            "d": self.d.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _check_scaling_input(a, h):
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    h = np.asarray(h, dtype=np.float64).ravel()
    k = a.shape[0]
    if a.shape != (k, k) or h.shape != (k,):
        raise InvalidParams(f"need a (K, K) matrix and a K-vector, got {a.shape} and {h.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(h))):
        raise InvalidParams("non-finite input")
    if np.any(np.diag(a) <= 0):
        raise InvalidParams("diagonal of A must be strictly positive")
    if np.any(a < 0):
        raise InvalidParams("off-diagonal entries of A must be nonnegative")
    if np.any(h <= 0):
        raise InvalidParams("h must be strictly positive")
    return a, h


def scaling_residual(a, d, h) -> float:
    """``||diag(d) A diag(d) h - 1||_inf``."""
    return float(np.max(np.abs(d * (a @ (d * h)) - 1.0)))


def sinkhorn_dad(
    a,
    h,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    init=None,
) -> ScalingResult:
    """Solve ``D A D h = 1_K`` for positive diagonal ``D``.

    Runs the fixed point ``d <- 1 / (A (d * h))``; once the residual stops
    decreasing it switches for good to the half step ``d <- sqrt(d * raw)``
    (damping 0.5 in log space), which removes the period-two oscillation of
    the raw map along the overall scale.
    """
    a, h = _check_scaling_input(a, h)
    if init is None:
        d = np.full(h.shape, 1.0 / math.sqrt(float(h @ a @ h)))
    else:
        d = np.asarray(init, dtype=np.float64).copy()
        if d.shape != h.shape or np.any(d <= 0):
            raise InvalidParams("init must be a positive K-vector")
    damped = False
    prev = math.inf
    for it in range(max_iter + 1):
        ad = a @ (d * h)
        r = d * ad
        res = float(np.max(np.abs(r - 1.0)))
        if res <= tol:
            return ScalingResult(d, res, it, True)
        if it == max_iter:
            break
        if res >= prev:
            damped = True
        prev = res
        d = d / np.sqrt(r) if damped else 1.0 / ad
    raise NonConvergence(f"no DAD scaling after {max_iter} iterations (residual {res:.3e})")


def sinkhorn_multistart(a, h, starts: int = 10, seed: int = 0, tol: float = 1e-12):
    """Solve from ``starts`` random positive initial points.

    Returns ``(results, spread)`` with ``spread`` the largest coordinate gap
    between any solution and the first one.
    """
    a, h = _check_scaling_input(a, h)
    rng = np.random.default_rng(seed)
    results = [
        sinkhorn_dad(a, h, tol=tol, init=np.exp(rng.normal(0.0, 1.0, h.size)))
        for _ in range(starts)
    ]
    ref = results[0].d
    spread = max(float(np.max(np.abs(r.d - ref))) for r in results)
    return results, spread


# ---------------------------------------------------------------------------
# least-favorable pairs
# ---------------------------------------------------------------------------

CONSTRUCTIONS = ("dcbm", "dcmm", "flexible-pi", "matched-theta")


@dataclass(frozen=True)
class LeastFavorablePair:
    null_params: DcmmParams
    alt_params: DcmmParams
    construction: str
    separation: float
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .model import params_to_json

        info = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.info.items()}
        return {
            "construction": self.construction,
            "separation": self.separation,
            "null": params_to_json(self.null_params),
            "alt": params_to_json(self.alt_params),
            **info,
        }


def _resolve_memberships(theta, memberships, seed):
    if isinstance(memberships, MembershipLaw):
        pi = memberships.sample(np.random.default_rng(seed), theta.size)
        return pi, memberships.mean()
    pi = np.asarray(memberships, dtype=np.float64)
    return pi, pi.mean(axis=0)


def _normalized_inverse_rows(pi, d):
    # rows D^{-1} pi_i / ||D^{-1} pi_i||_1 and the norms themselves
    scaled = pi / d
    norms = scaled.sum(axis=1)
    return scaled / norms[:, None], norms


def dcmm_scaling(p, pi, tol: float = 1e-11, max_outer: int = 1000) -> tuple[np.ndarray, np.ndarray, int]:
    """Outer fixed point for ``D P D h_D = 1`` with ``h_D`` the mean of
    ``D^{-1} pi_i / ||D^{-1} pi_i||_1`` over the given rows.

    Returns ``(d, h_D, outer_iterations)``.
    """
    p = np.asarray(p, dtype=np.float64)
    d = sinkhorn_dad(p, pi.mean(axis=0)).d
    for it in range(1, max_outer + 1):
        rows, _ = _normalized_inverse_rows(pi, d)
        h_d = rows.mean(axis=0)
        if np.any(h_d <= 0):
            raise ConditionViolated("h_D has a zero coordinate")
        new = sinkhorn_dad(p, h_d, init=d).d
        if np.max(np.abs(new - d)) <= tol * np.max(new):
            rows, _ = _normalized_inverse_rows(pi, new)
            return new, rows.mean(axis=0), it
        d = new
    raise NonConvergence(f"outer D / h_D iteration did not settle in {max_outer} steps")


def least_favorable(
    theta,
    p,
    memberships,
    construction: str,
    seed: int = 0,
    tol: float = 1e-10,
) -> LeastFavorablePair:
    """Build the (null, alternative) pair for one of :data:`CONSTRUCTIONS`.

    ``memberships`` is an (n, K) matrix or a :class:`MembershipLaw`; a law is
    sampled with ``seed`` and supplies ``h`` through its closed-form mean,
    otherwise ``h`` is the column mean of the rows.
    """
    theta = np.asarray(theta, dtype=np.float64).ravel()
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    pi, h = _resolve_memberships(theta, memberships, seed)
    if pi.shape != (theta.size, p.shape[0]):
        raise InvalidParams(f"memberships have shape {pi.shape}, expected {(theta.size, p.shape[0])}")
    sep = float(np.linalg.norm(theta)) * abs(mu2(p))
    null = DcmmParams.null(theta)
    if construction == "dcbm":
        if not np.all(np.isin(pi, (0.0, 1.0))):
            raise ConditionViolated("dcbm construction needs pure memberships")
        d = sinkhorn_dad(p, h).d
        alt = DcmmParams(theta * (pi @ d), pi, p)
        info = {"d": d, "h": h, "residual": scaling_residual(p, d, h)}
    elif construction == "dcmm":
        d, h_d, outer = dcmm_scaling(p, pi)
        _, norms = _normalized_inverse_rows(pi, d)
        alt = DcmmParams(theta / norms, pi, p)
        info = {"d": d, "h": h_d, "residual": scaling_residual(p, d, h_d), "outer_iterations": outer}
    elif construction == "flexible-pi":
        d = sinkhorn_dad(p, h).d
        dpi = pi * d
        norms = dpi.sum(axis=1)
        alt = DcmmParams(theta * norms, dpi / norms[:, None], p)
        info = {"d": d, "h": h, "residual": scaling_residual(p, d, h)}
    elif construction == "matched-theta":
        ph = p @ h
        q = float(ph.mean())
        if np.max(np.abs(ph - q)) > tol * max(1.0, q):
            raise ConditionViolated(f"P h is not proportional to 1 (spread {np.ptp(ph):.3e})")
        null = DcmmParams.null(theta * math.sqrt(q))
        alt = DcmmParams(theta, pi, p)
        info = {"q": q, "h": h}
    else:
        raise InvalidParams(f"unknown construction {construction!r}; choose from {CONSTRUCTIONS}")
    return LeastFavorablePair(null, alt, construction, sep, info)


# ---------------------------------------------------------------------------
# P with P alpha proportional to 1
# ---------------------------------------------------------------------------


def _polygon_rows(alpha: np.ndarray) -> np.ndarray:
    """Unit rows ``m_k`` in the plane with ``sum_k alpha_k m_k = 0``.

    The vectors ``alpha_k m_k`` are the edges of a polygon inscribed in a
    circle; the radius is found by bracketing.  On the boundary (largest
    ``alpha`` equal to the sum of the rest) the polygon is flat.
    """
    k = alpha.size
    big = int(np.argmax(alpha))
    others = np.delete(np.arange(k), big)
    amax, rest = alpha[big], alpha[others]
    out = np.zeros((k, 2))
    if 2.0 * amax >= alpha.sum() * (1.0 - 1e-12):
        out[big, 0] = -1.0
        out[others, 0] = 1.0
        return out

    def swept(r):
        return 2.0 * np.arcsin(np.minimum(1.0, rest / (2.0 * r)))

    r0 = amax / 2.0
    hi = r0 * 2.0
    if swept(r0).sum() + np.pi >= 2.0 * np.pi:
        # circle centre inside the polygon: all arcs add up to a full turn
        def gap(r):
            return swept(r).sum() + 2.0 * np.arcsin(min(1.0, amax / (2.0 * r))) - 2.0 * np.pi
    else:
        # centre outside: the long edge subtends the other arcs combined
        def gap(r):
            return swept(r).sum() - 2.0 * np.arcsin(min(1.0, amax / (2.0 * r)))
    while gap(hi) * gap(r0) > 0:
        hi *= 2.0
    radius = brentq(gap, r0, hi, xtol=1e-15 * hi, rtol=1e-15)
    angles = np.concatenate([[0.0], np.cumsum(swept(radius))])
    verts = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    edges = np.diff(verts, axis=0)
    out[others] = edges / rest[:, None]
    out[big] = (verts[0] - verts[-1]) / amax
    return out


def _project_rows(m, unit, tol, max_iter):
    res = math.inf
    for _ in range(max_iter):
        m = m - np.outer(unit, unit @ m)
        norms = np.linalg.norm(m, axis=1)
        res = float(np.max(np.abs(norms - 1.0)))
        if res <= tol or np.any(norms == 0):
            break
        m = m / norms[:, None]
    return m, res


def dirichlet_p_construct(
    alpha, q: float, tol: float = 1e-10, max_iter: int = 20_000, seed: int = 0
) -> np.ndarray:
    """``P = (1 - q) M M' + q 1 1'`` with ``M' alpha = 0`` and unit rows of M.

    M (K x (K-1)) is found by alternating projection between the unit-row
    set and the column space orthogonal to ``alpha``, from a random start.
    Such M exists iff no ``alpha_k`` exceeds the sum of the others.  Near that
    boundary the projections crawl, so a stalled run is restarted from an
    exact planar (closed polygon) solution and polished the same way.
    """
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    k = alpha.size
    if k < 2 or np.any(alpha <= 0):
        raise InvalidParams("alpha must be a positive vector with K >= 2")
    if not 0.0 < q < 1.0:
        raise InvalidParams("q must lie in (0, 1)")
    if 2.0 * alpha.max() > alpha.sum() * (1.0 + 1e-12):
        raise Infeasible(
            f"largest alpha ({alpha.max():g}) exceeds the sum of the others; no unit-row M exists"
        )
    unit = alpha / np.linalg.norm(alpha)
    rng = np.random.default_rng(seed)
    m, res = _project_rows(rng.normal(size=(k, k - 1)), unit, tol, max_iter)
    if res > tol:
        start = np.zeros((k, k - 1))
        planar = _polygon_rows(alpha)
        start[:, : min(2, k - 1)] = planar[:, : min(2, k - 1)]
        m, res = _project_rows(start, unit, tol, 100)
        if res > tol:
            raise Infeasible(f"could not reach unit rows (error {res:.3e})")
    mm = m @ m.T
    mm = 0.5 * (mm + mm.T)
    out = (1.0 - q) * mm + q
    np.fill_diagonal(out, 1.0)
    if out.min() < 0:
        raise Infeasible(f"constructed P has a negative entry ({out.min():.3g})")
    return out


# ---------------------------------------------------------------------------
# chi-square distance by Monte Carlo
# ---------------------------------------------------------------------------

CHI2_MAX_N = 500
_CHUNK = 512


@dataclass(frozen=True)
class ChiSquareEstimate:
    estimate: float
    std_error: float
    reps: int

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error, "reps": self.reps}


def _alt_transform(construction, p, mem_law, seed):
    """Map a membership draw to alternative node vectors (before theta)."""
    h = mem_law.mean()
    if construction == "matched-theta":
        ph = p @ h
        q = float(ph.mean())
        if np.max(np.abs(ph - q)) > 1e-10 * max(1.0, q):
            raise ConditionViolated("P h is not proportional to 1")
        return (lambda pi: pi), math.sqrt(q)
    if construction in ("dcbm", "flexible-pi"):
        # both reduce to x_i = theta_i * D pi_i against a theta theta' null
        d = sinkhorn_dad(p, h).d
        return (lambda pi: pi * d), 1.0
    if construction == "dcmm":
        big = mem_law.sample(np.random.default_rng([seed, 0xD]), 20_000)
        d, _, _ = dcmm_scaling(p, big)
        return (lambda pi: pi / (pi / d).sum(axis=1)[:, None]), 1.0
    raise InvalidParams(f"unknown construction {construction!r}")


def chi_square_mc(
    theta,
    p,
    mem_law: MembershipLaw,
    reps: int,
    seed: int,
    construction: str = "matched-theta",
) -> ChiSquareEstimate:
    """Monte-Carlo chi-square distance between a null and its least-favorable
    alternative, ``E[prod_{i<j} (1 + D_ij D~_ij / (p_ij (1 - p_ij)))] - 1``
    over two independent membership draws.

    Rep ``r`` uses the ``r``-th child of ``SeedSequence(seed)``, so a short run
    is a prefix of a longer one.
    """
    theta = np.asarray(theta, dtype=np.float64).ravel()
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    n = theta.size
    if n > CHI2_MAX_N:
        raise TooLarge(f"chi-square Monte Carlo limited to n <= {CHI2_MAX_N}")
    if reps < 1:
        raise InvalidParams("reps must be >= 1")
    transform, null_scale = _alt_transform(construction, p, mem_law, seed)
    t = theta * null_scale
    pmat = np.outer(t, t)[np.triu_indices(n, 1)]
    if pmat.size and (pmat.min() <= 0 or pmat.max() >= 1):
        raise InvalidParams("null probabilities must lie in (0, 1)")
    children = np.random.SeedSequence(seed).spawn(reps)
    logs = np.empty(reps)
    for start in range(0, reps, _CHUNK):
        block = children[start : start + _CHUNK]
        xs = np.empty((len(block), n, p.shape[0]))
        xts = np.empty_like(xs)
        for r, child in enumerate(block):
            rng = np.random.default_rng(child)
            xs[r] = theta[:, None] * transform(mem_law.sample(rng, n))
            xts[r] = theta[:, None] * transform(mem_law.sample(rng, n))
        lp, worst = chi2_log_products(xs, xts, p, t)
        if np.any(worst >= 1.0):
            raise NumericalOverflow(f"a factor ratio reached {worst.max():.3g}; log product undefined")
        logs[start : start + len(block)] = lp
    if logs.max() > 700.0:
        raise NumericalOverflow(f"log product {logs.max():.1f} overflows float64")
    vals = np.expm1(logs)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return ChiSquareEstimate(est, se, reps)
