"""Normalised SgnT / SgnQ tests and the standard normal helpers they need."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist

from .errors import DomainError, NonpositiveNuisance
from .graph import AdjacencyMatrix
from .stats import degree_ratio, er_density, sgn_q, sgn_t, signed_cycle

_STD_NORMAL = NormalDist()


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    """Upper tail ``1 - Phi(x)``, accurate for large ``x``."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def normal_quantile(q: float) -> float:
    """``Phi^{-1}(q)`` for ``0 < q < 1`` (Wichura's AS241, ~1e-16 relative)."""
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    return _STD_NORMAL.inv_cdf(q)


@dataclass(frozen=True)
class TestReport:
    test: str
    statistic: float
    nuisance: float
    z: float
    p_value: float
    alpha: float
    reject: bool

    __test__ = False  # keep pytest from collecting this class

    def to_json(self) -> dict:
        return asdict(self)


def estimate_theta_norm_sq(adj: AdjacencyMatrix) -> float:
    """``||eta_hat||^2 - 1``, a consistent estimate of ``||theta||^2`` under the null."""
    return degree_ratio(adj) - 1.0


def _nuisance(adj: AdjacencyMatrix) -> float:
    est = estimate_theta_norm_sq(adj)
    if est <= 0:
        raise NonpositiveNuisance(f"||eta_hat||^2 - 1 = {est:.6g} <= 0; test undefined")
    return est


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def sgnt_z(statistic: float, nuisance: float) -> float:
    return statistic / math.sqrt(6.0 * nuisance**3)


def sgnq_z(statistic: float, nuisance: float) -> float:
    return (statistic - 2.0 * nuisance**2) / math.sqrt(8.0 * nuisance**4)


def two_sided_report(name: str, stat: float, nuisance: float, z: float, alpha: float) -> TestReport:
    p = min(1.0, 2.0 * normal_sf(abs(z)))
    return TestReport(name, stat, nuisance, z, p, alpha, abs(z) >= normal_quantile(1 - alpha / 2))


def sgnt_test(adj: AdjacencyMatrix, alpha: float = 0.05) -> TestReport:
    """Two-sided signed-triangle test."""
    _check_alpha(alpha)
    nu = _nuisance(adj)
    t = sgn_t(adj).value
    return two_sided_report("SgnT", t, nu, sgnt_z(t, nu), alpha)


def sgnq_test(adj: AdjacencyMatrix, alpha: float = 0.05) -> TestReport:
    """One-sided (upper tail) signed-quadrilateral test."""
    _check_alpha(alpha)
    nu = _nuisance(adj)
    q = sgn_q(adj).value
    z = sgnq_z(q, nu)
    return TestReport("SgnQ", q, nu, z, normal_sf(z), alpha, z >= normal_quantile(1 - alpha))


def signed_cycle3_test(adj: AdjacencyMatrix, alpha: float = 0.05) -> TestReport:
    """Two-sided signed triangle centred by the scalar density.

    Normalised by the Erdos-Renyi null variance ``6 n(n-1)(n-2) (a(1-a))^3``;
    ``nuisance`` reports the density estimate ``a``.
    """
    _check_alpha(alpha)
    a = er_density(adj)
    n = adj.n
    var = 6.0 * n * (n - 1) * (n - 2) * (a * (1.0 - a)) ** 3
    if var <= 0:
        raise NonpositiveNuisance("density estimate is 0 or 1; test undefined")
    c3 = signed_cycle(adj, 3)
    return two_sided_report("SignedCycle3", c3, a, c3 / math.sqrt(var), alpha)


TESTS = {
    "sgnt": sgnt_test,
    "sgnq": sgnq_test,
    "signedcycle3": signed_cycle3_test,
}


def run_test(name: str, adj: AdjacencyMatrix, alpha: float = 0.05) -> TestReport:
    try:
        fn = TESTS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown test {name!r}; choose from {sorted(TESTS)}") from None
    return fn(adj, alpha)
