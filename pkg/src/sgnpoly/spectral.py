"""Eigen-diagnostics of the edge-probability matrix Omega."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigenFailure, NullModel, UnsupportedOrder, ZeroMatrix
from .model import DcmmParams


def eta_star(omega) -> np.ndarray:
    """``Omega 1 / sqrt(1' Omega 1)``."""
    omega = np.asarray(omega, dtype=np.float64)
    row = omega.sum(axis=1)
    v0 = math.fsum(row)
    if v0 <= 0:
        raise ZeroMatrix("1' Omega 1 must be positive")
    return row / math.sqrt(v0)


def omega_tilde(omega) -> np.ndarray:
    """``Omega - eta* eta*'``; its row sums vanish."""
    omega = np.asarray(omega, dtype=np.float64)
    eta = eta_star(omega)
    return omega - np.outer(eta, eta)


@dataclass(frozen=True)
class SpectrumInfo:
    eigenvalues: np.ndarray  # (K,), |.| descending
    eigenvectors: np.ndarray  # (n, K), unit columns

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.k > 1 else 0.0

    @property
    def sqrt_lambda1(self) -> float:
        return math.sqrt(self.lambda1)

    @property
    def ratio(self) -> float:
        return abs(self.lambda2) / self.lambda1

    @property
    def snr(self) -> float:
        return abs(self.lambda2) / self.sqrt_lambda1

    @property
    def h(self) -> np.ndarray:
        """``h_k = (1' xi_{k+1}) / (1' xi_1)`` for k = 1..K-1."""
        sums = self.eigenvectors.sum(axis=0)
        return sums[1:] / sums[0]

    @property
    def lambda_rest(self) -> np.ndarray:
        """Diagonal of ``Lambda = diag(lambda_2, ..., lambda_K)``."""
        return self.eigenvalues[1:]

    def to_json(self, vectors: bool = False) -> dict:
        out = {
            "eigenvalues": self.eigenvalues.tolist(),
            "sqrt_lambda1": self.sqrt_lambda1,
            "ratio": self.ratio,
            "snr": self.snr,
            "h": self.h.tolist(),
        }
        if vectors:
            out["eigenvectors"] = self.eigenvectors.tolist()
        return out


def _order(values: np.ndarray) -> np.ndarray:
    # |lambda| descending, then lambda descending, then original index
    idx = np.arange(values.size)
    return np.lexsort((idx, -values, -np.abs(values)))


def _fix_signs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    vecs = vecs.copy()
    if vecs.shape[1] == 0:
        return vecs
    if vecs[:, 0].sum() < 0:
        vecs[:, 0] *= -1
    for k in range(1, vecs.shape[1]):
        col = vecs[:, k]
        nz = np.nonzero(np.abs(col) > tol)[0]
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    return vecs


def _rank(values: np.ndarray, n: int) -> int:
    top = np.max(np.abs(values)) if values.size else 0.0
    tol = max(n, 1) * np.finfo(np.float64).eps * top * 16
    return int(np.count_nonzero(np.abs(values) > tol))


def spectrum(omega, k: int | None = None) -> SpectrumInfo:
    """Leading ``k`` eigenpairs of a symmetric matrix (by magnitude).

    With ``k=None`` the numerical rank is used, which for a DCMM Omega is K.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise EigenFailure(f"need a square matrix, got {omega.shape}")
    try:
        vals, vecs = scipy.linalg.eigh(omega)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from None
    if not np.all(np.isfinite(vals)):
        raise EigenFailure("non-finite eigenvalues")
    order = _order(vals)
    if k is None:
        k = _rank(vals, omega.shape[0])
    if k == 0:
        raise ZeroMatrix("matrix has no nonzero eigenvalues")
    keep = order[:k]
    return SpectrumInfo(vals[keep], _fix_signs(vecs[:, keep]))


def spectrum_from_params(params: DcmmParams) -> SpectrumInfo:
    """Eigenpairs of ``X P X'`` (``X = Theta Pi``) through a thin QR, O(n K^2).

    Equivalent to ``lambda_k = d_k ||theta||^2`` with ``d_k`` the eigenvalues of
    ``G^{1/2} P G^{1/2}`` but also yields eigenvectors.
    """
    x = params.node_vectors()
    q, r = np.linalg.qr(x)
    core = r @ params.p @ r.T
    core = 0.5 * (core + core.T)
    vals, vecs = np.linalg.eigh(core)
    order = _order(vals)
    return SpectrumInfo(vals[order], _fix_signs(q @ vecs[:, order]))


def gram_eigenvalues(params: DcmmParams) -> np.ndarray:
    """``||theta||^2 * eig(G^{1/2} P G^{1/2})``, sorted by magnitude."""
    g = params.gram()
    root = scipy.linalg.sqrtm(g).real
    vals = np.linalg.eigvalsh(root @ params.p @ root) * float(params.theta @ params.theta)
    return vals[_order(vals)]


def tr_power_direct(mat, m: int) -> float:
    """``tr(mat^m)`` for symmetric ``mat`` and m in (3, 4)."""
    if m not in (3, 4):
        raise UnsupportedOrder(f"m must be 3 or 4, got {m}")
    mat = np.asarray(mat, dtype=np.float64)
    sq = mat @ mat
    if m == 3:
        return float(np.einsum("ij,ji->", sq, mat))
    return float(np.einsum("ij,ji->", sq, sq))


def tr_closed_form(spec: SpectrumInfo, m: int) -> float:
    """``tr(Omega_tilde^m)`` as a polynomial in ``Lambda`` and ``h``.

    m = 3: tr L^3 + 3 h'L^3h + 3 (h'Lh)(h'L^2h) + (h'Lh)^3
    m = 4: tr L^4 + (h'Lh)^4 + 2 (h'L^2h)^2 + 4 (h'Lh)^2 (h'L^2h)
           + 4 h'L^4h + 4 (h'Lh)(h'L^3h)
    """
    if spec.k < 2:
        raise NullModel("closed form needs K >= 2")
    lam, h = spec.lambda_rest, spec.h
    hh = h * h

    def quad(p):
        return float(np.sum(hh * lam**p))

    q1, q2, q3, q4 = quad(1), quad(2), quad(3), quad(4)
    if m == 3:
        return float(np.sum(lam**3)) + 3 * q3 + 3 * q1 * q2 + q1**3
    if m == 4:
        return float(np.sum(lam**4)) + q1**4 + 2 * q2**2 + 4 * q1**2 * q2 + 4 * q4 + 4 * q1 * q3
    raise UnsupportedOrder(f"m must be 3 or 4, got {m}")


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    snr: float
    region: str

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "snr": self.snr, "region": self.region}


def classify_snr(snr: float, lo: float = 1 / 3, hi: float = 3.0) -> str:
    if snr > hi:
        return "possibility"
    if snr < lo:
        return "impossibility"
    return "boundary"


def phase_classify(omega, lo: float = 1 / 3, hi: float = 3.0, k: int | None = None) -> PhasePoint:
    """Locate Omega on the (sqrt(lambda1), |lambda2|/lambda1) phase diagram."""
    spec = spectrum(omega, k)
    return PhasePoint(spec.sqrt_lambda1, spec.ratio, spec.snr, classify_snr(spec.snr, lo, hi))


def two_level_eigenvalues(k: int, b: float, theta_norm: float) -> tuple[float, float]:
    """Exact ``(lambda_1, lambda_2)`` for balanced hard memberships with theta
    constant within communities: ``(1+(K-1)b)/K * ||theta||^2`` and
    ``(1-b)/K * ||theta||^2``."""
    t2 = theta_norm**2
    return (1 + (k - 1) * b) / k * t2, (1 - b) / k * t2
