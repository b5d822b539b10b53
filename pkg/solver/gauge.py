"""
Gauge fixing of a fitted factorization D = S E.

Any invertible Lambda gives the same predictions, D = (S Lambda)(Lambda^-1 E).
The canonical choice starts from a QR -> SVD factorization of D and picks the
Lambda that brings the state factor closest (least squares) to the Bloch
vectors of the generating qutrit states.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import qr

from solver.errors import ArgumentError, NumericalError
from solver.lowrank import GptModel

_log = logging.getLogger(__name__)

MAX_CONDITION = 1e12
RIDGE_SCALE = 1e-10


@dataclass
class GaugeResult:
    Lambda: NDArray[np.float64]
    S_realized: NDArray[np.float64]
    E_realized: NDArray[np.float64]
    chi2_alignment: float
    condition_number: float
    ridge: float = 0.0

    def probabilities(self) -> NDArray[np.float64]:
        return self.S_realized @ self.E_realized


def initial_decomposition(D: NDArray, k: int) -> Tuple[NDArray, NDArray]:
    """S' = U sqrt(Sigma), E' = sqrt(Sigma) V^T from QR = U Sigma V^T, truncated to rank k."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2:
        raise ArgumentError(f"D must be a matrix, got shape {D.shape}")
    if k < 1 or k > min(D.shape):
        raise ArgumentError(f"rank {k} out of range for a {D.shape[0]}x{D.shape[1]} matrix")

    Q, R = qr(D, mode="economic")
    Ur, s, Vt = np.linalg.svd(R)
    tol = s[0] * max(D.shape) * np.finfo(float).eps if s.size else 0.0
    rank = int((s > tol).sum())
    if rank < k:
        raise NumericalError(f"D has numerical rank {rank}, cannot factor at rank {k}")

    root = np.sqrt(s[:k])
    U = Q @ Ur
    return U[:, :k] * root, root[:, None] * Vt[:k]


def fit_gauge(
    S_prime: NDArray,
    S_qutrit: NDArray,
    E_prime: Optional[NDArray] = None,
    ridge: float = 0.0,
) -> GaugeResult:
    """
    Lambda = argmin ||S_qutrit - S' Lambda||_F, solved column by column through
    the normal equations (with ridge * I added to the Gram matrix if ridge > 0).
    All k components are aligned, including the leading normalization one.
    """
    S_prime = np.asarray(S_prime, dtype=float)
    S_qutrit = np.asarray(S_qutrit, dtype=float)
    if S_prime.ndim != 2 or S_prime.shape != S_qutrit.shape:
        raise ArgumentError(f"S' is {S_prime.shape} but the reference is {S_qutrit.shape}")
    k = S_prime.shape[1]
    if E_prime is not None:
        E_prime = np.asarray(E_prime, dtype=float)
        if E_prime.shape[0] != k:
            raise ArgumentError(f"E' has {E_prime.shape[0]} rows, expected {k}")

    if ridge > 0.0:
        G = S_prime.T @ S_prime + ridge * np.eye(k)
        Lam = np.linalg.solve(G, S_prime.T @ S_qutrit)
    else:
        Lam = np.linalg.pinv(S_prime) @ S_qutrit

    cond = float(np.linalg.cond(Lam))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(
            f"gauge matrix is singular (condition number {cond:.3g}); "
            "retry with a ridge term added to the Gram matrix"
        )

    S_real = S_prime @ Lam
    if E_prime is None:
        E_real = np.zeros((k, 0))
    else:
        E_real = np.linalg.solve(Lam, E_prime)
    chi2 = float(np.sum((S_qutrit - S_real) ** 2))
    _log.info("gauge fitted: chi2_alignment=%.6g cond=%.3g", chi2, cond)
    return GaugeResult(Lam, S_real, E_real, chi2, cond, ridge)


def gauge_fix(model: GptModel, S_qutrit: NDArray, ridge: Optional[float] = None) -> GaugeResult:
    """
    Canonical realized factors of a fitted model. With ridge=None a singular
    gauge is retried once with ridge = 1e-10 trace(S'^T S').
    """
    S_prime, E_prime = initial_decomposition(model.probabilities(), model.rank)
    if ridge is not None:
        return fit_gauge(S_prime, S_qutrit, E_prime, ridge=ridge)
    try:
        return fit_gauge(S_prime, S_qutrit, E_prime)
    except NumericalError:
        lam = RIDGE_SCALE * float(np.trace(S_prime.T @ S_prime))
        _log.warning("gauge matrix singular, retrying with ridge %.3g", lam)
        return fit_gauge(S_prime, S_qutrit, E_prime, ridge=lam)
