"""Soft-input soft-output MMSE estimation with soft interference cancellation.

Shapes: ``S`` is ``n_p x J`` (dictionary restricted to the detected set),
extrinsics and soft symbols are ``J x nc``, ``Y`` is ``n_p x nc``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpotrf, dpotrs

from .ldpc.bp import LLR_CLIP

__all__ = [
    "GAMMA_MIN",
    "MmseOutput",
    "soft_estimate",
    "variance_diag",
    "soft_cancel",
    "mmse_filter",
    "to_channel_llr",
    "mmse_pass",
    "mmse_pass_naive",
]

GAMMA_MIN = 1e-9


def soft_estimate(extrinsic) -> np.ndarray:
    """Conditional-mean BPSK symbol ``tanh(M / 2)``."""
    return np.tanh(0.5 * np.asarray(extrinsic, dtype=float))


def variance_diag(soft: np.ndarray, j: int, i: int) -> np.ndarray:
    """Diagonal of the residual-variance matrix for target ``(j, i)``."""
    p = 1.0 - soft[:, i] ** 2
    p[j] = 1.0
    return p


def soft_cancel(Y: np.ndarray, S: np.ndarray, soft: np.ndarray, j: int, i: int) -> np.ndarray:
    """Section ``i`` with every other detected sequence's soft estimate removed."""
    others = np.arange(S.shape[1]) != j
    return Y[:, i] - S[:, others] @ soft[others, i]


def mmse_filter(S: np.ndarray, p: np.ndarray, sigma2: float, y_eff: np.ndarray, j: int):
    """Linear MMSE estimate of symbol ``j`` and its mean-squared error.

    Returns ``(T, gamma2)`` with ``T = s_j^T C^-1 y_eff`` and
    ``gamma2 = 1 - s_j^T C^-1 s_j``, ``C = S diag(p) S^T + sigma2 I``.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive for a positive-definite system, got {sigma2}")
    C = (S * p) @ S.T + sigma2 * np.eye(S.shape[0])
    fac = cho_factor(C, lower=True)
    s = S[:, j]
    sol = cho_solve(fac, np.column_stack([y_eff, s]))
    return float(s @ sol[:, 0]), float(1.0 - s @ sol[:, 1])


def to_channel_llr(T, gamma2, gamma_min: float = GAMMA_MIN, clip: float = LLR_CLIP) -> np.ndarray:
    """Equivalent-AWGN LLR ``2 T / gamma2`` with clamped MSE and clipped output."""
    g = np.clip(gamma2, gamma_min, 1.0 - gamma_min)
    return np.clip(2.0 * np.asarray(T) / g, -clip, clip)


@dataclass
class MmseOutput:
    T: np.ndarray       # filter outputs, J x nc
    gamma2: np.ndarray  # mean-squared errors (unclamped), J x nc
    llr: np.ndarray     # channel messages to the decoder, J x nc

    @property
    def _g(self):
        return np.clip(self.gamma2, GAMMA_MIN, 1.0 - GAMMA_MIN)

    @property
    def sigma2_eq(self) -> np.ndarray:
        g = self._g
        return g / (1.0 - g)

    @property
    def y_eq(self) -> np.ndarray:
        return self.T / (1.0 - self._g)


def mmse_pass(Y: np.ndarray, S: np.ndarray, extrinsic: np.ndarray, sigma2: float,
              gamma_min: float = GAMMA_MIN, clip: float = LLR_CLIP) -> MmseOutput:
    """MMSE outputs for every detected sequence and symbol.

    One Cholesky factorisation of ``C_i = S diag(1 - V^2) S^T + sigma2 I``
    per symbol serves all sequences; each sequence's own variance entry is
    restored to one with a Sherman-Morrison correction.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive for a positive-definite system, got {sigma2}")
    S = np.ascontiguousarray(S, dtype=float)
    n_p, J = S.shape
    nc = Y.shape[1]
    V = soft_estimate(extrinsic).reshape(J, nc)
    V2 = V**2
    P = 1.0 - V2
    R = Y - S @ V  # full soft residual per section
    rhs = np.empty((n_p, J + 1))
    alpha = np.empty((J, nc))
    beta = np.empty((J, nc))
    rhs[:, :J] = S
    eye = sigma2 * np.eye(n_p)
    for i in range(nc):
        C = (S * P[:, i]) @ S.T + eye
        L, info = dpotrf(C, lower=1, clean=0, overwrite_a=1)
        if info != 0:
            raise np.linalg.LinAlgError(f"covariance of section {i} is not positive definite")
        rhs[:, J] = R[:, i]
        X, info = dpotrs(L, rhs, lower=1)
        Q = X[:, :J]
        alpha[:, i] = np.einsum("pj,pj->j", S, Q)
        beta[:, i] = S.T @ X[:, J]
    # own-symbol term: Y^j = r + s_j V_j, and C^j = C + V_j^2 s_j s_j^T
    denom = 1.0 + V2 * alpha
    T = (beta + alpha * V) / denom
    gamma2 = (1.0 - P * alpha) / denom
    return MmseOutput(T, gamma2, to_channel_llr(T, gamma2, gamma_min, clip))


def mmse_pass_naive(Y: np.ndarray, S: np.ndarray, extrinsic: np.ndarray, sigma2: float) -> MmseOutput:
    """Reference path: one soft cancellation and one solve per ``(j, i)`` pair."""
    J = S.shape[1]
    nc = Y.shape[1]
    V = soft_estimate(extrinsic).reshape(J, nc)
    T = np.empty((J, nc))
    gamma2 = np.empty((J, nc))
    for j in range(J):
        for i in range(nc):
            p = variance_diag(V, j, i)
            y_eff = soft_cancel(Y, S, V, j, i)
            T[j, i], gamma2[j, i] = mmse_filter(S, p, sigma2, y_eff, j)
    return MmseOutput(T, gamma2, to_channel_llr(T, gamma2))
