"""Closed-form quadratic-transform updates.

Two ratios are decoupled. The energy-efficiency ratio N(W)/D(W) becomes
``2 mu sqrt(N) - mu^2 D``, maximised over ``mu`` at ``sqrt(N)/D``. Each
SINR ratio |a|^2/b becomes ``2 Re{conj(z) a} - |z|^2 b``, maximised over
complex ``z`` at ``a/b``. At those optima both surrogates equal the ratio
they replace.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError
from .metrics import total_power, weighted_rate


@dataclass(frozen=True, eq=False)
class AuxiliaryState:
    mu: float
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex).ravel()
        if not self.mu >= 0 or not np.isfinite(self.mu):
            raise ValueError(f"mu must be finite and nonnegative, got {self.mu}")
        if not np.all(np.isfinite(z)):
            raise ValueError("z must be finite")
        object.__setattr__(self, "z", z)


def numerator(H, W, sigma2, alpha) -> float:
    return weighted_rate(H, W, sigma2, alpha)


def denominator(W, P0) -> float:
    return total_power(W) + P0


def optimal_mu(H, W, sigma2, alpha, P0) -> float:
    """mu* = sqrt(sum_k alpha_k R_k(W)) / (sum_k ||w_k||^2 + P0)."""
    den = denominator(W, P0)
    if not den > 0:
        raise DegenerateInputError("total power plus static power is zero")
    return float(np.sqrt(numerator(H, W, sigma2, alpha)) / den)


def surrogate_v(H, W, mu, sigma2, alpha, P0) -> float:
    return float(2.0 * mu * np.sqrt(numerator(H, W, sigma2, alpha)) - mu**2 * denominator(W, P0))


def _signal_and_ipn(H, W, sigma2):
    A = np.asarray(H) @ np.asarray(W)  # A[k, l] = h_k w_l
    a = np.diag(A).copy()
    ipn = np.sum(np.abs(A) ** 2, axis=1) - np.abs(a) ** 2 + sigma2
    return a, ipn


def optimal_z(H, W, sigma2) -> np.ndarray:
    """z_k* = h_k w_k / (sum_{l != k} |h_k w_l|^2 + sigma2), complex.

    The complex numerator (not its magnitude) is what makes the surrogate
    tight when h_k w_k has a nonzero phase.
    """
    a, ipn = _signal_and_ipn(H, W, sigma2)
    return a / ipn


def quadratic_sinr(z_k, H, W, sigma2, k: int) -> float:
    """2 Re{conj(z_k) h_k w_k} - |z_k|^2 (sigma2 + sum_{l != k} |h_k w_l|^2)."""
    hk = np.asarray(H)[k]
    row = hk @ np.asarray(W)
    ipn = np.sum(np.abs(row) ** 2) - np.abs(row[k]) ** 2 + sigma2
    return float(2.0 * np.real(np.conj(z_k) * row[k]) - np.abs(z_k) ** 2 * ipn)


def update_auxiliary(H, W, sigma2, alpha, P0) -> AuxiliaryState:
    """First stage of the alternating loop: both auxiliaries at their optimum for W."""
    return AuxiliaryState(mu=optimal_mu(H, W, sigma2, alpha, P0), z=optimal_z(H, W, sigma2))
