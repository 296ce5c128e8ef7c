"""SINR, rate, power and energy-efficiency evaluation.

User indices are 0-based. Rates are in nats; ``to_bps`` converts with the
channel bandwidth. Every function takes the channel ``H`` (K x M) and the
precoder ``W`` (M x K, column k serves user k) as plain complex arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError

POWER_RTOL = 1e-9
SINR_ATOL = 1e-9


def _gram(H, W):
    # G[k, l] = |h_k w_l|^2
    return np.abs(np.asarray(H) @ np.asarray(W)) ** 2


def sinr_all(H, W, sigma2: float) -> np.ndarray:
    G = _gram(H, W)
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    return signal / (interference + sigma2)


def sinr(H, W, sigma2: float, k: int) -> float:
    """SINR of user ``k``: |h_k w_k|^2 / (sum_{l != k} |h_k w_l|^2 + sigma2)."""
    hk = np.asarray(H)[k]
    a = np.abs(hk @ np.asarray(W)) ** 2
    return float(a[k] / (a.sum() - a[k] + sigma2))


def rates(H, W, sigma2: float) -> np.ndarray:
    return np.log1p(sinr_all(H, W, sigma2))


def rate(H, W, sigma2: float, k: int) -> float:
    """Achievable rate of user ``k`` in nats per channel use."""
    return float(np.log1p(sinr(H, W, sigma2, k)))


def to_bps(nats, bandwidth_Hz: float):
    return bandwidth_Hz * np.asarray(nats) / np.log(2.0)


def total_power(W) -> float:
    """Sum of squared column norms (Frobenius norm squared)."""
    W = np.asarray(W)
    return float(np.sum(W.real**2 + W.imag**2))


def weighted_rate(H, W, sigma2: float, alpha) -> float:
    return float(np.dot(np.asarray(alpha, float), rates(H, W, sigma2)))


def energy_efficiency(H, W, sigma2: float, alpha, P0: float) -> float:
    """Weighted sum rate over consumed power, nats/W.

    Raises DegenerateInputError when the denominator vanishes.
    """
    denom = total_power(W) + P0
    if not denom > 0:
        raise DegenerateInputError("total power plus static power is zero")
    return weighted_rate(H, W, sigma2, alpha) / denom


@dataclass
class FeasibilityReport:
    feasible: bool
    power_ok: bool
    power_slack: float  # P_T - total power
    sinr_slack: np.ndarray  # Gamma_k - Gamma_bar_k
    violated_users: list

    @property
    def min_qos_slack(self) -> float:
        return float(np.min(self.sinr_slack))

    def __bool__(self):
        return self.feasible


def check_feasible(H, W, sigma2: float, P_T: float, thresholds,
                   power_rtol: float = POWER_RTOL, sinr_atol: float = SINR_ATOL) -> FeasibilityReport:
    p = total_power(W)
    slack = sinr_all(H, W, sigma2) - np.asarray(thresholds, float)
    power_ok = p <= P_T * (1.0 + power_rtol)
    bad = [int(k) for k in np.flatnonzero(slack < -sinr_atol)]
    return FeasibilityReport(feasible=bool(power_ok and not bad), power_ok=bool(power_ok),
                             power_slack=P_T - p, sinr_slack=slack, violated_users=bad)


@dataclass
class EEReport:
    per_user_sinr: np.ndarray
    per_user_rate: np.ndarray  # nats
    per_user_rate_bps: np.ndarray
    total_power_W: float
    static_power_W: float
    weights: np.ndarray
    ee_value: float  # nats/W
    ee_gbps_per_W: float
    qos_satisfied: np.ndarray

    CSV_FIELDS = ("ee_nats_per_W", "ee_gbps_per_W", "total_power_W", "sum_rate_nats",
                  "min_sinr", "qos_all")

    def csv_row(self) -> dict:
        return {
            "ee_nats_per_W": self.ee_value,
            "ee_gbps_per_W": self.ee_gbps_per_W,
            "total_power_W": self.total_power_W,
            "sum_rate_nats": float(self.per_user_rate.sum()),
            "min_sinr": float(self.per_user_sinr.min()),
            "qos_all": bool(self.qos_satisfied.all()),
        }


def gbps_per_watt(ee_nats_per_W: float, bandwidth_Hz: float) -> float:
    return bandwidth_Hz / np.log(2.0) * ee_nats_per_W * 1e-9


def evaluate(H, W, sigma2: float, alpha, P0: float, thresholds, bandwidth_Hz: float) -> EEReport:
    g = sinr_all(H, W, sigma2)
    r = np.log1p(g)
    p = total_power(W)
    alpha = np.asarray(alpha, float)
    if not p + P0 > 0:
        raise DegenerateInputError("total power plus static power is zero")
    ee = float(alpha @ r) / (p + P0)
    return EEReport(per_user_sinr=g, per_user_rate=r, per_user_rate_bps=to_bps(r, bandwidth_Hz),
                    total_power_W=p, static_power_W=P0, weights=alpha, ee_value=ee,
                    ee_gbps_per_W=gbps_per_watt(ee, bandwidth_Hz),
                    qos_satisfied=g >= np.asarray(thresholds, float) - SINR_ATOL)


def empirical_sinr(H, W, sigma2: float, k: int, num_samples: int, seed) -> float:
    """Monte Carlo SINR of user ``k`` from simulated received samples.

    Draws s ~ CN(0, I_K) and n_k ~ CN(0, sigma2), forms
    y_k = h_k W s + n_k, and returns the sample power of the desired term
    over the sample power of the remainder.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    H = np.asarray(H)
    W = np.asarray(W)
    K = W.shape[1]
    rng = np.random.default_rng(seed)
    s = (rng.standard_normal((K, num_samples)) + 1j * rng.standard_normal((K, num_samples))) / np.sqrt(2)
    n = np.sqrt(sigma2 / 2) * (rng.standard_normal(num_samples) + 1j * rng.standard_normal(num_samples))
    gains = H[k] @ W
    y = gains @ s + n
    desired = gains[k] * s[k]
    rest = y - desired
    return float(np.mean(np.abs(desired) ** 2) / np.mean(np.abs(rest) ** 2))
