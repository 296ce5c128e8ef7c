"""Zero-forcing reference precoder."""
from __future__ import annotations

import clarabel
import numpy as np
import scipy.sparse as sp

from .exceptions import InvalidScenarioError, ScenarioInfeasibleError


def zf_directions(H, rcond: float = 1e-10) -> np.ndarray:
    """Unit-norm columns of the right pseudo-inverse of H (M x K)."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    K, M = H.shape
    if M < K:
        raise InvalidScenarioError(f"zero-forcing needs M >= K, got K={K}, M={M}")
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] <= rcond * s[0]:
        raise InvalidScenarioError("channel is rank deficient; zero-forcing undefined")
    V = H.conj().T @ np.linalg.inv(H @ H.conj().T)
    return V / np.linalg.norm(V, axis=0, keepdims=True)


def zero_forcing_precoder(H, P_T: float, thresholds=None, sigma2: float = 1.0) -> np.ndarray:
    """Zero-forcing with equal per-user power ``P_T / K``.

    Raises ScenarioInfeasibleError when some user misses its SINR
    threshold at that power (equal-power ZF cannot meet the QoS).
    """
    U = zf_directions(H)
    H = np.asarray(H)
    K = U.shape[1]
    W = U * np.sqrt(P_T / K)
    if thresholds is not None:
        # interference is nulled, so SINR_k = p |h_k u_k|^2 / sigma2
        g = np.abs(np.einsum("km,mk->k", H, U)) ** 2
        need = np.asarray(thresholds, float) * sigma2 / g
        if np.any(need > P_T / K * (1 + 1e-12)):
            raise ScenarioInfeasibleError(
                f"equal-power zero-forcing misses QoS for users {np.flatnonzero(need > P_T / K).tolist()}")
    return W


def min_power_qos_precoder(H, sigma2: float, thresholds, margin: float = 1e-6,
                           tol: float = 1e-9) -> np.ndarray | None:
    """Least-power precoder meeting every SINR threshold, or None if none exists.

    Classic second-order-cone form: rotating each w_k so that h_k w_k is
    real, ``SINR_k >= g_k`` is ``sqrt(1 + 1/g_k) Re(h_k w_k) >= ||(h_k W, sigma)||``.
    Thresholds are inflated by ``margin`` so the result clears them strictly.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    K, M = H.shape
    g = np.asarray(thresholds, float) * (1 + margin)
    nw = M * K
    n = 2 * nw + 1  # [Re W, Im W, p], column-major W
    rows, cols, vals, b, cones = [], [], [], [], []

    def put(i, j, v):
        if v != 0:
            rows.append(i)
            cols.append(j)
            vals.append(v)

    def wr(m, k):
        return m + M * k

    def wi(m, k):
        return nw + m + M * k

    # Im(h_k w_k) = 0
    for k in range(K):
        i = len(b)
        for m in range(M):
            put(i, wr(m, k), H[k, m].imag)
            put(i, wi(m, k), H[k, m].real)
        b.append(0.0)
    cones.append(clarabel.ZeroConeT(K))
    for k in range(K):
        if g[k] <= 0:
            continue
        i0 = len(b)
        scale = np.sqrt(1 + 1 / g[k])
        for m in range(M):
            put(i0, wr(m, k), -scale * H[k, m].real)
            put(i0, wi(m, k), scale * H[k, m].imag)
        b.append(0.0)
        for l in range(K):
            i = len(b)
            for m in range(M):
                put(i, wr(m, l), -H[k, m].real)
                put(i, wi(m, l), H[k, m].imag)
            b.append(0.0)
            i = len(b)
            for m in range(M):
                put(i, wr(m, l), -H[k, m].imag)
                put(i, wi(m, l), -H[k, m].real)
            b.append(0.0)
        b.append(np.sqrt(sigma2))
        cones.append(clarabel.SecondOrderConeT(len(b) - i0))
    # ||W||^2 <= p
    i0 = len(b)
    put(i0, n - 1, -1.0)
    b.append(1.0)
    put(i0 + 1, n - 1, -1.0)
    b.append(-1.0)
    for j in range(2 * nw):
        put(len(b), j, -2.0)
        b.append(0.0)
    cones.append(clarabel.SecondOrderConeT(len(b) - i0))

    A = sp.csc_matrix((vals, (rows, cols)), shape=(len(b), n))
    c = np.zeros(n)
    c[-1] = 1.0
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.tol_feas = st.tol_gap_abs = st.tol_gap_rel = tol
    sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), c, A, np.array(b), cones, st).solve()
    if str(sol.status) not in ("Solved", "AlmostSolved"):
        return None
    x = np.asarray(sol.x)
    return x[:nw].reshape(K, M).T + 1j * x[nw:2 * nw].reshape(K, M).T
