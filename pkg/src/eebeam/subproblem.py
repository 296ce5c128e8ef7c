"""The convex precoder subproblem solved with (mu, z) frozen.

With the auxiliaries fixed, the precoder update is

    maximize    2 mu sqrt(sum_k alpha_k log(1 + gamma_k)) - mu^2 (sum_k ||w_k||^2 + P0)
    subject to  sum_k ||w_k||^2 <= P_T
                beta_k  >= sum_{l != k} |h_k w_l|^2 + sigma2
                gamma_k >= Gamma_bar_k
                gamma_k <= 2 Re{conj(z_k) h_k w_k} - |z_k|^2 beta_k

``transcribe`` writes this as a standard-form conic program over the real
vector

    x = [Re W (col-major), Im W (col-major), beta, gamma, r, t, s, p]

with epigraph variables ``r_k <= log(1 + gamma_k)``, ``s <= sum alpha_k r_k``,
``t^2 <= s`` and ``||W||_F^2 <= p``. Constraints are ``A x + slack = b`` with
``slack`` in a product of cones:

    nonneg   slack >= 0
    soc      slack[0] >= ||slack[1:]||
    rsoc     2 slack[0] slack[1] >= ||slack[2:]||^2, slack[0], slack[1] >= 0
    exp      slack = (x, y, z) with y exp(x/y) <= z, y > 0

Rotated cones are mapped to ordinary second-order cones when handed to
Clarabel. The log constraint uses the orientation (x, y, z) = (r_k, 1, 1 + gamma_k).
"""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp

from .exceptions import SolverError
from .metrics import rates, total_power
from .qtransform import AuxiliaryState

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"

_STATUS_MAP = {
    "Solved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "AlmostPrimalInfeasible": INFEASIBLE,
    "MaxIterations": MAX_ITER,
    "MaxTime": MAX_ITER,
}


@dataclass(frozen=True, eq=False)
class SubproblemInstance:
    H: np.ndarray
    aux: AuxiliaryState
    sigma2: float
    alpha: np.ndarray
    thresholds: np.ndarray
    P_T: float
    P0: float

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=complex))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "alpha", np.broadcast_to(np.asarray(self.alpha, float), (H.shape[0],)))
        object.__setattr__(self, "thresholds",
                           np.broadcast_to(np.asarray(self.thresholds, float), (H.shape[0],)))
        if self.aux.z.shape != (H.shape[0],):
            raise ValueError("aux.z must have one entry per user")
        if np.any(self.thresholds < 0):
            raise ValueError("SINR thresholds must be nonnegative")

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class ConeBlock:
    kind: str  # nonneg | soc | rsoc | exp
    dim: int
    label: str


@dataclass(eq=False)
class ConicProgram:
    """minimize ``c @ x`` s.t. ``A x + slack = b``, ``slack`` in ``cones``.

    The subproblem is a maximisation; its value is ``-(c @ x) + offset``.
    """

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: list
    variables: dict  # name -> slice into x
    offset: float
    K: int
    M: int
    row_labels: list = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    def cone_counts(self) -> dict:
        counts: dict = {}
        for blk in self.cones:
            counts[blk.kind] = counts.get(blk.kind, 0) + 1
        return counts

    def value(self, x) -> float:
        return float(-(self.c @ x) + self.offset)

    def dump(self) -> str:
        """Plain-text standard form: variables, cones, then (row, col, value) triplets."""
        out = io.StringIO()
        out.write(f"# conic program: minimize c'x s.t. Ax + s = b, s in K\n")
        out.write(f"vars {self.num_vars}\n")
        for name, sl in self.variables.items():
            out.write(f"var {name} {sl.start} {sl.stop}\n")
        out.write(f"cones {len(self.cones)}\n")
        row = 0
        for blk in self.cones:
            out.write(f"cone {blk.kind} {blk.dim} {row} {blk.label}\n")
            row += blk.dim
        out.write(f"offset {float(self.offset)!r}\n")
        out.write("c\n")
        for j in np.flatnonzero(self.c):
            out.write(f"{j} {float(self.c[j])!r}\n")
        out.write("b\n")
        for i in np.flatnonzero(self.b):
            out.write(f"{i} {float(self.b[i])!r}\n")
        A = self.A.tocoo()
        out.write(f"A {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(A.row, A.col, A.data):
            out.write(f"{i} {j} {float(v)!r}\n")
        return out.getvalue()

    def to_clarabel(self):
        """Return (A, b, cones) with rotated cones mapped to second-order cones."""
        A = self.A.tolil(copy=True)
        b = self.b.copy()
        cones = []
        row = 0
        for blk in self.cones:
            if blk.kind == "nonneg":
                cones.append(clarabel.NonnegativeConeT(blk.dim))
            elif blk.kind == "soc":
                cones.append(clarabel.SecondOrderConeT(blk.dim))
            elif blk.kind == "exp":
                cones.append(clarabel.ExponentialConeT())
            elif blk.kind == "rsoc":
                # (u, v, w) -> (u + v, u - v, sqrt(2) w)
                u, v = row, row + 1
                Au, Av = A[u].toarray(), A[v].toarray()
                A[u], A[v] = Au + Av, Au - Av
                b[u], b[v] = b[u] + b[v], b[u] - b[v]
                for i in range(row + 2, row + blk.dim):
                    A[i] = A[i].toarray() * np.sqrt(2.0)
                    b[i] *= np.sqrt(2.0)
                cones.append(clarabel.SecondOrderConeT(blk.dim))
            else:
                raise ValueError(f"unknown cone kind {blk.kind!r}")
            row += blk.dim
        return A.tocsc(), b, cones


class _Rows:
    """Accumulates sparse constraint rows block by block."""

    def __init__(self):
        self.rows, self.cols, self.vals, self.b, self.labels = [], [], [], [], []
        self.cones = []

    def add(self, entries, rhs, label):
        i = len(self.b)
        for j, v in entries:
            if v != 0.0:
                self.rows.append(i)
                self.cols.append(j)
                self.vals.append(float(v))
        self.b.append(float(rhs))
        self.labels.append(label)

    def cone(self, kind, dim, label):
        self.cones.append(ConeBlock(kind, dim, label))


def transcribe(instance: SubproblemInstance) -> ConicProgram:
    K, M = instance.K, instance.M
    H = instance.H
    mu = float(instance.aux.mu)
    z = instance.aux.z
    sigma = float(np.sqrt(instance.sigma2))

    nw = M * K
    o_wr, o_wi = 0, nw
    o_beta, o_gamma, o_r = 2 * nw, 2 * nw + K, 2 * nw + 2 * K
    i_t = 2 * nw + 3 * K
    i_s, i_p = i_t + 1, i_t + 2
    n = i_p + 1

    def wr(m, k):
        return o_wr + m + M * k

    def wi(m, k):
        return o_wi + m + M * k

    rows = _Rows()

    # linear block
    start = len(rows.b)
    rows.add([(i_s, 1.0)] + [(o_r + k, -instance.alpha[k]) for k in range(K)], 0.0, "rate_sum")
    rows.add([(i_p, 1.0)], instance.P_T, "power_cap")
    for k in range(K):
        rows.add([(o_gamma + k, -1.0)], -instance.thresholds[k], f"qos[{k}]")
    for k in range(K):
        c = np.conj(z[k]) * H[k]
        ent = [(o_gamma + k, 1.0), (o_beta + k, abs(z[k]) ** 2)]
        ent += [(wr(m, k), -2.0 * c[m].real) for m in range(M)]
        ent += [(wi(m, k), 2.0 * c[m].imag) for m in range(M)]
        rows.add(ent, 0.0, f"gamma_ub[{k}]")
    rows.cone("nonneg", len(rows.b) - start, "linear")

    # t^2 <= s
    rows.add([(i_s, -1.0)], 0.0, "sqrt_epi.u")
    rows.add([], 0.5, "sqrt_epi.v")
    rows.add([(i_t, -1.0)], 0.0, "sqrt_epi.w")
    rows.cone("rsoc", 3, "sqrt_epigraph")

    # ||W||_F^2 <= p  as  ||(2w, p - 1)|| <= p + 1
    rows.add([(i_p, -1.0)], 1.0, "power.head")
    rows.add([(i_p, -1.0)], -1.0, "power.p-1")
    for j in range(2 * nw):
        rows.add([(j, -2.0)], 0.0, f"power.w[{j}]")
    rows.cone("soc", 2 + 2 * nw, "power")

    # sum_{l != k} |h_k w_l|^2 + sigma2 <= beta_k
    for k in range(K):
        hr, hi = H[k].real, H[k].imag
        b0 = len(rows.b)
        rows.add([(o_beta + k, -1.0)], 1.0, f"interf[{k}].head")
        rows.add([(o_beta + k, -1.0)], -1.0, f"interf[{k}].beta-1")
        rows.add([], 2.0 * sigma, f"interf[{k}].noise")
        for l in range(K):
            if l == k:
                continue
            rows.add([(wr(m, l), -2.0 * hr[m]) for m in range(M)]
                     + [(wi(m, l), 2.0 * hi[m]) for m in range(M)], 0.0, f"interf[{k}].re[{l}]")
            rows.add([(wr(m, l), -2.0 * hi[m]) for m in range(M)]
                     + [(wi(m, l), -2.0 * hr[m]) for m in range(M)], 0.0, f"interf[{k}].im[{l}]")
        rows.cone("soc", len(rows.b) - b0, f"interference[{k}]")

    # r_k <= log(1 + gamma_k)
    for k in range(K):
        rows.add([(o_r + k, -1.0)], 0.0, f"log[{k}].x")
        rows.add([], 1.0, f"log[{k}].y")
        rows.add([(o_gamma + k, -1.0)], 1.0, f"log[{k}].z")
        rows.cone("exp", 3, f"log[{k}]")

    A = sp.csc_matrix((rows.vals, (rows.rows, rows.cols)), shape=(len(rows.b), n))
    c = np.zeros(n)
    c[i_t] = -2.0 * mu
    c[i_p] = mu**2
    variables = {
        "W_re": slice(o_wr, o_wr + nw), "W_im": slice(o_wi, o_wi + nw),
        "beta": slice(o_beta, o_beta + K), "gamma": slice(o_gamma, o_gamma + K),
        "r": slice(o_r, o_r + K), "t": slice(i_t, i_t + 1),
        "s": slice(i_s, i_s + 1), "p": slice(i_p, i_p + 1),
    }
    return ConicProgram(c=c, A=A, b=np.array(rows.b), cones=rows.cones, variables=variables,
                        offset=-mu**2 * instance.P0, K=K, M=M, row_labels=rows.labels)


@dataclass(eq=False)
class SubproblemSolution:
    W: np.ndarray | None
    beta: np.ndarray | None
    gamma: np.ndarray | None
    objective_value: float
    status: str
    iterations: int = 0
    solve_time: float = 0.0
    x: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)


def unpack_precoder(x, program: ConicProgram) -> np.ndarray:
    M, K = program.M, program.K
    wr = np.asarray(x[program.variables["W_re"]]).reshape(K, M).T
    wi = np.asarray(x[program.variables["W_im"]]).reshape(K, M).T
    return wr + 1j * wi


def pack_precoder(W) -> np.ndarray:
    """Inverse of ``unpack_precoder`` for the W part of x."""
    W = np.asarray(W, dtype=complex)
    return np.concatenate([W.real.T.ravel(), W.imag.T.ravel()])


def solve(program: ConicProgram, tol: float = 1e-7, max_iter: int = 200) -> SubproblemSolution:
    A, b, cones = program.to_clarabel()
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = int(max_iter)
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.tol_ktratio = min(tol, settings.tol_ktratio)
    P = sp.csc_matrix((program.num_vars, program.num_vars))
    t0 = time.perf_counter()
    try:
        sol = clarabel.DefaultSolver(P, program.c, A, b, cones, settings).solve()
    except BaseException as exc:  # the Rust backend raises PanicException on bad data
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        return SubproblemSolution(None, None, None, float("nan"), NUMERICAL_FAILURE,
                                  solve_time=time.perf_counter() - t0,
                                  residuals={"error": repr(exc)})
    elapsed = time.perf_counter() - t0
    status = _STATUS_MAP.get(str(sol.status), NUMERICAL_FAILURE)
    residuals = {"backend_status": str(sol.status), "r_prim": sol.r_prim, "r_dual": sol.r_dual,
                 "gap": abs(sol.obj_val - sol.obj_val_dual)}
    x = np.asarray(sol.x)
    if status != OPTIMAL:
        return SubproblemSolution(None, None, None, float("nan"), status, sol.iterations, elapsed,
                                  x, residuals)
    return SubproblemSolution(
        W=unpack_precoder(x, program),
        beta=x[program.variables["beta"]].copy(),
        gamma=x[program.variables["gamma"]].copy(),
        objective_value=program.value(x),
        status=status, iterations=sol.iterations, solve_time=elapsed, x=x, residuals=residuals)


def recover_precoder(solution: SubproblemSolution) -> np.ndarray:
    if solution.status != OPTIMAL or solution.W is None:
        raise SolverError(f"no precoder to recover: status {solution.status}")
    return solution.W


def solve_instance(instance: SubproblemInstance, tol: float = 1e-7,
                   max_iter: int = 200) -> SubproblemSolution:
    return solve(transcribe(instance), tol=tol, max_iter=max_iter)


def objective_at(instance: SubproblemInstance, W, gamma) -> float:
    """Transcribed objective evaluated at (W, gamma) with the epigraphs tight."""
    mu = instance.aux.mu
    N = float(instance.alpha @ np.log1p(np.maximum(gamma, -1 + 1e-300)))
    return float(2 * mu * np.sqrt(max(N, 0.0)) - mu**2 * (total_power(W) + instance.P0))


def tight_auxiliaries(instance: SubproblemInstance, W):
    """(beta, gamma) at their tightest values for a given W: the point that
    makes W admissible whenever gamma >= Gamma_bar."""
    A = instance.H @ np.asarray(W)
    a = np.diag(A)
    beta = np.sum(np.abs(A) ** 2, axis=1) - np.abs(a) ** 2 + instance.sigma2
    z = instance.aux.z
    gamma = 2 * np.real(np.conj(z) * a) - np.abs(z) ** 2 * beta
    return beta, gamma


def constraint_audit(instance: SubproblemInstance, W, beta, gamma) -> dict:
    """Slacks (>= 0 when satisfied) of every subproblem constraint plus the true rate bound."""
    A = instance.H @ np.asarray(W)
    a = np.diag(A)
    ipn = np.sum(np.abs(A) ** 2, axis=1) - np.abs(a) ** 2 + instance.sigma2
    z = instance.aux.z
    return {
        "power": instance.P_T - total_power(W),
        "beta": beta - ipn,
        "qos": gamma - instance.thresholds,
        "gamma_ub": 2 * np.real(np.conj(z) * a) - np.abs(z) ** 2 * beta - gamma,
        "rate": rates(instance.H, W, instance.sigma2) - np.log1p(gamma),
    }
