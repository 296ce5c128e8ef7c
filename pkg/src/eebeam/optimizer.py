"""Alternating optimisation for energy-efficient precoding.

Each outer iteration first sets (mu, z) to their closed-form optimum for
the current precoder, then re-solves the convex precoder subproblem with
those auxiliaries frozen. The surrogate value is nondecreasing and every
iterate stays feasible, so the loop only ever improves on its start point.
"""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import subproblem as sub
from .baselines import min_power_qos_precoder, zf_directions
from .exceptions import InvalidScenarioError, ScenarioInfeasibleError
from .linkbudget import ScenarioParams
from .metrics import check_feasible, energy_efficiency, gbps_per_watt, total_power
from .qtransform import optimal_mu, update_auxiliary

log = logging.getLogger(__name__)

ITERATE_FEAS_TOL = 1e-6


@dataclass(frozen=True)
class AlgorithmConfig:
    xi: float = 1e-3
    max_outer_iter: int = 50
    init_max_retries: int = 200
    rng_seed: int = 0
    inner_tol: float = 1e-7
    inner_max_iter: int = 200
    stagnation_tol: float = 1e-12

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if self.max_outer_iter < 1:
            raise ValueError("max_outer_iter must be >= 1")


@dataclass
class TraceRow:
    iteration: int
    f: float
    ee_nats_per_W: float
    ee_gbps_per_W: float
    mu: float
    power_W: float
    min_qos_slack: float
    inner_status: str
    millis: float


CSV_FIELDS = ("iteration", "f", "ee_nats_per_W", "ee_gbps_per_W", "mu", "power_W",
              "min_qos_slack", "inner_status", "millis")


@dataclass
class SolveTrace:
    rows: list = field(default_factory=list)
    status: str = "running"
    init_method: str = ""
    diagnostics: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    @property
    def f(self) -> np.ndarray:
        return np.array([r.f for r in self.rows])

    @property
    def ee(self) -> np.ndarray:
        return np.array([r.ee_nats_per_W for r in self.rows])

    @property
    def iterations(self) -> int:
        """Outer iterations executed (row 0 is the initial point)."""
        return len(self.rows) - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in self.rows:
            w.writerow(asdict(r))
        return buf.getvalue()


def stop_check(trace, xi: float) -> bool:
    """True iff the last surrogate change is at most ``xi`` (inclusive)."""
    f = trace.f if isinstance(trace, SolveTrace) else np.asarray(trace, float)
    if len(f) < 2:
        return False
    return bool(abs(f[-1] - f[-2]) <= xi)


def _feasible(H, W, sigma2, P_T, thresholds):
    return check_feasible(H, W, sigma2, P_T, thresholds, sinr_atol=0.0, power_rtol=1e-12).feasible


def initialize_precoder(H, sigma2: float, P_T: float, thresholds, config=AlgorithmConfig(),
                        return_method: bool = False):
    """Feasible starting precoder.

    Tries random complex Gaussian precoders at full power first. If none of
    ``init_max_retries`` draws meets the QoS, falls back to zero-forcing
    directions: equal power, then QoS-proportional powers with a uniform
    scale found by bisection, and finally the least-power QoS precoder.
    Raises ScenarioInfeasibleError if even that exceeds ``P_T``.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    K, M = H.shape
    thresholds = np.broadcast_to(np.asarray(thresholds, float), (K,))
    rng = np.random.default_rng(config.rng_seed)

    def done(W, how):
        return (W, how) if return_method else W

    for _ in range(config.init_max_retries):
        W = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        W *= np.sqrt(P_T / total_power(W))
        if _feasible(H, W, sigma2, P_T, thresholds):
            return done(W, "random")

    try:
        U = zf_directions(H)
    except InvalidScenarioError:
        U = None
    if U is not None:
        W = U * np.sqrt(P_T / K)
        if _feasible(H, W, sigma2, P_T, thresholds):
            return done(W, "zf_equal")
        g = np.abs(np.einsum("km,mk->k", H, U)) ** 2
        base = thresholds * sigma2 / g
        if base.sum() > 0:
            c_max = P_T / base.sum()

            def make(c):
                return U * np.sqrt(c * base)

            if c_max >= 1 and _feasible(H, make(c_max), sigma2, P_T, thresholds):
                lo, hi = 1.0, c_max
                if _feasible(H, make(lo), sigma2, P_T, thresholds):
                    hi = lo
                for _ in range(100):
                    if hi - lo <= 1e-12 * hi:
                        break
                    mid = 0.5 * (lo + hi)
                    if _feasible(H, make(mid), sigma2, P_T, thresholds):
                        hi = mid
                    else:
                        lo = mid
                return done(make(hi), "zf_bisect")

    W = min_power_qos_precoder(H, sigma2, thresholds)
    if W is not None:
        if total_power(W) > P_T:
            W = W * np.sqrt(P_T / total_power(W))
        if _feasible(H, W, sigma2, P_T, thresholds):
            return done(W, "min_power_qos")
    raise ScenarioInfeasibleError("no precoder satisfies the power budget and SINR thresholds")


def run(H, scenario: ScenarioParams, config: AlgorithmConfig = AlgorithmConfig(), W0=None,
        callback=None):
    """Alternate closed-form auxiliary updates with conic precoder updates.

    Returns ``(W, trace)``. Row 0 of the trace is the initial point (its
    ``f`` is the true EE there, which is what the surrogate equals at the
    optimal auxiliaries); row t >= 1 holds the subproblem optimum at outer
    iteration t. Stops when consecutive ``f`` differ by at most ``xi``.
    A non-optimal inner solve ends the run and keeps the previous
    (feasible) precoder; ``trace.status`` records why.

    ``callback(t, instance, solution)`` is invoked after every inner solve.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    sigma2 = scenario.noise_power
    alpha = scenario.beam_weights
    gbar = scenario.sinr_thresholds
    P_T, P0 = scenario.total_power_W, scenario.static_power_W
    B = scenario.bandwidth_Hz
    if H.shape != (scenario.num_users, scenario.num_feeds):
        raise InvalidScenarioError(f"channel is {H.shape}, scenario expects "
                                   f"{(scenario.num_users, scenario.num_feeds)}")

    trace = SolveTrace()
    t0 = time.perf_counter()
    if W0 is None:
        W, trace.init_method = initialize_precoder(H, sigma2, P_T, gbar, config, return_method=True)
    else:
        W = np.asarray(W0, dtype=complex)
        if not check_feasible(H, W, sigma2, P_T, gbar):
            raise ScenarioInfeasibleError("supplied initial precoder is infeasible")
        trace.init_method = "given"

    def row(it, f, mu, W, status, tstart):
        ee = energy_efficiency(H, W, sigma2, alpha, P0)
        rep = check_feasible(H, W, sigma2, P_T, gbar)
        return TraceRow(it, float(f), ee, gbps_per_watt(ee, B), float(mu), total_power(W),
                        rep.min_qos_slack, status, 1e3 * (time.perf_counter() - tstart))

    ee0 = energy_efficiency(H, W, sigma2, alpha, P0)
    trace.rows.append(row(0, ee0, optimal_mu(H, W, sigma2, alpha, P0), W, "init", t0))
    trace.status = "max_iter"

    for t in range(1, config.max_outer_iter + 1):
        ts = time.perf_counter()
        aux = update_auxiliary(H, W, sigma2, alpha, P0)
        inst = sub.SubproblemInstance(H, aux, sigma2, alpha, gbar, P_T, P0)
        sol = sub.solve_instance(inst, tol=config.inner_tol, max_iter=config.inner_max_iter)
        if callback is not None:
            callback(t, inst, sol)
        if sol.status != sub.OPTIMAL:
            # the previous iterate is feasible by induction, so an inner
            # failure is treated as numerical: keep it and stop
            trace.status = f"inner_{sol.status}"
            trace.diagnostics.append(f"iteration {t}: inner solver {sol.status} {sol.residuals}")
            log.warning("inner solve failed at iteration %d: %s", t, sol.status)
            break
        W_new = sub.recover_precoder(sol)
        rep = check_feasible(H, W_new, sigma2, P_T, gbar,
                             power_rtol=ITERATE_FEAS_TOL, sinr_atol=ITERATE_FEAS_TOL)
        if not rep.feasible:
            trace.status = "inner_infeasible_iterate"
            trace.diagnostics.append(f"iteration {t}: solver point violates constraints "
                                     f"(power slack {rep.power_slack:.3g}, users {rep.violated_users})")
            break
        W = W_new
        trace.rows.append(row(t, sol.objective_value, aux.mu, W, sol.status, ts))
        if stop_check(trace, config.xi):
            trace.status = "converged"
            break
        if abs(trace.rows[-1].f - trace.rows[-2].f) <= config.stagnation_tol:
            trace.status = "converged"
            break
    return W, trace
