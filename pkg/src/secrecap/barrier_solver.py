"""Outer barrier loop with warm starts, gap-bound stopping and KKT
certificate extraction.

The schedule solves the barrier-augmented saddle system at t = t0, mu*t0,
mu^2*t0, ... (capped at t_max), reusing the previous primal-dual iterate as
the start for the next stage. Stops early once the capacity gap bound
max(m, n1+n2)/t drops below ``eps_gap`` when that tolerance is set;
otherwise the full schedule runs to t_max, mirroring the usual experiment
protocol.

Reported capacities carry the 1/2 rate factor (nats); the dual variable and
certificate residuals live in the solver's log-det convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelPair,
    Degradedness,
    SaddleState,
    TransmitCovariance,
    classify_degraded,
    initial_point,
)
from .errors import SolverError
from .kkt_newton import newton_solve
from .matcalc import sym, unvech, vech
from .objective import (
    BarrierObjective,
    DegradedBarrierObjective,
    minimax_objective,
    secrecy_rate,
)

__all__ = [
    "SolverConfig",
    "TraceRecord",
    "SaddleSolution",
    "KktCertificate",
    "gap_bound",
    "solve_minimax",
    "solve_degraded",
    "extract_certificate",
]


@dataclass(frozen=True)
class SolverConfig:
    """Line-search, barrier-schedule and tolerance knobs.

    ``eps_gap=None`` disables gap-driven early stopping, so the schedule
    runs all the way to ``t_max``.
    """

    alpha: float = 0.3
    beta: float = 0.5
    t0: float = 100.0
    mu: float = 10.0
    t_max: float = 1e5
    eps_gap: float | None = None
    eps_newton: float = 1e-10
    max_newton_iter: int = 200

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 1/2)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if self.mu <= 1:
            raise ValueError("mu must exceed 1")
        if self.t_max < self.t0:
            raise ValueError("t_max must be >= t0")
        if self.eps_newton <= 0:
            raise ValueError("eps_newton must be positive")


@dataclass(frozen=True)
class TraceRecord:
    """One accepted Newton step: barrier parameter, per-stage step index,
    residual norm after the step, rates (nats) and the accepted step size."""

    t: float
    iteration: int
    residual: float
    f: float
    C: float
    step_size: float

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "iter": self.iteration,
            "residual": self.residual,
            "f": self.f,
            "C": self.C,
            "step_size": self.step_size,
        }


@dataclass
class SaddleSolution:
    """Converged saddle point plus diagnostics.

    capacity_achievable is C(R*) clamped at zero; capacity_upper is the
    saddle functional f(R*, K*) (both in nats). For the degraded fast path
    (no K block) capacity_upper is C(R*) plus the proven gap bound.
    """

    R_star: TransmitCovariance
    K21_star: np.ndarray
    lambda_star: float | None
    capacity_upper: float
    capacity_achievable: float
    gap_bound: float
    trace: list[TraceRecord]
    t_final: float
    converged: bool
    gap_met: bool | None
    newton_steps_total: int
    mode: str
    gap_bound_heuristic: bool = False
    stage_reports: list = field(default_factory=list)  # (t, NewtonReport) pairs


@dataclass(frozen=True)
class KktCertificate:
    """Post-hoc stationarity check against the original saddle system.

    The multiplier approximation for the R >= 0 constraint is
    M2 = R^{-1}/t; its complementarity defect tr(M2 R) equals m/t by the
    trace identity, recorded as ``complementarity_R``. The multiplier for
    K >= 0 and the diagonal-block multiplier are not separately recoverable
    from the barrier iterate; ``stationarity_residual_K`` measures the
    off-diagonal-block defect of the K-stationarity equation, where both of
    those multipliers vanish.
    """

    lam: float
    M2_approx: np.ndarray
    stationarity_residual_R: float
    stationarity_residual_K: float
    complementarity_R: float


def gap_bound(m: int, n1: int, n2: int, t: float) -> float:
    """Capacity accuracy guarantee of the barrier solution at parameter t."""
    if t <= 0:
        raise ValueError("barrier parameter t must be positive")
    return max(m, n1 + n2) / t


def _schedule(cfg: SolverConfig):
    t = cfg.t0
    while True:
        yield t
        if t >= cfg.t_max * (1.0 - 1e-12):
            return
        t = min(t * cfg.mu, cfg.t_max)


def _zero_solution(ch: ChannelPair, power: float, mode: str) -> SaddleSolution:
    r0 = TransmitCovariance(np.zeros((ch.m, ch.m)), power)
    return SaddleSolution(
        R_star=r0,
        K21_star=np.zeros((ch.n2, ch.n1)),
        lambda_star=0.0,
        capacity_upper=0.0,
        capacity_achievable=0.0,
        gap_bound=0.0,
        trace=[],
        t_final=math.inf,
        converged=True,
        gap_met=True,
        newton_steps_total=0,
        mode=mode,
    )


def _run_schedule(make_objective, state: SaddleState, cfg: SolverConfig,
                  stage_gap, record):
    """Warm-started Newton solves over the t schedule.

    ``make_objective(t)`` builds the stage objective, ``stage_gap(t)`` the
    gap bound, ``record(t, k, state, rnorm, s)`` builds trace rows. Returns
    (state, t_final, total_steps, gap_met, trace, stage_reports).
    """
    trace: list[TraceRecord] = []
    reports = []
    total_steps = 0
    t_final = cfg.t0
    gap_met: bool | None = None
    for t in _schedule(cfg):
        obj = make_objective(t)
        state, report = newton_solve(
            obj,
            state,
            eps=cfg.eps_newton,
            max_iter=cfg.max_newton_iter,
            alpha=cfg.alpha,
            beta=cfg.beta,
            callback=lambda k, st, rn, s, _t=t: trace.append(record(_t, k, st, rn, s)),
        )
        total_steps += report.iterations
        reports.append((t, report))
        t_final = t
        if not report.converged:
            raise SolverError(
                f"Newton stage at t={t:g} failed: {report.failure}", trace
            )
        if cfg.eps_gap is not None and stage_gap(t) <= cfg.eps_gap:
            gap_met = True
            break
    if cfg.eps_gap is not None and gap_met is None:
        gap_met = stage_gap(t_final) <= cfg.eps_gap
    return state, t_final, total_steps, gap_met, trace, reports


def solve_minimax(ch: ChannelPair, power: float,
                  cfg: SolverConfig | None = None) -> SaddleSolution:
    """Globally optimal transmit covariance via the saddle-point barrier
    method. Works for any channel; reversely degraded channels short-circuit
    to the exact zero-capacity solution."""
    if cfg is None:
        cfg = SolverConfig()
    if power <= 0:
        raise ValueError("power budget must be positive")
    kind, _ = classify_degraded(ch)
    if kind is Degradedness.REVERSELY_DEGRADED:
        return _zero_solution(ch, power, mode="zero")

    state = initial_point(ch, power)

    def record(t, k, st, rnorm, s):
        rm = unvech(st.x)
        k21 = st.y.reshape((ch.n2, ch.n1), order="F")
        return TraceRecord(
            t=t,
            iteration=k,
            residual=rnorm,
            f=minimax_objective(ch, rm, k21),
            C=secrecy_rate(ch, rm),
            step_size=s,
        )

    state, t_final, steps, gap_met, trace, reports = _run_schedule(
        lambda t: BarrierObjective(ch, t, power),
        state,
        cfg,
        lambda t: gap_bound(ch.m, ch.n1, ch.n2, t),
        record,
    )

    rm = sym(unvech(state.x))
    k21 = state.y.reshape((ch.n2, ch.n1), order="F")
    c_raw = secrecy_rate(ch, rm)
    return SaddleSolution(
        R_star=TransmitCovariance(rm, power),
        K21_star=k21,
        lambda_star=-state.lam,
        capacity_upper=minimax_objective(ch, rm, k21),
        capacity_achievable=max(0.0, c_raw),
        gap_bound=gap_bound(ch.m, ch.n1, ch.n2, t_final),
        trace=trace,
        t_final=t_final,
        converged=True,
        gap_met=gap_met,
        newton_steps_total=steps,
        mode="minimax",
        stage_reports=reports,
    )


def solve_degraded(ch: ChannelPair, power: float,
                   cfg: SolverConfig | None = None) -> SaddleSolution:
    """Fast path for degraded channels (W1 >= W2): concave maximization of
    C(R) + (1/t) ln|R| over tr R = P, no noise-covariance block. The gap
    bound tightens to m/t."""
    if cfg is None:
        cfg = SolverConfig()
    if power <= 0:
        raise ValueError("power budget must be positive")
    kind, eigs = classify_degraded(ch)
    if kind is not Degradedness.DEGRADED:
        raise ValueError(
            f"solve_degraded requires a degraded channel, got {kind.value} "
            f"(difference eigenvalues {eigs})"
        )

    state = SaddleState(
        x=vech(np.eye(ch.m) * (power / ch.m)), y=np.zeros(0), lam=0.0
    )

    def record(t, k, st, rnorm, s):
        c = secrecy_rate(ch, unvech(st.x))
        return TraceRecord(t=t, iteration=k, residual=rnorm, f=c, C=c,
                           step_size=s)

    state, t_final, steps, gap_met, trace, reports = _run_schedule(
        lambda t: DegradedBarrierObjective(ch, t, power),
        state,
        cfg,
        lambda t: ch.m / t,
        record,
    )

    rm = sym(unvech(state.x))
    c_raw = secrecy_rate(ch, rm)
    bound = ch.m / t_final
    return SaddleSolution(
        R_star=TransmitCovariance(rm, power),
        K21_star=np.zeros((ch.n2, ch.n1)),
        lambda_star=-state.lam,
        capacity_upper=c_raw + bound,
        capacity_achievable=max(0.0, c_raw),
        gap_bound=bound,
        trace=trace,
        t_final=t_final,
        converged=True,
        gap_met=gap_met,
        newton_steps_total=steps,
        mode="degraded",
        stage_reports=reports,
    )


def extract_certificate(sol: SaddleSolution,
                        obj: BarrierObjective) -> KktCertificate:
    """Stationarity residuals of the original saddle KKT system at the
    barrier solution held by ``sol``; ``obj`` must be the stage objective at
    ``sol.t_final``. All quantities are in the solver's log-det convention."""
    ch = obj.channel
    rm = sol.R_star.R
    k21 = sol.K21_star
    fac = obj.factors(SaddleState(x=vech(rm), y=k21.ravel(order="F"), lam=0.0))
    t = obj.t
    m2 = fac.Rinv / t
    lam = 0.0 if sol.lambda_star is None else float(sol.lambda_star)
    res_r = np.linalg.norm(fac.Z1 - fac.Z2 + m2 - lam * np.eye(ch.m), "fro")
    gk = fac.G - (1.0 + 1.0 / t) * fac.Kinv
    res_k = math.sqrt(2.0) * np.linalg.norm(gk[ch.n1:, : ch.n1], "fro")
    return KktCertificate(
        lam=lam,
        M2_approx=m2,
        stationarity_residual_R=float(res_r),
        stationarity_residual_K=float(res_k),
        complementarity_R=ch.m / t,
    )
