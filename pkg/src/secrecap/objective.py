"""Objective evaluations and exact derivatives in reduced coordinates.

Two value conventions coexist deliberately:

  * ``secrecy_rate`` and ``minimax_objective`` report rates in nats and carry
    the 1/2 factor of the log-det rate formulas.
  * everything the Newton solver touches (``barrier_value``, ``derivatives``
    and the objective classes below) works on plain log-det differences with
    NO 1/2 factor, so the gradient/Hessian expressions stay in their simplest
    form. Rates reported by the outer solver multiply by 0.5 at the end.

Coordinates: x = vech(R) with R the m x m transmit covariance, y = vec(K21)
with K21 the n2 x n1 cross block of the noise covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .channel import ChannelPair, NoiseCovariance, SaddleState, TransmitCovariance
from .errors import DomainError
from .matcalc import (
    duplication_matrix,
    kron,
    psd_sqrt,
    reduced_duplication_matrix,
    sym,
    unvech,
    vec,
    vech,
    vech_diag_indices,
    vech_len,
)

__all__ = [
    "BarrierObjective",
    "DegradedBarrierObjective",
    "PerAntennaBarrierObjective",
    "DerivativeBundle",
    "secrecy_rate",
    "minimax_objective",
    "barrier_value",
    "derivatives",
]


def _as_matrix(r) -> np.ndarray:
    if isinstance(r, TransmitCovariance):
        return r.R
    return sym(np.atleast_2d(np.asarray(r, dtype=float)))


def _as_k21(k, ch: ChannelPair) -> np.ndarray:
    if isinstance(k, NoiseCovariance):
        return k.K21
    k = np.atleast_2d(np.asarray(k, dtype=float))
    if k.shape != (ch.n2, ch.n1):
        raise ValueError(f"K21 block must have shape {(ch.n2, ch.n1)}, got {k.shape}")
    return k


def _chol(a: np.ndarray, what: str):
    """Cholesky factor of a symmetric matrix or DomainError."""
    try:
        return sla.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"{what} is not strictly positive definite") from exc


def _chol_logdet(cf) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(cf[0]))))


def _chol_inv(cf, n: int) -> np.ndarray:
    return sym(sla.cho_solve(cf, np.eye(n), check_finite=False))


def _assemble_K(k21: np.ndarray, n1: int, n2: int) -> np.ndarray:
    k = np.eye(n1 + n2)
    k[n1:, :n1] = k21
    k[:n1, n1:] = k21.T
    return k


def _logdet_capacity_term(h: np.ndarray, r: np.ndarray) -> float:
    """ln |I + H' H R| computed as ln |I + H R H'| via Cholesky."""
    n = h.shape[0]
    a = np.eye(n) + h @ r @ h.T
    return _chol_logdet(_chol(sym(a), "capacity log-det argument"))


def secrecy_rate(ch: ChannelPair, r) -> float:
    """Achievable secrecy rate C(R) in nats (may be negative; callers clamp
    negative values to zero when reporting capacity)."""
    rm = _as_matrix(r)
    return 0.5 * (_logdet_capacity_term(ch.H1, rm) - _logdet_capacity_term(ch.H2, rm))


def minimax_objective(ch: ChannelPair, r, k) -> float:
    """Genie upper-bound functional f(R, K) in nats; f(R, K) >= C(R) for all
    feasible K. ``k`` may be a NoiseCovariance or the raw K21 block."""
    rm = _as_matrix(r)
    k21 = _as_k21(k, ch)
    kf = _assemble_K(k21, ch.n1, ch.n2)
    q = sym(ch.Hstack @ rm @ ch.Hstack.T)
    ld_kq = _chol_logdet(_chol(kf + q, "K + Q"))
    ld_k = _chol_logdet(_chol(kf, "noise covariance"))
    ld_2 = _logdet_capacity_term(ch.H2, rm)
    return 0.5 * (ld_kq - ld_k - ld_2)


@dataclass
class DerivativeBundle:
    """Gradients and Hessians of the barrier objective at one interior point.

    Values are log-det differences without the 1/2 rate factor (value_C is
    twice the rate returned by :func:`secrecy_rate`, and so on). hess_xx is
    negative definite and hess_yy positive definite at every interior point.
    """

    grad_x: np.ndarray
    grad_y: np.ndarray
    hess_xx: np.ndarray
    hess_yy: np.ndarray
    hess_xy: np.ndarray
    value_f: float
    value_ft: float
    value_C: float


class _Factors:
    """Shared per-point matrix factors for the minimax barrier objective."""

    __slots__ = (
        "R", "K21", "K", "Q", "Rinv", "Kinv", "G", "B", "W", "Z1", "Z2",
        "logdet_R", "logdet_K", "logdet_KQ", "logdet_2",
    )

    def __init__(self, ch: ChannelPair, rm: np.ndarray, k21: np.ndarray):
        m, n1, n2 = ch.m, ch.n1, ch.n2
        n = n1 + n2
        self.R = rm
        self.K21 = k21
        cf_r = _chol(rm, "transmit covariance")
        self.logdet_R = _chol_logdet(cf_r)
        self.Rinv = _chol_inv(cf_r, m)

        self.K = _assemble_K(k21, n1, n2)
        cf_k = _chol(self.K, "noise covariance")
        self.logdet_K = _chol_logdet(cf_k)
        self.Kinv = _chol_inv(cf_k, n)

        self.Q = sym(ch.Hstack @ rm @ ch.Hstack.T)
        cf_kq = _chol(self.K + self.Q, "K + Q")
        self.logdet_KQ = _chol_logdet(cf_kq)
        self.G = _chol_inv(cf_kq, n)
        self.B = ch.Hstack.T @ self.G

        self.W = sym(ch.Hstack.T @ (self.Kinv @ ch.Hstack))
        self.Z1 = _z_matrix(self.W, rm)
        s2 = ch.sqrt_W2
        self.Z2 = _z_matrix_from_sqrt(s2, rm)
        self.logdet_2 = _chol_logdet(_chol(np.eye(m) + s2 @ rm @ s2, "I + W2 R"))

    def value_f(self) -> float:
        return self.logdet_KQ - self.logdet_K - self.logdet_2


def _z_matrix(w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Z = (I + W R)^{-1} W through the symmetric form S (I + S R S)^{-1} S
    with S = W^{1/2}; always symmetric and valid for singular W."""
    return _z_matrix_from_sqrt(psd_sqrt(w), r)


def _z_matrix_from_sqrt(s: np.ndarray, r: np.ndarray) -> np.ndarray:
    m = s.shape[0]
    cf = _chol(np.eye(m) + sym(s @ r @ s), "I + S R S")
    return sym(s @ sla.cho_solve(cf, s, check_finite=False))


class BarrierObjective:
    """Barrier-augmented saddle objective

        f_t(R, K) = f(R, K) + (1/t) ln|R| - (1/t) ln|K|

    maximized over x = vech(R) subject to tr R = P and minimized over
    y = vec(K21). Provides values, gradients and the full indefinite Hessian
    for the primal-dual Newton solver.
    """

    def __init__(self, ch: ChannelPair, t: float, power: float):
        if t <= 0:
            raise ValueError("barrier parameter t must be positive")
        if power <= 0:
            raise ValueError("power budget must be positive")
        self.channel = ch
        self.t = float(t)
        self.power = float(power)
        self.nx = vech_len(ch.m)
        self.ny = ch.n1 * ch.n2
        self._dm = duplication_matrix(ch.m)
        self._dt = reduced_duplication_matrix(ch.n1, ch.n2)
        a = np.zeros(self.nx + self.ny)
        a[: self.nx] = vech(np.eye(ch.m))
        self.constraint = (a, self.power)

    # -- state unpacking ---------------------------------------------------

    def unpack(self, state: SaddleState) -> tuple[np.ndarray, np.ndarray]:
        rm = unvech(state.x)
        k21 = state.y.reshape((self.channel.n2, self.channel.n1), order="F")
        return rm, k21

    def factors(self, state: SaddleState) -> _Factors:
        rm, k21 = self.unpack(state)
        return _Factors(self.channel, rm, k21)

    # -- values ------------------------------------------------------------

    def value_ft(self, state: SaddleState) -> float:
        fac = self.factors(state)
        return fac.value_f() + (fac.logdet_R - fac.logdet_K) / self.t

    # -- Newton interface ----------------------------------------------------

    def newton_gradient(self, state: SaddleState) -> np.ndarray:
        return self._gradient_from(self.factors(state))

    def newton_system(self, state: SaddleState) -> tuple[np.ndarray, np.ndarray]:
        fac = self.factors(state)
        g = self._gradient_from(fac)
        h = self._hessian_from(fac)
        return g, h

    def _grad_matrices(self, fac: _Factors) -> tuple[np.ndarray, np.ndarray]:
        tinv = 1.0 / self.t
        grad_R = fac.Z1 - fac.Z2 + tinv * fac.Rinv
        grad_K = fac.G - (1.0 + tinv) * fac.Kinv
        return grad_R, grad_K

    def _gradient_from(self, fac: _Factors) -> np.ndarray:
        grad_R, grad_K = self._grad_matrices(fac)
        gx = self._dm.T @ vec(grad_R)
        gy = self._dt.T @ vec(grad_K)
        return np.concatenate([gx, gy])

    def _hessian_from(self, fac: _Factors) -> np.ndarray:
        tinv = 1.0 / self.t
        dm, dt = self._dm, self._dt
        hxx = -sym(
            dm.T
            @ (kron(fac.Z1, fac.Z1) - kron(fac.Z2, fac.Z2) + tinv * kron(fac.Rinv, fac.Rinv))
            @ dm
        )
        hyy = sym(
            dt.T @ ((1.0 + tinv) * kron(fac.Kinv, fac.Kinv) - kron(fac.G, fac.G)) @ dt
        )
        hxy = -(dm.T @ kron(fac.B, fac.B) @ dt)
        h = np.empty((self.nx + self.ny, self.nx + self.ny))
        h[: self.nx, : self.nx] = hxx
        h[: self.nx, self.nx:] = hxy
        h[self.nx:, : self.nx] = hxy.T
        h[self.nx:, self.nx:] = hyy
        return h

    def bundle(self, state: SaddleState) -> DerivativeBundle:
        fac = self.factors(state)
        g = self._gradient_from(fac)
        h = self._hessian_from(fac)
        value_f = fac.value_f()
        value_ft = value_f + (fac.logdet_R - fac.logdet_K) / self.t
        value_c = 2.0 * secrecy_rate(self.channel, fac.R)
        return DerivativeBundle(
            grad_x=g[: self.nx],
            grad_y=g[self.nx:],
            hess_xx=h[: self.nx, : self.nx],
            hess_yy=h[self.nx:, self.nx:],
            hess_xy=h[: self.nx, self.nx:],
            value_f=value_f,
            value_ft=value_ft,
            value_C=value_c,
        )


def barrier_value(obj: BarrierObjective, r, k) -> float:
    """f_t at (R, K) in the solver's log-det convention (no 1/2 factor)."""
    rm = _as_matrix(r)
    k21 = _as_k21(k, obj.channel)
    fac = _Factors(obj.channel, rm, k21)
    return fac.value_f() + (fac.logdet_R - fac.logdet_K) / obj.t


def derivatives(obj: BarrierObjective, r, k) -> DerivativeBundle:
    """Exact gradients and Hessians of f_t at an interior point (R, K)."""
    rm = _as_matrix(r)
    k21 = _as_k21(k, obj.channel)
    state = SaddleState(x=vech(rm), y=vec(k21), lam=0.0)
    return obj.bundle(state)


class DegradedBarrierObjective:
    """Barrier objective for the degraded fast path: maximize

        f_t(R) = ln|I + W1 R| - ln|I + W2 R| + (1/t) ln|R|

    over x = vech(R) with tr R = P. No y block, same Newton interface."""

    def __init__(self, ch: ChannelPair, t: float, power: float):
        if t <= 0:
            raise ValueError("barrier parameter t must be positive")
        self.channel = ch
        self.t = float(t)
        self.power = float(power)
        self.nx = vech_len(ch.m)
        self.ny = 0
        self._dm = duplication_matrix(ch.m)
        self.constraint = (vech(np.eye(ch.m)), self.power)

    def unpack(self, state: SaddleState) -> np.ndarray:
        return unvech(state.x)

    def _parts(self, rm: np.ndarray):
        ch = self.channel
        cf_r = _chol(rm, "transmit covariance")
        rinv = _chol_inv(cf_r, ch.m)
        z1 = _z_matrix_from_sqrt(ch.sqrt_W1, rm)
        z2 = _z_matrix_from_sqrt(ch.sqrt_W2, rm)
        return cf_r, rinv, z1, z2

    def value_ft(self, state: SaddleState) -> float:
        rm = self.unpack(state)
        cf_r = _chol(rm, "transmit covariance")
        ld1 = _logdet_capacity_term(self.channel.H1, rm)
        ld2 = _logdet_capacity_term(self.channel.H2, rm)
        return ld1 - ld2 + _chol_logdet(cf_r) / self.t

    def newton_gradient(self, state: SaddleState) -> np.ndarray:
        rm = self.unpack(state)
        _, rinv, z1, z2 = self._parts(rm)
        return self._dm.T @ vec(z1 - z2 + rinv / self.t)

    def newton_system(self, state: SaddleState) -> tuple[np.ndarray, np.ndarray]:
        rm = self.unpack(state)
        _, rinv, z1, z2 = self._parts(rm)
        g = self._dm.T @ vec(z1 - z2 + rinv / self.t)
        h = -sym(
            self._dm.T
            @ (kron(z1, z1) - kron(z2, z2) + kron(rinv, rinv) / self.t)
            @ self._dm
        )
        return g, h


class PerAntennaBarrierObjective:
    """Minimax barrier objective augmented with per-antenna power barriers

        + (1/t) sum_i ln(P_i - r_ii)   [+ (1/t) ln(P_tot - tr R) if capped]

    and no equality constraint row: all power limits act through barriers,
    so the Newton system has no multiplier block.
    """

    def __init__(self, ch: ChannelPair, t: float, caps: np.ndarray,
                 total: float | None = None):
        caps = np.asarray(caps, dtype=float).ravel()
        if caps.size != ch.m:
            raise ValueError(f"need {ch.m} per-antenna caps, got {caps.size}")
        if np.any(caps <= 0):
            raise ValueError("per-antenna caps must be positive")
        # power argument only feeds the inner objective's trace constraint
        # metadata; any positive value works since no equality row is used.
        self._inner = BarrierObjective(ch, t, float(np.sum(caps)))
        self.channel = ch
        self.t = float(t)
        self.caps = caps
        self.total = None if total is None else float(total)
        self.nx = self._inner.nx
        self.ny = self._inner.ny
        self.constraint = None
        self._diag_idx = vech_diag_indices(ch.m)
        self._a_full = np.zeros(self.nx + self.ny)
        self._a_full[: self.nx] = vech(np.eye(ch.m))

    def unpack(self, state: SaddleState):
        return self._inner.unpack(state)

    def _slacks(self, rm: np.ndarray) -> tuple[np.ndarray, float | None]:
        slack = self.caps - np.diag(rm)
        if np.any(slack <= 0):
            raise DomainError("per-antenna power cap violated")
        tslack = None
        if self.total is not None:
            tslack = self.total - float(np.trace(rm))
            if tslack <= 0:
                raise DomainError("total power cap violated")
        return slack, tslack

    def value_ft(self, state: SaddleState) -> float:
        rm, _ = self._inner.unpack(state)
        slack, tslack = self._slacks(rm)
        v = self._inner.value_ft(state) + float(np.sum(np.log(slack))) / self.t
        if tslack is not None:
            v += np.log(tslack) / self.t
        return v

    def newton_gradient(self, state: SaddleState) -> np.ndarray:
        rm, _ = self._inner.unpack(state)
        slack, tslack = self._slacks(rm)
        g = self._inner.newton_gradient(state)
        g = g.copy()
        g[self._diag_idx] -= 1.0 / (self.t * slack)
        if tslack is not None:
            g -= self._a_full / (self.t * tslack)
        return g

    def newton_system(self, state: SaddleState) -> tuple[np.ndarray, np.ndarray]:
        rm, _ = self._inner.unpack(state)
        slack, tslack = self._slacks(rm)
        g, h = self._inner.newton_system(state)
        g = g.copy()
        h = h.copy()
        g[self._diag_idx] -= 1.0 / (self.t * slack)
        h[self._diag_idx, self._diag_idx] -= 1.0 / (self.t * slack**2)
        if tslack is not None:
            g -= self._a_full / (self.t * tslack)
            h -= np.outer(self._a_full, self._a_full) / (self.t * tslack**2)
        return g, h
