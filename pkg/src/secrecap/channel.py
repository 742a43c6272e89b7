"""Wiretap channel model: gain matrices, Gram matrices, degradedness, and
the feasible set of transmit/noise covariances.

All types are treated as immutable after construction and are safe to share
between concurrent solver runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import DomainError
from .matcalc import psd_sqrt, sym, vech

__all__ = [
    "ChannelPair",
    "NoiseCovariance",
    "TransmitCovariance",
    "SaddleState",
    "Degradedness",
    "classify_degraded",
    "effective_gram",
    "initial_point",
]


class Degradedness(enum.Enum):
    DEGRADED = "degraded"
    REVERSELY_DEGRADED = "reversely_degraded"
    INDEFINITE = "indefinite"


@dataclass
class ChannelPair:
    """Legitimate (H1: n1 x m) and eavesdropper (H2: n2 x m) channel matrices
    with derived Gram matrices W1 = H1'H1, W2 = H2'H2 and the row-stacked
    H = [H1; H2]."""

    H1: np.ndarray
    H2: np.ndarray
    W1: np.ndarray = field(init=False, repr=False)
    W2: np.ndarray = field(init=False, repr=False)
    Hstack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.H1 = np.atleast_2d(np.asarray(self.H1, dtype=float))
        self.H2 = np.atleast_2d(np.asarray(self.H2, dtype=float))
        if not (np.all(np.isfinite(self.H1)) and np.all(np.isfinite(self.H2))):
            raise ValueError("channel matrices must be finite")
        if self.H1.shape[1] != self.H2.shape[1]:
            raise ValueError(
                "column mismatch: H1 has %d columns, H2 has %d"
                % (self.H1.shape[1], self.H2.shape[1])
            )
        self.W1 = sym(self.H1.T @ self.H1)
        self.W2 = sym(self.H2.T @ self.H2)
        self.Hstack = np.vstack([self.H1, self.H2])
        # Symmetric square roots reused by every objective evaluation.
        self._sqrt_W1 = psd_sqrt(self.W1)
        self._sqrt_W2 = psd_sqrt(self.W2)

    @property
    def m(self) -> int:
        return self.H1.shape[1]

    @property
    def n1(self) -> int:
        return self.H1.shape[0]

    @property
    def n2(self) -> int:
        return self.H2.shape[0]

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def sqrt_W1(self) -> np.ndarray:
        return self._sqrt_W1

    @property
    def sqrt_W2(self) -> np.ndarray:
        return self._sqrt_W2


@dataclass
class NoiseCovariance:
    """Joint receiver/eavesdropper noise covariance with unit diagonal
    blocks; the free parameter is the cross block K21 (n2 x n1).

    Feasible iff the spectral norm of K21 is below 1, which is equivalent
    to K > 0 for this block structure.
    """

    K21: np.ndarray

    def __post_init__(self):
        self.K21 = np.atleast_2d(np.asarray(self.K21, dtype=float))

    @property
    def n1(self) -> int:
        return self.K21.shape[1]

    @property
    def n2(self) -> int:
        return self.K21.shape[0]

    @property
    def K(self) -> np.ndarray:
        n1, n2 = self.n1, self.n2
        k = np.eye(n1 + n2)
        k[n1:, :n1] = self.K21
        k[:n1, n1:] = self.K21.T
        return k

    def spectral_norm(self) -> float:
        if self.K21.size == 0:
            return 0.0
        return float(np.linalg.norm(self.K21, 2))

    def is_feasible(self) -> bool:
        return self.spectral_norm() < 1.0


@dataclass
class TransmitCovariance:
    """Transmit covariance matrix with its power budget (noise-normalized)."""

    R: np.ndarray
    power: float

    def __post_init__(self):
        self.R = sym(np.atleast_2d(np.asarray(self.R, dtype=float)))

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.R))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.R)


@dataclass
class SaddleState:
    """Primal-dual iterate: x = vech(R), y = vec(K21), scalar dual lam.

    y is empty in the eavesdropper-free (degraded) reduction; lam is unused
    when no equality constraint is active.
    """

    x: np.ndarray
    y: np.ndarray
    lam: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def replace(self, x=None, y=None, lam=None) -> "SaddleState":
        return SaddleState(
            x=self.x if x is None else x,
            y=self.y if y is None else y,
            lam=self.lam if lam is None else lam,
        )

    def stepped(self, dz: np.ndarray, dlam: float, s: float) -> "SaddleState":
        nx = self.x.size
        z = self.z + s * dz
        return SaddleState(x=z[:nx], y=z[nx:], lam=self.lam + s * dlam)


def degraded_tolerance(ch: ChannelPair) -> float:
    """Relative tolerance for eigenvalue sign tests on W1 - W2."""
    scale = 1.0 + np.linalg.norm(ch.W1, 2) + np.linalg.norm(ch.W2, 2)
    return 1e-9 * scale


def classify_degraded(ch: ChannelPair, tol: float | None = None):
    """Classify the channel by the eigenvalues of W1 - W2.

    Returns (Degradedness, eigenvalues). Degraded when all eigenvalues are
    >= -tol, reversely degraded when all are <= tol, indefinite otherwise.
    A zero difference counts as degraded.
    """
    if tol is None:
        tol = degraded_tolerance(ch)
    eigs = np.linalg.eigvalsh(sym(ch.W1 - ch.W2))
    if eigs.min() >= -tol:
        return Degradedness.DEGRADED, eigs
    if eigs.max() <= tol:
        return Degradedness.REVERSELY_DEGRADED, eigs
    return Degradedness.INDEFINITE, eigs


def effective_gram(ch: ChannelPair, K: NoiseCovariance) -> np.ndarray:
    """W = H' K^{-1} H for the stacked channel. Satisfies W >= W2.

    Raises DomainError when K is not strictly positive definite.
    """
    if K.n1 != ch.n1 or K.n2 != ch.n2:
        raise ValueError("noise covariance block dims do not match the channel")
    try:
        c, low = sla.cho_factor(K.K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DomainError("noise covariance is not positive definite") from exc
    solved = sla.cho_solve((c, low), ch.Hstack, check_finite=False)
    return sym(ch.Hstack.T @ solved)


def initial_point(ch: ChannelPair, power: float) -> SaddleState:
    """Standard interior start: R = (P/m) I, K21 = 0, lam = 0."""
    if power <= 0:
        raise ValueError("power budget must be positive")
    m = ch.m
    x0 = vech(np.eye(m) * (power / m))
    y0 = np.zeros(ch.n1 * ch.n2)
    return SaddleState(x=x0, y=y0, lam=0.0)
