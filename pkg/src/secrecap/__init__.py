"""Secrecy capacity of Gaussian MIMO wiretap channels.

Computes a globally optimal transmit covariance by solving the convex-concave
saddle-point reformulation of the secrecy rate maximization with a
barrier-wrapped primal-dual Newton method, including a degraded-channel fast
path, per-antenna power constraints and the dual power-minimization problem.
"""

from .barrier_solver import (
    KktCertificate,
    SaddleSolution,
    SolverConfig,
    TraceRecord,
    extract_certificate,
    gap_bound,
    solve_degraded,
    solve_minimax,
)
from .channel import (
    ChannelPair,
    Degradedness,
    NoiseCovariance,
    SaddleState,
    TransmitCovariance,
    classify_degraded,
    effective_gram,
    initial_point,
)
from .errors import (
    BracketError,
    DomainError,
    LineSearchError,
    SingularKktError,
    SolverError,
)
from .objective import (
    BarrierObjective,
    DegradedBarrierObjective,
    DerivativeBundle,
    PerAntennaBarrierObjective,
    barrier_value,
    derivatives,
    minimax_objective,
    secrecy_rate,
)
from .variants import DualTarget, PerAntennaBudget, solve_dual, solve_per_antenna

__version__ = "0.1.0"

__all__ = [
    "BarrierObjective",
    "BracketError",
    "ChannelPair",
    "Degradedness",
    "DegradedBarrierObjective",
    "DerivativeBundle",
    "DomainError",
    "DualTarget",
    "KktCertificate",
    "LineSearchError",
    "NoiseCovariance",
    "PerAntennaBarrierObjective",
    "PerAntennaBudget",
    "SaddleSolution",
    "SaddleState",
    "SingularKktError",
    "SolverConfig",
    "SolverError",
    "TraceRecord",
    "TransmitCovariance",
    "barrier_value",
    "classify_degraded",
    "derivatives",
    "effective_gram",
    "extract_certificate",
    "gap_bound",
    "initial_point",
    "minimax_objective",
    "secrecy_rate",
    "solve_degraded",
    "solve_dual",
    "solve_minimax",
    "solve_per_antenna",
]
