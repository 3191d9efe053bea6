"""Inexact accelerated proximal gradient methods with oracle counting.

The submodules are usable on their own; the most common entry points are
re-exported here.
"""

from .iapg import (
    IapgConfig,
    InnerSolveError,
    LineSearchFailure,
    SolveResult,
    SolverFailure,
    apg_solve,
    iapg_solve,
)
from .ipalm import AffineConstrainedProblem, IpalmConfig, ipalm_solve
from .numkit import LinearOperator, make_rng, op_norm_sq
from .oracles import CompositeProblem, SmoothOracle, ZeroSmooth, stationarity
from .prox import BACKEND
from .smoothing import SaddleProblem, duality_gap, smoothed_solve

__version__ = "0.1.0"

__all__ = [
    "AffineConstrainedProblem",
    "BACKEND",
    "CompositeProblem",
    "IapgConfig",
    "InnerSolveError",
    "IpalmConfig",
    "LineSearchFailure",
    "LinearOperator",
    "SaddleProblem",
    "SmoothOracle",
    "SolveResult",
    "SolverFailure",
    "ZeroSmooth",
    "apg_solve",
    "duality_gap",
    "iapg_solve",
    "ipalm_solve",
    "make_rng",
    "op_norm_sq",
    "smoothed_solve",
    "stationarity",
]
