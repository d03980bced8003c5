"""Quantum fluctuations of discrete solitons in Kerr waveguide arrays.

Gaussian moment closure for the quantum discrete NLS lattice, with soliton
profiles, pairwise logarithmic negativity, a third-order validity monitor
and an exact few-mode Fock oracle.
"""
__version__ = "0.1.0"

from .core import SystemParams, integrate_classical
from .entanglement import covariance, log_negativity, negativity_map
from .errors import DnlsqError
from .moments import MomentState, Trajectory, initial_state, propagate
from .soliton import (
    FUNDAMENTAL,
    TWISTED,
    MultiTwisted,
    SolitonKind,
    SolitonProfile,
    find_soliton,
    linear_stability,
)
from .validity import ClosureState, ThirdCumulantState, err_metric, first_crossing

__all__ = [
    "__version__",
    "SystemParams",
    "integrate_classical",
    "covariance",
    "log_negativity",
    "negativity_map",
    "DnlsqError",
    "MomentState",
    "Trajectory",
    "initial_state",
    "propagate",
    "FUNDAMENTAL",
    "TWISTED",
    "MultiTwisted",
    "SolitonKind",
    "SolitonProfile",
    "find_soliton",
    "linear_stability",
    "ClosureState",
    "ThirdCumulantState",
    "err_metric",
    "first_crossing",
]
