"""Secure ISAC precoding for a MIMO link with an eavesdropper and a sensing receiver.

The package provides the effective channel model, log-det rate functionals,
the eight-subspace decomposition with its DoF bookkeeping, the two-stage
basis / power optimiser, comparison baselines, brute-force oracles and a
Monte-Carlo harness.
"""

from .baselines import (
    OperatingPoint,
    gsvd_secrecy_precoder,
    secrecy_agnostic_precoder,
    sensing_upper_bound,
    time_sharing_curve,
)
from .channel import ChannelSet, SystemDims, build_effective_channels, rayleigh_channel_set, structured_channel_set
from .numerics import DEFAULT_TOL, TolerancePolicy
from .precoder import OptimizerConfig, SolveResult, low_snr_precoder, solve
from .rates import Precoder, Weights, link_rate, secrecy_rate, weighted_objective
from .subspace import decompose, dof_table, quasi_optimal_precoder

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "DEFAULT_TOL",
    "OperatingPoint",
    "OptimizerConfig",
    "Precoder",
    "SolveResult",
    "SystemDims",
    "TolerancePolicy",
    "Weights",
    "build_effective_channels",
    "decompose",
    "dof_table",
    "gsvd_secrecy_precoder",
    "link_rate",
    "low_snr_precoder",
    "quasi_optimal_precoder",
    "rayleigh_channel_set",
    "secrecy_agnostic_precoder",
    "secrecy_rate",
    "sensing_upper_bound",
    "solve",
    "structured_channel_set",
    "time_sharing_curve",
    "weighted_objective",
]
