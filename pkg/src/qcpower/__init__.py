"""Quantum-correlating power of local channels.

Modules: ``linalg`` (dense matrix helpers), ``states``, ``channels``,
``commutators`` (two-qubit Bloch commutators and witnesses), ``discord``,
``qcp`` (QCP estimation and theorem checks) and ``cli``.
"""

from .channels import KrausChannel, parse_channel_spec, tensor
from .discord import DiscordConfig, DiscordResult, discord
from .qcp import (
    QcpConfig,
    QcpEstimate,
    TheoremConfig,
    TheoremReport,
    genuine_correlation_demo,
    phase_damping_demo,
    qcp_estimate,
    superactivation_witness,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
    verify_theorem4,
)
from .states import CQState, DensityMatrix, cq_build

__version__ = "0.1.0"

__all__ = [
    "CQState",
    "DensityMatrix",
    "DiscordConfig",
    "DiscordResult",
    "KrausChannel",
    "QcpConfig",
    "QcpEstimate",
    "TheoremConfig",
    "TheoremReport",
    "cq_build",
    "discord",
    "genuine_correlation_demo",
    "parse_channel_spec",
    "phase_damping_demo",
    "qcp_estimate",
    "superactivation_witness",
    "tensor",
    "verify_theorem1",
    "verify_theorem2",
    "verify_theorem3",
    "verify_theorem4",
]
