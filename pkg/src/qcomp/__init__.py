"""Coordinated multipoint downlink beamforming with low-resolution DACs.

Minimizes the largest per-antenna transmit power subject to per-user SINR
targets, through its virtual-uplink dual.
"""
from .dual import InfeasibleError, NumericalError, SolverError
from .metrics import SolveReport, antenna_powers, dl_sinr, papr_db
from .netgen import ChannelSet, ConfigError, NetworkConfig, realize
from .outer import OuterConfig, solve_baseline, solve_pa
from .quant import QuantModel, from_bits

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "ConfigError",
    "InfeasibleError",
    "NetworkConfig",
    "NumericalError",
    "OuterConfig",
    "QuantModel",
    "SolveReport",
    "SolverError",
    "antenna_powers",
    "dl_sinr",
    "from_bits",
    "papr_db",
    "realize",
    "solve_baseline",
    "solve_pa",
]
