"""Discrete-event simulator of WiFi Direct multi-group gateway strategies."""

from .costmodel import CostParams
from .engine import ExperimentSpec, RunStats, run_experiment
from .gateway import STRATEGIES, Session, TransferReport, run_strategy
from .topology import GatewayConfig, Mode, Role, Stack

__version__ = "0.1.0"

__all__ = [
    "CostParams",
    "ExperimentSpec",
    "GatewayConfig",
    "Mode",
    "Role",
    "RunStats",
    "STRATEGIES",
    "Session",
    "Stack",
    "TransferReport",
    "run_experiment",
    "run_strategy",
]
