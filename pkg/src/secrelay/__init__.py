"""Simulation and series-analytics laboratory for a secure relay link.

A source talks to a destination through an energy-harvesting aerial relay
while the destination jams a passive eavesdropper. The package estimates the
connection, secrecy-outage and average secrecy-rate behaviour of that link by
Monte Carlo simulation, evaluates the matching closed-form series, and sweeps
power allocation and relay placement.
"""

from .analytic import (
    asr_lower_bound,
    connection_probability,
    secrecy_outage_probability,
)
from .channel_models import LinkModel, LinkSet, build_links
from .config import ExperimentConfig, load_config
from .geometry import Environment, NetworkGeometry, NodePosition
from .montecarlo import (
    Estimate,
    SimulationPlan,
    estimate_asr,
    estimate_cp,
    estimate_sop,
)
from .optimize import (
    LambdaStarResult,
    SweepGrid,
    brute_force_lambda,
    grid_search_opsa,
    lambda_star,
    phi_lambda,
    placement_sweep,
)
from .protocol import FrameRealization, ProtocolConfig
from .specfun import TruncationOrders

__version__ = "0.1.0"

__all__ = [
    "Environment",
    "Estimate",
    "ExperimentConfig",
    "FrameRealization",
    "LambdaStarResult",
    "LinkModel",
    "LinkSet",
    "NetworkGeometry",
    "NodePosition",
    "ProtocolConfig",
    "SimulationPlan",
    "SweepGrid",
    "TruncationOrders",
    "asr_lower_bound",
    "brute_force_lambda",
    "build_links",
    "connection_probability",
    "estimate_asr",
    "estimate_cp",
    "estimate_sop",
    "grid_search_opsa",
    "lambda_star",
    "load_config",
    "phi_lambda",
    "placement_sweep",
    "secrecy_outage_probability",
    "__version__",
]
