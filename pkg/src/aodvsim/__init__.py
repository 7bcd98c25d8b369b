"""An executable model of AODV route discovery and maintenance.

The package couples a discrete-event network simulator with runtime
monitors for the protocol's ordering invariants and a bounded
explicit-state explorer that searches interleavings for violations.
"""

from .config import Config, PRESETS, from_preset
from .messages import DataPkt, Rerr, Rrep, Rreq, wire
from .netsim import DEFAULT_SEED, Scenario, ScenarioEvent, replay, run
from .node import Node
from .rt import RouteEntry, RoutingTable, render_entry

__all__ = [
    "Config",
    "PRESETS",
    "from_preset",
    "Node",
    "RouteEntry",
    "RoutingTable",
    "render_entry",
    "Rreq",
    "Rrep",
    "Rerr",
    "DataPkt",
    "wire",
    "Scenario",
    "ScenarioEvent",
    "run",
    "replay",
    "DEFAULT_SEED",
]

__version__ = "0.1.0"
