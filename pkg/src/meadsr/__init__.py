"""Discrete-event simulator and protocol library for MEA-DSR, a multipath
energy-aware source-routing protocol, with a simplified DSR baseline."""

from .config import ConfigError, SimConfig
from .dsr import DsrNode
from .engine import SimulationError, run, substream
from .metrics import AggregateStat, MetricsReport, aggregate, compute_metrics
from .model import (
    DataPacket,
    RerrPacket,
    RoutesTableEntry,
    RreqPacket,
    RreqTableEntry,
    RrepPacket,
    Route,
    disjunction_ratio,
    route_length,
    route_score,
)
from .protocol import MeaDsrNode, RouteCache, select_routes
from .trace import EventTrace

__all__ = [
    "AggregateStat",
    "ConfigError",
    "DataPacket",
    "DsrNode",
    "EventTrace",
    "MeaDsrNode",
    "MetricsReport",
    "RerrPacket",
    "Route",
    "RouteCache",
    "RoutesTableEntry",
    "RreqPacket",
    "RreqTableEntry",
    "RrepPacket",
    "SimConfig",
    "SimulationError",
    "aggregate",
    "compute_metrics",
    "disjunction_ratio",
    "route_length",
    "route_score",
    "run",
    "select_routes",
    "substream",
]
