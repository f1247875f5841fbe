"""Outputs of the per-node protocol state machines.

Protocol handlers never touch the radio or the clock directly; they return a
list of these actions and the simulation engine carries them out. This keeps
every handler a deterministic function of (node state, input event, now).
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import DataPacket, NodeId, Packet, Route


@dataclass(frozen=True, slots=True)
class Broadcast:
    packet: Packet


@dataclass(frozen=True, slots=True)
class Unicast:
    packet: Packet
    next_hop: NodeId


@dataclass(frozen=True, slots=True)
class StartTimer:
    kind: str
    duration_s: float
    key: tuple


@dataclass(frozen=True, slots=True)
class DeliverLocally:
    packet: DataPacket


@dataclass(frozen=True, slots=True)
class Drop:
    packet: Packet
    reason: str


@dataclass(frozen=True, slots=True)
class LogRouteSelection:
    """Trace-only action recording a destination's primary/alternate choice."""

    src: NodeId
    seq: int
    primary: Route
    alternate: Route | None
    candidate_count: int


Action = Broadcast | Unicast | StartTimer | DeliverLocally | Drop | LogRouteSelection
