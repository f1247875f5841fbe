"""Domain types shared by both routing protocols, plus the route arithmetic
used for primary/alternate selection.

Energy is carried as a plain float in joules throughout the package; route
scores are therefore joules per hop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

NodeId = int


@dataclass(frozen=True, slots=True, order=True)
class Route:
    """An ordered, loop-free node sequence from a source to a destination.

    Routes are the unit of both selection and forwarding: data packets carry
    their full route and every forwarder looks up its successor in it.
    """

    nodes: tuple[NodeId, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError(f"route needs at least 2 nodes, got {self.nodes!r}")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"route contains a loop: {self.nodes!r}")
        if any(n < 0 for n in self.nodes):
            raise ValueError(f"negative node id in route: {self.nodes!r}")

    @property
    def source(self) -> NodeId:
        return self.nodes[0]

    @property
    def dest(self) -> NodeId:
        return self.nodes[-1]

    def successor(self, node: NodeId) -> NodeId:
        """Next hop after `node` when traveling source -> dest."""
        i = self.nodes.index(node)
        return self.nodes[i + 1]

    def predecessor(self, node: NodeId) -> NodeId:
        """Next hop after `node` when traveling dest -> source."""
        i = self.nodes.index(node)
        return self.nodes[i - 1]

    def contains_link(self, a: NodeId, b: NodeId) -> bool:
        """True if (a, b) is an edge of this route, in either orientation."""
        for u, v in zip(self.nodes, self.nodes[1:]):
            if (u == a and v == b) or (u == b and v == a):
                return True
        return False

    def __contains__(self, node: NodeId) -> bool:
        return node in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)


def route_length(route: Route) -> int:
    """Hop count of a route (edges, not nodes)."""
    return len(route.nodes) - 1


def route_score(min_bat_lev: float, length: int) -> float:
    """Selection score of a candidate route: bottleneck energy per hop.

    The primary route is the candidate maximizing this ratio, so routes that
    are both short and energy-rich win; a depleted route scores zero.
    """
    if length < 1:
        raise ValueError(f"route length must be >= 1, got {length}")
    if min_bat_lev < 0:
        raise ValueError(f"min_bat_lev must be >= 0, got {min_bat_lev}")
    return min_bat_lev / length


def disjunction_ratio(primary: Route, candidate: Route) -> float:
    """Fraction of the candidate's relay nodes not shared with the primary.

    With I(R) the intermediate nodes of R (endpoints excluded), the ratio is
    1 - |I(candidate) & I(primary)| / |I(candidate)|. A direct route with no
    relays shares nothing, so it rates 1.0. An identical route rates 0.0.
    """
    if primary.source != candidate.source or primary.dest != candidate.dest:
        raise ValueError(
            f"routes must share endpoints: {primary.nodes!r} vs {candidate.nodes!r}"
        )
    cand_inner = set(candidate.nodes[1:-1])
    if not cand_inner:
        return 1.0
    shared = len(cand_inner & set(primary.nodes[1:-1]))
    return 1.0 - shared / len(cand_inner)


@dataclass(frozen=True, slots=True)
class RreqPacket:
    """Flooded route request.

    `route_record` accumulates the traversal (origin first, forwarders
    appended in order); `min_bat_lev` tracks the minimum residual energy
    among the forwarders. The origin stamps its own energy at origination
    and the first-hop forwarder overwrites it, so the field is well defined
    even for a direct one-hop route.
    """

    src: NodeId
    dest: NodeId
    seq: int
    min_bat_lev: float
    route_record: tuple[NodeId, ...]
    hop_count: int

    def __post_init__(self) -> None:
        if self.hop_count != len(self.route_record) - 1:
            raise ValueError(
                f"hop_count {self.hop_count} != route_record length - 1 "
                f"({self.route_record!r})"
            )


@dataclass(frozen=True, slots=True)
class RrepPacket:
    """Route reply, unicast from the destination back along the reversed
    discovered route. `src` is the node that requested the route."""

    src: NodeId
    dest: NodeId
    seq: int
    route: Route
    is_primary: bool

    def __post_init__(self) -> None:
        if self.route.source != self.src or self.route.dest != self.dest:
            raise ValueError("reply route endpoints must match src/dest")


@dataclass(frozen=True, slots=True)
class RerrPacket:
    """Route error, unicast hop by hop toward the source of the failed
    packet. `return_path` starts at the reporter and ends at that source."""

    reporter: NodeId
    broken_from: NodeId
    broken_to: NodeId
    return_path: tuple[NodeId, ...]

    def __post_init__(self) -> None:
        if self.return_path and self.return_path[0] != self.reporter:
            raise ValueError("return path must start at the reporter")
        if self.broken_from != self.reporter:
            raise ValueError("broken link must start at the reporter")


@dataclass(frozen=True, slots=True)
class DataPacket:
    """Application payload with its source route.

    `source_route` is None while the packet waits in the origin's pending
    buffer for a discovery to finish. `salvaged` marks a packet already
    re-routed once by a DSR intermediate (one salvage per packet).
    """

    src: NodeId
    dest: NodeId
    flow_id: int
    seq: int
    source_route: Route | None
    payload_bytes: int
    created_at: float
    salvaged: bool = False

    def __post_init__(self) -> None:
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be positive")
        if self.source_route is not None:
            if self.source_route.source != self.src or self.source_route.dest != self.dest:
                raise ValueError("source route endpoints must match src/dest")


Packet = RreqPacket | RrepPacket | RerrPacket | DataPacket


@dataclass(slots=True)
class RreqTableEntry:
    """Per-(src, seq) flood bookkeeping at a forwarding node."""

    nb_hops: int
    last_node: NodeId
    duplicates_forwarded: int = 0


@dataclass(frozen=True, slots=True)
class RoutesTableEntry:
    """Destination-side candidate route, one per received flood copy."""

    src: NodeId
    seq: int
    route: Route
    min_bat_lev: float
    arrival_time: float
