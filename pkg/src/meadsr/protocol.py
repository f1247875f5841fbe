"""MEA-DSR per-node state machine.

Route discovery floods annotate requests with the minimum residual battery
energy seen along the way; only the destination answers. After the first
copy of a flood arrives, the destination collects candidates for a
configurable wait interval, then returns at most two replies: the primary
(best energy-per-hop ratio) and a maximally node-disjoint alternate. A
source uses one route at a time and switches to the alternate only when the
primary breaks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .actions import Action, Broadcast, Drop, LogRouteSelection, StartTimer, Unicast
from .base import TIMER_DISCOVERY, TIMER_WAIT_TIME, ProtocolError, SourceRoutedNode
from .model import (
    DataPacket,
    NodeId,
    RoutesTableEntry,
    RreqPacket,
    RreqTableEntry,
    RrepPacket,
    Route,
    disjunction_ratio,
    route_length,
    route_score,
)


@dataclass(slots=True)
class CacheSlots:
    primary: Route | None = None
    alternate: Route | None = None


class RouteCache:
    """Per-destination cache holding at most a primary and an alternate route.

    The alternate is promoted whenever a purge removes the primary, so the
    invariant `alternate present implies primary present` always holds.
    """

    def __init__(self) -> None:
        self._slots: dict[NodeId, CacheSlots] = {}

    def primary(self, dest: NodeId) -> Route | None:
        slots = self._slots.get(dest)
        return slots.primary if slots else None

    def alternate(self, dest: NodeId) -> Route | None:
        slots = self._slots.get(dest)
        return slots.alternate if slots else None

    def install(self, dest: NodeId, route: Route, is_primary: bool) -> None:
        slots = self._slots.setdefault(dest, CacheSlots())
        if is_primary or slots.primary is None:
            old = slots.primary
            slots.primary = route
            if slots.alternate == route:
                slots.alternate = None
            # A reply that raced ahead of the primary keeps its slot as backup.
            if old is not None and old != route and slots.alternate is None:
                slots.alternate = old
        elif route != slots.primary:
            slots.alternate = route

    def purge_link(self, a: NodeId, b: NodeId) -> None:
        for slots in self._slots.values():
            if slots.alternate is not None and slots.alternate.contains_link(a, b):
                slots.alternate = None
            if slots.primary is not None and slots.primary.contains_link(a, b):
                slots.primary = slots.alternate
                slots.alternate = None


def select_routes(entries: list[RoutesTableEntry]) -> tuple[Route, Route | None]:
    """Pick the primary and alternate route from one flood's candidates.

    Primary: the entry maximizing min_bat_lev / hop_count, ties broken by
    earlier arrival, then by lexicographically smaller node sequence.
    Alternate: among the remaining entries with a different route, the one
    most node-disjoint from the primary, ties broken by the primary's own
    criterion. Returns (primary, None) when no distinct candidate exists.
    """
    if not entries:
        raise ProtocolError("select_routes requires at least one candidate")
    primary_entry = min(entries, key=_primary_key)
    primary = primary_entry.route
    rest = [e for e in entries if e.route != primary]
    if not rest:
        return primary, None
    alternate = min(
        rest,
        key=lambda e: (-disjunction_ratio(primary, e.route),) + _primary_key(e),
    ).route
    return primary, alternate


def _primary_key(e: RoutesTableEntry) -> tuple:
    score = route_score(e.min_bat_lev, route_length(e.route))
    return (-score, e.arrival_time, e.route.nodes)


class MeaDsrNode(SourceRoutedNode):
    """One node's MEA-DSR instance: route cache, flood table and, when acting
    as a destination, the per-flood candidate table and wait timer."""

    def __init__(self, node_id: NodeId, initial_energy_j: float, wait_time_s: float, **kw) -> None:
        super().__init__(node_id, initial_energy_j, **kw)
        self.wait_time_s = wait_time_s
        self.cache = RouteCache()
        self.rreq_table: dict[tuple[NodeId, int], RreqTableEntry] = {}
        self.routes_table: dict[tuple[NodeId, int], list[RoutesTableEntry]] = {}
        self.answered: set[tuple[NodeId, int]] = set()

    # -- SourceRoutedNode hooks -------------------------------------------------

    def route_for(self, dest: NodeId) -> Route | None:
        return self.cache.primary(dest)

    def purge_link(self, a: NodeId, b: NodeId) -> None:
        self.cache.purge_link(a, b)

    def _dispose_failed(self, packets: list[DataPacket], next_hop: NodeId) -> list[Action]:
        # No salvaging: every packet on the broken route is lost.
        return [Drop(p, "link-failure") for p in packets]

    # -- flood handling -----------------------------------------------------------

    def handle_rreq(self, rreq: RreqPacket, from_node: NodeId, now: float) -> list[Action]:
        key = (rreq.src, rreq.seq)
        if rreq.dest == self.id:
            if key in self.answered:
                return [Drop(rreq, "late-rreq")]
            route = Route(rreq.route_record + (self.id,))
            entry = RoutesTableEntry(rreq.src, rreq.seq, route, rreq.min_bat_lev, now)
            bucket = self.routes_table.setdefault(key, [])
            bucket.append(entry)
            if len(bucket) == 1:
                return [StartTimer(TIMER_WAIT_TIME, self.wait_time_s, key)]
            return []
        if self.id in rreq.route_record:
            return [Drop(rreq, "loop")]
        entry = self.rreq_table.get(key)
        if entry is None:
            self.rreq_table[key] = RreqTableEntry(rreq.hop_count, from_node)
            return self._forward_rreq(rreq)
        if (
            from_node != entry.last_node
            and rreq.hop_count <= entry.nb_hops
            and entry.duplicates_forwarded == 0
        ):
            entry.duplicates_forwarded += 1
            return self._forward_rreq(rreq)
        return [Drop(rreq, "duplicate")]

    def _stamp_rreq(self, rreq: RreqPacket) -> RreqPacket:
        if len(rreq.route_record) == 1:
            # First hop away from the origin: overwrite the origin's stamp.
            new_min = self.energy
        else:
            new_min = min(rreq.min_bat_lev, self.energy)
        return replace(
            rreq,
            min_bat_lev=new_min,
            route_record=rreq.route_record + (self.id,),
            hop_count=rreq.hop_count + 1,
        )

    # -- route selection at the destination ---------------------------------------

    def on_timer(self, kind: str, key: tuple, now: float) -> list[Action]:
        if kind == TIMER_WAIT_TIME:
            return self._on_wait_time(key, now)
        return super().on_timer(kind, key, now)

    def _on_wait_time(self, key: tuple, now: float) -> list[Action]:
        entries = self.routes_table.pop(key, None)
        if not entries:
            raise ProtocolError(
                f"wait timer fired for {key} with no candidates at node {self.id}"
            )
        self.answered.add(key)
        src, seq = key
        primary, alternate = select_routes(entries)
        actions: list[Action] = [
            LogRouteSelection(src, seq, primary, alternate, len(entries))
        ]
        rrep = RrepPacket(src, self.id, seq, primary, is_primary=True)
        actions.append(Unicast(rrep, primary.predecessor(self.id)))
        if alternate is not None:
            rrep2 = RrepPacket(src, self.id, seq, alternate, is_primary=False)
            actions.append(Unicast(rrep2, alternate.predecessor(self.id)))
        return actions

    # -- replies --------------------------------------------------------------------

    def handle_rrep(self, rrep: RrepPacket, now: float) -> list[Action]:
        route = rrep.route
        if rrep.src == self.id:
            self.cache.install(rrep.dest, route, rrep.is_primary)
            self._register_route_success(rrep.dest)
            primary = self.cache.primary(rrep.dest)
            assert primary is not None
            return self._flush_pending(rrep.dest, primary, now)
        if self.id not in route:
            return [Drop(rrep, "malformed")]
        return [Unicast(rrep, route.predecessor(self.id))]
