"""Simplified DSR baseline for head-to-head comparison.

Differences from the energy-aware protocol: intermediate nodes answer route
requests straight from their caches, every duplicate request is dropped, the
destination replies immediately to the first copy (no wait interval), caches
hold any number of routes per destination in arrival order, and intermediate
nodes may salvage a failed data packet once using their own cache.
"""

from __future__ import annotations

from dataclasses import replace

from .actions import Action, Drop, Unicast
from .base import SourceRoutedNode
from .model import DataPacket, NodeId, RreqPacket, RrepPacket, Route

CACHE_ROUTES_PER_DEST = 32


class DsrRouteCache:
    """Unbounded-style multi-route cache: per destination, routes are kept in
    the order learned and evicted FIFO past a memory cap. Data always follows
    the oldest stored route, so storage order is the selection policy."""

    def __init__(self) -> None:
        self._routes: dict[NodeId, list[Route]] = {}

    def first(self, dest: NodeId) -> Route | None:
        routes = self._routes.get(dest)
        return routes[0] if routes else None

    def routes(self, dest: NodeId) -> list[Route]:
        return self._routes.get(dest, [])

    def add(self, dest: NodeId, route: Route) -> None:
        routes = self._routes.setdefault(dest, [])
        if route in routes:
            return
        routes.append(route)
        if len(routes) > CACHE_ROUTES_PER_DEST:
            routes.pop(0)

    def purge_link(self, a: NodeId, b: NodeId) -> None:
        for dest, routes in self._routes.items():
            self._routes[dest] = [r for r in routes if not r.contains_link(a, b)]


class DsrNode(SourceRoutedNode):
    def __init__(self, node_id: NodeId, initial_energy_j: float, **kw) -> None:
        super().__init__(node_id, initial_energy_j, **kw)
        self.cache = DsrRouteCache()
        self.seen: set[tuple[NodeId, int]] = set()

    # -- SourceRoutedNode hooks ---------------------------------------------------

    def route_for(self, dest: NodeId) -> Route | None:
        return self.cache.first(dest)

    def purge_link(self, a: NodeId, b: NodeId) -> None:
        self.cache.purge_link(a, b)

    def _dispose_failed(self, packets: list[DataPacket], next_hop: NodeId) -> list[Action]:
        actions: list[Action] = []
        for p in packets:
            salvaged = self._salvage(p)
            if salvaged is not None:
                actions.append(salvaged)
            else:
                actions.append(Drop(p, "link-failure"))
        return actions

    # -- flood handling --------------------------------------------------------------

    def handle_rreq(self, rreq: RreqPacket, from_node: NodeId, now: float) -> list[Action]:
        key = (rreq.src, rreq.seq)
        if rreq.dest == self.id:
            # The destination answers every arriving copy; each one carries a
            # different recorded route, which is how the requester ends up
            # with several routes per discovery. Only intermediate nodes
            # suppress duplicates.
            route = Route(rreq.route_record + (self.id,))
            rrep = RrepPacket(rreq.src, self.id, rreq.seq, route, is_primary=True)
            return [Unicast(rrep, route.predecessor(self.id))]
        if key in self.seen:
            return [Drop(rreq, "duplicate")]
        if self.id in rreq.route_record:
            return [Drop(rreq, "loop")]
        self.seen.add(key)
        reply = self._cache_reply(rreq)
        if reply is not None:
            return [reply]
        return self._forward_rreq(rreq)

    def _cache_reply(self, rreq: RreqPacket) -> Unicast | None:
        """Answer from the cache by splicing the recorded path onto the stored
        route; a splice that would loop falls through to normal forwarding."""
        cached = self.cache.first(rreq.dest)
        if cached is None:
            return None
        tail = cached.nodes[1:]
        if not set(rreq.route_record).isdisjoint(tail):
            return None
        route = Route(rreq.route_record + (self.id,) + tail)
        rrep = RrepPacket(rreq.src, rreq.dest, rreq.seq, route, is_primary=True)
        return Unicast(rrep, rreq.route_record[-1])

    # -- replies ------------------------------------------------------------------------

    def handle_rrep(self, rrep: RrepPacket, now: float) -> list[Action]:
        route = rrep.route
        if rrep.src == self.id:
            self.cache.add(rrep.dest, route)
            self._register_route_success(rrep.dest)
            current = self.route_for(rrep.dest)
            assert current is not None
            return self._flush_pending(rrep.dest, current, now)
        if self.id not in route:
            return [Drop(rrep, "malformed")]
        i = route.nodes.index(self.id)
        # Forwarders learn both directions of the path they relay.
        if i < len(route.nodes) - 1:
            self.cache.add(route.dest, Route(route.nodes[i:]))
        if i > 0:
            self.cache.add(route.source, Route(tuple(reversed(route.nodes[: i + 1]))))
        return [Unicast(rrep, route.predecessor(self.id))]

    # -- salvaging ------------------------------------------------------------------------

    def _salvage(self, pkt: DataPacket) -> Unicast | None:
        """Re-route a failed packet over this node's own cached route, at most
        once per packet. Returns the retransmission, or None when impossible."""
        if pkt.salvaged or pkt.source_route is None:
            return None
        cached = self.cache.first(pkt.dest)
        if cached is None:
            return None
        i = pkt.source_route.nodes.index(self.id)
        prefix = pkt.source_route.nodes[: i + 1]
        tail = cached.nodes[1:]
        if not set(prefix[:-1]).isdisjoint(tail):
            return None
        route = Route(prefix + tail)
        fixed = replace(pkt, source_route=route, salvaged=True)
        return Unicast(fixed, route.successor(self.id))
