"""Machinery shared by the two source-routing protocol state machines:
the pending-packet buffer, route-discovery retry logic, data forwarding and
route-error propagation. Protocol-specific behavior (flood handling, route
caches, reply generation) lives in the subclasses."""

from __future__ import annotations

from collections import deque
from dataclasses import replace

from .actions import Action, Broadcast, DeliverLocally, Drop, StartTimer, Unicast
from .model import DataPacket, NodeId, RerrPacket, RreqPacket, RrepPacket, Route

TIMER_DISCOVERY = "discovery"
TIMER_WAIT_TIME = "wait-time"

# After a discovery episode exhausts its retries, further episodes for that
# destination are held off exponentially so an unreachable destination does
# not turn into a continuous flood storm.
BACKOFF_BASE_S = 1.0
BACKOFF_CAP_S = 8.0
# Buffered packets are held for at most one discovery-timeout's worth of
# time; anything older is expired rather than flushed, so a healed partition
# does not flood the delay statistics with stale deliveries.
PENDING_MAX_AGE_S = 0.5


class ProtocolError(RuntimeError):
    """A protocol contract was violated; the simulation must abort loudly."""


class SourceRoutedNode:
    """Base class for one node's protocol instance.

    Handlers mutate the node's own state and return the actions the engine
    should perform. Given equal starting state and equal inputs they always
    produce equal results; nothing here reads a clock, an RNG or any global.
    """

    def __init__(
        self,
        node_id: NodeId,
        initial_energy_j: float,
        *,
        pending_capacity: int = 64,
        discovery_timeout_s: float = 0.5,
        discovery_retries: int = 3,
        rreq_ttl: int = 16,
    ) -> None:
        self.id = node_id
        self.energy = initial_energy_j
        self.pending_capacity = pending_capacity
        self.discovery_timeout_s = discovery_timeout_s
        self.discovery_retries = discovery_retries
        self.rreq_ttl = rreq_ttl
        self.pending: deque[DataPacket] = deque()
        self.next_rreq_seq = 0
        # dest -> (rreq seq of the live attempt, retries already used)
        self.in_flight: dict[NodeId, tuple[int, int]] = {}
        # dest -> end time of local traffic toward it; a route error for a
        # destination with ongoing traffic triggers rediscovery right away
        # instead of waiting for the next origination.
        self.traffic_until: dict[NodeId, float] = {}
        self.backoff_until: dict[NodeId, float] = {}
        self.backoff_streak: dict[NodeId, int] = {}

    # -- hooks the concrete protocols implement -------------------------------

    def route_for(self, dest: NodeId) -> Route | None:
        """Route the node would currently send data to `dest` on."""
        raise NotImplementedError

    def purge_link(self, a: NodeId, b: NodeId) -> None:
        """Forget every cached route using edge (a, b) in either orientation."""
        raise NotImplementedError

    def handle_rreq(self, rreq: RreqPacket, from_node: NodeId, now: float) -> list[Action]:
        raise NotImplementedError

    def handle_rrep(self, rrep: RrepPacket, now: float) -> list[Action]:
        raise NotImplementedError

    def _dispose_failed(self, packets: list[DataPacket], next_hop: NodeId) -> list[Action]:
        """What an intermediate does with data packets whose next hop died."""
        raise NotImplementedError

    # -- event entry points ----------------------------------------------------

    def handle_packet(self, packet, from_node: NodeId, now: float) -> list[Action]:
        if isinstance(packet, RreqPacket):
            return self.handle_rreq(packet, from_node, now)
        if isinstance(packet, RrepPacket):
            return self.handle_rrep(packet, now)
        if isinstance(packet, RerrPacket):
            return self.handle_rerr(packet, now)
        if isinstance(packet, DataPacket):
            return self.handle_data(packet, now)
        raise ProtocolError(f"unknown packet type: {packet!r}")

    def originate_data(
        self, dest: NodeId, flow_id: int, seq: int, payload_bytes: int, now: float
    ) -> list[Action]:
        """Send a fresh application packet, or buffer it and (maybe) start a
        route discovery when no route is cached."""
        if dest == self.id:
            raise ProtocolError("a node cannot originate traffic to itself")
        route = self.route_for(dest)
        if route is not None:
            pkt = DataPacket(self.id, dest, flow_id, seq, route, payload_bytes, now)
            return [Unicast(pkt, route.successor(self.id))]
        pkt = DataPacket(self.id, dest, flow_id, seq, None, payload_bytes, now)
        actions: list[Action] = self._expire_pending(now)
        if len(self.pending) >= self.pending_capacity:
            actions.append(Drop(pkt, "buffer-overflow"))
            return actions
        self.pending.append(pkt)
        if dest not in self.in_flight and now >= self.backoff_until.get(dest, 0.0):
            actions.extend(self._start_discovery(dest))
        return actions

    def handle_data(self, pkt: DataPacket, now: float) -> list[Action]:
        if pkt.dest == self.id:
            return [DeliverLocally(pkt)]
        route = pkt.source_route
        if route is None or self.id not in route:
            return [Drop(pkt, "malformed")]
        return [Unicast(pkt, route.successor(self.id))]

    def on_timer(self, kind: str, key: tuple, now: float) -> list[Action]:
        if kind == TIMER_DISCOVERY:
            return self._on_discovery_timer(key, now)
        raise ProtocolError(f"unknown timer kind {kind!r} at node {self.id}")

    def on_link_failure(
        self, packets: list[DataPacket], next_hop: NodeId, now: float
    ) -> list[Action]:
        """Transmission of `packets[0]` to `next_hop` just failed; the rest
        were queued behind it for the same dead hop. One route error covers
        the whole batch."""
        lead = packets[0]
        self.purge_link(self.id, next_hop)
        actions: list[Action] = []
        if lead.src == self.id:
            # The source learns of the break directly; no error travels the air.
            actions.extend(Drop(p, "link-failure") for p in packets)
        else:
            assert lead.source_route is not None
            i = lead.source_route.nodes.index(self.id)
            return_path = tuple(reversed(lead.source_route.nodes[: i + 1]))
            rerr = RerrPacket(self.id, self.id, next_hop, return_path)
            actions.append(Unicast(rerr, return_path[1]))
            actions.extend(self._dispose_failed(packets, next_hop))
        actions.extend(self._after_route_change(now))
        return actions

    def handle_rerr(self, rerr: RerrPacket, now: float) -> list[Action]:
        """Purge routes over the broken link; forward toward the source and,
        once there, fall back to a surviving route or rediscover."""
        self.purge_link(rerr.broken_from, rerr.broken_to)
        path = rerr.return_path
        if self.id not in path:
            return [Drop(rerr, "malformed")]
        i = path.index(self.id)
        actions: list[Action] = []
        if i < len(path) - 1:
            actions.append(Unicast(rerr, path[i + 1]))
        actions.extend(self._after_route_change(now))
        return actions

    # -- shared internals --------------------------------------------------------

    def _start_discovery(self, dest: NodeId, retries_used: int = 0) -> list[Action]:
        seq = self.next_rreq_seq
        self.next_rreq_seq += 1
        self.in_flight[dest] = (seq, retries_used)
        rreq = RreqPacket(
            src=self.id,
            dest=dest,
            seq=seq,
            min_bat_lev=self.energy,
            route_record=(self.id,),
            hop_count=0,
        )
        return [
            Broadcast(rreq),
            StartTimer(TIMER_DISCOVERY, self.discovery_timeout_s, (dest, seq)),
        ]

    def _on_discovery_timer(self, key: tuple, now: float) -> list[Action]:
        dest, seq = key
        live = self.in_flight.get(dest)
        if live is None or live[0] != seq:
            return []  # answered or superseded in the meantime
        if self.route_for(dest) is not None:
            del self.in_flight[dest]
            return []
        retries_used = live[1]
        if retries_used >= self.discovery_retries:
            del self.in_flight[dest]
            streak = self.backoff_streak.get(dest, 0) + 1
            self.backoff_streak[dest] = streak
            holdoff = min(BACKOFF_BASE_S * 2 ** (streak - 1), BACKOFF_CAP_S)
            self.backoff_until[dest] = now + holdoff
            dropped = [p for p in self.pending if p.dest == dest]
            self.pending = deque(p for p in self.pending if p.dest != dest)
            return [Drop(p, "discovery-failed") for p in dropped]
        return self._start_discovery(dest, retries_used + 1)

    def _flush_pending(self, dest: NodeId, route: Route, now: float) -> list[Action]:
        out: list[Action] = self._expire_pending(now)
        keep: deque[DataPacket] = deque()
        nxt = route.successor(self.id)
        for p in self.pending:
            if p.dest == dest:
                out.append(Unicast(replace(p, source_route=route), nxt))
            else:
                keep.append(p)
        self.pending = keep
        return out

    def _expire_pending(self, now: float) -> list[Action]:
        if not self.pending or now - self.pending[0].created_at <= PENDING_MAX_AGE_S:
            return []
        out: list[Action] = []
        keep: deque[DataPacket] = deque()
        for p in self.pending:
            if now - p.created_at > PENDING_MAX_AGE_S:
                out.append(Drop(p, "buffer-expired"))
            else:
                keep.append(p)
        self.pending = keep
        return out

    def _register_route_success(self, dest: NodeId) -> None:
        self.in_flight.pop(dest, None)
        self.backoff_until.pop(dest, None)
        self.backoff_streak.pop(dest, None)

    def _after_route_change(self, now: float) -> list[Action]:
        """After a purge, resume affected destinations: flush buffered packets
        where a route survives, rediscover where traffic (buffered or ongoing)
        is left without one."""
        actions: list[Action] = []
        interesting = dict.fromkeys(p.dest for p in self.pending)
        for dest, until in self.traffic_until.items():
            if now < until:
                interesting.setdefault(dest)
        for dest in interesting:
            route = self.route_for(dest)
            if route is not None:
                actions.extend(self._flush_pending(dest, route, now))
            elif (
                dest not in self.in_flight
                and now >= self.backoff_until.get(dest, 0.0)
                and self._needs_route(dest, now)
            ):
                actions.extend(self._start_discovery(dest))
        return actions

    def _needs_route(self, dest: NodeId, now: float) -> bool:
        if any(p.dest == dest for p in self.pending):
            return True
        return now < self.traffic_until.get(dest, 0.0)

    def _forward_rreq(self, rreq: RreqPacket) -> list[Action]:
        """Append self to the record and rebroadcast, bounded by the flood TTL."""
        if rreq.hop_count + 1 > self.rreq_ttl:
            return [Drop(rreq, "ttl-exceeded")]
        fwd = self._stamp_rreq(rreq)
        return [Broadcast(fwd)]

    def _stamp_rreq(self, rreq: RreqPacket) -> RreqPacket:
        return replace(
            rreq,
            route_record=rreq.route_record + (self.id,),
            hop_count=rreq.hop_count + 1,
        )
