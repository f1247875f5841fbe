"""Deterministic discrete-event simulation engine.

One run owns a global event heap ordered strictly by (time, tie-break id),
per-node FIFO transmit queues over a fixed-radius disk radio, random-waypoint
trajectories, CBR traffic sources, and energy accounting (a fixed transmit
and receive power over each packet's airtime). Everything observable lands
in an EventTrace.

The radio serializes transmissions per node and models no contention or
collisions; link failure is detected geometrically when a unicast's next hop
is out of range (or dead) at the send instant. A failed transmission still
costs transmit energy and airtime. Traffic sources stop at the configured
duration but the event queue drains fully, so packets in flight at the end
still reach their destinations.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random

from .actions import (
    Broadcast,
    DeliverLocally,
    Drop,
    LogRouteSelection,
    StartTimer,
    Unicast,
)
from .base import ProtocolError
from .config import SimConfig
from .dsr import DsrNode
from .mobility import Trajectory, rwp_trajectory
from .model import DataPacket, RerrPacket, RreqPacket, RrepPacket
from .protocol import MeaDsrNode
from .trace import (
    DELIVER,
    DROP,
    ORIGINATE,
    RECV,
    ROUTE_SELECT,
    RREQ_FWD,
    SEND,
    EventTrace,
    packet_info,
)

_CBR, _TXC, _DLV, _TMR = 0, 1, 2, 3


class SimulationError(RuntimeError):
    pass


def substream(seed: int, *labels) -> random.Random:
    """Derive an independent, platform-stable RNG substream from the master
    seed. Streams are keyed by label so unrelated draws never interleave."""
    key = ":".join(str(x) for x in (seed, *labels)).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


class _NodeRuntime:
    __slots__ = ("proto", "traj", "queue", "busy")

    def __init__(self, proto, traj: Trajectory) -> None:
        self.proto = proto
        self.traj = traj
        self.queue: list = []  # FIFO of (packet, mode, next_hop)
        self.busy = False


def run(config: SimConfig) -> EventTrace:
    """Execute one simulation and return its complete trace."""
    return _Simulation(config).run()


class _Simulation:
    def __init__(self, cfg: SimConfig) -> None:
        self.cfg = cfg
        self.trace = EventTrace(cfg)
        self.now = 0.0
        self._heap: list = []
        self._tie = 0
        self._range2 = cfg.tx_range_m * cfg.tx_range_m
        self._byte_time = 8.0 / cfg.bitrate_bps

        self.nodes: list[_NodeRuntime] = []
        proto_kw = dict(
            pending_capacity=cfg.pending_capacity,
            discovery_timeout_s=cfg.discovery_timeout_s,
            discovery_retries=cfg.discovery_retries,
            rreq_ttl=cfg.rreq_ttl,
        )
        for i in range(cfg.node_count):
            if cfg.protocol == "mea-dsr":
                proto = MeaDsrNode(i, cfg.initial_energy_j, cfg.wait_time_s, **proto_kw)
            else:
                proto = DsrNode(i, cfg.initial_energy_j, **proto_kw)
            traj = rwp_trajectory(substream(cfg.seed, "mobility", i), cfg)
            self.nodes.append(_NodeRuntime(proto, traj))

        self.flows: list[tuple[int, int, float]] = []
        for k in range(cfg.connections):
            rng = substream(cfg.seed, "flow", k)
            src = rng.randrange(cfg.node_count)
            dst = rng.randrange(cfg.node_count)
            while dst == src:
                dst = rng.randrange(cfg.node_count)
            start = rng.uniform(cfg.flow_start_min_s, cfg.flow_start_max_s)
            self.flows.append((src, dst, start))
            if start <= cfg.sim_duration_s:
                self.nodes[src].proto.traffic_until[dst] = cfg.sim_duration_s
        self._flow_seq = [0] * cfg.connections

    # -- event plumbing ---------------------------------------------------------

    def _schedule(self, t: float, kind: int, data) -> None:
        heapq.heappush(self._heap, (t, self._tie, kind, data))
        self._tie += 1

    def run(self) -> EventTrace:
        cfg = self.cfg
        self.trace.initial_energy_j = [cfg.initial_energy_j] * cfg.node_count
        for k, (_, _, start) in enumerate(self.flows):
            if start <= cfg.sim_duration_s:
                self._schedule(start, _CBR, (k, 0))
        heap = self._heap
        try:
            while heap:
                t, _, kind, data = heapq.heappop(heap)
                self.now = t
                if kind == _DLV:
                    self._on_delivery(*data)
                elif kind == _TXC:
                    self._on_tx_complete(*data)
                elif kind == _CBR:
                    self._on_cbr(*data)
                else:
                    self._on_timer(*data)
        except ProtocolError as exc:
            raise SimulationError(
                f"protocol invariant violated at t={self.now:.6f}: {exc}"
            ) from exc
        self.trace.final_energy_j = [rt.proto.energy for rt in self.nodes]
        return self.trace

    # -- traffic ------------------------------------------------------------------

    def _on_cbr(self, flow_id: int, tick: int) -> None:
        cfg = self.cfg
        src, dst, start = self.flows[flow_id]
        seq = self._flow_seq[flow_id]
        self._flow_seq[flow_id] = seq + 1
        self.trace.log(ORIGINATE, self.now, src, flow_id, seq, dst)
        actions = self.nodes[src].proto.originate_data(
            dst, flow_id, seq, cfg.payload_bytes, self.now
        )
        self._apply(src, actions)
        next_t = start + (tick + 1) / cfg.cbr_rate_pps
        if next_t <= cfg.sim_duration_s:
            self._schedule(next_t, _CBR, (flow_id, tick + 1))

    # -- radio ----------------------------------------------------------------------

    def _position(self, node: int, t: float) -> tuple[float, float]:
        return self.nodes[node].traj.position(t)

    def _in_range(self, a: int, b: int, t: float) -> bool:
        ax, ay = self.nodes[a].traj.position(t)
        bx, by = self.nodes[b].traj.position(t)
        dx = ax - bx
        dy = ay - by
        return dx * dx + dy * dy <= self._range2

    def _packet_size(self, pkt) -> int:
        cfg = self.cfg
        if isinstance(pkt, DataPacket):
            assert pkt.source_route is not None
            return (cfg.header_base_bytes
                    + cfg.header_per_node_bytes * len(pkt.source_route.nodes)
                    + pkt.payload_bytes)
        if isinstance(pkt, RreqPacket):
            n = len(pkt.route_record)
        elif isinstance(pkt, RrepPacket):
            n = len(pkt.route.nodes)
        else:
            n = len(pkt.return_path)
        return cfg.header_base_bytes + cfg.header_per_node_bytes * n

    def _enqueue(self, node: int, pkt, mode: str, next_hop: int | None) -> None:
        rt = self.nodes[node]
        if len(rt.queue) >= self.cfg.ifq_capacity:
            info = packet_info(pkt)
            self.trace.log(DROP, self.now, node, info[0], "queue-overflow", info)
            return
        if isinstance(pkt, RreqPacket):
            self.trace.log(RREQ_FWD, self.now, node, pkt.src, pkt.seq,
                           pkt.route_record, pkt.min_bat_lev, rt.proto.energy)
        rt.queue.append((pkt, mode, next_hop))
        if not rt.busy:
            self._start_tx(node)

    def _start_tx(self, node: int) -> None:
        rt = self.nodes[node]
        while rt.queue:
            pkt, mode, next_hop = rt.queue.pop(0)
            proto = rt.proto
            if proto.energy <= 0.0:
                info = packet_info(pkt)
                self.trace.log(DROP, self.now, node, info[0], "dead-node", info)
                continue
            size = self._packet_size(pkt)
            airtime = size * self._byte_time
            debit = min(self.cfg.tx_power_w * airtime, proto.energy)
            proto.energy -= debit
            info = packet_info(pkt)
            self.trace.log(SEND, self.now, node, info[0], size, mode, next_hop,
                           debit, info)
            ok = True
            if mode == "u":
                peer = self.nodes[next_hop].proto
                ok = peer.energy > 0.0 and self._in_range(node, next_hop, self.now)
            rt.busy = True
            self._schedule(self.now + airtime, _TXC, (node, pkt, mode, next_hop, ok))
            if not ok:
                self._unicast_failed(node, pkt, next_hop)
            return
        rt.busy = False

    def _unicast_failed(self, node: int, pkt, next_hop: int) -> None:
        rt = self.nodes[node]
        if not isinstance(pkt, DataPacket):
            info = packet_info(pkt)
            self.trace.log(DROP, self.now, node, info[0], "unreachable-next-hop", info)
            return
        # Everything queued behind it for the same dead hop fails with it,
        # producing a single route error.
        batch = [pkt]
        keep = []
        for item in rt.queue:
            qpkt, qmode, qnh = item
            if qmode == "u" and qnh == next_hop and isinstance(qpkt, DataPacket):
                batch.append(qpkt)
            else:
                keep.append(item)
        rt.queue = keep
        actions = rt.proto.on_link_failure(batch, next_hop, self.now)
        self._apply(node, actions)

    def _on_tx_complete(self, node: int, pkt, mode: str, next_hop: int | None,
                        ok: bool) -> None:
        t = self.now
        if ok:
            if mode == "b":
                nodes = self.nodes
                sx, sy = nodes[node].traj.position(t)
                r2 = self._range2
                for m in range(len(nodes)):
                    if m == node or nodes[m].proto.energy <= 0.0:
                        continue
                    mx, my = nodes[m].traj.position(t)
                    dx = sx - mx
                    dy = sy - my
                    if dx * dx + dy * dy <= r2:
                        self._schedule(t, _DLV, (m, node, pkt))
            else:
                peer = self.nodes[next_hop].proto
                if peer.energy > 0.0 and self._in_range(node, next_hop, t):
                    self._schedule(t, _DLV, (next_hop, node, pkt))
                else:
                    # Drifted out of range (or died) during the airtime; the
                    # sender cannot tell, so no failure is raised here.
                    info = packet_info(pkt)
                    self.trace.log(DROP, t, node, info[0],
                                   "lost-at-delivery", info)
        rt = self.nodes[node]
        rt.busy = False
        if rt.queue:
            self._start_tx(node)

    def _on_delivery(self, node: int, sender: int, pkt) -> None:
        proto = self.nodes[node].proto
        if proto.energy <= 0.0:
            info = packet_info(pkt)
            self.trace.log(DROP, self.now, node, info[0], "dead-receiver", info)
            return
        size = self._packet_size(pkt)
        airtime = size * self._byte_time
        debit = min(self.cfg.rx_power_w * airtime, proto.energy)
        proto.energy -= debit
        info = packet_info(pkt)
        self.trace.log(RECV, self.now, node, sender, info[0], size, debit, info)
        actions = proto.handle_packet(pkt, sender, self.now)
        self._apply(node, actions)

    def _on_timer(self, node: int, kind: str, key: tuple) -> None:
        actions = self.nodes[node].proto.on_timer(kind, key, self.now)
        self._apply(node, actions)

    # -- protocol actions --------------------------------------------------------------

    def _apply(self, node: int, actions) -> None:
        for a in actions:
            if type(a) is Unicast:
                self._enqueue(node, a.packet, "u", a.next_hop)
            elif type(a) is Broadcast:
                self._enqueue(node, a.packet, "b", None)
            elif type(a) is Drop:
                info = packet_info(a.packet)
                self.trace.log(DROP, self.now, node, info[0], a.reason, info)
            elif type(a) is DeliverLocally:
                p = a.packet
                self.trace.log(DELIVER, self.now, node, p.flow_id, p.seq,
                               p.src, p.created_at)
            elif type(a) is StartTimer:
                self._schedule(self.now + a.duration_s, _TMR, (node, a.kind, a.key))
            elif type(a) is LogRouteSelection:
                self.trace.log(ROUTE_SELECT, self.now, node, a.src, a.seq,
                               a.primary.nodes,
                               a.alternate.nodes if a.alternate else None,
                               a.candidate_count)
            else:
                raise SimulationError(f"unknown protocol action: {a!r}")
