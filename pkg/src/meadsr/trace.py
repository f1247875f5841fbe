"""Append-only record of everything observable in a simulation run.

Records are stored as plain tuples (first element is the kind tag) and can
be exported as newline-delimited JSON, one event per line, preceded by a
header line echoing the configuration. Exports are byte-stable for a fixed
(config, seed), which is what the trace hash digests.

Record schemas (tuple layout -> exported JSON fields):

  originate    (t, node, flow_id, seq, dest)
  send         (t, node, ptype, size_bytes, mode, next_hop, debit_j, info)
                 mode is "b" (broadcast) or "u" (unicast); next_hop is null
                 for broadcasts; a send is logged even when the unicast next
                 hop turns out unreachable (the radio still transmitted).
  recv         (t, node, from_node, ptype, size_bytes, debit_j, info)
  drop         (t, node, ptype, reason, info)
  deliver      (t, node, flow_id, seq, src, created_at)
  rreq_fwd     (t, node, src, seq, route_record, min_bat_lev, energy_j)
                 logged when a node queues a request broadcast (origination
                 included); energy_j is the node's residual energy at the
                 instant it stamped the packet.
  route_select (t, node, src, seq, primary, alternate, candidates)

Packet info tuples embedded in send/recv/drop records:

  rreq  ("rreq", src, seq, route_record, min_bat_lev, hop_count)
  rrep  ("rrep", src, seq, route, is_primary)
  rerr  ("rerr", reporter, broken_from, broken_to, return_path)
  data  ("data", flow_id, seq, src, dest, route, salvaged)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from typing import Iterator

from .config import SimConfig
from .model import DataPacket, RerrPacket, RreqPacket, RrepPacket

ORIGINATE = "originate"
SEND = "send"
RECV = "recv"
DROP = "drop"
DELIVER = "deliver"
RREQ_FWD = "rreq_fwd"
ROUTE_SELECT = "route_select"

_FIELDS = {
    ORIGINATE: ("t", "node", "flow_id", "seq", "dest"),
    SEND: ("t", "node", "ptype", "size_bytes", "mode", "next_hop", "debit_j", "info"),
    RECV: ("t", "node", "from_node", "ptype", "size_bytes", "debit_j", "info"),
    DROP: ("t", "node", "ptype", "reason", "info"),
    DELIVER: ("t", "node", "flow_id", "seq", "src", "created_at"),
    RREQ_FWD: ("t", "node", "src", "seq", "route_record", "min_bat_lev", "energy_j"),
    ROUTE_SELECT: ("t", "node", "src", "seq", "primary", "alternate", "candidates"),
}


def packet_info(packet) -> tuple:
    if isinstance(packet, DataPacket):
        route = packet.source_route.nodes if packet.source_route else None
        return ("data", packet.flow_id, packet.seq, packet.src, packet.dest,
                route, packet.salvaged)
    if isinstance(packet, RreqPacket):
        return ("rreq", packet.src, packet.seq, packet.route_record,
                packet.min_bat_lev, packet.hop_count)
    if isinstance(packet, RrepPacket):
        return ("rrep", packet.src, packet.seq, packet.route.nodes, packet.is_primary)
    if isinstance(packet, RerrPacket):
        return ("rerr", packet.reporter, packet.broken_from, packet.broken_to,
                packet.return_path)
    raise TypeError(f"unknown packet type: {packet!r}")


class EventTrace:
    def __init__(self, config: SimConfig) -> None:
        self.config = config
        self.records: list[tuple] = []
        self.initial_energy_j: list[float] = []
        self.final_energy_j: list[float] = []

    # Engine-side logging; one append per observable event.

    def log(self, kind: str, *values) -> None:
        self.records.append((kind, *values))

    def iter_kind(self, kind: str) -> Iterator[tuple]:
        for rec in self.records:
            if rec[0] == kind:
                yield rec

    def consumed_per_node(self) -> list[float]:
        return [e0 - e1 for e0, e1 in zip(self.initial_energy_j, self.final_energy_j)]

    # Export.

    def to_ndjson(self) -> str:
        lines = [self._header_line()]
        for rec in self.records:
            fields = _FIELDS[rec[0]]
            obj = {"kind": rec[0]}
            obj.update(zip(fields, rec[1:]))
            lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":"),
                                    default=_jsonify))
        lines.append(json.dumps(
            {"kind": "energy", "initial_j": self.initial_energy_j,
             "final_j": self.final_energy_j},
            sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.to_ndjson().encode("utf-8")).hexdigest()

    def _header_line(self) -> str:
        return json.dumps({"kind": "header", "config": asdict(self.config)},
                          sort_keys=True, separators=(",", ":"))


def _jsonify(value):
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"not JSON serializable: {value!r}")
