"""The five performance metrics, computed from a raw trace.

  pdf      packet delivery fraction: delivered / generated data packets
  ad_s     average end-to-end delay over delivered packets, seconds
  nro      normalized routing overhead: control-packet transmissions
           (every hop transmission counts, forwards included) / delivered
  cep_j    consumed energy per delivered packet, joules (all energy spent
           in the run, control and data alike)
  sdcen_j  population standard deviation of per-node consumed energy

Ratios whose denominator is zero are reported as None, never as zero or
infinity; aggregation across seeds skips them pairwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .trace import DELIVER, DROP, ORIGINATE, RECV, SEND, EventTrace


@dataclass(frozen=True, slots=True)
class MetricsReport:
    pdf: float | None
    ad_s: float | None
    nro: float | None
    cep_j: float | None
    sdcen_j: float
    generated: int
    delivered: int
    control_tx: int
    per_node_consumed_j: tuple[float, ...]


METRIC_FIELDS = ("pdf", "ad_s", "nro", "cep_j", "sdcen_j",
                 "generated", "delivered", "control_tx")


def compute_metrics(trace: EventTrace, node_count: int | None = None) -> MetricsReport:
    if node_count is None:
        node_count = len(trace.final_energy_j)
    generated = 0
    delivered = 0
    control_tx = 0
    delay_sum = 0.0
    for rec in trace.records:
        kind = rec[0]
        if kind == SEND:
            if rec[3] != "data":
                control_tx += 1
        elif kind == RECV or kind == DROP:
            continue
        elif kind == ORIGINATE:
            generated += 1
        elif kind == DELIVER:
            delivered += 1
            delay_sum += rec[1] - rec[6]
    consumed = trace.consumed_per_node()
    total_consumed = sum(consumed)
    mean_consumed = total_consumed / node_count
    sdcen = math.sqrt(
        sum((c - mean_consumed) ** 2 for c in consumed) / node_count
    )
    return MetricsReport(
        pdf=delivered / generated if generated else None,
        ad_s=delay_sum / delivered if delivered else None,
        nro=control_tx / delivered if delivered else None,
        cep_j=total_consumed / delivered if delivered else None,
        sdcen_j=sdcen,
        generated=generated,
        delivered=delivered,
        control_tx=control_tx,
        per_node_consumed_j=tuple(consumed),
    )


@dataclass(frozen=True, slots=True)
class AggregateStat:
    mean: float | None
    std: float | None
    n: int  # reports with a defined value; len(reports) - n were excluded


def aggregate(reports: list[MetricsReport]) -> dict[str, AggregateStat]:
    """Cross-seed mean and sample standard deviation for every metric field.

    Undefined values (None) are excluded per metric; the count of reports
    that actually contributed is reported alongside."""
    if not reports:
        raise ValueError("aggregate requires at least one report")
    out: dict[str, AggregateStat] = {}
    for name in METRIC_FIELDS:
        values = [getattr(r, name) for r in reports]
        defined = [float(v) for v in values if v is not None]
        n = len(defined)
        if n == 0:
            out[name] = AggregateStat(None, None, 0)
            continue
        mean = sum(defined) / n
        if n == 1:
            std = 0.0
        else:
            std = math.sqrt(sum((v - mean) ** 2 for v in defined) / (n - 1))
        out[name] = AggregateStat(mean, std, n)
    return out
