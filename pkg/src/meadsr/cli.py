"""Batch experiment runner.

Reads a flat `key = value` scenario file, sweeps protocol, pause time and
wait time across seeds, and emits one CSV row per run plus mean/std rows per
(protocol, pause time, wait time) group. Output row order is deterministic
regardless of how many workers execute the runs.

Config file format: one `key = value` per line, `#` comments, lists as
comma-separated values. Unknown keys are rejected with the line number.
Recognized keys: every scalar scenario field (node_count, area_width_m,
area_height_m, tx_range_m, bitrate_bps, speed_min_mps, speed_max_mps,
sim_duration_s, connections, cbr_rate_pps, payload_bytes, flow_start_min_s,
flow_start_max_s, tx_power_w, rx_power_w, initial_energy_j) plus the sweep
keys pause_times, wait_times, protocols, seeds (or seed0 and seed_count) and
output_path.

Exit codes: 0 success, 2 configuration error, 3 run failure (the partial CSV
is flagged with an error row).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .config import PROTOCOLS, ConfigError, SimConfig
from .engine import run
from .metrics import MetricsReport, aggregate, compute_metrics

CSV_COLUMNS = [
    "protocol", "pause_time_s", "wait_time_s", "seed",
    "pdf", "ad_s", "nro", "cep_mj", "sdcen_j",
    "generated", "delivered", "control_tx",
]

DEFAULT_PAUSE_TIMES = [0.0, 30.0, 60.0, 120.0, 300.0, 600.0]
DEFAULT_WAIT_TIMES = [0.03]
DEFAULT_SEEDS = list(range(1, 11))

_SCALAR_KEYS = {
    "node_count": int,
    "area_width_m": float,
    "area_height_m": float,
    "tx_range_m": float,
    "bitrate_bps": float,
    "speed_min_mps": float,
    "speed_max_mps": float,
    "sim_duration_s": float,
    "connections": int,
    "cbr_rate_pps": float,
    "payload_bytes": int,
    "flow_start_min_s": float,
    "flow_start_max_s": float,
    "tx_power_w": float,
    "rx_power_w": float,
    "initial_energy_j": float,
}


@dataclass
class ExperimentPlan:
    base: SimConfig = field(default_factory=SimConfig)
    pause_times_s: list[float] = field(default_factory=lambda: list(DEFAULT_PAUSE_TIMES))
    wait_times_s: list[float] = field(default_factory=lambda: list(DEFAULT_WAIT_TIMES))
    protocols: list[str] = field(default_factory=lambda: list(PROTOCOLS))
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    output_path: str | None = None

    def validate(self) -> None:
        if not self.pause_times_s or not self.wait_times_s or not self.protocols:
            raise ConfigError("sweep lists must be non-empty")
        if not self.seeds:
            raise ConfigError("seed list must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise ConfigError(f"unknown protocol {p!r}")
        for pt in self.pause_times_s:
            if pt < 0:
                raise ConfigError(f"pause time must be >= 0, got {pt}")
        for wt in self.wait_times_s:
            if wt < 0:
                raise ConfigError(f"wait time must be >= 0, got {wt}")

    def runs(self) -> list[SimConfig]:
        out = []
        for proto in self.protocols:
            for pt in self.pause_times_s:
                for wt in self.wait_times_s:
                    for seed in self.seeds:
                        out.append(replace(
                            self.base, protocol=proto, pause_time_s=pt,
                            wait_time_s=wt, seed=seed,
                        ))
        return out


def parse_config(path: str) -> ExperimentPlan:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return _parse_lines(lines)


def _parse_lines(lines: list[str]) -> ExperimentPlan:
    scalars: dict = {}
    plan = ExperimentPlan()
    seed0: int | None = None
    seed_count: int | None = None
    seeds: list[int] | None = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.rstrip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key in _SCALAR_KEYS:
                scalars[key] = _SCALAR_KEYS[key](value)
            elif key == "pause_times":
                plan.pause_times_s = _parse_list(value, float)
            elif key == "wait_times":
                plan.wait_times_s = _parse_list(value, float)
            elif key == "protocols":
                plan.protocols = _parse_list(value, str)
            elif key == "seeds":
                seeds = _parse_list(value, int)
            elif key == "seed0":
                seed0 = int(value)
            elif key == "seed_count":
                seed_count = int(value)
            elif key == "output_path":
                plan.output_path = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    if seeds is not None and (seed0 is not None or seed_count is not None):
        raise ConfigError("give either 'seeds' or 'seed0'/'seed_count', not both")
    if seeds is not None:
        plan.seeds = seeds
    elif seed0 is not None or seed_count is not None:
        plan.seeds = list(range(seed0 or 1, (seed0 or 1) + (seed_count or len(DEFAULT_SEEDS))))
    try:
        plan.base = replace(plan.base, **scalars)
    except ConfigError:
        raise
    plan.validate()
    return plan


def _parse_list(value: str, cast) -> list:
    items = [x.strip() for x in value.split(",") if x.strip()]
    if not items:
        raise ConfigError("empty list")
    return [cast(x) for x in items]


def _run_one(cfg: SimConfig) -> MetricsReport:
    trace = run(cfg)
    return compute_metrics(trace)


def run_experiment(plan: ExperimentPlan, parallel: int = 1,
                   progress=None) -> tuple[list[list], bool]:
    """Execute every run in the plan and build the CSV rows (header excluded).

    Returns (rows, ok). Failed runs produce an error row in place of their
    result row and flip `ok` to False; surviving runs still aggregate.
    """
    configs = plan.runs()
    results: dict[int, MetricsReport | Exception] = {}
    if parallel > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futures = {i: pool.submit(_run_one, cfg) for i, cfg in enumerate(configs)}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - flagged in the CSV
                    results[i] = exc
                if progress:
                    progress(i + 1, len(configs), configs[i], results[i])
    else:
        for i, cfg in enumerate(configs):
            try:
                results[i] = _run_one(cfg)
            except Exception as exc:  # noqa: BLE001
                results[i] = exc
            if progress:
                progress(i + 1, len(configs), cfg, results[i])

    rows: list[list] = []
    ok = True
    i = 0
    for proto in plan.protocols:
        for pt in plan.pause_times_s:
            for wt in plan.wait_times_s:
                group: list[MetricsReport] = []
                for seed in plan.seeds:
                    res = results[i]
                    cfg = configs[i]
                    i += 1
                    if isinstance(res, Exception):
                        ok = False
                        rows.append([proto, _num(pt), _num(wt), f"error:{seed}",
                                     str(res), "", "", "", "", "", "", ""])
                        continue
                    group.append(res)
                    rows.append(_result_row(proto, pt, wt, seed, res))
                if group:
                    stats = aggregate(group)
                    rows.append(_aggregate_row(proto, pt, wt, "mean", stats, "mean"))
                    rows.append(_aggregate_row(proto, pt, wt, "std", stats, "std"))
    return rows, ok


def _num(x) -> str:
    """Deterministic, round-trippable number formatting for CSV cells."""
    if isinstance(x, float) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _cell(x) -> str:
    return "" if x is None else _num(x)


def _result_row(proto, pt, wt, seed, r: MetricsReport) -> list:
    cep_mj = None if r.cep_j is None else r.cep_j * 1000.0
    return [proto, _num(pt), _num(wt), str(seed),
            _cell(r.pdf), _cell(r.ad_s), _cell(r.nro), _cell(cep_mj),
            _cell(r.sdcen_j), str(r.generated), str(r.delivered), str(r.control_tx)]


def _aggregate_row(proto, pt, wt, label, stats, which) -> list:
    def pick(name, scale=1.0):
        stat = stats[name]
        value = getattr(stat, which)
        return "" if value is None else _num(value * scale)

    return [proto, _num(pt), _num(wt), label,
            pick("pdf"), pick("ad_s"), pick("nro"), pick("cep_j", 1000.0),
            pick("sdcen_j"), pick("generated"), pick("delivered"),
            pick("control_tx")]


def rows_to_csv(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="meadsr-sim",
        description="Sweep MEA-DSR / DSR simulations and emit metrics as CSV.",
    )
    parser.add_argument("--config", metavar="PATH", help="scenario file (defaults apply if omitted)")
    parser.add_argument("--out", metavar="PATH", help="CSV output path (stdout if omitted)")
    parser.add_argument("--seed-count", type=int, metavar="N",
                        help="run seeds 1..N (overrides the config's seed list)")
    parser.add_argument("--parallel", type=int, default=1, metavar="N",
                        help="number of worker processes (default 1)")
    parser.add_argument("--protocol", choices=PROTOCOLS,
                        help="restrict the sweep to one protocol")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        plan = parse_config(args.config) if args.config else ExperimentPlan()
        if args.seed_count is not None:
            if args.seed_count < 1:
                raise ConfigError("--seed-count must be >= 1")
            plan.seeds = list(range(1, args.seed_count + 1))
        if args.protocol:
            plan.protocols = [args.protocol]
        if args.parallel < 1:
            raise ConfigError("--parallel must be >= 1")
        plan.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    def progress(done, total, cfg, result):
        if args.quiet:
            return
        status = "FAILED" if isinstance(result, Exception) else "ok"
        print(
            f"[{done}/{total}] protocol={cfg.protocol} pause={cfg.pause_time_s:g} "
            f"wt={cfg.wait_time_s:g} seed={cfg.seed} {status}",
            file=sys.stderr,
        )

    rows, ok = run_experiment(plan, parallel=args.parallel, progress=progress)
    text = rows_to_csv(rows)
    out_path = args.out or plan.output_path
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 3


if __name__ == "__main__":
    raise SystemExit(main())
