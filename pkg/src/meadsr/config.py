"""Simulation configuration with the standard 50-node scenario as defaults."""

from __future__ import annotations

from dataclasses import dataclass

PROTOCOLS = ("dsr", "mea-dsr")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class SimConfig:
    node_count: int = 50
    area_width_m: float = 1000.0
    area_height_m: float = 1000.0
    tx_range_m: float = 250.0
    bitrate_bps: float = 2_000_000.0
    speed_min_mps: float = 5.0
    speed_max_mps: float = 10.0
    pause_time_s: float = 0.0
    sim_duration_s: float = 600.0
    connections: int = 10
    cbr_rate_pps: float = 4.0
    payload_bytes: int = 512
    flow_start_min_s: float = 0.0
    flow_start_max_s: float = 120.0
    tx_power_w: float = 1.4
    rx_power_w: float = 1.0
    initial_energy_j: float = 1000.0
    wait_time_s: float = 0.03
    protocol: str = "mea-dsr"
    seed: int = 1
    # Engine and protocol plumbing; fixed policy values, exposed for tests.
    ifq_capacity: int = 50
    pending_capacity: int = 64
    discovery_timeout_s: float = 0.5
    discovery_retries: int = 3
    rreq_ttl: int = 16
    header_base_bytes: int = 24
    header_per_node_bytes: int = 4

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ConfigError(f"node_count must be >= 1, got {self.node_count}")
        if self.connections < 0:
            raise ConfigError(f"connections must be >= 0, got {self.connections}")
        if self.connections > 0 and self.node_count < 2:
            raise ConfigError("flows need at least 2 nodes")
        positive = (
            ("area_width_m", self.area_width_m),
            ("area_height_m", self.area_height_m),
            ("tx_range_m", self.tx_range_m),
            ("bitrate_bps", self.bitrate_bps),
            ("sim_duration_s", self.sim_duration_s),
            ("payload_bytes", self.payload_bytes),
            ("tx_power_w", self.tx_power_w),
            ("rx_power_w", self.rx_power_w),
            ("initial_energy_j", self.initial_energy_j),
            ("cbr_rate_pps", self.cbr_rate_pps),
            ("ifq_capacity", self.ifq_capacity),
            ("pending_capacity", self.pending_capacity),
            ("discovery_timeout_s", self.discovery_timeout_s),
            ("rreq_ttl", self.rreq_ttl),
        )
        for name, value in positive:
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        non_negative = (
            ("pause_time_s", self.pause_time_s),
            ("flow_start_min_s", self.flow_start_min_s),
            ("wait_time_s", self.wait_time_s),
            ("discovery_retries", self.discovery_retries),
        )
        for name, value in non_negative:
            if value < 0:
                raise ConfigError(f"{name} must be >= 0, got {value}")
        if self.speed_min_mps < 5.0:
            # Slower minimum speeds make random-waypoint average speed decay
            # over long runs, which skews mobility sweeps.
            raise ConfigError(f"speed_min_mps must be >= 5, got {self.speed_min_mps}")
        if self.speed_max_mps < self.speed_min_mps:
            raise ConfigError("speed_max_mps must be >= speed_min_mps")
        if self.flow_start_max_s < self.flow_start_min_s:
            raise ConfigError("flow_start_max_s must be >= flow_start_min_s")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
