"""Scenario description shared by the environment, the learners and the harness."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace

from crossdom.energetics import PowerParams
from crossdom.linkbudget import DEFAULT_RF, RateModel, RfParams
from crossdom.missions import AttributeProfile, DomainMissionSpec
from crossdom.orbitals import DEFAULT_EPOCH, EarthFrame, GroundStation, OrbitRow, Sofm


@dataclass(frozen=True)
class DomainConfig:
    name: str
    orbits: int
    sats_per_orbit: int
    altitude_km: float
    inclination_deg: float
    mission_type: str = "CM"
    missions: DomainMissionSpec = DomainMissionSpec()
    attributes: AttributeProfile = AttributeProfile(
        ("arrival", "delay", "volume"), {"volume": 1.0, "arrival": 1.0, "delay": 1.0}
    )
    eccentricity: float = 0.0
    arg_perigee_deg: float = 0.0
    raan_spread_deg: float = 360.0
    raan_offset_deg: float = 0.0
    phasing: int = 0
    anomaly_offset_deg: float = 0.0
    rows: tuple[OrbitRow, ...] | None = None

    @property
    def size(self) -> int:
        return self.orbits * self.sats_per_orbit

    def sofm(self) -> Sofm:
        if self.rows is not None:
            return Sofm(self.rows)
        return Sofm.walker(
            self.orbits, self.sats_per_orbit, self.altitude_km, self.inclination_deg,
            eccentricity=self.eccentricity, arg_perigee_deg=self.arg_perigee_deg,
            raan_spread_deg=self.raan_spread_deg, raan_offset_deg=self.raan_offset_deg,
            phasing=self.phasing, anomaly_offset_deg=self.anomaly_offset_deg,
        )


@dataclass(frozen=True)
class NodeClass:
    storage_bits: float
    battery_j: float


@dataclass(frozen=True)
class StateScales:
    """Divisors applied to the 4 state components before clipping to [0, 2]."""

    storage: float = 2.0
    energy: float = 2.0
    ground_rate: float = 60e6
    survival: float = 1.0


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    lr_actor_bms: float = 2.5e-4
    lr_critic_bms: float = 1e-4
    lr_actor_tms: float = 2.5e-4
    lr_critic_tms: float = 1e-4
    minibatch_bms: int = 72
    minibatch_tms: int = 72
    episodes: int = 500
    rms_decay: float = 0.99
    rms_eps: float = 1e-5
    block_units: int = 32
    merge_units: int = 64
    shared_weights: bool = False
    final_window: int = 20

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.minibatch_bms < 1 or self.minibatch_tms < 1:
            raise ValueError("minibatch sizes must be >= 1")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    domains: tuple[DomainConfig, ...]
    stations: tuple[GroundStation, ...]
    tau: float = 100.0
    slots: int = 216
    rf: RfParams = DEFAULT_RF
    rate_model: RateModel = RateModel()
    power: PowerParams = PowerParams()
    ncs: NodeClass = NodeClass(60e9, 100e3)
    cs: NodeClass = NodeClass(120e9, 200e3)
    epoch: dt.datetime = DEFAULT_EPOCH
    isl_margin_km: float = 0.0
    sunlit_substeps: int = 20
    seed: int = 0
    scales: StateScales = StateScales()
    train: TrainConfig = TrainConfig()
    # divisor turning raw reward bits into learning units; None = largest mission volume
    reward_scale_bits: float | None = None
    description: str = ""
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "stations", tuple(self.stations))

    @property
    def frame(self) -> EarthFrame:
        return EarthFrame.at(self.epoch)

    def power_for(self, is_cs: bool) -> PowerParams:
        cls = self.cs if is_cs else self.ncs
        return replace(self.power, e_max=cls.battery_j)

    def largest_mission_bits(self) -> float:
        vols = [d.missions.common_volume_bits for d in self.domains]
        vols += [d.missions.burst_volume_bits for d in self.domains if d.missions.burst_rate > 0]
        return max(vols)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)
