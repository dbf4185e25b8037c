"""Per-slot energy consumption, harvesting, and battery bookkeeping (Joules, Watts, seconds)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class InfeasibleTransmissionError(ValueError):
    pass


class EnergyInvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerParams:
    p_sst: float = 20.0
    p_set: float = 20.0
    p_sr: float = 10.0
    p_o: float = 5.0
    p_h: float = 20.0
    eta: float = 0.75
    e_max: float = 100e3

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if min(self.p_sst, self.p_set, self.p_sr, self.p_o, self.p_h) < 0:
            raise ValueError("powers must be non-negative")
        if not self.e_max > 0:
            raise ValueError("battery capacity must be positive")

    @property
    def e_min(self) -> float:
        return self.e_max - self.eta * self.e_max


@dataclass
class BatteryState:
    energy_j: float


def _airtime(bits: float, rate: float) -> float:
    if bits <= 0:
        return 0.0
    if not rate > 0:
        raise InfeasibleTransmissionError(f"{bits} bits over a zero-rate link")
    return bits / rate


def e_transmit(legs: Iterable[tuple[float, float, bool]], params: PowerParams) -> float:
    """Sum of airtime x power over (bits, rate_bps, is_ground) legs."""
    return sum(_airtime(b, r) * (params.p_set if ground else params.p_sst) for b, r, ground in legs)


def e_receive(received: Iterable[tuple[float, float]], params: PowerParams) -> float:
    return sum(_airtime(b, r) * params.p_sr for b, r in received)


def e_nominal(params: PowerParams, tau: float) -> float:
    return params.p_o * tau


def e_total(tr: float, r: float, o: float) -> float:
    return tr + r + o


def e_harvest(params: PowerParams, sunlit: float, tau: float) -> float:
    if not 0 <= sunlit <= tau:
        raise ValueError(f"sunlit time {sunlit} outside [0, {tau}]")
    return params.p_h * min(tau, sunlit)


def apply_energy(
    battery: BatteryState, consumed: float, harvest_available: float, params: PowerParams
) -> tuple[BatteryState, float]:
    """Close one slot of the battery ledger; returns the new state and the harvest actually stored."""
    after = battery.energy_j - consumed
    if after < 0:
        raise EnergyInvariantError(f"consumption {consumed} J exceeds stored {battery.energy_j} J")
    new = min(params.e_max, after + harvest_available)
    return BatteryState(new), new - after
