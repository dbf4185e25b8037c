"""Achievable link rates: link budget for ISL/IDL, Shannon capacity for SGL, and table mode."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

C_LIGHT = 299_792_458.0
K_BOLTZMANN = 1.380649e-23


class LinkKind(str, Enum):
    ISL = "isl"
    IDL = "idl"
    SGL = "sgl"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class RfParams:
    """Radio parameters. Gains, margin and Eb/N0 are linear ratios; powers in W."""

    p_sst: float = 20.0
    p_set: float = 20.0
    g_tr: float = 1.0
    g_re: float = 1.0
    g_re_ground: float = 1.0
    freq_hz: float = 26e9
    k_boltz: float = K_BOLTZMANN
    t_noise: float = 500.0
    ebn0_req: float = db_to_linear(10.0)
    margin: float = db_to_linear(3.0)
    bandwidth_hz: float = 20e6
    prop_loss: float = 1.0
    noise_w: float | None = None

    def __post_init__(self):
        for name in ("p_sst", "p_set", "g_tr", "g_re", "g_re_ground", "freq_hz", "k_boltz",
                     "t_noise", "ebn0_req", "margin", "bandwidth_hz", "prop_loss"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RfParams.{name} must be positive")
        if self.noise_w is not None and not self.noise_w > 0:
            raise ValueError("RfParams.noise_w must be positive")

    @property
    def noise(self) -> float:
        if self.noise_w is not None:
            return self.noise_w
        return self.k_boltz * self.t_noise * self.bandwidth_hz

    def calibrated(
        self,
        isl_rate_bps: float = 160e6,
        isl_ref_km: float = 2000.0,
        sgl_rate_bps: float = 60e6,
        sgl_ref_km: float = 1500.0,
    ) -> "RfParams":
        """Pick antenna gains so both channel formulas hit the given rate at the reference range.

        ISL gain is split evenly between transmitter and receiver; the ground
        receive gain absorbs the remaining SGL budget.
        """
        g_product = (
            isl_rate_bps * self.k_boltz * self.t_noise * self.ebn0_req
            * free_space_loss(isl_ref_km, self.freq_hz) * self.margin / self.p_sst
        )
        g = math.sqrt(g_product)
        snr = 2.0 ** (sgl_rate_bps / self.bandwidth_hz) - 1.0
        g_ground = snr * self.noise * free_space_loss(sgl_ref_km, self.freq_hz) / (
            self.p_set * g * self.prop_loss
        )
        return replace(self, g_tr=g, g_re=g, g_re_ground=g_ground)


def free_space_loss(distance_km: float, freq_hz: float) -> float:
    if not distance_km > 0:
        raise ValueError(f"distance must be positive, got {distance_km}")
    return (4.0 * math.pi * distance_km * 1e3 * freq_hz / C_LIGHT) ** 2


def isl_rate(params: RfParams, distance_km: float) -> float:
    loss = free_space_loss(distance_km, params.freq_hz)
    return params.p_sst * params.g_tr * params.g_re / (
        params.k_boltz * params.t_noise * params.ebn0_req * loss * params.margin
    )


def sgl_snr(params: RfParams, distance_km: float) -> float:
    loss = free_space_loss(distance_km, params.freq_hz)
    return params.p_set * params.g_tr * params.g_re_ground * params.prop_loss / (params.noise * loss)


def sgl_rate(params: RfParams, distance_km: float) -> float:
    return params.bandwidth_hz * math.log2(1.0 + sgl_snr(params, distance_km))


DEFAULT_RF = RfParams().calibrated()


@dataclass(frozen=True)
class RateModel:
    mode: str = "table"
    table_sgl_rate: float = 60e6
    table_isl_band: tuple[float, float] = (80e6, 160e6)

    def __post_init__(self):
        if self.mode not in ("table", "analytic"):
            raise ValueError(f"rate mode must be 'table' or 'analytic', got {self.mode!r}")
        lo, hi = self.table_isl_band
        if not 0 < lo <= hi:
            raise ValueError(f"ISL band must satisfy 0 < low <= high, got {self.table_isl_band}")
        if not self.table_sgl_rate > 0:
            raise ValueError("table SGL rate must be positive")


def band_draw(seed: int, edge: tuple[int, ...], slot: int, band: tuple[float, float]) -> float:
    """Uniform draw in ``band`` keyed only by (seed, edge, slot)."""
    rng = np.random.default_rng([seed & 0xFFFFFFFF, seed >> 32, slot, *edge])
    return float(rng.uniform(band[0], band[1]))


def slot_rate(
    model: RateModel,
    params: RfParams,
    kind: LinkKind | str,
    distance_km: float,
    *,
    seed: int = 0,
    edge: tuple[int, ...] = (),
    slot: int = 1,
) -> float:
    kind = LinkKind(kind)
    if model.mode == "table":
        if kind is LinkKind.SGL:
            return model.table_sgl_rate
        # unordered key: both directions of a link share one rate
        half = len(edge) // 2
        a, b = tuple(edge[:half]), tuple(edge[half:])
        key = a + b if a <= b else b + a
        return band_draw(seed, key, slot, model.table_isl_band)
    if kind is LinkKind.SGL:
        return sgl_rate(params, distance_km)
    return isl_rate(params, distance_km)
