"""Reward records for both scheduling layers, built from a committed slot."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import SlotOutcome
from .observe import BMS_WIDTH
from .transfer import IDLE

REWARD_CLIP = 2.0


@dataclass(frozen=True)
class RewardRecord:
    layer: str
    slot: int
    sat: int
    profit_bits: float
    penalty_bits: float

    @property
    def reward_bits(self) -> float:
        return self.profit_bits - self.penalty_bits

    def scaled(self, scale_bits: float) -> float:
        return clip_reward(self.reward_bits, scale_bits)


def clip_reward(bits, scale_bits: float):
    """Learning-side reward: bits over the scale, clipped to [-2, 2]."""
    return np.clip(np.asarray(bits, dtype=float) / scale_bits, -REWARD_CLIP, REWARD_CLIP)


def bms_reward(out: SlotOutcome, sat: int) -> RewardRecord | None:
    """Ground bits (own delivery) plus delayed credits, minus bits the chosen relay refused."""
    a = int(out.actions[sat])
    if a == IDLE or a >= BMS_WIDTH:
        return None
    return RewardRecord("bms", out.slot, sat, float(out.ground_bits[sat] + out.credit_bits[sat]),
                        float(out.rejected_bits[sat]))


def tms_reward(out: SlotOutcome, sat: int, is_cs: bool) -> RewardRecord | None:
    """Own-domain choice mirrors the bottom record; a foreign choice earns credits minus IDL refusals."""
    if not is_cs:
        return None
    a = int(out.actions[sat])
    if a == IDLE:
        return None
    if a < BMS_WIDTH:
        own = bms_reward(out, sat)
        return RewardRecord("tms", own.slot, sat, own.profit_bits, own.penalty_bits)
    return RewardRecord("tms", out.slot, sat, float(out.credit_bits[sat]), float(out.rejected_bits[sat]))
