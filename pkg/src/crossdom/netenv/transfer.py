"""Turning a chosen action into a transfer plan for one satellite."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from crossdom.missions import Mission

from .observe import BMS_WIDTH
from .topology import NO_SAT, ContactPlan, Network

IDLE = -1
# relative slack on the link-capacity check, absorbs float error in rate * tau
CAPACITY_RTOL = 1e-12


class LinkChoice(str, Enum):
    GROUND = "ground"
    ISL = "isl"
    IDL = "idl"


@dataclass(frozen=True)
class Decision:
    """Resolved action: where the satellite sends this slot and at what rate."""

    link: LinkChoice
    target: int  # receiving satellite index, or station index for ground
    rate_bps: float
    column: int  # flat action index that produced it


@dataclass
class TransferPlan:
    sender: int
    decision: Decision | None
    missions: list[Mission] = field(default_factory=list)
    bits: float = 0.0
    e_tx: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.missions


def decode_flat(network: Network, plan: ContactPlan, slot: int, sat: int, action: int) -> Decision | None:
    """Map a flat action index (0 ground, 1..4 intra relay, 5.. inter relay) to a Decision."""
    if action == IDLE:
        return None
    t = slot - 1
    if action == 0:
        vis = plan.sgl_vis[t, sat]
        if not vis.any():
            raise ValueError(f"satellite {sat} has no visible station in slot {slot}")
        rates = np.where(vis, plan.sgl_rate[t, sat], -np.inf)
        g = int(np.argmax(rates))  # first maximum: lowest station index on ties
        return Decision(LinkChoice.GROUND, g, float(plan.sgl_rate[t, sat, g]), action)
    if action < BMS_WIDTH:
        r = action - 1
        if network.intra[sat, r] == NO_SAT or not plan.isl_vis[t, sat, r]:
            raise ValueError(f"satellite {sat}: intra relay {r} not available in slot {slot}")
        return Decision(LinkChoice.ISL, int(network.intra[sat, r]), float(plan.isl_rate[t, sat, r]), action)
    a = action - BMS_WIDTH
    if a >= network.n_aux or network.inter[sat, a] == NO_SAT or not plan.idl_vis[t, sat, a]:
        raise ValueError(f"satellite {sat}: inter relay {a} not available in slot {slot}")
    return Decision(LinkChoice.IDL, int(network.inter[sat, a]), float(plan.idl_rate[t, sat, a]), action)


def plan_transmission(
    sender: int,
    buffer: Sequence[Mission],
    decision: Decision | None,
    tau: float,
    energy_j: float,
    floor_j: float,
    p_tx: float,
) -> TransferPlan:
    """Whole missions in service order until link volume or the energy floor runs out.

    ``floor_j`` is the reserve plus this slot's nominal draw, so a plan never
    leaves less than the reserve once nominal operation is paid for.
    """
    out = TransferPlan(sender, decision)
    if decision is None or not buffer:
        return out
    cap = decision.rate_bps * tau * (1.0 + CAPACITY_RTOL)
    for m in sorted(buffer, key=Mission.serve_key):
        bits = out.bits + m.volume_bits
        if bits > cap:
            break
        e_tx = bits / decision.rate_bps * p_tx
        if energy_j - e_tx < floor_j:
            break
        out.missions.append(m)
        out.bits, out.e_tx = bits, e_tx
    return out
