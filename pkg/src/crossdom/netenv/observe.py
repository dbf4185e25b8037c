"""Per-satellite 4-tuple states, joint states for both layers, and feasible action masks.

Joint states are stored feature-major: shape (4, entries), rows are
(storage, energy, ground rate, survival). This feeds the four per-feature
input blocks of the policy networks directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from crossdom.missions import Mission
from crossdom.scenario import StateScales

from .topology import NO_SAT, N_INTRA, ContactPlan, Network

B_IDX, E_IDX, CE_IDX, RS_IDX = range(4)
STATE_CLIP = 2.0
BMS_WIDTH = 1 + N_INTRA  # ground + four intra relays
GROUND = 0


@dataclass(frozen=True)
class SatState4:
    b_rel: float
    e_rel: float
    ce_avg: float
    rs_avg: float

    def as_array(self) -> np.ndarray:
        return np.array([self.b_rel, self.e_rel, self.ce_avg, self.rs_avg])


def sat_state(
    buffer: Sequence[Mission],
    energy_j: float,
    storage_cap_bits: float,
    e_min: float,
    e_nominal: float,
    sgl_rates_visible: Sequence[float],
) -> SatState4:
    used = sum(m.volume_bits for m in buffer)
    # empty buffer: the relative value falls back to the capacity itself, in Gbit
    b_rel = storage_cap_bits / used if used > 0 else storage_cap_bits / 1e9
    e_rel = energy_j / (e_min + e_nominal)
    ce = float(np.mean(sgl_rates_visible)) if len(sgl_rates_visible) else 0.0
    rs = float(np.mean([m.survival_slots for m in buffer])) if buffer else 0.0
    return SatState4(b_rel, e_rel, ce, rs)


def raw_states(
    network: Network,
    plan: ContactPlan,
    slot: int,
    used_bits: np.ndarray,
    energy: np.ndarray,
    survival_mean: np.ndarray,
    e_nominal: float,
) -> np.ndarray:
    """Vectorized sat_state for every satellite. Shape (N, 4)."""
    t = slot - 1
    cap = network.storage_cap
    b = np.where(used_bits > 0, cap / np.where(used_bits > 0, used_bits, 1.0), cap / 1e9)
    e = energy / (network.e_min + e_nominal)
    vis = plan.sgl_vis[t]
    n_vis = vis.sum(axis=1)
    ce = np.where(n_vis > 0, (plan.sgl_rate[t] * vis).sum(axis=1) / np.maximum(n_vis, 1), 0.0)
    return np.stack([b, e, ce, survival_mean], axis=1)


def process_survival(self_rs: np.ndarray, relay_rs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Survival ratios: self -> 1 (0 if its own mean is 0); relay -> self/relay, or self when relay is 0."""
    self_hat = np.where(self_rs > 0, 1.0, 0.0)
    safe = np.where(relay_rs > 0, relay_rs, 1.0)
    relay_hat = np.where(relay_rs > 0, self_rs[..., None] / safe, self_rs[..., None])
    return self_hat, relay_hat


def normalize(entries: np.ndarray, scales: StateScales) -> np.ndarray:
    div = np.array([scales.storage, scales.energy, scales.ground_rate, scales.survival])
    return np.clip(entries / div, 0.0, STATE_CLIP)


def _gather(raw: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows of raw at idx, zeros where idx is NO_SAT; also returns the existence mask."""
    ext = np.vstack([raw, np.zeros((1, raw.shape[1]))])
    safe = np.where(idx == NO_SAT, raw.shape[0], idx)
    return ext[safe], idx != NO_SAT


def _relative_entries(raw: np.ndarray, idx: np.ndarray, scales: StateScales) -> np.ndarray:
    """Processed, normalized relay entries for relay index matrix idx (N, R) -> (N, R, 4)."""
    rel, exists = _gather(raw, idx)
    _, rs_hat = process_survival(raw[:, RS_IDX], rel[..., RS_IDX])
    rel = rel.copy()
    rel[..., RS_IDX] = np.where(exists, rs_hat, 0.0)
    return normalize(rel, scales)


def bms_joint_states(raw: np.ndarray, network: Network, scales: StateScales) -> np.ndarray:
    """(N, 4, 5) joint states: self then the four intra relays."""
    own = raw.copy()
    own[:, RS_IDX], _ = process_survival(raw[:, RS_IDX], raw[:, RS_IDX][:, None])
    own = normalize(own, scales)
    relays = _relative_entries(raw, network.intra, scales)
    entries = np.concatenate([own[:, None, :], relays], axis=1)
    return entries.transpose(0, 2, 1)


def tms_joint_states(raw: np.ndarray, bms: np.ndarray, network: Network, scales: StateScales) -> np.ndarray:
    """(N, 4, 1 + A) joint states: mean of the BMS entries, then the inter-domain relays.

    Rows of NCSs are filled the same way but never used.
    """
    mean = bms.mean(axis=2, keepdims=True)
    if network.n_aux == 0:
        return mean
    relays = _relative_entries(raw, network.inter, scales).transpose(0, 2, 1)
    return np.concatenate([mean, relays], axis=2)


def build_bms_jsi(own: np.ndarray, relays: np.ndarray, scales: StateScales = StateScales()) -> np.ndarray:
    """Single-satellite form: own raw (4,), relays raw (4, 4) -> (4, 5) joint state."""
    raw = np.vstack([own, relays])
    net = _SingleNet(np.array([[1, 2, 3, 4]] + [[NO_SAT] * 4] * 4))
    return bms_joint_states(raw, net, scales)[0]


def build_tms_jsi(own: np.ndarray, bms_jsi: np.ndarray, inter: np.ndarray,
                  scales: StateScales = StateScales(), is_cs: bool = True) -> np.ndarray:
    """Single-CS form: own raw (4,), its BMS joint state (4, 5), inter relays raw (A, 4)."""
    if not is_cs:
        raise ValueError("top-layer joint state is only defined for cross-domain satellites")
    inter = np.atleast_2d(inter)
    raw = np.vstack([own, inter])
    idx = np.array([list(range(1, 1 + len(inter)))] + [[NO_SAT] * len(inter)] * len(inter))
    relays = _relative_entries(raw, idx, scales)[0].T
    return np.concatenate([bms_jsi.mean(axis=1, keepdims=True), relays], axis=1)


@dataclass
class _SingleNet:
    intra: np.ndarray


def bms_masks(network: Network, plan: ContactPlan, slot: int) -> np.ndarray:
    """(N, 5) feasibility: column 0 iff any SGL visible, columns 1..4 iff that ISL is visible."""
    t = slot - 1
    return np.concatenate([plan.sgl_vis[t].any(axis=1)[:, None], plan.isl_vis[t]], axis=1)


def tms_masks(network: Network, plan: ContactPlan, slot: int, bms: np.ndarray) -> np.ndarray:
    """(N, 1 + A): own domain iff the BMS set is nonempty, aux domain iff its IDL is visible."""
    own = bms.any(axis=1)[:, None] & network.is_cs[:, None]
    return np.concatenate([own, plan.idl_vis[slot - 1]], axis=1)


def flat_masks(network: Network, plan: ContactPlan, slot: int, bms: np.ndarray) -> np.ndarray:
    """(N, 5 + A) single-layer action set: ground, intra relays, inter relays."""
    return np.concatenate([bms, plan.idl_vis[slot - 1]], axis=1)


def feasible_bms(mask_row: np.ndarray) -> list[int]:
    return [int(a) for a in np.flatnonzero(mask_row)]


def feasible_tms(mask_row: np.ndarray, is_cs: bool) -> list[int]:
    if not is_cs:
        raise ValueError("top-layer actions are only defined for cross-domain satellites")
    return [int(a) for a in np.flatnonzero(mask_row)]
