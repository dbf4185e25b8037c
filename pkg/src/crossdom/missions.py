"""Mission tuples, attribute-weighted priorities, and per-domain mission generation."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from crossdom.ids import SatelliteId

ATTRIBUTES = ("volume", "arrival", "delay")


class MissionKind(str, Enum):
    COMMON = "common"
    BURST = "burst"


@dataclass(eq=False)
class Mission:
    uid: int
    priority: float
    volume_bits: float
    birth_slot: int
    survival_slots: int
    origin: SatelliteId
    kind: MissionKind = MissionKind.COMMON
    # set when the origin hands the mission to a relay while it has no ground link;
    # a later ground delivery is then credited back to the origin
    credit_origin: bool = False
    handoff_slot: int = 0
    handoff_inter: bool = False

    def __post_init__(self):
        if not self.volume_bits > 0:
            raise ValueError(f"mission {self.uid}: volume must be positive")
        if self.survival_slots < 0:
            raise ValueError(f"mission {self.uid}: negative survival")

    @property
    def domain(self) -> int:
        return self.origin.domain

    def serve_key(self) -> tuple[float, int, int]:
        """Service order: priority high first, then fewest remaining slots, then uid."""
        return (-self.priority, self.survival_slots, self.uid)


@dataclass(frozen=True)
class AttributeProfile:
    """Importance ranking (most important first) and quantitative values of the 3 attributes."""

    ranking: tuple[str, ...]
    values: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "ranking", tuple(self.ranking))
        object.__setattr__(self, "values", dict(self.values))
        if sorted(self.ranking) != sorted(ATTRIBUTES):
            raise ValueError(f"ranking must be a permutation of {ATTRIBUTES}, got {self.ranking}")
        missing = set(ATTRIBUTES) - set(self.values)
        if missing:
            raise ValueError(f"attribute values missing: {sorted(missing)}")
        if any(v < 0 for v in self.values.values()):
            raise ValueError("attribute values must be non-negative")


def importance_matrix(ranking: Sequence[str]) -> np.ndarray:
    """0-1 pairwise scores in ATTRIBUTES order: 1 if row ranked above column, 0.5 on the diagonal."""
    pos = {a: ranking.index(a) for a in ATTRIBUTES}
    n = len(ATTRIBUTES)
    scores = np.zeros((n, n))
    for x, ax in enumerate(ATTRIBUTES):
        for y, ay in enumerate(ATTRIBUTES):
            if pos[ax] < pos[ay]:
                scores[x, y] = 1.0
            elif pos[ax] == pos[ay]:
                scores[x, y] = 0.5
    return scores


def attribute_weights(profile: AttributeProfile) -> dict[str, float]:
    scores = importance_matrix(profile.ranking)
    w = scores.sum(axis=1) / scores.sum()
    return dict(zip(ATTRIBUTES, w.tolist()))


def mission_priority(profile: AttributeProfile) -> float:
    w = attribute_weights(profile)
    return float(sum(w[a] * profile.values[a] for a in ATTRIBUTES))


def burst_priority(common_priorities: Iterable[float]) -> float:
    """One level shared by all bursts, strictly above every common priority."""
    return max(common_priorities, default=0.0) + 1.0


@dataclass(frozen=True)
class DomainMissionSpec:
    common_total: int = 0
    common_volume_bits: float = 1e9
    common_survival: int = 18
    burst_rate: float = 0.0
    burst_survival: int = 3
    burst_volume_bits: float = 1e9

    def __post_init__(self):
        if self.common_total < 0 or self.burst_rate < 0:
            raise ValueError("mission counts and rates must be non-negative")
        if self.common_volume_bits <= 0 or self.burst_volume_bits <= 0:
            raise ValueError("mission volumes must be positive")
        if self.common_survival < 1 or self.burst_survival < 1:
            raise ValueError("survival slots must be >= 1")


def common_schedule(total: int, n_sats: int, slots: int) -> np.ndarray:
    """Deterministic common-mission counts, shape (n_sats, slots).

    Each satellite gets total // n_sats, the remainder going one each to the
    lowest-index satellites; a satellite's quota q is spread so that the first
    t slots hold floor(t * q / slots) missions.
    """
    quota = np.full(n_sats, total // n_sats, dtype=np.int64)
    quota[: total % n_sats] += 1
    t = np.arange(slots + 1)
    cum = (t[None, :] * quota[:, None]) // slots
    return np.diff(cum, axis=1)


@dataclass
class MissionGenerator:
    """Generates the mission stream of one domain for one episode.

    Bursts are Poisson per satellite per slot, drawn in one block from a stream
    keyed by (seed, episode, domain), so generation order does not matter.
    """

    domain: int
    sats: Sequence[SatelliteId]
    spec: DomainMissionSpec
    slots: int
    common_priority: float
    burst_priority: float
    seed: int = 0
    episode: int = 0
    _common: np.ndarray = field(init=False, repr=False)
    _burst: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._common = common_schedule(self.spec.common_total, len(self.sats), self.slots)
        rng = np.random.default_rng([self.seed & 0xFFFFFFFF, self.seed >> 32, self.episode, self.domain, 0xB0])
        if self.spec.burst_rate > 0:
            self._burst = rng.poisson(self.spec.burst_rate, size=(len(self.sats), self.slots))
        else:
            self._burst = np.zeros((len(self.sats), self.slots), dtype=np.int64)

    def counts(self, slot: int) -> tuple[np.ndarray, np.ndarray]:
        return self._common[:, slot - 1], self._burst[:, slot - 1]

    def generate(self, slot: int, next_uid: int) -> list[Mission]:
        """Missions born at ``slot`` (1-based), uids allocated from ``next_uid`` upward."""
        if not 1 <= slot <= self.slots:
            raise ValueError(f"slot {slot} outside 1..{self.slots}")
        out = []
        uid = next_uid
        commons, bursts = self.counts(slot)
        s = self.spec
        for k, sat in enumerate(self.sats):
            for _ in range(int(bursts[k])):
                out.append(Mission(uid, self.burst_priority, s.burst_volume_bits, slot,
                                   s.burst_survival, sat, MissionKind.BURST))
                uid += 1
            for _ in range(int(commons[k])):
                out.append(Mission(uid, self.common_priority, s.common_volume_bits, slot,
                                   s.common_survival, sat, MissionKind.COMMON))
                uid += 1
        return out


def generate_missions(
    spec: DomainMissionSpec,
    domain: int,
    slot: int,
    sats: Sequence[SatelliteId],
    slots: int,
    *,
    common_priority: float,
    burst_priority: float,
    seed: int = 0,
    episode: int = 0,
    next_uid: int = 0,
) -> list[Mission]:
    gen = MissionGenerator(domain, sats, spec, slots, common_priority, burst_priority, seed, episode)
    return gen.generate(slot, next_uid)


def age_missions(queue: Iterable[Mission]) -> tuple[list[Mission], list[Mission]]:
    kept, expired = [], []
    for m in queue:
        m.survival_slots = max(0, m.survival_slots - 1)
        (expired if m.survival_slots == 0 else kept).append(m)
    return kept, expired
