"""Slot-stepped multi-domain network environment."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from crossdom.energetics import EnergyInvariantError
from crossdom.missions import (
    Mission,
    MissionGenerator,
    MissionKind,
    age_missions,
    burst_priority,
    mission_priority,
)
from crossdom.scenario import ScenarioConfig

from .audit import ConstraintAudit
from .observe import (
    BMS_WIDTH,
    bms_joint_states,
    bms_masks,
    flat_masks,
    raw_states,
    tms_joint_states,
    tms_masks,
)
from .topology import ContactPlan, Network, build_contact_plan, build_network
from .transfer import IDLE, LinkChoice, TransferPlan, decode_flat, plan_transmission

log = logging.getLogger(__name__)


class ConservationError(RuntimeError):
    pass


@dataclass
class Observation:
    slot: int
    raw: np.ndarray  # (N, 4) unnormalized states
    bms_jsi: np.ndarray  # (N, 4, 5)
    tms_jsi: np.ndarray  # (N, 4, 1 + A)
    bms_mask: np.ndarray  # (N, 5)
    tms_mask: np.ndarray  # (N, 1 + A)
    flat_mask: np.ndarray  # (N, 5 + A)
    has_sgl: np.ndarray  # (N,)
    buffer_bits: np.ndarray  # (N,)


@dataclass
class Transfer:
    sender: int
    receiver: int
    link: LinkChoice
    planned_bits: float
    admitted_bits: float
    rate_bps: float


@dataclass
class SlotOutcome:
    slot: int
    actions: np.ndarray
    plans: list[TransferPlan]
    transfers: list[Transfer]
    ground_bits: np.ndarray
    rejected_bits: np.ndarray
    rejected: np.ndarray  # missions refused by the receiver, per sender
    credit_bits: np.ndarray
    delivered: np.ndarray  # missions delivered to ground, per delivering satellite
    expired: np.ndarray
    dropped: np.ndarray  # new missions of the next slot that did not fit
    e_tx: np.ndarray
    e_rx: np.ndarray
    e_nominal: float
    harvest: np.ndarray
    harvest_stored: np.ndarray
    energy_before: np.ndarray
    energy_after: np.ndarray
    buffer_bits_after: np.ndarray

    @property
    def profit_bits(self) -> np.ndarray:
        return self.ground_bits + self.credit_bits

    @property
    def reward_bits(self) -> np.ndarray:
        return self.profit_bits - self.rejected_bits


@dataclass
class EpisodeLedger:
    n_domains: int
    generated: int = 0
    delivered: int = 0
    expired: int = 0
    dropped: int = 0
    completions: np.ndarray = None  # by domain of the delivering satellite
    generated_by_kind: dict = field(default_factory=lambda: {k.value: 0 for k in MissionKind})
    delivered_by_kind: dict = field(default_factory=lambda: {k.value: 0 for k in MissionKind})
    delivered_by_origin: np.ndarray = None
    generated_by_domain: np.ndarray = None
    delivered_bits: float = 0.0
    delivery_log: list = field(default_factory=list)  # (slot, uid, deliverer index)

    def __post_init__(self):
        self.completions = np.zeros(self.n_domains, dtype=np.int64)
        self.delivered_by_origin = np.zeros(self.n_domains, dtype=np.int64)
        self.generated_by_domain = np.zeros(self.n_domains, dtype=np.int64)

    @property
    def mcr(self) -> float:
        return self.delivered / self.generated if self.generated else 0.0


class CrossDomainEnv:
    """Owns buffers, batteries and the mission streams; one ``step`` per slot.

    Actions are flat indices per satellite: 0 ground, 1..4 intra relays,
    5.. inter relays, IDLE (-1) to hold the buffer.
    """

    def __init__(
        self,
        scenario: ScenarioConfig,
        *,
        network: Network | None = None,
        plan: ContactPlan | None = None,
        audit: bool = True,
        strict: bool = True,
    ):
        self.scenario = scenario
        self.network = network or build_network(scenario)
        self.plan = plan or build_contact_plan(scenario, self.network)
        if self.plan.slots < scenario.slots:
            raise ValueError(f"contact plan covers {self.plan.slots} slots, scenario needs {scenario.slots}")
        self.audit = ConstraintAudit(self.network, scenario) if audit else None
        self.strict = strict
        self.e_nominal = scenario.power.p_o * scenario.tau
        commons = [mission_priority(d.attributes) for d in scenario.domains]
        self.common_priorities = commons
        self.burst_priority = burst_priority(commons)
        self.slot = 0
        self.episode = 0
        self.buffers: list[list[Mission]] = []
        self.energy = np.zeros(self.network.size)
        self.pending_credit = np.zeros((self.network.size, 2))  # by first hop: intra, inter
        self.ledger = EpisodeLedger(len(scenario.domains))
        self._next_uid = 0
        self._generators: list[MissionGenerator] = []

    @property
    def size(self) -> int:
        return self.network.size

    @property
    def done(self) -> bool:
        return self.slot > self.scenario.slots

    def reset(self, episode: int = 0) -> Observation:
        sc, net = self.scenario, self.network
        self.episode = episode
        self.slot = 1
        self.buffers = [[] for _ in range(net.size)]
        self.energy = net.e_max.copy()
        self.pending_credit = np.zeros((net.size, 2))
        self.ledger = EpisodeLedger(len(sc.domains))
        self._next_uid = 0
        self._generators = [
            MissionGenerator(
                k, [net.sats[n] for n in net.domain_members(k)], d.missions, sc.slots,
                self.common_priorities[k - 1], self.burst_priority, sc.seed, episode,
            )
            for k, d in enumerate(sc.domains, start=1)
        ]
        self._inject(1)
        if self.audit:
            self.audit.reset()
        return self.observe()

    def buffer_bits(self) -> np.ndarray:
        return np.array([sum(m.volume_bits for m in b) for b in self.buffers])

    def observe(self) -> Observation:
        net, plan, t = self.network, self.plan, self.slot
        used = self.buffer_bits()
        surv = np.array([np.mean([m.survival_slots for m in b]) if b else 0.0 for b in self.buffers])
        raw = raw_states(net, plan, t, used, self.energy, surv, self.e_nominal)
        bms = bms_joint_states(raw, net, self.scenario.scales)
        tms = tms_joint_states(raw, bms, net, self.scenario.scales)
        bmask = bms_masks(net, plan, t)
        return Observation(
            slot=t, raw=raw, bms_jsi=bms, tms_jsi=tms, bms_mask=bmask,
            tms_mask=tms_masks(net, plan, t, bmask), flat_mask=flat_masks(net, plan, t, bmask),
            has_sgl=bmask[:, 0].copy(), buffer_bits=used,
        )

    def _inject(self, slot: int) -> np.ndarray:
        """Admit the missions born at ``slot``; whatever does not fit in storage is dropped."""
        net = self.network
        dropped = np.zeros(net.size, dtype=np.int64)
        used = self.buffer_bits()
        for k, gen in enumerate(self._generators, start=1):
            born = gen.generate(slot, self._next_uid)
            self._next_uid += len(born)
            for m in born:
                n = net.index[m.origin]
                self.ledger.generated += 1
                self.ledger.generated_by_kind[m.kind.value] += 1
                self.ledger.generated_by_domain[k - 1] += 1
                if used[n] + m.volume_bits <= net.storage_cap[n]:
                    self.buffers[n].append(m)
                    used[n] += m.volume_bits
                else:
                    dropped[n] += 1
        self.ledger.dropped += int(dropped.sum())
        return dropped

    def _deliver(self, m: Mission, n: int):
        net, lg = self.network, self.ledger
        lg.delivered += 1
        lg.delivered_bits += m.volume_bits
        lg.completions[net.sats[n].domain - 1] += 1
        lg.delivered_by_origin[m.domain - 1] += 1
        lg.delivered_by_kind[m.kind.value] += 1
        lg.delivery_log.append((self.slot, m.uid, n))
        if m.credit_origin and net.sats[n] != m.origin:
            self.pending_credit[net.index[m.origin], int(m.handoff_inter)] += m.volume_bits

    def step(self, actions) -> tuple[SlotOutcome, Observation | None]:
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        sc, net, cp = self.scenario, self.network, self.plan
        t, N = self.slot, net.size
        pw = sc.power
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (N,):
            raise ValueError(f"expected {N} actions, got shape {actions.shape}")
        e_o = self.e_nominal

        plans = []
        for n in range(N):
            dec = decode_flat(net, cp, t, n, int(actions[n]))
            p_tx = pw.p_set if dec is not None and dec.link is LinkChoice.GROUND else pw.p_sst
            plans.append(plan_transmission(n, self.buffers[n], dec, sc.tau, float(self.energy[n]),
                                           float(net.e_min[n]) + e_o, p_tx))
        e_tx = np.array([p.e_tx for p in plans])

        has_sgl = cp.sgl_vis[t - 1].any(axis=1)
        start_used = self.buffer_bits()
        admitted = np.zeros(N)
        e_rx = np.zeros(N)
        closed = np.zeros(N, dtype=bool)
        incoming: list[list[Mission]] = [[] for _ in range(N)]
        ground_bits = np.zeros(N)
        rejected_bits = np.zeros(N)
        rejected = np.zeros(N, dtype=np.int64)
        delivered = np.zeros(N, dtype=np.int64)
        transfers: list[Transfer] = []
        seen: set[int] = set()

        for n, p in enumerate(plans):  # deterministic sender order (domain, orbit, index)
            if p.empty:
                continue
            uids = {m.uid for m in p.missions}
            if uids & seen:
                raise RuntimeError(f"mission uid(s) {sorted(uids & seen)} sent twice in slot {t}")
            seen |= uids
            self.buffers[n] = [m for m in self.buffers[n] if m.uid not in uids]
            dec = p.decision
            if dec.link is LinkChoice.GROUND:
                for m in p.missions:
                    self._deliver(m, n)
                ground_bits[n] = p.bits
                delivered[n] = len(p.missions)
                transfers.append(Transfer(n, dec.target, dec.link, p.bits, p.bits, dec.rate_bps))
                continue
            r = dec.target
            ok_bits = 0.0
            back = []
            for m in p.missions:
                ok = not closed[r] and start_used[r] + admitted[r] + m.volume_bits <= net.storage_cap[r]
                if ok:
                    rx = e_rx[r] + m.volume_bits / dec.rate_bps * pw.p_sr
                    ok = self.energy[r] - (e_o + e_tx[r] + rx) >= net.e_min[r]
                if not ok:
                    closed[r] = True
                    back.append(m)
                    continue
                e_rx[r] = rx
                admitted[r] += m.volume_bits
                ok_bits += m.volume_bits
                if m.origin == net.sats[n] and not has_sgl[n] and not m.credit_origin:
                    m.credit_origin = True
                    m.handoff_slot = t
                    m.handoff_inter = dec.link is LinkChoice.IDL
                incoming[r].append(m)
            self.buffers[n].extend(back)
            rejected_bits[n] = p.bits - ok_bits
            rejected[n] = len(back)
            transfers.append(Transfer(n, r, dec.link, p.bits, ok_bits, dec.rate_bps))
        for r in range(N):
            self.buffers[r].extend(incoming[r])

        # a credit is paid on the next action of the kind that made the hand-off:
        # an intra relay taken without ground contact, or an inter-domain relay
        pay = np.stack([(actions >= 1) & (actions < BMS_WIDTH) & ~has_sgl, actions >= BMS_WIDTH], axis=1)
        credit = np.where(pay, self.pending_credit, 0.0).sum(axis=1)
        self.pending_credit = np.where(pay, 0.0, self.pending_credit)

        expired = np.zeros(N, dtype=np.int64)
        for n in range(N):
            kept, gone = age_missions(self.buffers[n])
            self.buffers[n] = kept
            expired[n] = len(gone)
        self.ledger.expired += int(expired.sum())

        consumed = e_o + e_tx + e_rx
        harvest = pw.p_h * np.minimum(cp.sunlit[t - 1], sc.tau)
        before = self.energy.copy()
        after = before - consumed
        if (after < 0).any():
            n = int(np.argmin(after))
            raise EnergyInvariantError(f"satellite {net.sats[n]} battery below zero in slot {t}")
        self.energy = np.minimum(net.e_max, after + harvest)
        stored = self.energy - after

        dropped = np.zeros(N, dtype=np.int64)
        if t < sc.slots:
            dropped = self._inject(t + 1)

        out = SlotOutcome(
            slot=t, actions=actions, plans=plans, transfers=transfers, ground_bits=ground_bits,
            rejected_bits=rejected_bits, rejected=rejected, credit_bits=credit, delivered=delivered, expired=expired,
            dropped=dropped, e_tx=e_tx, e_rx=e_rx, e_nominal=e_o, harvest=harvest,
            harvest_stored=stored, energy_before=before, energy_after=self.energy.copy(),
            buffer_bits_after=self.buffer_bits(),
        )
        self._check_conservation()
        if self.audit:
            self.audit.check(out, self.buffers)
            if self.strict and self.audit.violations:
                raise RuntimeError(f"constraint violation: {self.audit.violations[0]}")
        self.slot += 1
        return out, (None if self.done else self.observe())

    def buffered_count(self) -> int:
        return sum(len(b) for b in self.buffers)

    def _check_conservation(self):
        lg = self.ledger
        rhs = lg.delivered + lg.expired + lg.dropped + self.buffered_count()
        if lg.generated != rhs:
            raise ConservationError(
                f"slot {self.slot}: generated {lg.generated} != delivered {lg.delivered} + expired "
                f"{lg.expired} + dropped {lg.dropped} + buffered {self.buffered_count()}"
            )
