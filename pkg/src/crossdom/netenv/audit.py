"""Independent per-slot recheck of the storage, energy, capacity and single-link constraints."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from crossdom.missions import Mission
from crossdom.scenario import ScenarioConfig

from .topology import Network
from .transfer import LinkChoice

if TYPE_CHECKING:
    from .env import SlotOutcome

ENERGY_ATOL = 1e-6  # J
CAPACITY_RTOL = 1e-9


@dataclass(frozen=True)
class Violation:
    slot: int
    sat: int
    rule: str
    detail: str


@dataclass
class ConstraintAudit:
    network: Network
    scenario: ScenarioConfig
    violations: list[Violation] = field(default_factory=list)
    slots_checked: int = 0

    def reset(self):
        self.violations = []
        self.slots_checked = 0

    def _flag(self, slot, sat, rule, detail):
        self.violations.append(Violation(slot, sat, rule, detail))

    def check(self, out: "SlotOutcome", buffers: Sequence[Sequence[Mission]]):
        net, sc = self.network, self.scenario
        pw, tau, t = sc.power, sc.tau, out.slot
        self.slots_checked += 1

        # storage after commit
        for n, buf in enumerate(buffers):
            used = sum(m.volume_bits for m in buf)
            if used > net.storage_cap[n]:
                self._flag(t, n, "storage", f"{used:.6g} > {net.storage_cap[n]:.6g} bits")

        # link capacity, recomputed transmit energy
        e_tx = [0.0] * net.size
        for p in out.plans:
            if p.empty:
                continue
            d = p.decision
            bits = sum(m.volume_bits for m in p.missions)
            if bits > d.rate_bps * tau * (1 + CAPACITY_RTOL):
                self._flag(t, p.sender, "capacity", f"{bits:.6g} bits > {d.rate_bps * tau:.6g}")
            power = pw.p_set if d.link is LinkChoice.GROUND else pw.p_sst
            e_tx[p.sender] = bits / d.rate_bps * power

        e_rx = [0.0] * net.size
        links = Counter()
        for tr in out.transfers:
            links[tr.sender] += 1
            if tr.admitted_bits > tr.planned_bits:
                self._flag(t, tr.receiver, "admission", f"admitted {tr.admitted_bits} > sent {tr.planned_bits}")
            if tr.link is not LinkChoice.GROUND:
                e_rx[tr.receiver] += tr.admitted_bits / tr.rate_bps * pw.p_sr
        for n, c in links.items():
            if c > 1:
                self._flag(t, n, "single-link", f"{c} outgoing links")

        for n in range(net.size):
            consumed = out.e_nominal + e_tx[n] + e_rx[n]
            before, after = out.energy_before[n], out.energy_after[n]
            if (e_tx[n] > 0 or e_rx[n] > 0) and before - consumed < net.e_min[n] - ENERGY_ATOL:
                self._flag(t, n, "energy-floor", f"{before - consumed:.3f} J < {net.e_min[n]:.3f} J")
            if after > net.e_max[n] + ENERGY_ATOL or after < 0:
                self._flag(t, n, "battery-cap", f"{after:.3f} J outside [0, {net.e_max[n]}]")
            if out.harvest_stored[n] > out.harvest[n] + ENERGY_ATOL or out.harvest_stored[n] < -ENERGY_ATOL:
                self._flag(t, n, "harvest", f"stored {out.harvest_stored[n]:.3f} of {out.harvest[n]:.3f} J")
            if abs((after - before) - (out.harvest_stored[n] - consumed)) > ENERGY_ATOL:
                self._flag(t, n, "energy-ledger", f"delta {after - before:.6f} J")

        uids = Counter(m.uid for buf in buffers for m in buf)
        dup = [u for u, c in uids.items() if c > 1]
        if dup:
            self._flag(t, -1, "double-spend", f"uids {dup[:5]} held twice")

    def summary(self) -> dict[str, int]:
        return dict(Counter(v.rule for v in self.violations))
