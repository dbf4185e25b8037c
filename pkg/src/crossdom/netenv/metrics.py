"""Completion metrics of one episode."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import EpisodeLedger


@dataclass(frozen=True)
class NetworkMetrics:
    mcr: float
    generated: int
    delivered: int
    expired: int
    dropped: int
    buffered: int
    completions: tuple[int, ...]  # per domain, by delivering satellite
    delivered_by_origin: tuple[int, ...]
    generated_by_kind: dict
    delivered_by_kind: dict

    def as_dict(self) -> dict:
        out = {
            "mcr": self.mcr, "generated": self.generated, "delivered": self.delivered,
            "expired": self.expired, "dropped": self.dropped, "buffered": self.buffered,
        }
        for k, c in enumerate(self.completions, start=1):
            out[f"completed_d{k}"] = c
        for kind in sorted(self.generated_by_kind):
            out[f"generated_{kind}"] = self.generated_by_kind[kind]
            out[f"delivered_{kind}"] = self.delivered_by_kind[kind]
        return out


def network_metrics(ledger: EpisodeLedger, buffered: int) -> NetworkMetrics:
    if int(np.sum(ledger.completions)) != len(ledger.delivery_log):
        raise RuntimeError("per-domain completions disagree with the delivery log")
    return NetworkMetrics(
        mcr=ledger.mcr,
        generated=ledger.generated,
        delivered=ledger.delivered,
        expired=ledger.expired,
        dropped=ledger.dropped,
        buffered=buffered,
        completions=tuple(int(c) for c in ledger.completions),
        delivered_by_origin=tuple(int(c) for c in ledger.delivered_by_origin),
        generated_by_kind=dict(ledger.generated_by_kind),
        delivered_by_kind=dict(ledger.delivered_by_kind),
    )
