"""Run reports: per-episode CSV and a JSON summary.

episodes.csv columns, one row per episode, in this order:
    episode, mcr, generated, delivered, expired, dropped, buffered,
    completed_d1 .. completed_dK   missions delivered by satellites of each domain
    generated_burst, delivered_burst, generated_common, delivered_common,
    reward_bits, profit_bits, penalty_bits,
    updates_bms, updates_tms, actor_loss_bms, critic_loss_bms, actor_loss_tms, critic_loss_tms,
    violations
Learned single-layer schedulers (IDMS, ICMS) report under the *_bms columns.
Missing values (no learner, no update) are written as "nan".
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from crossdom.policies.training import EpisodeResult

LEARN_COLUMNS = ("updates_bms", "updates_tms", "actor_loss_bms", "critic_loss_bms",
                 "actor_loss_tms", "critic_loss_tms")


def episode_columns(n_domains: int) -> list[str]:
    return (["episode", "mcr", "generated", "delivered", "expired", "dropped", "buffered"]
            + [f"completed_d{k}" for k in range(1, n_domains + 1)]
            + ["generated_burst", "delivered_burst", "generated_common", "delivered_common",
               "reward_bits", "profit_bits", "penalty_bits", *LEARN_COLUMNS, "violations"])


def episode_row(res: EpisodeResult) -> dict:
    row = {"episode": res.episode, **res.metrics.as_dict(),
           "reward_bits": res.reward_bits, "profit_bits": res.profit_bits, "penalty_bits": res.penalty_bits,
           "violations": res.violations}
    for col in LEARN_COLUMNS:
        row[col] = math.nan
    for layer in ("bms", "tms"):
        src = "flat" if layer == "bms" and "flat" in res.updates else layer
        if src in res.updates:
            row[f"updates_{layer}"] = res.updates[src]
            row[f"actor_loss_{layer}"], row[f"critic_loss_{layer}"] = res.losses[src]
    return row


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        return repr(f)
    return str(v)


@dataclass
class RunReport:
    scenario: str
    mode: str
    seed: int
    config_hash: str
    n_domains: int
    rows: list[dict] = field(default_factory=list)
    final_window: int = 20
    wall_clock_s: float = 0.0
    violations: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def mcr_trace(self) -> list[float]:
        return [r["mcr"] for r in self.rows]

    @property
    def final_mcr(self) -> float:
        tr = self.mcr_trace[-self.final_window:]
        return float(np.mean(tr)) if tr else math.nan

    def csv_text(self) -> str:
        cols = episode_columns(self.n_domains)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in cols])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "episodes": len(self.rows),
            "final_window": self.final_window,
            "mcr_final_window": self.final_mcr,
            "mcr_mean": float(np.mean(self.mcr_trace)) if self.rows else math.nan,
            "violations": self.violations,
            "wall_clock_s": self.wall_clock_s,
            "columns": episode_columns(self.n_domains),
            **self.extra,
        }


def export_report(report: RunReport, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "episodes.csv"
        csv_path.write_text(report.csv_text())
        json_path = out / "summary.json"
        json_path.write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise OSError(f"cannot write report under {out}: {e}") from e
    return {"metrics": csv_path, "summary": json_path}
