"""Experiment orchestration: train, evaluate, baselines and parameter sweeps."""
from __future__ import annotations

import csv
import dataclasses
import logging
import time
from pathlib import Path
from typing import Callable, Sequence

from crossdom.netenv import CrossDomainEnv, SlotOutcome
from crossdom.policies import SCHEDULERS, make_scheduler, run_episodes
from crossdom.policies.checkpoint import load_policy, save_policy
from crossdom.policies.schedulers import SlotDecision
from crossdom.scenario import ScenarioConfig

from .config import config_hash
from .report import RunReport, episode_row, export_report

log = logging.getLogger(__name__)

EXPORTS = ("metrics", "energy", "slots")
MODES = ("train", "eval") + tuple(f"baseline:{k}" for k in SCHEDULERS)


def _scheduler_kind(mode: str) -> tuple[str, bool]:
    """(scheduler kind, greedy evaluation?) for a run mode."""
    if mode == "train":
        return "hicms", False
    if mode == "eval":
        return "hicms", True
    if mode.startswith("baseline:"):
        kind = mode.split(":", 1)[1]
        if kind in SCHEDULERS:
            return kind, False
    raise ValueError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")


class _SlotWriter:
    """Streams per-slot rows of the optional energy and slot exports."""

    SLOT_COLUMNS = ["episode", "slot", "sat", "action_layer", "action", "profit_bits", "penalty_bits",
                    "delivered", "expired", "rejected"]
    ENERGY_COLUMNS = ["episode", "slot", "sat", "energy_before_j", "e_transmit_j", "e_receive_j",
                      "e_nominal_j", "harvest_available_j", "harvest_stored_j", "energy_after_j"]

    def __init__(self, env: CrossDomainEnv, out: Path, exports: Sequence[str]):
        self.env = env
        self.files, self.writers = [], {}
        for kind, cols in (("slots", self.SLOT_COLUMNS), ("energy", self.ENERGY_COLUMNS)):
            if kind in exports:
                fh = (out / f"{kind}.csv").open("w", newline="")
                self.files.append(fh)
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                self.writers[kind] = w

    def _action_label(self, out: SlotOutcome, n: int) -> str:
        p = out.plans[n]
        if p.decision is None:
            return "idle"
        d = p.decision
        if d.link.value == "ground":
            return f"ground:ES{self.env.scenario.stations[d.target].id}"
        return f"{d.link.value}:{self.env.network.sats[d.target]}"

    def __call__(self, episode: int, out: SlotOutcome, dec: SlotDecision):
        sats = self.env.network.sats
        if "slots" in self.writers:
            w = self.writers["slots"]
            for n, s in enumerate(sats):
                w.writerow([episode, out.slot, str(s), dec.layers[n], self._action_label(out, n),
                            repr(float(out.profit_bits[n])), repr(float(out.rejected_bits[n])),
                            int(out.delivered[n]), int(out.expired[n]), int(out.rejected[n])])
        if "energy" in self.writers:
            w = self.writers["energy"]
            for n, s in enumerate(sats):
                w.writerow([episode, out.slot, str(s)] + [repr(float(x)) for x in (
                    out.energy_before[n], out.e_tx[n], out.e_rx[n], out.e_nominal, out.harvest[n],
                    out.harvest_stored[n], out.energy_after[n])])

    def close(self):
        for fh in self.files:
            fh.close()


def run_experiment(
    config: ScenarioConfig,
    mode: str,
    out_dir: str | Path | None = None,
    *,
    episodes: int | None = None,
    seed: int | None = None,
    load_policy_path: str | Path | None = None,
    save_policy_path: str | Path | None = None,
    exports: Sequence[str] = ("metrics",),
    audit: bool = True,
    env: CrossDomainEnv | None = None,
) -> RunReport:
    """Run one mode end to end and (optionally) write its report files."""
    kind, greedy = _scheduler_kind(mode)
    bad = set(exports) - set(EXPORTS)
    if bad:
        raise ValueError(f"unknown export(s) {sorted(bad)}; choose from {', '.join(EXPORTS)}")
    if seed is not None:
        config = config.with_seed(seed)
    if episodes is None:
        episodes = config.train.final_window if mode == "eval" else config.train.episodes
    t0 = time.perf_counter()
    if env is None or env.scenario != config:
        env = CrossDomainEnv(config, audit=audit)
    sched = make_scheduler(kind, env, config.seed)
    sched.greedy = greedy
    if load_policy_path is not None:
        load_policy(sched, load_policy_path)
    out = Path(out_dir) if out_dir is not None else None
    writer: Callable | None = None
    if out is not None and ({"energy", "slots"} & set(exports)):
        out.mkdir(parents=True, exist_ok=True)
        writer = _SlotWriter(env, out, exports)
    try:
        results = run_episodes(env, sched, episodes, hook=writer)
    finally:
        if writer is not None:
            writer.close()
    report = RunReport(
        scenario=config.name, mode=mode, seed=config.seed, config_hash=config_hash(config),
        n_domains=len(config.domains), rows=[episode_row(r) for r in results],
        final_window=config.train.final_window, wall_clock_s=time.perf_counter() - t0,
        violations=env.audit.summary() if env.audit else {},
        extra={"scheduler": kind, "greedy": greedy},
    )
    log.info("%s %s seed=%d: final-window MCR %.4f over %d episodes (%.1fs)", config.name, mode,
             config.seed, report.final_mcr, episodes, report.wall_clock_s)
    if save_policy_path is not None:
        if not sched.banks():
            raise ValueError(f"{kind} has no learned policy to save")
        save_policy(sched, save_policy_path)
    if out is not None:
        export_report(report, out)
    return report


def _replace_domains(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    doms = tuple(dataclasses.replace(d, missions=dataclasses.replace(d.missions, **kw)) for d in cfg.domains)
    return dataclasses.replace(cfg, domains=doms)


AXES: dict[str, Callable[[ScenarioConfig, float], ScenarioConfig]] = {
    "sgl_rate_mbps": lambda c, v: dataclasses.replace(
        c, rate_model=dataclasses.replace(c.rate_model, table_sgl_rate=float(v) * 1e6)),
    "battery_kj": lambda c, v: dataclasses.replace(
        c, ncs=dataclasses.replace(c.ncs, battery_j=float(v) * 1e3),
        cs=dataclasses.replace(c.cs, battery_j=2 * float(v) * 1e3)),
    "burst_rate": lambda c, v: _replace_domains(c, burst_rate=float(v)),
    "burst_survival": lambda c, v: _replace_domains(c, burst_survival=int(v)),
    "domains": lambda c, v: dataclasses.replace(c, domains=c.domains[:int(v)]),
}


def set_path(obj, path: str, value):
    """Replace a nested dataclass field addressed by a dotted path ("power.p_h", "domains.0.orbits")."""
    head, _, rest = path.partition(".")
    if isinstance(obj, tuple):
        try:
            i = int(head)
            item = obj[i]
        except (ValueError, IndexError):
            raise KeyError(head) from None
        return obj[:i] + (set_path(item, rest, value) if rest else value,) + obj[i + 1:]
    if not dataclasses.is_dataclass(obj) or head not in {f.name for f in dataclasses.fields(obj)}:
        raise KeyError(head)
    cur = getattr(obj, head)
    if rest:
        new = set_path(cur, rest, value)
    else:
        if isinstance(cur, bool) or not isinstance(cur, (int, float)):
            raise KeyError(head)
        new = type(cur)(value)
    return dataclasses.replace(obj, **{head: new})


def apply_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis in AXES:
        return AXES[axis](cfg, value)
    try:
        return set_path(cfg, axis, value)
    except KeyError:
        raise ValueError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(AXES)}, "
                         "or a dotted path to a numeric field (e.g. power.p_h, domains.0.missions.common_total)"
                         ) from None


def sweep(
    config: ScenarioConfig,
    axis: str,
    values: Sequence,
    mode: str = "baseline:ncms",
    out_dir: str | Path | None = None,
    *,
    episodes: int | None = None,
    exports: Sequence[str] = ("metrics",),
) -> list[RunReport]:
    """One run per value; every point shares the scenario seed."""
    points = [apply_axis(config, axis, v) for v in values]  # validate all before running any
    reports = []
    for v, cfg in zip(values, points):
        sub = Path(out_dir) / f"{axis}={v}" if out_dir is not None else None
        rep = run_experiment(cfg, mode, sub, episodes=episodes, exports=exports)
        rep.extra.update({"sweep_axis": axis, "sweep_value": v, "seed_policy": "shared scenario seed"})
        if sub is not None:
            export_report(rep, sub)
        reports.append(rep)
    return reports
