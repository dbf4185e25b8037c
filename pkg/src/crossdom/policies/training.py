"""Episode loop shared by training, evaluation and the fixed baselines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from crossdom.netenv import CrossDomainEnv, NetworkMetrics, SlotOutcome, network_metrics

from .schedulers import HicmsScheduler, Scheduler


@dataclass
class EpisodeResult:
    episode: int
    metrics: NetworkMetrics
    reward_bits: float
    profit_bits: float
    penalty_bits: float
    updates: dict[str, int] = field(default_factory=dict)
    losses: dict[str, tuple[float, float]] = field(default_factory=dict)
    violations: int = 0


SlotHook = Callable[[int, "SlotOutcome", object], None]


def run_episode(env: CrossDomainEnv, sched: Scheduler, episode: int, hook: SlotHook | None = None) -> EpisodeResult:
    obs = env.reset(episode)
    sched.begin_episode(episode)
    banks = sched.banks()
    marks = {k: len(b.loss_trace) for k, b in banks.items()}
    reward = profit = penalty = 0.0
    while obs is not None:
        dec = sched.decide(obs)
        out, nxt = env.step(dec.actions)
        sched.feedback(obs, dec, out, nxt)
        reward += float(out.reward_bits.sum())
        profit += float(out.profit_bits.sum())
        penalty += float(out.rejected_bits.sum())
        if hook is not None:
            hook(episode, out, dec)
        obs = nxt
    losses = {}
    for k, b in banks.items():
        new = b.loss_trace[marks[k]:]
        losses[k] = tuple(np.mean(new, axis=0)) if new else (float("nan"), float("nan"))
    return EpisodeResult(
        episode=episode,
        metrics=network_metrics(env.ledger, env.buffered_count()),
        reward_bits=reward, profit_bits=profit, penalty_bits=penalty,
        updates={k: b.updates_episode for k, b in banks.items()},
        losses=losses,
        violations=len(env.audit.violations) if env.audit else 0,
    )


def run_episodes(env, sched, episodes: int, start: int = 0, hook: SlotHook | None = None) -> list[EpisodeResult]:
    return [run_episode(env, sched, start + e, hook) for e in range(episodes)]


def hicms_train(env: CrossDomainEnv, config=None, seed: int = 0, episodes: int | None = None,
                hook: SlotHook | None = None) -> tuple[HicmsScheduler, list[EpisodeResult]]:
    """Train the hierarchical scheduler; returns it with the per-episode trace."""
    train = config or env.scenario.train
    sched = HicmsScheduler(env, seed, train)
    n = train.episodes if episodes is None else episodes
    return sched, run_episodes(env, sched, n, hook=hook)
