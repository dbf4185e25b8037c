"""Schedulers: the hierarchical learner and the four baselines, all speaking flat env actions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from crossdom.netenv import BMS_WIDTH, IDLE, CrossDomainEnv, Observation, SlotOutcome, clip_reward
from crossdom.scenario import TrainConfig

from .agents import ActorCriticBank, LayerConfig

SCHEDULERS = ("hicms", "idms", "icms", "ncms", "bts")


@dataclass
class SlotDecision:
    actions: np.ndarray  # flat env actions
    layers: list[str]  # per satellite: "tms", "bms", "flat" or "idle"
    bms: np.ndarray | None = None
    tms: np.ndarray | None = None


def baseline_policy(kind: str, feasible: list[int], rng: np.random.Generator) -> int:
    """Single-node rule for the fixed baselines over flat action indices."""
    if kind == "ncms":
        return 0 if 0 in feasible else IDLE
    if kind == "bts":
        return int(rng.choice(feasible)) if feasible else IDLE
    raise ValueError(f"{kind!r} is not a fixed baseline; use a learned scheduler")


class Scheduler:
    name = "base"
    learns = False

    def __init__(self, env: CrossDomainEnv, seed: int = 0):
        self.env = env
        self.rng = np.random.default_rng([seed & 0xFFFFFFFF, seed >> 32, 0xAC7])
        self.greedy = False

    def begin_episode(self, episode: int):
        pass

    def decide(self, obs: Observation) -> SlotDecision:
        raise NotImplementedError

    def feedback(self, obs: Observation, dec: SlotDecision, out: SlotOutcome, nxt: Observation | None):
        pass

    def banks(self) -> dict[str, ActorCriticBank]:
        return {}


class NcmsScheduler(Scheduler):
    """Direct-to-ground only."""

    name = "ncms"

    def decide(self, obs):
        a = np.where(obs.has_sgl, 0, IDLE)
        return SlotDecision(a, ["flat" if x != IDLE else "idle" for x in a])


class BtsScheduler(Scheduler):
    """Uniform draw over the flat feasible set (ground, intra and inter relays)."""

    name = "bts"

    def decide(self, obs):
        u = self.rng.random(obs.flat_mask.shape[0])
        cnt = obs.flat_mask.sum(axis=1)
        pick = np.minimum((u * cnt).astype(np.int64), np.maximum(cnt - 1, 0))
        order = np.cumsum(obs.flat_mask, axis=1) - 1
        a = np.argmax(obs.flat_mask & (order == pick[:, None]), axis=1)
        a = np.where(cnt > 0, a, IDLE)
        return SlotDecision(a, ["flat" if x != IDLE else "idle" for x in a])


def _layer_cfg(train: TrainConfig, entries, actions, layer) -> LayerConfig:
    top = layer == "tms"
    return LayerConfig(
        entries=entries, actions=actions,
        minibatch=train.minibatch_tms if top else train.minibatch_bms,
        lr_actor=train.lr_actor_tms if top else train.lr_actor_bms,
        lr_critic=train.lr_critic_tms if top else train.lr_critic_bms,
        gamma=train.gamma, rms_decay=train.rms_decay, rms_eps=train.rms_eps,
        block_units=train.block_units, merge_units=train.merge_units, shared=train.shared_weights,
    )


class _Learner(Scheduler):
    learns = True

    def __init__(self, env, seed=0, train: TrainConfig | None = None):
        super().__init__(env, seed)
        self.train = train or env.scenario.train
        self.init_rng = np.random.default_rng([seed & 0xFFFFFFFF, seed >> 32, 0x1A17])
        sc = env.scenario
        self.reward_scale = sc.reward_scale_bits or sc.largest_mission_bits()

    def rewards(self, out: SlotOutcome) -> np.ndarray:
        return clip_reward(out.reward_bits, self.reward_scale)

    def begin_episode(self, episode):
        for b in self.banks().values():
            b.begin_episode()


class HicmsScheduler(_Learner):
    """Top layer on cross-domain satellites picks the service domain, bottom layer picks ground or relay."""

    name = "hicms"

    def __init__(self, env, seed=0, train=None):
        super().__init__(env, seed, train)
        net = env.network
        self.cs = np.flatnonzero(net.is_cs)
        self.bms_bank = ActorCriticBank("bms", net.size, _layer_cfg(self.train, BMS_WIDTH, BMS_WIDTH, "bms"),
                                        self.init_rng)
        width = 1 + net.n_aux
        self.tms_bank = ActorCriticBank("tms", len(self.cs), _layer_cfg(self.train, width, width, "tms"),
                                        self.init_rng) if len(self.cs) else None

    def banks(self):
        out = {"bms": self.bms_bank}
        if self.tms_bank is not None:
            out["tms"] = self.tms_bank
        return out

    def decide(self, obs):
        n = obs.bms_mask.shape[0]
        bms = self.bms_bank.act(obs.bms_jsi, obs.bms_mask, self.rng, self.greedy)
        flat = bms.copy()
        layers = ["bms" if a != IDLE else "idle" for a in bms]
        tms = np.full(n, IDLE)
        if self.tms_bank is not None:
            top = self.tms_bank.act(obs.tms_jsi[self.cs], obs.tms_mask[self.cs], self.rng, self.greedy)
            tms[self.cs] = top
            flat[self.cs] = np.where(top == 0, bms[self.cs], np.where(top > 0, BMS_WIDTH + top - 1, IDLE))
            for i, c in enumerate(self.cs):
                layers[c] = "idle" if top[i] == IDLE else ("bms" if top[i] == 0 else "tms")
        return SlotDecision(flat, layers, bms, tms)

    def feedback(self, obs, dec, out, nxt):
        if self.greedy:
            return
        r = self.rewards(out)
        done = nxt is None
        nb = obs.bms_jsi if done else nxt.bms_jsi
        bms_valid = (dec.actions != IDLE) & (dec.actions < BMS_WIDTH)
        self.bms_bank.store(obs.slot, obs.bms_jsi, dec.bms, r, bms_valid, obs.bms_mask, nb,
                            np.full(len(r), done))
        if self.tms_bank is not None:
            cs = self.cs
            nt = obs.tms_jsi if done else nxt.tms_jsi
            self.tms_bank.store(obs.slot, obs.tms_jsi[cs], dec.tms[cs], r[cs], dec.tms[cs] != IDLE,
                                obs.tms_mask[cs], nt[cs], np.full(len(cs), done))


class IdmsScheduler(_Learner):
    """Bottom layer only: each domain keeps to its own satellites and stations."""

    name = "idms"

    def __init__(self, env, seed=0, train=None):
        super().__init__(env, seed, train)
        self.bank = ActorCriticBank("bms", env.network.size,
                                    _layer_cfg(self.train, BMS_WIDTH, BMS_WIDTH, "bms"), self.init_rng)

    def banks(self):
        return {"bms": self.bank}

    def decide(self, obs):
        a = self.bank.act(obs.bms_jsi, obs.bms_mask, self.rng, self.greedy)
        return SlotDecision(a, ["bms" if x != IDLE else "idle" for x in a], bms=a)

    def feedback(self, obs, dec, out, nxt):
        if self.greedy:
            return
        done = nxt is None
        nb = obs.bms_jsi if done else nxt.bms_jsi
        self.bank.store(obs.slot, obs.bms_jsi, dec.actions, self.rewards(out), dec.actions != IDLE,
                        obs.bms_mask, nb, np.full(len(dec.actions), done))


def flat_states(obs: Observation) -> np.ndarray:
    """Self and intra relays followed by the inter relays, (N, 4, 5 + A)."""
    return np.concatenate([obs.bms_jsi, obs.tms_jsi[:, :, 1:]], axis=2)


class IcmsScheduler(_Learner):
    """One flat layer choosing among ground, intra relays and inter relays."""

    name = "icms"

    def __init__(self, env, seed=0, train=None):
        super().__init__(env, seed, train)
        width = BMS_WIDTH + env.network.n_aux
        self.bank = ActorCriticBank("flat", env.network.size, _layer_cfg(self.train, width, width, "bms"),
                                    self.init_rng)

    def banks(self):
        return {"flat": self.bank}

    def decide(self, obs):
        a = self.bank.act(flat_states(obs), obs.flat_mask, self.rng, self.greedy)
        return SlotDecision(a, ["flat" if x != IDLE else "idle" for x in a])

    def feedback(self, obs, dec, out, nxt):
        if self.greedy:
            return
        done = nxt is None
        s = flat_states(obs)
        self.bank.store(obs.slot, s, dec.actions, self.rewards(out), dec.actions != IDLE, obs.flat_mask,
                        s if done else flat_states(nxt), np.full(len(dec.actions), done))


def make_scheduler(kind: str, env: CrossDomainEnv, seed: int = 0, train: TrainConfig | None = None) -> Scheduler:
    kinds = {"hicms": HicmsScheduler, "idms": IdmsScheduler, "icms": IcmsScheduler,
             "ncms": NcmsScheduler, "bts": BtsScheduler}
    if kind not in kinds:
        raise ValueError(f"unknown scheduler {kind!r}; choose from {', '.join(SCHEDULERS)}")
    cls = kinds[kind]
    if cls in (NcmsScheduler, BtsScheduler):
        return cls(env, seed)
    return cls(env, seed, train)
