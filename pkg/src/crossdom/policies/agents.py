"""Per-satellite actor-critic agents of one scheduling layer, with their experience buffers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import (
    Mlp,
    RmsProp,
    actor_loss,
    critic_loss,
    forward_value,
    masked_softmax,
    td_target,
)


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: int
    reward: float
    slot: int
    next_state: np.ndarray
    done: bool = False


@dataclass
class LayerConfig:
    entries: int
    actions: int
    minibatch: int
    lr_actor: float
    lr_critic: float
    gamma: float
    rms_decay: float = 0.99
    rms_eps: float = 1e-5
    block_units: int = 32
    merge_units: int = 64
    shared: bool = False


@dataclass
class ExperienceBuffer:
    """Fixed-size per-agent store; every agent records one row per slot, valid or not."""

    agents: int
    size: int
    entries: int
    actions: int
    count: int = 0

    def __post_init__(self):
        A, M = self.agents, self.size
        self.states = np.zeros((A, M, 4, self.entries))
        self.next_states = np.zeros_like(self.states)
        self.actions_taken = np.zeros((A, M), dtype=np.int64)
        self.rewards = np.zeros((A, M))
        self.valid = np.zeros((A, M), dtype=bool)
        self.masks = np.zeros((A, M, self.actions), dtype=bool)
        self.done = np.zeros((A, M), dtype=bool)
        self.slots = np.zeros(M, dtype=np.int64)

    @property
    def full(self) -> bool:
        return self.count >= self.size

    def add(self, slot, states, actions, rewards, valid, masks, next_states, done):
        i = self.count
        self.states[:, i] = states
        self.actions_taken[:, i] = np.where(valid, actions, 0)
        self.rewards[:, i] = rewards
        self.valid[:, i] = valid
        self.masks[:, i] = masks
        self.next_states[:, i] = next_states
        self.done[:, i] = done
        self.slots[i] = slot
        self.count += 1

    def clear(self):
        self.count = 0

    def records(self, agent: int) -> list[Experience]:
        return [
            Experience(self.states[agent, i], int(self.actions_taken[agent, i]), float(self.rewards[agent, i]),
                       int(self.slots[i]), self.next_states[agent, i], bool(self.done[agent, i]))
            for i in range(self.count) if self.valid[agent, i]
        ]


class ActorCriticBank:
    """Actor and critic networks for ``agents`` satellites of one layer.

    With ``shared`` set, all satellites use one network pair and their
    samples are pooled at update time.
    """

    def __init__(self, name: str, agents: int, cfg: LayerConfig, rng: np.random.Generator):
        self.name = name
        self.agents = agents
        self.cfg = cfg
        k = 1 if cfg.shared else agents
        kw = dict(block_units=cfg.block_units, merge_units=cfg.merge_units, agents=k)
        self.actor = Mlp.create(cfg.entries, cfg.actions, "softmax", rng, **kw)
        self.critic = Mlp.create(cfg.entries, 1, "linear", rng, **kw)
        self.opt_actor = RmsProp(cfg.lr_actor, cfg.rms_decay, cfg.rms_eps)
        self.opt_critic = RmsProp(cfg.lr_critic, cfg.rms_decay, cfg.rms_eps)
        self.buffer = ExperienceBuffer(agents, cfg.minibatch, cfg.entries, cfg.actions)
        self.updates = 0
        self.updates_episode = 0
        self.loss_trace: list[tuple[float, float]] = []

    def _net_view(self, x: np.ndarray) -> np.ndarray:
        """(agents, B, ...) -> (net agents, B', ...)."""
        if self.cfg.shared:
            return x.reshape((1, -1) + x.shape[2:])
        return x

    def probs(self, states: np.ndarray, masks: np.ndarray) -> np.ndarray:
        """states (agents, 4, E), masks (agents, K) -> (agents, K) masked policy."""
        x = self._net_view(states[:, None])
        logits, _ = self.actor.forward(x)
        logits = logits.reshape(self.agents, -1)
        return masked_softmax(logits, masks)

    def value(self, states: np.ndarray) -> np.ndarray:
        return forward_value(self.critic, self._net_view(states[:, None])).reshape(self.agents)

    def act(self, states, masks, rng: np.random.Generator, greedy: bool = False) -> np.ndarray:
        p = self.probs(states, masks)
        empty = ~masks.any(axis=1)
        if greedy:
            a = np.argmax(np.where(masks, p, -1.0), axis=1)
        else:
            u = rng.random(self.agents)[:, None]
            cdf = np.cumsum(p, axis=1)
            a = np.minimum((cdf <= u * cdf[:, -1:]).sum(axis=1), p.shape[1] - 1)
            # guard against landing on a zero-probability column through round-off
            bad = ~np.take_along_axis(masks, a[:, None], axis=1)[:, 0]
            if bad.any():
                a = np.where(bad, np.argmax(np.where(masks, p, -1.0), axis=1), a)
        return np.where(empty, -1, a)

    def begin_episode(self):
        self.buffer.clear()
        self.updates_episode = 0

    def store(self, slot, states, actions, rewards, valid, masks, next_states, done):
        self.buffer.add(slot, states, actions, rewards, valid, masks, next_states, done)
        if self.buffer.full:
            self.update()
            self.buffer.clear()

    def update(self):
        """One actor and one critic step over the buffered minibatch."""
        b, cfg = self.buffer, self.cfg
        self.updates += 1
        self.updates_episode += 1
        n = b.count
        valid = self._net_view(b.valid[:, :n, None])[..., 0]
        if not valid.any():
            return
        s = self._net_view(b.states[:, :n])
        s2 = self._net_view(b.next_states[:, :n])
        target_critic = self.critic.copy()  # frozen copy for the bootstrap term
        v_next = forward_value(target_critic, s2)
        targets = td_target(self._net_view(b.rewards[:, :n, None])[..., 0], v_next, cfg.gamma,
                            self._net_view(b.done[:, :n, None])[..., 0])
        v, c_cache = self.critic.forward(s)
        v = v[..., 0]
        adv = targets - v
        c_loss, dv = critic_loss(v, targets, valid)
        g_critic = self.critic.backward(c_cache, dv[..., None])
        logits, a_cache = self.actor.forward(s)
        masks = self._net_view(b.masks[:, :n])
        actions = self._net_view(b.actions_taken[:, :n, None])[..., 0]
        a_loss, dlogits = actor_loss(logits, masks, actions, adv, valid)
        g_actor = self.actor.backward(a_cache, dlogits)
        active = valid.any(axis=1)
        self.opt_actor.step(self.actor.params, g_actor, active)
        self.opt_critic.step(self.critic.params, g_critic, active)
        self.loss_trace.append((float(a_loss[active].mean()), float(c_loss[active].mean())))
