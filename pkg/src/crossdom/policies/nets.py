"""Block-structured MLPs with hand-written backprop, batched over independent agents.

Every parameter carries a leading agent axis, so A separate networks are
evaluated with one einsum. Inputs are feature-major joint states of shape
(A, B, 4, E): each of the 4 features passes through its own dense block,
the blocks are concatenated, merged by one hidden layer, then mapped by
the head (softmax logits or a scalar value).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_FEATURES = 4
LOG_FLOOR = 1e-12


def orthogonal_init(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    """Matrix with orthonormal rows or columns (whichever is fewer), times gain."""
    rows, cols = shape
    if rows < 1 or cols < 1:
        raise ValueError(f"shape must be positive, got {shape}")
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))  # unique decomposition
    if rows < cols:
        q = q.T
    return gain * q


def relu(x):
    return np.maximum(x, 0.0)


@dataclass
class Mlp:
    """A agents x (4 feature blocks -> merge -> head)."""

    entries: int
    out: int
    head: str  # "softmax" or "linear"
    block_units: int = 32
    merge_units: int = 64
    agents: int = 1
    params: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def create(cls, entries, out, head, rng, *, block_units=32, merge_units=64, agents=1) -> "Mlp":
        if head not in ("softmax", "linear"):
            raise ValueError(f"unknown head {head!r}")
        net = cls(entries, out, head, block_units, merge_units, agents)
        head_gain = 0.01 if head == "softmax" else 1.0
        p = {}
        for f in range(N_FEATURES):
            p[f"w{f}"] = np.stack([orthogonal_init((entries, block_units), math.sqrt(2), rng) for _ in range(agents)])
            p[f"b{f}"] = np.zeros((agents, block_units))
        p["wm"] = np.stack([orthogonal_init((N_FEATURES * block_units, merge_units), math.sqrt(2), rng)
                            for _ in range(agents)])
        p["bm"] = np.zeros((agents, merge_units))
        p["wo"] = np.stack([orthogonal_init((merge_units, out), head_gain, rng) for _ in range(agents)])
        p["bo"] = np.zeros((agents, out))
        net.params = p
        return net

    def copy(self) -> "Mlp":
        return Mlp(self.entries, self.out, self.head, self.block_units, self.merge_units, self.agents,
                   {k: v.copy() for k, v in self.params.items()})

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        """x: (A, B, 4, E) -> head pre-activations (A, B, out) and a backprop cache."""
        p = self.params
        if x.ndim != 4 or x.shape[0] != self.agents or x.shape[2:] != (N_FEATURES, self.entries):
            raise ValueError(f"expected input (A={self.agents}, B, {N_FEATURES}, {self.entries}), got {x.shape}")
        blocks = [relu(np.einsum("abe,aeh->abh", x[:, :, f], p[f"w{f}"]) + p[f"b{f}"][:, None])
                  for f in range(N_FEATURES)]
        h1 = np.concatenate(blocks, axis=2)
        h2 = relu(np.einsum("abi,aio->abo", h1, p["wm"]) + p["bm"][:, None])
        y = np.einsum("abi,aio->abo", h2, p["wo"]) + p["bo"][:, None]
        return y, {"x": x, "h1": h1, "h2": h2}

    def backward(self, cache: dict, dy: np.ndarray) -> dict[str, np.ndarray]:
        p, x, h1, h2 = self.params, cache["x"], cache["h1"], cache["h2"]
        g = {"wo": np.einsum("abi,abo->aio", h2, dy), "bo": dy.sum(axis=1)}
        d2 = np.einsum("abo,aio->abi", dy, p["wo"]) * (h2 > 0)
        g["wm"] = np.einsum("abi,abo->aio", h1, d2)
        g["bm"] = d2.sum(axis=1)
        d1 = np.einsum("abo,aio->abi", d2, p["wm"]) * (h1 > 0)
        u = self.block_units
        for f in range(N_FEATURES):
            df = d1[:, :, f * u:(f + 1) * u]
            g[f"w{f}"] = np.einsum("abe,abh->aeh", x[:, :, f], df)
            g[f"b{f}"] = df.sum(axis=1)
        return g


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax restricted to mask; rows with an empty mask come back all zero."""
    z = np.where(mask, logits, -np.inf)
    top = np.max(z, axis=-1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(mask, np.exp(z - top), 0.0)
    s = e.sum(axis=-1, keepdims=True)
    return np.divide(e, s, out=np.zeros_like(e), where=s > 0)


def forward_probs(net: Mlp, x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    logits, _ = net.forward(x)
    if mask is None:
        mask = np.ones(logits.shape, dtype=bool)
    return masked_softmax(logits, mask)


def forward_value(net: Mlp, x: np.ndarray) -> np.ndarray:
    y, _ = net.forward(x)
    return y[..., 0]


def td_target(reward, next_value, gamma: float, done=False):
    """R + gamma * V(S'), with no bootstrap past the last slot."""
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    return np.asarray(reward) + gamma * np.where(done, 0.0, next_value)


def advantage(target, value):
    return np.asarray(target) - np.asarray(value)


def _weights(valid: np.ndarray) -> np.ndarray:
    """Per-agent 1/|M| weights over the valid samples of each agent, shape (A, B)."""
    n = valid.sum(axis=1, keepdims=True)
    return np.where(valid, 1.0 / np.maximum(n, 1), 0.0)


def actor_loss(logits, mask, actions, adv, valid) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent -(1/|M|) sum log pi(a|S) W and its gradient w.r.t. the logits.

    Advantages are constants. The log is floored at 1e-12.
    """
    probs = masked_softmax(logits, mask)
    a = np.where(valid, actions, 0)
    onehot = np.zeros_like(probs)
    np.put_along_axis(onehot, a[..., None], 1.0, axis=-1)
    pa = np.take_along_axis(probs, a[..., None], axis=-1)[..., 0]
    w = _weights(valid) * adv
    loss = -(w * np.log(np.maximum(pa, LOG_FLOOR))).sum(axis=1)
    # d(-log pi_a)/dlogits = pi - onehot on the feasible set; zero gradient below the floor
    live = (pa > LOG_FLOOR)[..., None]
    dlogits = np.where(live & mask, (probs - onehot) * w[..., None], 0.0)
    return loss, dlogits


def critic_loss(values, targets, valid) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent (1/(2|M|)) sum (R_hat - V)^2 and its gradient w.r.t. V."""
    w = _weights(valid)
    diff = values - targets
    return 0.5 * (w * diff ** 2).sum(axis=1), w * diff


@dataclass
class RmsProp:
    lr: float
    decay: float = 0.99
    eps: float = 1e-5
    state: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], active=None):
        """In-place update; ``active`` (A,) limits the step to agents that had data."""
        for k, g in grads.items():
            s = self.state.setdefault(k, np.zeros_like(g))
            new_s = self.decay * s + (1 - self.decay) * g * g
            delta = self.lr * g / (np.sqrt(new_s) + self.eps)
            if active is not None:
                sel = active.reshape((-1,) + (1,) * (g.ndim - 1))
                new_s = np.where(sel, new_s, s)
                delta = np.where(sel, delta, 0.0)
            self.state[k] = new_s
            params[k] -= delta


def rmsprop_step(params, grads, opt: RmsProp, lr: float | None = None):
    if lr is not None:
        opt.lr = lr
    opt.step(params, grads)
    return params
