"""Q-network as plain numpy arrays: forward, exact backprop, AdamW, TD update.

The network is a ReLU MLP (default 22 -> 256 -> 128 -> 3).  Gradients come
from hand-written backpropagation; tests verify them against central finite
differences on a small network.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["QNet", "AdamW", "huber", "huber_grad", "td_loss", "td_loss_grads",
           "td_update", "global_grad_norm"]


class QNet:
    """Fully connected ReLU network; parameters live in `params` as
    [W1, b1, W2, b2, ...] with fan-in-scaled uniform initialization."""

    def __init__(self, sizes=(22, 256, 128, 3), rng: np.random.Generator | None = None):
        self.sizes = tuple(int(s) for s in sizes)
        if rng is None:
            rng = np.random.default_rng()
        self.params: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        a = np.asarray(x, dtype=float)
        for layer in range(self.n_layers):
            a = a @ self.params[2 * layer] + self.params[2 * layer + 1]
            if layer < self.n_layers - 1:
                a = np.maximum(a, 0.0)
        return a

    def forward_cache(self, x: np.ndarray):
        """Forward pass keeping the post-activation inputs of every layer."""
        a = np.asarray(x, dtype=float)
        acts = [a]
        for layer in range(self.n_layers):
            a = a @ self.params[2 * layer] + self.params[2 * layer + 1]
            if layer < self.n_layers - 1:
                a = np.maximum(a, 0.0)
            acts.append(a)
        return a, acts

    def backward(self, acts, dout: np.ndarray) -> list[np.ndarray]:
        """Gradients of sum(loss) given d loss / d output; mirrors forward_cache."""
        grads: list[np.ndarray] = [None] * len(self.params)
        delta = dout
        for layer in range(self.n_layers - 1, -1, -1):
            a_in = acts[layer]
            if layer < self.n_layers - 1:
                delta = delta * (acts[layer + 1] > 0.0)
            grads[2 * layer] = a_in.T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            if layer > 0:
                delta = delta @ self.params[2 * layer].T
        return grads

    def copy(self) -> "QNet":
        other = QNet.__new__(QNet)
        other.sizes = self.sizes
        other.params = [p.copy() for p in self.params]
        return other

    def load_from(self, other: "QNet") -> None:
        for mine, theirs in zip(self.params, other.params):
            mine[...] = theirs


def huber(err: np.ndarray, delta: float = 1.0) -> np.ndarray:
    a = np.abs(err)
    return np.where(a <= delta, 0.5 * err * err, delta * (a - 0.5 * delta))


def huber_grad(err: np.ndarray, delta: float = 1.0) -> np.ndarray:
    return np.clip(err, -delta, delta)


def _targets(online: QNet, target: QNet, batch, gamma: float) -> np.ndarray:
    s, a, r, s2, done = batch
    a_star = np.argmax(online.forward(s2), axis=1)
    q_next = target.forward(s2)[np.arange(len(a_star)), a_star]
    return r + gamma * (1.0 - done) * q_next


def td_loss(online: QNet, target: QNet, batch, gamma: float = 1.0,
            delta: float = 1.0) -> float:
    """Double-DQN Huber loss (mean over the batch)."""
    s, a, r, s2, done = batch
    tgt = _targets(online, target, batch, gamma)
    q = online.forward(s)[np.arange(len(a)), a]
    return float(np.mean(huber(q - tgt, delta)))


def td_loss_grads(online: QNet, target: QNet, batch, gamma: float = 1.0,
                  delta: float = 1.0):
    """Loss and exact parameter gradients for one Double-DQN batch."""
    s, a, r, s2, done = batch
    tgt = _targets(online, target, batch, gamma)
    q_all, acts = online.forward_cache(s)
    idx = np.arange(len(a))
    err = q_all[idx, a] - tgt
    loss = float(np.mean(huber(err, delta)))
    dq = np.zeros_like(q_all)
    dq[idx, a] = huber_grad(err, delta) / len(a)
    grads = online.backward(acts, dq)
    return loss, grads


def global_grad_norm(grads) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


class AdamW:
    """Adaptive moments with decoupled weight decay (decay skips biases)."""

    def __init__(self, net: QNet, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 1e-4):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p) for p in net.params]
        self.v = [np.zeros_like(p) for p in net.params]
        self.t = 0

    def step(self, net: QNet, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for i, (p, g) in enumerate(zip(net.params, grads)):
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            update = (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)
            if p.ndim > 1 and self.weight_decay:
                update = update + self.weight_decay * p
            p -= self.lr * update


def td_update(online: QNet, target: QNet, opt: AdamW, batch,
              gamma: float = 1.0, delta: float = 1.0,
              grad_clip: float = 10.0) -> float:
    """One gradient step; raises on a non-finite loss rather than train on garbage."""
    loss, grads = td_loss_grads(online, target, batch, gamma, delta)
    if not math.isfinite(loss):
        raise FloatingPointError(f"non-finite TD loss {loss}")
    norm = global_grad_norm(grads)
    if grad_clip and norm > grad_clip:
        scale = grad_clip / norm
        grads = [g * scale for g in grads]
    opt.step(online, grads)
    return loss
