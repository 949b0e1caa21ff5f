"""Greedy betting policies driven by a trained Q-network.

Action mapping: 0 -> half the empirical Kelly bet, 1 -> empirical Kelly,
2 -> directional endpoint (all-in).  Scalar and vector wrappers share the
same feature map and network.
"""

from __future__ import annotations

import numpy as np

from ..core import NullSpec, Strategy, WealthState
from ..strategies import empirical_kelly, endpoint_bet
from ..experiments import BatchStats, VecBettor
from .checkpoint import load_checkpoint
from .features import feature_matrix, features
from .net import QNet

__all__ = ["greedy_actions", "DqnStrategy", "VecDqn", "ACTION_NAMES"]

ACTION_NAMES = ("half_kelly", "kelly", "all_in")


def greedy_actions(net: QNet, feats: np.ndarray) -> np.ndarray:
    """Argmax actions (ties resolve to the lowest index, as np.argmax does)."""
    q = net.forward(feats)
    return np.argmax(q, axis=-1)


class DqnStrategy(Strategy):
    """Scalar strategy wrapper for episode runs and confidence sequences."""

    def __init__(self, net: QNet, epsilon: float = 0.0):
        self.net = net
        self.epsilon = epsilon
        self._last = None

    @classmethod
    def from_checkpoint(cls, path) -> "DqnStrategy":
        net, _ = load_checkpoint(path)
        return cls(net)

    def bet(self, state: WealthState, spec: NullSpec, rng):
        phi = features(state, spec)
        if self.epsilon > 0.0 and rng is not None and rng.random() < self.epsilon:
            a = int(rng.integers(0, 3))
        else:
            a = int(greedy_actions(self.net, phi[None, :])[0])
        self._last = ACTION_NAMES[a]
        if a == 0:
            return 0.5 * empirical_kelly(state, spec)
        if a == 1:
            return empirical_kelly(state, spec)
        return endpoint_bet(state, spec)

    @property
    def last_action(self):
        return self._last


def action_bets(bs: BatchStats, vspec, actions: np.ndarray) -> np.ndarray:
    """Map an action array onto bets using the batch's running statistics."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_k = np.where(bs.v > 0.0,
                         np.clip(bs.s / np.where(bs.v > 0.0, bs.v, 1.0),
                                 vspec.lam_lo, vspec.lam_hi), 0.0)
    if bs.t == 0:
        lam_e = np.zeros_like(bs.y)
    else:
        mu = bs.mu_hat()
        hi = np.broadcast_to(vspec.lam_hi, bs.y.shape)
        lo = np.broadcast_to(vspec.lam_lo, bs.y.shape)
        lam_e = np.where(mu > vspec.m, hi, np.where(mu < vspec.m, lo, 0.0))
    return np.where(actions == 0, 0.5 * lam_k, np.where(actions == 1, lam_k, lam_e))


class VecDqn(VecBettor):
    """Vectorized greedy policy (optionally epsilon-greedy for training rollouts)."""

    def __init__(self, net: QNet, epsilon: float = 0.0):
        self.net = net
        self.epsilon = epsilon
        self.last_actions: np.ndarray | None = None

    @classmethod
    def from_checkpoint(cls, path) -> "VecDqn":
        net, _ = load_checkpoint(path)
        return cls(net)

    def feature_batch(self, bs: BatchStats) -> np.ndarray:
        vspec = self.vspec
        return feature_matrix(
            bs.t, vspec.horizon_n, vspec.threshold, vspec.m,
            vspec.lam_lo, vspec.lam_hi,
            bs.y, bs.s, bs.v, bs.x1, bs.x2, bs.x3, bs.x4,
        )

    def bets(self, bs: BatchStats) -> np.ndarray:
        phi = self.feature_batch(bs)
        flat = phi.reshape(-1, phi.shape[-1])
        actions = greedy_actions(self.net, flat).reshape(bs.y.shape)
        if self.epsilon > 0.0:
            explore = self.rng.random(bs.y.shape) < self.epsilon
            random_a = self.rng.integers(0, 3, size=bs.y.shape)
            actions = np.where(explore, random_a, actions)
        self.last_actions = actions
        return action_bets(bs, self.vspec, actions)
