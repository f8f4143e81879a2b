"""Shared plumbing for every learner: parameter/target bookkeeping,
recurrent unrolls over padded batches, masked losses, action selection."""

from __future__ import annotations

import numpy as np

from ..autodiff import (
    RMSProp,
    Tensor,
    add,
    huber_unit,
    mul,
    no_grad,
    reshape,
    sub,
    tsum,
)
from .mixers import greedy_actions
from .networks import utility_forward, utility_forward_quantile


def clone_params(params: dict) -> dict:
    """Detached full copy, used for target networks and snapshots."""
    return {k: Tensor(t.values.copy()) for k, t in params.items()}


def copy_into(dst: dict, src: dict) -> None:
    for k, t in src.items():
        dst[k].values[...] = t.values


class Learner:
    """Base class: owns parameters, a target copy, and one optimizer.

    Subclasses fill self.params before calling _finish_init and implement
    act() and update().  Batches come from replay.pad_and_stack: obs
    (B,T+1,n,L), state (B,T+1,S), avail (B,T+1,n,A), actions (B,T,n),
    rewards (B,T), terminated (B,T), mask (B,T).
    """

    needs_target = True

    def __init__(
        self,
        obs_dim: int,
        state_dim: int,
        n_agents: int,
        n_actions: int,
        hidden: int = 64,
        gamma: float = 0.99,
        lr: float = 5e-4,
        seed: int = 0,
    ):
        self.obs_dim = obs_dim
        self.state_dim = state_dim
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.hidden = hidden
        self.gamma = gamma
        self.lr = lr
        self.rng = np.random.default_rng(seed)
        self.params: dict = {}
        self.target: dict = {}
        self.opt: RMSProp | None = None

    def _finish_init(self):
        self.opt = RMSProp(self.params, lr=self.lr)
        if self.needs_target:
            self.target = clone_params(self.params)

    # ---- parameter plumbing ---------------------------------------------

    def sync_targets(self):
        if self.needs_target:
            copy_into(self.target, self.params)

    def checkpoint_tensors(self) -> dict:
        return {k: t.values for k, t in self.params.items()}

    def load_tensors(self, arrays: dict) -> None:
        missing = set(self.params) - set(arrays)
        extra = set(arrays) - set(self.params)
        if missing or extra:
            raise ValueError(
                f"checkpoint mismatch: missing {sorted(missing)[:3]}, unexpected {sorted(extra)[:3]}"
            )
        for k, t in self.params.items():
            if t.values.shape != arrays[k].shape:
                raise ValueError(f"checkpoint shape mismatch for {k}")
            t.values[...] = arrays[k]
        self.sync_targets()

    # ---- rollout interface ----------------------------------------------

    def initial_hidden(self) -> np.ndarray:
        return np.zeros((self.n_agents, self.hidden))

    def act(self, obs: np.ndarray, avail: np.ndarray, hidden: np.ndarray, epsilon: float, rng):
        raise NotImplementedError

    def update(self, batch: dict) -> float:
        raise NotImplementedError

    # ---- shared pieces ---------------------------------------------------

    def _epsilon_mix(self, greedy: np.ndarray, avail: np.ndarray, epsilon: float, rng) -> np.ndarray:
        """Per-agent: explore with probability epsilon by drawing uniformly
        from that agent's legal actions."""
        actions = greedy.copy()
        for i in range(avail.shape[0]):
            if epsilon > 0.0 and rng.random() < epsilon:
                legal = np.flatnonzero(avail[i] > 0)
                actions[i] = int(rng.choice(legal))
        return actions

    def _unroll(self, params: dict, prefix: str, obs: np.ndarray) -> list:
        """Run the shared utility net over a padded batch.

        obs: (B, T+1, n, L) -> list of T+1 Tensors shaped (B*n, A).
        """
        b, t_plus_1, n, _ = obs.shape
        rows = b * n
        h = Tensor(np.zeros((rows, self.hidden)))
        outs = []
        for t in range(t_plus_1):
            x = Tensor(obs[:, t].reshape(rows, -1))
            q, h = utility_forward(params, prefix, x, h)
            outs.append(q)
        return outs

    def _unroll_quantile(
        self, params: dict, prefix: str, obs: np.ndarray, taus: np.ndarray
    ) -> list:
        """Quantile variant: list of T+1 Tensors shaped (B*n, K, A)."""
        b, t_plus_1, n, _ = obs.shape
        rows = b * n
        h = Tensor(np.zeros((rows, self.hidden)))
        outs = []
        for t in range(t_plus_1):
            x = Tensor(obs[:, t].reshape(rows, -1))
            z, h = utility_forward_quantile(params, prefix, x, h, taus)
            outs.append(z)
        return outs


def masked_mse(errors: list, masks: list) -> Tensor:
    """Mean of squared errors over unmasked entries.

    errors: per-step Tensors, each (B,) or (B, n); masks: matching
    constant arrays of the same shape.
    """
    total = None
    denom = 0.0
    for err, m in zip(errors, masks):
        term = tsum(mul(mul(err, err), Tensor(m)))
        total = term if total is None else add(total, term)
        denom += float(np.sum(m))
    return mul(total, 1.0 / max(denom, 1.0))


def masked_quantile_loss(taus: np.ndarray, preds: list, targets: list, masks: list) -> Tensor:
    """Quantile-Huber loss over unmasked rows of a padded batch.

    preds: per-step Tensors (B, K) aligned with taus; targets: constant
    arrays (B, M); masks: (B,) weights.  kappa fixed at 1.
    """
    k = taus.size
    total = None
    denom = 0.0
    for pred, tgt, m in zip(preds, targets, masks):
        m_count = tgt.shape[-1]
        pred_col = reshape(pred, pred.shape + (1,))
        u = sub(Tensor(tgt[:, None, :]), pred_col)  # (B, K, M)
        indicator = (u.values < 0.0).astype(np.float64)
        weight = np.abs(taus.reshape(1, k, 1) - indicator) * m[:, None, None]
        term = tsum(mul(Tensor(weight), huber_unit(u)))
        total = term if total is None else add(total, term)
        denom += float(np.sum(m)) * k * m_count
    return mul(total, 1.0 / max(denom, 1.0))


def greedy_from_values(q_values: np.ndarray, avail: np.ndarray) -> np.ndarray:
    return greedy_actions(q_values, avail)
