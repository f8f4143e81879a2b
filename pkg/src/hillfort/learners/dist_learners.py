"""Quantile-valued learners: independent, additive, mean-shape mixed,
and the risk-conditioned transformed-mixer variant.

All of them represent per-action return distributions by equal-weight
quantile samples at a fraction grid shared across agents, act greedily
on distribution means, and train with quantile-Huber regression against
a target-network distribution at an independently drawn fraction grid.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, einsum2, no_grad, reshape, tsum
from .base import Learner, masked_quantile_loss
from .distributions import RISK_PORTIONS, sample_fractions
from .mixers import dfac_mix, greedy_actions
from .networks import (
    make_qmix,
    make_shape_mixer,
    make_utility,
    qmix_forward_per_tau,
    utility_forward_quantile,
)


def _acting_taus(n: int) -> np.ndarray:
    """Deterministic midpoint grid used for action selection."""
    return (2.0 * np.arange(n) + 1.0) / (2.0 * n)


def _onehot(actions: np.ndarray, n_actions: int) -> np.ndarray:
    rows = actions.reshape(-1)
    out = np.zeros((rows.size, n_actions))
    out[np.arange(rows.size), rows] = 1.0
    return out


class DistributionalQLearner(Learner):
    """mixer: "none" (independent), "sum" (additive across agents), or
    "dfac" (monotone mix of means plus non-negative linear mix of
    mean-centered shapes)."""

    def __init__(self, mixer: str = "sum", n_quantiles: int = 32, mixing_embed: int = 32, **kw):
        super().__init__(**kw)
        if mixer not in ("none", "sum", "dfac"):
            raise ValueError(f"unknown mixer: {mixer}")
        self.mixer = mixer
        self.n_quantiles = n_quantiles
        self.mixing_embed = mixing_embed
        self.params.update(
            make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, "z", n_quantiles=n_quantiles)
        )
        if mixer == "dfac":
            self.params.update(make_qmix(self.rng, self.n_agents, self.state_dim, mixing_embed, "mix.exp"))
            self.params.update(make_shape_mixer(self.rng, self.n_agents, self.state_dim, "mix.shape"))
        self._finish_init()

    def act(self, obs, avail, hidden, epsilon, rng):
        taus = _acting_taus(self.n_quantiles)
        with no_grad():
            z, h = utility_forward_quantile(self.params, "z", Tensor(obs), Tensor(hidden), taus)
        q = z.values.mean(axis=1)  # (n, A) means over fractions
        greedy = greedy_actions(q, avail)
        return self._epsilon_mix(greedy, avail, epsilon, rng), h.values

    def _chosen(self, z, actions: np.ndarray):
        """z: (R, K, A), actions: (R,) -> (R, K)."""
        return einsum2("rka,ra->rk", z, Tensor(_onehot(actions, self.n_actions)))

    def _target_joint(self, tz_next, avail_next, state_next) -> np.ndarray:
        """Greedy-on-means bootstrap distribution, (B, M) or (B, n, M)."""
        b, n = avail_next.shape[0], self.n_agents
        z = tz_next.values.reshape(b, n, self.n_quantiles, self.n_actions)
        means = z.mean(axis=2)
        greedy = greedy_actions(means, avail_next)  # (B, n)
        idx = greedy[..., None, None]
        chosen = np.take_along_axis(z, np.broadcast_to(idx, (b, n, self.n_quantiles, 1)), axis=3)[..., 0]
        if self.mixer == "none":
            return chosen  # (B, n, M)
        if self.mixer == "sum":
            return chosen.sum(axis=1)  # (B, M)
        with no_grad():
            mixed = dfac_mix(self.target, "mix", Tensor(chosen), Tensor(state_next),
                             self.n_agents, self.mixing_embed, expectation="qmix")
        return mixed.values

    def update(self, batch: dict) -> float:
        obs, state = batch["obs"], batch["state"]
        actions, avail = batch["actions"], batch["avail"]
        rewards, term, mask = batch["rewards"], batch["terminated"], batch["mask"]
        b, t_steps, n = actions.shape

        taus = sample_fractions(self.n_quantiles, self.rng)
        target_taus = sample_fractions(self.n_quantiles, self.rng)
        zs = self._unroll_quantile(self.params, "z", obs, taus)
        with no_grad():
            tzs = self._unroll_quantile(self.target, "z", obs, target_taus)

        preds, targets, masks = [], [], []
        for t in range(t_steps):
            chosen = self._chosen(zs[t], actions[:, t].reshape(-1))  # (B*n, K)
            boot = self._target_joint(tzs[t + 1], avail[:, t + 1], state[:, t + 1])
            if self.mixer == "none":
                y = rewards[:, t, None, None] + self.gamma * (1.0 - term[:, t, None, None]) * boot
                preds.append(chosen)
                targets.append(y.reshape(b * n, -1))
                masks.append(np.repeat(mask[:, t], n))
            else:
                z_agents = reshape(chosen, (b, n, self.n_quantiles))
                if self.mixer == "sum":
                    joint = tsum(z_agents, axis=1)  # (B, K)
                else:
                    joint = dfac_mix(self.params, "mix", z_agents, Tensor(state[:, t]),
                                     self.n_agents, self.mixing_embed, expectation="qmix")
                y = rewards[:, t, None] + self.gamma * (1.0 - term[:, t, None]) * boot
                preds.append(joint)
                targets.append(y)
                masks.append(mask[:, t])

        loss = masked_quantile_loss(taus, preds, targets, masks)
        self.opt.zero_grad()
        loss.backward()
        self.opt.step()
        return float(loss.values)


class DrimaLearner(Learner):
    """Risk-conditioned utilities with a transformed monotone mixer.

    The agent-side risk scalar is drawn from its configured portion,
    appended to every observation, and concatenated to the state before
    the mixing hypernetworks.  Bootstrap fractions are drawn from the
    environment-side portion, so target distributions are evaluated at
    the risk profile the environment side dictates.  Only the printed
    transformed-mixer path is implemented; training is quantile-Huber
    TD like the other distributional learners.
    """

    def __init__(
        self,
        n_quantiles: int = 32,
        mixing_embed: int = 32,
        agent_risk: str = "seeking",
        env_risk: str = "averse",
        **kw,
    ):
        super().__init__(**kw)
        self.n_quantiles = n_quantiles
        self.mixing_embed = mixing_embed
        self.agent_portion = RISK_PORTIONS[agent_risk]
        self.env_portion = RISK_PORTIONS[env_risk]
        self.params.update(
            make_utility(self.rng, self.obs_dim + 1, self.n_actions, self.hidden, "z", n_quantiles=n_quantiles)
        )
        self.params.update(make_qmix(self.rng, self.n_agents, self.state_dim + 1, mixing_embed, "mix"))
        self._act_w = 0.5 * (self.agent_portion[0] + self.agent_portion[1])
        self._finish_init()

    def initial_hidden(self) -> np.ndarray:
        lo, hi = self.agent_portion
        self._act_w = float(self.rng.uniform(lo, hi))
        return np.zeros((self.n_agents, self.hidden))

    def _with_risk(self, obs: np.ndarray, w: float) -> np.ndarray:
        return np.concatenate([obs, np.full(obs.shape[:-1] + (1,), w)], axis=-1)

    def act(self, obs, avail, hidden, epsilon, rng):
        lo, hi = self.agent_portion
        w = 0.5 * (lo + hi) if epsilon == 0.0 else self._act_w
        taus = _acting_taus(self.n_quantiles)
        with no_grad():
            z, h = utility_forward_quantile(self.params, "z", Tensor(self._with_risk(obs, w)), Tensor(hidden), taus)
        q = z.values.mean(axis=1)
        greedy = greedy_actions(q, avail)
        return self._epsilon_mix(greedy, avail, epsilon, rng), h.values

    def _mix(self, params, z_agents, state_t: np.ndarray, w: float):
        state_ext = np.concatenate([state_t, np.full((state_t.shape[0], 1), w)], axis=1)
        return qmix_forward_per_tau(params, "mix", z_agents, Tensor(state_ext), self.n_agents, self.mixing_embed)

    def update(self, batch: dict) -> float:
        obs, state = batch["obs"], batch["state"]
        actions, avail = batch["actions"], batch["avail"]
        rewards, term, mask = batch["rewards"], batch["terminated"], batch["mask"]
        b, t_steps, n = actions.shape

        w = float(self.rng.uniform(*self.agent_portion))
        taus = sample_fractions(self.n_quantiles, self.rng)
        target_taus = sample_fractions(self.n_quantiles, self.rng, self.env_portion)
        obs_w = self._with_risk(obs, w)
        zs = self._unroll_quantile(self.params, "z", obs_w, taus)
        with no_grad():
            tzs = self._unroll_quantile(self.target, "z", obs_w, target_taus)

        preds, targets, masks = [], [], []
        for t in range(t_steps):
            oh = _onehot(actions[:, t], self.n_actions)
            chosen = einsum2("rka,ra->rk", zs[t], Tensor(oh))
            z_agents = reshape(chosen, (b, n, self.n_quantiles))
            joint = self._mix(self.params, z_agents, state[:, t], w)  # (B, K)

            tz = tzs[t + 1].values.reshape(b, n, self.n_quantiles, self.n_actions)
            means = tz.mean(axis=2)
            greedy_next = greedy_actions(means, avail[:, t + 1])
            idx = greedy_next[..., None, None]
            chosen_next = np.take_along_axis(tz, np.broadcast_to(idx, (b, n, self.n_quantiles, 1)), axis=3)[..., 0]
            with no_grad():
                boot = self._mix(self.target, Tensor(chosen_next), state[:, t + 1], w).values
            y = rewards[:, t, None] + self.gamma * (1.0 - term[:, t, None]) * boot
            preds.append(joint)
            targets.append(y)
            masks.append(mask[:, t])

        loss = masked_quantile_loss(taus, preds, targets, masks)
        self.opt.zero_grad()
        loss.backward()
        self.opt.step()
        return float(loss.values)
