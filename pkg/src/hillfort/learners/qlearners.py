"""Scalar-valued Q learners: independent, additive, monotone-mixed, and
the relaxed-factorization variant with joint and state-value networks."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, add, concat, mul, neg, no_grad, relu, reshape, square, sub, take_action, tsum
from .base import Learner, masked_mse
from .mixers import greedy_actions, masked_max, td_target, vdn_mix
from .networks import make_mlp, make_qmix, make_utility, mlp_forward, qmix_forward, utility_forward


class QLearner(Learner):
    """Recurrent Q with a pluggable mixer: none (independent), sum, or a
    state-conditioned monotone network.  One utility net shared by all
    agents; each agent feeds its own observation."""

    def __init__(self, mixer: str = "vdn", mixing_embed: int = 32, **kw):
        super().__init__(**kw)
        if mixer not in ("none", "vdn", "qmix"):
            raise ValueError(f"unknown mixer: {mixer}")
        self.mixer = mixer
        self.mixing_embed = mixing_embed
        self.params.update(make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, "q"))
        if mixer == "qmix":
            self.params.update(make_qmix(self.rng, self.n_agents, self.state_dim, mixing_embed, "mix"))
        self._finish_init()

    def act(self, obs, avail, hidden, epsilon, rng):
        with no_grad():
            q, h = utility_forward(self.params, "q", Tensor(obs), Tensor(hidden))
        greedy = greedy_actions(q.values, avail)
        return self._epsilon_mix(greedy, avail, epsilon, rng), h.values

    def _mix_online(self, chosen, state_t):
        if self.mixer == "none":
            return chosen  # (B, n), per-agent losses
        if self.mixer == "vdn":
            return vdn_mix(chosen)
        return qmix_forward(self.params, "mix", chosen, Tensor(state_t), self.n_agents, self.mixing_embed)

    def _mix_target(self, maxes: np.ndarray, state_t: np.ndarray) -> np.ndarray:
        if self.mixer == "none":
            return maxes
        if self.mixer == "vdn":
            return maxes.sum(axis=1)
        with no_grad():
            mixed = qmix_forward(self.target, "mix", Tensor(maxes), Tensor(state_t), self.n_agents, self.mixing_embed)
        return mixed.values

    def update(self, batch: dict) -> float:
        obs, state = batch["obs"], batch["state"]
        actions, avail = batch["actions"], batch["avail"]
        rewards, term, mask = batch["rewards"], batch["terminated"], batch["mask"]
        b, t_steps, n = actions.shape

        qs = self._unroll(self.params, "q", obs)
        with no_grad():
            tqs = self._unroll(self.target, "q", obs)

        errors, masks = [], []
        for t in range(t_steps):
            chosen = take_action(qs[t], actions[:, t].reshape(-1))  # (B*n,)
            chosen = reshape(chosen, (b, n))
            next_max = masked_max(tqs[t + 1].values.reshape(b, n, -1), avail[:, t + 1])
            mixed_next = self._mix_target(next_max, state[:, t + 1])
            if self.mixer == "none":
                y = td_target(rewards[:, t, None], term[:, t, None], mixed_next, self.gamma)
                errors.append(sub(chosen, Tensor(y)))
                masks.append(np.repeat(mask[:, t, None], n, axis=1))
            else:
                y = td_target(rewards[:, t], term[:, t], mixed_next, self.gamma)
                errors.append(sub(self._mix_online(chosen, state[:, t]), Tensor(y)))
                masks.append(mask[:, t])

        loss = masked_mse(errors, masks)
        self.opt.zero_grad()
        loss.backward()
        self.opt.step()
        return float(loss.values)


class QtranLearner(Learner):
    """Utilities plus a free-form joint value network and a state-value
    correction, tied together by optimality-constraint penalties.

    The TD loss trains the joint network; the constraint residuals treat
    its output as fixed and shape the utilities and the state value.
    """

    def __init__(self, lambda_opt: float = 1.0, lambda_nopt: float = 1.0, n_nopt_samples: int = 4, **kw):
        super().__init__(**kw)
        self.lambda_opt = lambda_opt
        self.lambda_nopt = lambda_nopt
        self.n_nopt_samples = n_nopt_samples
        self.params.update(make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, "q"))
        joint_in = self.state_dim + self.n_agents * self.n_actions
        self.params.update(make_mlp(self.rng, joint_in, self.hidden, 1, "joint"))
        self.params.update(make_mlp(self.rng, self.state_dim, self.hidden, 1, "v"))
        self._finish_init()

    def act(self, obs, avail, hidden, epsilon, rng):
        with no_grad():
            q, h = utility_forward(self.params, "q", Tensor(obs), Tensor(hidden))
        greedy = greedy_actions(q.values, avail)
        return self._epsilon_mix(greedy, avail, epsilon, rng), h.values

    def _joint_input(self, state_t: np.ndarray, joint_actions: np.ndarray) -> np.ndarray:
        b = state_t.shape[0]
        onehot = np.zeros((b, self.n_agents, self.n_actions))
        rows = np.arange(b)[:, None]
        onehot[rows, np.arange(self.n_agents)[None, :], joint_actions] = 1.0
        return np.concatenate([state_t, onehot.reshape(b, -1)], axis=1)

    def _sample_nongreedy(self, avail_t: np.ndarray, greedy: np.ndarray):
        """Uniform legal joint actions forced to differ from the greedy
        joint where any agent has an alternative.  Returns (actions,
        validity weights)."""
        b, n, a = avail_t.shape
        sampled = np.empty((b, n), dtype=np.intp)
        weight = np.ones(b)
        for i in range(b):
            for j in range(n):
                legal = np.flatnonzero(avail_t[i, j] > 0)
                sampled[i, j] = self.rng.choice(legal)
            if np.array_equal(sampled[i], greedy[i]):
                fixed = False
                for j in range(n):
                    legal = np.flatnonzero(avail_t[i, j] > 0)
                    others = legal[legal != greedy[i, j]]
                    if others.size:
                        sampled[i, j] = others[0]
                        fixed = True
                        break
                if not fixed:
                    weight[i] = 0.0  # only one legal joint action exists
        return sampled, weight

    def update(self, batch: dict) -> float:
        obs, state = batch["obs"], batch["state"]
        actions, avail = batch["actions"], batch["avail"]
        rewards, term, mask = batch["rewards"], batch["terminated"], batch["mask"]
        b, t_steps, n = actions.shape

        qs = self._unroll(self.params, "q", obs)
        with no_grad():
            tqs = self._unroll(self.target, "q", obs)

        td_errors, constraint_terms, masks = [], [], []
        denom = 0.0
        for t in range(t_steps):
            q_t = qs[t]
            greedy_t = greedy_actions(q_t.values.reshape(b, n, -1), avail[:, t])

            # TD on the joint network, bootstrapped through the target
            # joint network at the target utilities' greedy joint action.
            q_joint = reshape(mlp_forward(self.params, "joint", Tensor(self._joint_input(state[:, t], actions[:, t]))), (b,))
            greedy_next = greedy_actions(tqs[t + 1].values.reshape(b, n, -1), avail[:, t + 1])
            with no_grad():
                next_joint = mlp_forward(self.target, "joint", Tensor(self._joint_input(state[:, t + 1], greedy_next)))
            y = td_target(rewards[:, t], term[:, t], next_joint.values.reshape(b), self.gamma)
            td_errors.append(sub(q_joint, Tensor(y)))
            masks.append(mask[:, t])

            # Constraint residuals: utilities and the state value move,
            # the joint network's output is held fixed.
            chosen_greedy = take_action(q_t, greedy_t.reshape(-1))
            sum_greedy = tsum(reshape(chosen_greedy, (b, n)), axis=1)
            v_t = reshape(mlp_forward(self.params, "v", Tensor(state[:, t])), (b,))
            with no_grad():
                joint_greedy = mlp_forward(self.params, "joint", Tensor(self._joint_input(state[:, t], greedy_t)))
            opt_res = sub(add(sum_greedy, v_t), Tensor(joint_greedy.values.reshape(b)))
            opt_term = mul(square(opt_res), Tensor(mask[:, t] * self.lambda_opt))

            nopt_total = None
            for _ in range(self.n_nopt_samples):
                sampled, valid = self._sample_nongreedy(avail[:, t], greedy_t)
                chosen_s = take_action(q_t, sampled.reshape(-1))
                sum_s = tsum(reshape(chosen_s, (b, n)), axis=1)
                with no_grad():
                    joint_s = mlp_forward(self.params, "joint", Tensor(self._joint_input(state[:, t], sampled)))
                res = sub(add(sum_s, v_t), Tensor(joint_s.values.reshape(b)))
                clamped = neg(relu(neg(res)))  # min(residual, 0)
                w = mask[:, t] * valid * (self.lambda_nopt / self.n_nopt_samples)
                term_s = mul(square(clamped), Tensor(w))
                nopt_total = term_s if nopt_total is None else add(nopt_total, term_s)

            constraint_terms.append(add(tsum(opt_term), tsum(nopt_total)))
            denom += float(np.sum(mask[:, t]))

        loss = masked_mse(td_errors, masks)
        penalty = None
        for term_t in constraint_terms:
            penalty = term_t if penalty is None else add(penalty, term_t)
        loss = add(loss, mul(penalty, 1.0 / max(denom, 1.0)))
        self.opt.zero_grad()
        loss.backward()
        self.opt.step()
        return float(loss.values)
