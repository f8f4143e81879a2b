"""Policy-gradient learners: counterfactual-baseline actor-critic, the
soft actor-critic port with a monotone joint critic, and the
deterministic-policy method with per-agent centralized critics.

Discrete actions are handled by masking illegal logits to a large
negative value; the deterministic-policy actor trains through a
temperature-relaxed categorical sample.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import (
    RMSProp,
    Tensor,
    add,
    concat,
    log_softmax,
    mul,
    neg,
    no_grad,
    reshape,
    softmax,
    sub,
    take_action,
    tsum,
)
from .base import Learner, clone_params, masked_mse
from .mixers import coma_advantage, greedy_actions, td_target
from .networks import make_mlp, make_qmix, make_utility, mlp_forward, qmix_forward, utility_forward

BIG_NEG = 1e9


def _mask_logits(logits, avail: np.ndarray):
    return add(logits, Tensor((avail.reshape(logits.shape) - 1.0) * BIG_NEG))


def _onehot(actions: np.ndarray, n_actions: int) -> np.ndarray:
    flat = actions.reshape(-1)
    out = np.zeros((flat.size, n_actions))
    out[np.arange(flat.size), flat] = 1.0
    return out.reshape(actions.shape + (n_actions,))


class ComaLearner(Learner):
    """Recurrent softmax actor with a centralized feedforward critic.

    The critic scores every action of one agent given the state and the
    other agents' taken actions; the actor ascends the counterfactual
    advantage.  Trains on the freshest episodes (on-policy).
    """

    on_policy = True

    def __init__(self, critic_lr: float | None = None, **kw):
        super().__init__(**kw)
        self.params.update(make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, "pi"))
        critic_in = self.state_dim + self.n_agents + self.n_agents * self.n_actions
        self.params.update(make_mlp(self.rng, critic_in, self.hidden, self.n_actions, "critic"))
        self.target = clone_params(self.params)
        actor = {k: v for k, v in self.params.items() if k.startswith("pi")}
        critic = {k: v for k, v in self.params.items() if k.startswith("critic")}
        self.actor_opt = RMSProp(actor, lr=self.lr)
        self.critic_opt = RMSProp(critic, lr=critic_lr if critic_lr is not None else self.lr)
        self.opt = None

    def act(self, obs, avail, hidden, epsilon, rng):
        with no_grad():
            logits, h = utility_forward(self.params, "pi", Tensor(obs), Tensor(hidden))
            masked = _mask_logits(logits, avail)
            pi = softmax(masked).values
        if epsilon == 0.0:
            return np.argmax(masked.values, axis=1), h.values
        legal_counts = avail.sum(axis=1, keepdims=True)
        probs = (1.0 - epsilon) * pi + epsilon * (avail / legal_counts)
        probs = probs / probs.sum(axis=1, keepdims=True)
        actions = np.array([rng.choice(self.n_actions, p=probs[i]) for i in range(obs.shape[0])])
        return actions, h.values

    def _critic_input(self, state_t: np.ndarray, actions_t: np.ndarray, agent: int) -> np.ndarray:
        b = state_t.shape[0]
        agent_tag = np.zeros((b, self.n_agents))
        agent_tag[:, agent] = 1.0
        onehot = _onehot(actions_t, self.n_actions)
        onehot = onehot.copy()
        onehot[:, agent, :] = 0.0  # own action excluded from the conditioning
        return np.concatenate([state_t, agent_tag, onehot.reshape(b, -1)], axis=1)

    def _critic_all(self, params: dict, state_t, actions_t) -> list:
        """Per-agent critic outputs, each (B, A)."""
        return [
            mlp_forward(params, "critic", Tensor(self._critic_input(state_t, actions_t, i)))
            for i in range(self.n_agents)
        ]

    def update(self, batch: dict) -> float:
        obs, state = batch["obs"], batch["state"]
        actions, avail = batch["actions"], batch["avail"]
        rewards, term, mask = batch["rewards"], batch["terminated"], batch["mask"]
        b, t_steps, n = actions.shape

        # Critic pass: SARSA-style one-step target from the taken next
        # actions, per agent.
        errors, masks = [], []
        for t in range(t_steps):
            next_actions = actions[:, t + 1] if t + 1 < t_steps else np.zeros((b, n), dtype=np.intp)
            with no_grad():
                nxt = self._critic_all(self.target, state[:, t + 1], next_actions)
            outs = self._critic_all(self.params, state[:, t], actions[:, t])
            for i in range(n):
                q_next = nxt[i].values[np.arange(b), next_actions[:, i]]
                y = td_target(rewards[:, t], term[:, t], q_next, self.gamma)
                pred = take_action(outs[i], actions[:, t, i])
                errors.append(sub(pred, Tensor(y)))
                masks.append(mask[:, t])
        critic_loss = masked_mse(errors, masks)
        self.critic_opt.zero_grad()
        critic_loss.backward()
        self.critic_opt.step()

        # Actor pass against the refreshed critic.
        logits_seq = self._unroll(self.params, "pi", obs)
        total = None
        denom = float(np.sum(mask)) * n
        for t in range(t_steps):
            with no_grad():
                outs = self._critic_all(self.params, state[:, t], actions[:, t])
            q_all = np.stack([o.values for o in outs], axis=1)  # (B, n, A)
            masked = _mask_logits(logits_seq[t], avail[:, t].reshape(b * n, -1))
            logp = log_softmax(masked)
            pi = np.exp(logp.values).reshape(b, n, -1)
            q_chosen = np.take_along_axis(q_all, actions[:, t][..., None], axis=2)[..., 0]
            adv = coma_advantage(q_chosen, q_all, pi)  # (B, n)
            logp_chosen = reshape(take_action(logp, actions[:, t].reshape(-1)), (b, n))
            w = mask[:, t, None] * adv
            term_t = neg(tsum(mul(logp_chosen, Tensor(w))))
            total = term_t if total is None else add(total, term_t)
        actor_loss = mul(total, 1.0 / max(denom, 1.0))
        self.actor_opt.zero_grad()
        actor_loss.backward()
        self.actor_opt.step()
        return float(critic_loss.values) + float(actor_loss.values)


class MasacLearner(Learner):
    """Stochastic softmax actors with a monotone-mixed joint critic.

    The critic target bootstraps through the per-agent minimum over
    legal next actions, mixed by the target network; with non-negative
    mixing weights that equals the joint minimum.  The policy objective
    is the exact per-agent expectation of entropy-regularized value
    difference, other agents fixed at their batch actions.
    """

    def __init__(self, alpha: float = 0.01, mixing_embed: int = 32, **kw):
        super().__init__(**kw)
        self.alpha = alpha
        self.mixing_embed = mixing_embed
        self.params.update(make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, "q"))
        self.params.update(make_qmix(self.rng, self.n_agents, self.state_dim, mixing_embed, "mix"))
        self.params.update(make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, "pi"))
        self.target = clone_params(self.params)
        actor = {k: v for k, v in self.params.items() if k.startswith("pi")}
        critic = {k: v for k, v in self.params.items() if not k.startswith("pi")}
        self.actor_opt = RMSProp(actor, lr=self.lr)
        self.critic_opt = RMSProp(critic, lr=self.lr)
        self.opt = None

    def act(self, obs, avail, hidden, epsilon, rng):
        with no_grad():
            logits, h = utility_forward(self.params, "pi", Tensor(obs), Tensor(hidden))
            masked = _mask_logits(logits, avail)
            pi = softmax(masked).values
        if epsilon == 0.0:
            return np.argmax(masked.values, axis=1), h.values
        actions = np.array([rng.choice(self.n_actions, p=pi[i] / pi[i].sum()) for i in range(obs.shape[0])])
        return actions, h.values

    def _candidate_q(self, chosen_vals: np.ndarray, q_vals: np.ndarray, state_t: np.ndarray) -> np.ndarray:
        """Joint critic value with one agent's action swapped, detached.

        chosen_vals: (B, n) utilities at batch actions; q_vals: (B, n, A)
        all-action utilities.  Returns (B, n, A).
        """
        b, n, a = q_vals.shape
        stack = np.repeat(chosen_vals[None, None], n * a, axis=0).reshape(n, a, b, n).copy()
        for i in range(n):
            for act_idx in range(a):
                stack[i, act_idx, :, i] = q_vals[:, i, act_idx]
        flat = stack.reshape(n * a * b, n)
        state_rep = np.tile(state_t, (n * a, 1))
        with no_grad():
            mixed = qmix_forward(self.params, "mix", Tensor(flat), Tensor(state_rep), n, self.mixing_embed)
        return mixed.values.reshape(n, a, b).transpose(2, 0, 1)

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
            chosen = reshape(take_action(qs[t], actions[:, t].reshape(-1)), (b, n))
            joint = qmix_forward(self.params, "mix", chosen, Tensor(state[:, t]), n, self.mixing_embed)
            nxt = tqs[t + 1].values.reshape(b, n, -1)
            nxt_min = np.min(np.where(avail[:, t + 1] > 0, nxt, np.inf), axis=2)
            with no_grad():
                mixed_min = qmix_forward(self.target, "mix", Tensor(nxt_min), Tensor(state[:, t + 1]), n, self.mixing_embed)
            y = td_target(rewards[:, t], term[:, t], mixed_min.values, self.gamma)
            errors.append(sub(joint, Tensor(y)))
            masks.append(mask[:, t])
        critic_loss = masked_mse(errors, masks)
        self.critic_opt.zero_grad()
        critic_loss.backward()
        self.critic_opt.step()

        logits_seq = self._unroll(self.params, "pi", obs)
        total = None
        denom = float(np.sum(mask)) * n
        for t in range(t_steps):
            masked = _mask_logits(logits_seq[t], avail[:, t].reshape(b * n, -1))
            logp = log_softmax(masked)
            pi = softmax(masked)
            chosen_vals = qs[t].values.reshape(b, n, -1)
            chosen_at = np.take_along_axis(chosen_vals, actions[:, t][..., None], axis=2)[..., 0]
            q_cand = self._candidate_q(chosen_at, chosen_vals, state[:, t])  # (B, n, A)
            inner = sub(mul(logp, self.alpha), Tensor(q_cand.reshape(b * n, -1)))
            per_row = tsum(mul(pi, inner), axis=1)  # (B*n,)
            w = np.repeat(mask[:, t], n)
            term_t = tsum(mul(per_row, Tensor(w)))
            total = term_t if total is None else add(total, term_t)
        policy_loss = mul(total, 1.0 / max(denom, 1.0))
        self.actor_opt.zero_grad()
        policy_loss.backward()
        self.actor_opt.step()
        return float(critic_loss.values) + float(policy_loss.values)


class MaddpgLearner(Learner):
    """Per-agent deterministic actors with per-agent centralized critics.

    Behavior actions come from the exact categorical implied by adding
    Gumbel noise to masked logits; the actor gradient flows through the
    temperature-1 softmax relaxation of that same sample into the
    agent's own critic, other agents' actions taken from the batch.
    """

    def __init__(self, temperature: float = 1.0, **kw):
        super().__init__(**kw)
        self.temperature = temperature
        for i in range(self.n_agents):
            self.params.update(make_utility(self.rng, self.obs_dim, self.n_actions, self.hidden, f"mu{i}"))
            critic_in = self.state_dim + self.n_agents * self.n_actions
            self.params.update(make_mlp(self.rng, critic_in, self.hidden, 1, f"q{i}"))
        self.target = clone_params(self.params)
        actor = {k: v for k, v in self.params.items() if k.startswith("mu")}
        critic = {k: v for k, v in self.params.items() if k.startswith("q")}
        self.actor_opt = RMSProp(actor, lr=self.lr)
        self.critic_opt = RMSProp(critic, lr=self.lr)
        self.opt = None

    def act(self, obs, avail, hidden, epsilon, rng):
        actions = np.empty(self.n_agents, dtype=np.intp)
        new_hidden = np.empty_like(hidden)
        for i in range(self.n_agents):
            with no_grad():
                logits, h = utility_forward(self.params, f"mu{i}", Tensor(obs[i : i + 1]), Tensor(hidden[i : i + 1]))
            masked = logits.values[0] + (avail[i] - 1.0) * BIG_NEG
            if epsilon == 0.0:
                actions[i] = int(np.argmax(masked))
            else:
                gumbel = -np.log(-np.log(rng.uniform(1e-12, 1.0, size=masked.shape)))
                actions[i] = int(np.argmax(masked + gumbel))
            new_hidden[i] = h.values[0]
        return actions, new_hidden

    def _unroll_agent(self, params: dict, prefix: str, obs_agent: np.ndarray) -> list:
        b, t_plus_1, _ = obs_agent.shape
        h = Tensor(np.zeros((b, self.hidden)))
        outs = []
        for t in range(t_plus_1):
            logits, h = utility_forward(params, prefix, Tensor(obs_agent[:, t]), h)
            outs.append(logits)
        return outs

    def update(self, batch: dict) -> float:
        obs, state = batch["obs"], batch["state"]
        actions, avail = batch["actions"], batch["avail"]
        rewards, term, mask = batch["rewards"], batch["terminated"], batch["mask"]
        b, t_steps, n = actions.shape
        a = self.n_actions

        # Greedy next actions from the target actors.
        with no_grad():
            target_logits = [self._unroll_agent(self.target, f"mu{i}", obs[:, :, i]) for i in range(n)]
        next_onehots = []
        for t in range(1, t_steps + 1):
            greedy = np.stack(
                [greedy_actions(target_logits[i][t].values, avail[:, t, i]) for i in range(n)], axis=1
            )
            next_onehots.append(_onehot(greedy, a).reshape(b, -1))

        onehots = [_onehot(actions[:, t], a).reshape(b, -1) for t in range(t_steps)]

        errors, masks = [], []
        for t in range(t_steps):
            joint_in = Tensor(np.concatenate([state[:, t], onehots[t]], axis=1))
            next_in = Tensor(np.concatenate([state[:, t + 1], next_onehots[t]], axis=1))
            for i in range(n):
                pred = reshape(mlp_forward(self.params, f"q{i}", joint_in), (b,))
                with no_grad():
                    nxt = mlp_forward(self.target, f"q{i}", next_in)
                y = td_target(rewards[:, t], term[:, t], nxt.values.reshape(b), self.gamma)
                errors.append(sub(pred, Tensor(y)))
                masks.append(mask[:, t])
        critic_loss = masked_mse(errors, masks)
        self.critic_opt.zero_grad()
        critic_loss.backward()
        self.critic_opt.step()

        # Actor ascent through the relaxed own-action sample.
        actor_logits = [self._unroll_agent(self.params, f"mu{i}", obs[:, :, i]) for i in range(n)]
        total = None
        denom = float(np.sum(mask)) * n
        for t in range(t_steps):
            for i in range(n):
                masked_l = _mask_logits(actor_logits[i][t], avail[:, t, i])
                gumbel = -np.log(-np.log(self.rng.uniform(1e-12, 1.0, size=(b, a))))
                relaxed = softmax(mul(add(masked_l, Tensor(gumbel)), 1.0 / self.temperature))
                left = onehots[t][:, : i * a]
                right = onehots[t][:, (i + 1) * a :]
                action_block = concat([Tensor(left), relaxed, Tensor(right)], axis=1)
                critic_in = concat([Tensor(state[:, t]), action_block], axis=1)
                q = reshape(mlp_forward(self.params, f"q{i}", critic_in), (b,))
                term_t = neg(tsum(mul(q, Tensor(mask[:, t]))))
                total = term_t if total is None else add(total, term_t)
        actor_loss = mul(total, 1.0 / max(denom, 1.0))
        self.actor_opt.zero_grad()
        actor_loss.backward()
        self.actor_opt.step()
        return float(critic_loss.values) + float(actor_loss.values)
