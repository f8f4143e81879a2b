"""Value combination rules and TD targets shared across learners."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, add, mul, neg, relu, reshape, sub, tmean, tsum
from .networks import qmix_forward, qmix_forward_per_tau, shape_mix_forward


def td_target(rewards: np.ndarray, terminated: np.ndarray, next_values: np.ndarray, gamma: float) -> np.ndarray:
    """One-step bootstrapped target, cut off at terminal transitions."""
    return rewards + gamma * (1.0 - terminated) * next_values


def greedy_actions(q_values: np.ndarray, avail: np.ndarray) -> np.ndarray:
    """Per-row argmax over legal actions only.  Ties go to the lowest
    index (np.argmax semantics on the masked array)."""
    masked = np.where(avail > 0, q_values, -np.inf)
    return np.argmax(masked, axis=-1)


def masked_max(q_values: np.ndarray, avail: np.ndarray) -> np.ndarray:
    masked = np.where(avail > 0, q_values, -np.inf)
    return np.max(masked, axis=-1)


def vdn_mix(qs):
    """Sum of per-agent chosen values: (B, n) -> (B,)."""
    return tsum(qs, axis=1)


def dfac_mix(mix_params, prefix, z, state, n_agents: int, embed: int, expectation: str):
    """Mean-shape factorization of per-agent quantile values.

    z: (B, n, K).  The expectation portion mixes per-agent means with
    either a sum or a state-conditioned monotone network; the shape
    portion mixes mean-centered quantiles with non-negative linear
    weights and no bias, so the joint distribution's mean equals the
    mixed expectation exactly.
    Returns (B, K).
    """
    b, n, k = z.shape
    means = tmean(z, axis=2)  # (B, n)
    centered = sub(z, reshape(means, (b, n, 1)))
    if expectation == "sum":
        mixed_mean = tsum(means, axis=1)
    elif expectation == "qmix":
        mixed_mean = qmix_forward(mix_params, f"{prefix}.exp", means, state, n_agents, embed)
    else:
        raise ValueError(f"unknown expectation mixer: {expectation}")
    shape = shape_mix_forward(mix_params, f"{prefix}.shape", centered, state)
    return add(reshape(mixed_mean, (b, 1)), shape)


def qtran_residuals(q_joint, q_joint_hat, v_state):
    """Optimality / non-optimality constraint residuals.

    q_joint: network joint value at the evaluated joint action (Tensor,
    (B,)).  q_joint_hat: sum of chosen per-agent utilities (Tensor).
    v_state: state value correction (Tensor, (B,)).
    Returns (opt_residual, nopt_residual) as Tensors; the caller squares
    or clamps as the losses require.
    """
    diff = sub(add(q_joint_hat, v_state), q_joint)
    clamped = neg(relu(neg(diff)))  # min(diff, 0)
    return diff, clamped


def coma_advantage(q_chosen: np.ndarray, q_all: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Counterfactual advantage: chosen value minus the policy-weighted
    value over that agent's own actions, other agents held fixed."""
    baseline = np.sum(pi * q_all, axis=-1)
    return q_chosen - baseline
