"""Parameter factories and forward passes for the learner networks.

Every network is a flat dict of named Tensors so checkpointing, target
copies, and optimizers can treat parameters uniformly.  Forwards take
the dict plus a name prefix.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import (
    Tensor,
    absolute,
    add,
    concat,
    dense_forward,
    einsum2,
    elu,
    gru_cell,
    make_dense,
    make_gru,
    matmul,
    mul,
    relu,
    reshape,
    sub,
    tsum,
)


# ---- recurrent utility network ------------------------------------------


def make_utility(
    rng: np.random.Generator,
    obs_dim: int,
    n_actions: int,
    hidden: int,
    prefix: str,
    n_quantiles: int = 0,
    n_cos: int = 32,
) -> dict:
    """Dense -> GRU -> dense head.  A quantile head adds a cosine
    fraction embedding merged multiplicatively with the recurrent
    feature, one output row per sampled fraction."""
    p = {}
    p.update(make_dense(rng, obs_dim, hidden, f"{prefix}.in"))
    p.update(make_gru(rng, hidden, hidden, f"{prefix}.gru"))
    p.update(make_dense(rng, hidden, n_actions, f"{prefix}.out"))
    if n_quantiles > 0:
        p.update(make_dense(rng, n_cos, hidden, f"{prefix}.tau"))
    return p


def utility_forward(p: dict, prefix: str, obs, hidden):
    """Scalar action values: (rows, A) plus the next hidden state."""
    x = relu(dense_forward(obs, p[f"{prefix}.in.w"], p[f"{prefix}.in.b"]))
    h = gru_cell(x, hidden, p, f"{prefix}.gru")
    q = dense_forward(h, p[f"{prefix}.out.w"], p[f"{prefix}.out.b"])
    return q, h


def utility_forward_quantile(p: dict, prefix: str, obs, hidden, taus: np.ndarray, n_cos: int = 32):
    """Quantile action values: (rows, A, K) plus the next hidden state.

    Fractions are embedded with cos(pi * i * tau) features and gate the
    recurrent state elementwise before the output head.
    """
    x = relu(dense_forward(obs, p[f"{prefix}.in.w"], p[f"{prefix}.in.b"]))
    h = gru_cell(x, hidden, p, f"{prefix}.gru")
    k = taus.size
    grid = np.cos(np.pi * np.outer(taus, np.arange(n_cos)))  # (K, n_cos)
    phi = relu(dense_forward(Tensor(grid), p[f"{prefix}.tau.w"], p[f"{prefix}.tau.b"]))  # (K, H)
    rows = h.shape[0]
    hidden_size = h.shape[1]
    merged = mul(reshape(h, (rows, 1, hidden_size)), reshape(phi, (1, k, hidden_size)))
    z = einsum2("rkh,ha->rka", merged, p[f"{prefix}.out.w"])
    z = add(z, p[f"{prefix}.out.b"])  # (rows, K, A)
    return z, h


def init_hidden(rows: int, hidden: int) -> Tensor:
    return Tensor(np.zeros((rows, hidden)))


# ---- monotone mixing networks -------------------------------------------


def make_qmix(rng: np.random.Generator, n_agents: int, state_dim: int, embed: int, prefix: str) -> dict:
    p = {}
    p.update(make_dense(rng, state_dim, n_agents * embed, f"{prefix}.hw1"))
    p.update(make_dense(rng, state_dim, embed, f"{prefix}.hb1"))
    p.update(make_dense(rng, state_dim, embed, f"{prefix}.hw2"))
    p.update(make_dense(rng, state_dim, embed, f"{prefix}.v1"))
    p.update(make_dense(rng, embed, 1, f"{prefix}.v2"))
    return p


def qmix_forward(p: dict, prefix: str, qs, state, n_agents: int, embed: int):
    """State-conditioned monotone mix of per-agent values: (B,) joint.

    Hypernetwork outputs pass through abs so every mixing weight is
    non-negative; the state-value head is unconstrained.
    """
    b = qs.shape[0]
    w1 = absolute(dense_forward(state, p[f"{prefix}.hw1.w"], p[f"{prefix}.hw1.b"]))
    w1 = reshape(w1, (b, n_agents, embed))
    b1 = dense_forward(state, p[f"{prefix}.hb1.w"], p[f"{prefix}.hb1.b"])
    hidden = elu(add(einsum2("bne,bn->be", w1, qs), b1))
    w2 = absolute(dense_forward(state, p[f"{prefix}.hw2.w"], p[f"{prefix}.hw2.b"]))
    mixed = einsum2("be,be->b", hidden, w2)
    v = dense_forward(relu(dense_forward(state, p[f"{prefix}.v1.w"], p[f"{prefix}.v1.b"])),
                      p[f"{prefix}.v2.w"], p[f"{prefix}.v2.b"])
    return add(mixed, reshape(v, (b,)))


def qmix_forward_per_tau(p: dict, prefix: str, z, state, n_agents: int, embed: int):
    """The same monotone mix applied at every quantile sample.

    z: (B, n, K) per-agent quantile values; returns (B, K).
    """
    b = z.shape[0]
    w1 = absolute(dense_forward(state, p[f"{prefix}.hw1.w"], p[f"{prefix}.hw1.b"]))
    w1 = reshape(w1, (b, n_agents, embed))
    b1 = dense_forward(state, p[f"{prefix}.hb1.w"], p[f"{prefix}.hb1.b"])
    hidden = elu(add(einsum2("bne,bnk->bke", w1, z), reshape(b1, (b, 1, embed))))
    w2 = absolute(dense_forward(state, p[f"{prefix}.hw2.w"], p[f"{prefix}.hw2.b"]))
    mixed = einsum2("be,bke->bk", w2, hidden)
    v = dense_forward(relu(dense_forward(state, p[f"{prefix}.v1.w"], p[f"{prefix}.v1.b"])),
                      p[f"{prefix}.v2.w"], p[f"{prefix}.v2.b"])
    return add(mixed, v)  # (B, K) + (B, 1) broadcasts


def make_shape_mixer(rng: np.random.Generator, n_agents: int, state_dim: int, prefix: str) -> dict:
    """Linear non-negative state-conditioned weights, no bias, for the
    zero-mean shape portion of a distributional mix."""
    return make_dense(rng, state_dim, n_agents, f"{prefix}.hpw")


def shape_mix_forward(p: dict, prefix: str, centered, state):
    """centered: (B, n, K) mean-centered quantile shapes -> (B, K)."""
    w = absolute(dense_forward(state, p[f"{prefix}.hpw.w"], p[f"{prefix}.hpw.b"]))
    return einsum2("bn,bnk->bk", w, centered)


# ---- feedforward helpers -------------------------------------------------


def make_mlp(rng: np.random.Generator, in_dim: int, hidden: int, out_dim: int, prefix: str) -> dict:
    p = {}
    p.update(make_dense(rng, in_dim, hidden, f"{prefix}.fc1"))
    p.update(make_dense(rng, hidden, hidden, f"{prefix}.fc2"))
    p.update(make_dense(rng, hidden, out_dim, f"{prefix}.fc3"))
    return p


def mlp_forward(p: dict, prefix: str, x):
    h = relu(dense_forward(x, p[f"{prefix}.fc1.w"], p[f"{prefix}.fc1.b"]))
    h = relu(dense_forward(h, p[f"{prefix}.fc2.w"], p[f"{prefix}.fc2.b"]))
    return dense_forward(h, p[f"{prefix}.fc3.w"], p[f"{prefix}.fc3.b"])
