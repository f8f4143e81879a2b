"""Small neural-network building blocks on top of the tensor kernel."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor, add, matmul, mul, sigmoid, sub, tanh


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def make_dense(rng: np.random.Generator, fan_in: int, fan_out: int, prefix: str) -> dict:
    return {
        f"{prefix}.w": Tensor(uniform_init(rng, fan_in, (fan_in, fan_out)), requires_grad=True),
        f"{prefix}.b": Tensor(uniform_init(rng, fan_in, (fan_out,)), requires_grad=True),
    }


def dense_forward(x, w, b=None):
    """x @ w + b for a (batch, fan_in) input."""
    out = matmul(x, w)
    if b is not None:
        out = add(out, b)
    return out


def make_gru(rng: np.random.Generator, input_size: int, hidden_size: int, prefix: str) -> dict:
    p = {}
    for gate in ("r", "z", "n"):
        p[f"{prefix}.wx{gate}"] = Tensor(
            uniform_init(rng, input_size, (input_size, hidden_size)), requires_grad=True
        )
        p[f"{prefix}.wh{gate}"] = Tensor(
            uniform_init(rng, hidden_size, (hidden_size, hidden_size)), requires_grad=True
        )
        p[f"{prefix}.b{gate}"] = Tensor(
            uniform_init(rng, hidden_size, (hidden_size,)), requires_grad=True
        )
    return p


def gru_cell(x, h, p: dict, prefix: str):
    """One gated-recurrent-unit step.

    r = sigmoid(x Wxr + h Whr + br)
    z = sigmoid(x Wxz + h Whz + bz)
    n = tanh(x Wxn + r * (h Whn) + bn)
    h' = (1 - z) * n + z * h

    With the update gate z saturated at 1 the cell carries the previous
    hidden state through unchanged.
    """
    r = sigmoid(add(add(matmul(x, p[f"{prefix}.wxr"]), matmul(h, p[f"{prefix}.whr"])), p[f"{prefix}.br"]))
    z = sigmoid(add(add(matmul(x, p[f"{prefix}.wxz"]), matmul(h, p[f"{prefix}.whz"])), p[f"{prefix}.bz"]))
    n = tanh(add(add(matmul(x, p[f"{prefix}.wxn"]), mul(r, matmul(h, p[f"{prefix}.whn"]))), p[f"{prefix}.bn"]))
    one_minus_z = sub(1.0, z)
    return add(mul(one_minus_z, n), mul(z, h))
