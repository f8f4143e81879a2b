"""RMSProp with optional global-norm gradient clipping."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor


def global_norm(params: dict[str, Tensor]) -> float:
    total = 0.0
    for t in params.values():
        if t.grad is not None:
            total += float(np.sum(t.grad * t.grad))
    return math.sqrt(total)


class RMSProp:
    """Running-mean-square scaled gradient descent.

    Defaults follow the usual recurrent-Q training setup: decay 0.99,
    epsilon 1e-5, clip gradients to global norm 10 before the update.
    Set clip_norm=None to disable clipping.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 5e-4,
        decay: float = 0.99,
        eps: float = 1e-5,
        clip_norm: float | None = 10.0,
    ):
        self.params = params
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.clip_norm = clip_norm
        self.sq_avg = {k: np.zeros_like(t.values) for k, t in params.items()}

    def step(self):
        scale = 1.0
        if self.clip_norm is not None:
            norm = global_norm(self.params)
            if norm > self.clip_norm:
                scale = self.clip_norm / (norm + 1e-12)
        for name, t in self.params.items():
            if t.grad is None:
                continue
            g = t.grad * scale
            acc = self.sq_avg[name]
            acc *= self.decay
            acc += (1.0 - self.decay) * g * g
            t.values -= self.lr * g / (np.sqrt(acc) + self.eps)

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None
