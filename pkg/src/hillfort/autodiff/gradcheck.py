"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def grad_check(f, params: dict[str, Tensor], eps: float = 1e-5) -> float:
    """Compare analytic gradients of the scalar ``f(params)`` against
    central differences.

    Returns the maximum over all parameter entries of
    ``|analytic - numeric| / max(1, |analytic|)``.
    """
    for t in params.values():
        t.grad = None
    out = f(params)
    if out.values.size != 1:
        raise ValueError("grad_check needs a scalar-valued function")
    out.backward()
    analytic = {
        k: (t.grad.copy() if t.grad is not None else np.zeros_like(t.values))
        for k, t in params.items()
    }

    worst = 0.0
    for name, t in params.items():
        flat = t.values.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            hi = float(f(params).values)
            flat[i] = saved - eps
            lo = float(f(params).values)
            flat[i] = saved
            numeric = (hi - lo) / (2.0 * eps)
            err = abs(aflat[i] - numeric) / max(1.0, abs(aflat[i]))
            if err > worst:
                worst = err
    return worst
