"""Quantile-sample value distributions and the pinball-Huber loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, huber_unit, mul, reshape, sub, tmean

# Named fraction intervals for risk-conditioned sampling.  The lower
# quarter of the return distribution reads as caution, the upper as
# appetite.
RISK_PORTIONS = {
    "averse": (0.0, 0.25),
    "neutral_averse": (0.25, 0.5),
    "neutral_seeking": (0.5, 0.75),
    "seeking": (0.75, 1.0),
    "neutral": (0.0, 1.0),
}


@dataclass
class QuantileDistribution:
    """Equal-weight quantile samples of a return distribution.

    taus must be ascending within [0, 1]; values align with taus.  The
    scalar summary is the plain average of the sampled values.
    """

    taus: np.ndarray
    values: np.ndarray | Tensor

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=np.float64)
        if self.taus.ndim != 1:
            raise ValueError("taus must be one-dimensional")
        if np.any(self.taus < 0.0) or np.any(self.taus > 1.0):
            raise ValueError("taus must lie in [0, 1]")
        if np.any(np.diff(self.taus) < 0.0):
            raise ValueError("taus must be ascending")
        n = self.values.shape[-1] if hasattr(self.values, "shape") else len(self.values)
        if n != self.taus.size:
            raise ValueError("values and taus must align")

    def mean(self):
        if isinstance(self.values, Tensor):
            return tmean(self.values, axis=-1)
        return float(np.mean(self.values))


def sample_fractions(n: int, rng: np.random.Generator, portion=(0.0, 1.0)) -> np.ndarray:
    """n i.i.d. uniforms from the named or literal interval, sorted."""
    if isinstance(portion, str):
        portion = RISK_PORTIONS[portion]
    lo, hi = portion
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"bad fraction interval {portion}")
    return np.sort(rng.uniform(lo, hi, size=n))


def quantile_regression_loss(taus: np.ndarray, predicted, targets) -> Tensor:
    """Quantile-Huber regression averaged over every (tau, target) pair.

    predicted: Tensor (..., K) aligned with taus (K,); targets: constant
    array (..., M).  kappa is fixed at 1, so the Huber kink sits one
    unit out.  The tau-indicator weight follows the sign of the pairwise
    residual and is treated as locally constant.
    """
    taus = np.asarray(taus, dtype=np.float64)
    if not isinstance(predicted, Tensor):
        predicted = Tensor(predicted)
    targets = np.asarray(targets, dtype=np.float64)
    k = taus.size
    m = targets.shape[-1]
    del m
    pred_col = reshape(predicted, predicted.shape + (1,))  # (..., K, 1)
    tgt_row = targets[..., None, :]  # (..., 1, M)
    u = sub(Tensor(tgt_row), pred_col)  # broadcasts to (..., K, M)
    indicator = (u.values < 0.0).astype(np.float64)
    weight = np.abs(taus.reshape((1,) * (u.values.ndim - 2) + (k, 1)) - indicator)
    return tmean(mul(Tensor(weight), huber_unit(u)))
