"""Learner algorithms and the math they share."""

from __future__ import annotations

from .distributions import (
    RISK_PORTIONS,
    QuantileDistribution,
    quantile_regression_loss,
    sample_fractions,
)
from .mixers import (
    coma_advantage,
    dfac_mix,
    greedy_actions,
    masked_max,
    qtran_residuals,
    td_target,
    vdn_mix,
)
from .networks import (
    init_hidden,
    make_mlp,
    make_qmix,
    make_shape_mixer,
    make_utility,
    mlp_forward,
    qmix_forward,
    qmix_forward_per_tau,
    shape_mix_forward,
    utility_forward,
    utility_forward_quantile,
)
from .base import Learner, clone_params, copy_into, masked_mse, masked_quantile_loss
from .qlearners import QLearner, QtranLearner
from .dist_learners import DistributionalQLearner, DrimaLearner
from .policy import ComaLearner, MaddpgLearner, MasacLearner

ALGORITHMS = (
    "iql",
    "vdn",
    "qmix",
    "qtran",
    "diql",
    "ddn",
    "dmix",
    "drima",
    "coma",
    "masac",
    "maddpg",
)


def make_learner(algo: str, **kw) -> Learner:
    """Build a learner by its config name.  Extra keyword arguments are
    forwarded to the class constructor."""
    if algo == "iql":
        return QLearner(mixer="none", **kw)
    if algo == "vdn":
        return QLearner(mixer="vdn", **kw)
    if algo == "qmix":
        return QLearner(mixer="qmix", **kw)
    if algo == "qtran":
        return QtranLearner(**kw)
    if algo == "diql":
        return DistributionalQLearner(mixer="none", **kw)
    if algo == "ddn":
        return DistributionalQLearner(mixer="sum", **kw)
    if algo == "dmix":
        return DistributionalQLearner(mixer="dfac", **kw)
    if algo == "drima":
        return DrimaLearner(**kw)
    if algo == "coma":
        return ComaLearner(**kw)
    if algo == "masac":
        return MasacLearner(**kw)
    if algo == "maddpg":
        return MaddpgLearner(**kw)
    raise ValueError(f"unknown algorithm: {algo}")


__all__ = [
    "ALGORITHMS",
    "make_learner",
    "Learner",
    "QLearner",
    "QtranLearner",
    "DistributionalQLearner",
    "DrimaLearner",
    "ComaLearner",
    "MasacLearner",
    "MaddpgLearner",
    "QuantileDistribution",
    "RISK_PORTIONS",
    "sample_fractions",
    "quantile_regression_loss",
    "vdn_mix",
    "qmix_forward",
    "dfac_mix",
    "qtran_residuals",
    "td_target",
    "coma_advantage",
    "greedy_actions",
    "masked_max",
    "make_utility",
    "utility_forward",
    "utility_forward_quantile",
    "make_qmix",
    "make_shape_mixer",
    "shape_mix_forward",
    "qmix_forward_per_tau",
    "make_mlp",
    "mlp_forward",
    "init_hidden",
    "clone_params",
    "copy_into",
    "masked_mse",
    "masked_quantile_loss",
]
