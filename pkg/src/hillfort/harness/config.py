"""Run configuration: a flat dotted-key text format with strict keys.

Every tunable the training protocol exposes has one key; unknown keys
are rejected so typos fail loudly.  Defaults reproduce the reference
training setup (ten-million-step budget, RMSProp 5e-4, buffer of 5000
episodes, target copies every 200 episodes, 32 quantile samples).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..replay import EpsilonSchedule, UpdateCadence, update_cadence
from ..rewards import RewardConfig
from ..learners import ALGORITHMS


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "smoke_3v2"
    algo: str = "qmix"
    seed: int = 0
    mode: str = "episodic"  # episodic: 1 runner; parallel: 20 runners

    total_steps: int = 10_050_000
    gamma: float = 0.99
    lr: float = 5e-4
    hidden: int = 64
    mixing_embed: int = 32
    n_quantiles: int = 32
    batch_size: int = 32
    buffer_episodes: int = 5000
    target_update_episodes: int = 200
    runners: int | None = None  # None: derived from mode
    update_interval: int | None = None  # episodes between updates; None: derived
    alpha: float = 0.01  # entropy weight (masac)
    temperature: float = 1.0  # relaxation temperature (maddpg)
    agent_risk: str = "seeking"
    env_risk: str = "averse"

    epsilon_kind: str = "linear"
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_anneal: int = 50_000
    epsilon_knots: tuple = ()

    comm_enabled: bool = True
    comm_broadcast: bool = False
    comm_transitive: bool = True
    state_mode: str = "concat"

    reward: RewardConfig = field(default_factory=RewardConfig)

    eval_interval: int = 10_000
    eval_episodes: int | None = None  # None: 32 episodic / 20 parallel

    def resolved_runners(self) -> int:
        if self.runners is not None:
            return self.runners
        return 1 if self.mode == "episodic" else 20

    def resolved_eval_episodes(self) -> int:
        if self.eval_episodes is not None:
            return self.eval_episodes
        return 32 if self.mode == "episodic" else 20

    def cadence(self) -> UpdateCadence:
        base = update_cadence(self.mode)
        update_every = (
            self.update_interval if self.update_interval is not None else base.behavior_interval_episodes
        )
        return UpdateCadence(update_every, self.target_update_episodes)

    def epsilon_schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(
            kind=self.epsilon_kind,
            start=self.epsilon_start,
            end=self.epsilon_end,
            anneal_steps=self.epsilon_anneal,
            knots=tuple(self.epsilon_knots),
        )

    def validate(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm: {self.algo}")
        if self.mode not in ("episodic", "parallel"):
            raise ConfigError(f"unknown mode: {self.mode}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be >= 0")
        if self.state_mode not in ("concat", "smac"):
            raise ConfigError(f"unknown state mode: {self.state_mode}")
        self.reward.validate()
        self.epsilon_schedule()  # raises on bad schedule parameters


def _parse_scalar(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_knots(raw: str) -> tuple:
    """"10000:0.1,20000:0.08" -> ((10000, 0.1), (20000, 0.08))."""
    knots = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        step_s, _, val_s = part.partition(":")
        try:
            knots.append((int(step_s), float(val_s)))
        except ValueError as exc:
            raise ConfigError(f"bad knot entry {part!r}") from exc
    return tuple(knots)


# dotted config key -> (attribute path, parser)
_KEYS = {
    "scenario": "scenario",
    "algo": "algo",
    "seed": "seed",
    "mode": "mode",
    "train.total_steps": "total_steps",
    "train.gamma": "gamma",
    "train.lr": "lr",
    "train.hidden": "hidden",
    "train.mixing_embed": "mixing_embed",
    "train.n_quantiles": "n_quantiles",
    "train.batch_size": "batch_size",
    "train.buffer_episodes": "buffer_episodes",
    "train.target_update_episodes": "target_update_episodes",
    "train.runners": "runners",
    "train.update_interval": "update_interval",
    "train.alpha": "alpha",
    "train.temperature": "temperature",
    "risk.agent": "agent_risk",
    "risk.env": "env_risk",
    "epsilon.kind": "epsilon_kind",
    "epsilon.start": "epsilon_start",
    "epsilon.end": "epsilon_end",
    "epsilon.anneal": "epsilon_anneal",
    "epsilon.knots": "epsilon_knots",
    "comm.enabled": "comm_enabled",
    "comm.broadcast": "comm_broadcast",
    "comm.transitive": "comm_transitive",
    "state.mode": "state_mode",
    "eval.interval": "eval_interval",
    "eval.episodes": "eval_episodes",
}

_REWARD_KEYS = {
    "reward.mode": "mode",
    "reward.damage_weight": "damage_weight",
    "reward.kill_bonus": "kill_bonus",
    "reward.win_bonus": "win_bonus",
    "reward.normalize": "normalize",
    "reward.scale": "scale",
    "reward.switch_step": "switch_step",
    "reward.alt_weight": "alt_weight",
    "reward.base_weight": "base_weight",
    "reward.positive_only": "positive_only",
}


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    reward_kw = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _REWARD_KEYS:
            reward_kw[_REWARD_KEYS[key]] = _parse_scalar(value)
        elif key in _KEYS:
            attr = _KEYS[key]
            if key == "epsilon.knots":
                setattr(cfg, attr, _parse_knots(value))
            else:
                setattr(cfg, attr, _parse_scalar(value))
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if reward_kw:
        cfg.reward = replace(RewardConfig(), **reward_kw)
    cfg.validate()
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
