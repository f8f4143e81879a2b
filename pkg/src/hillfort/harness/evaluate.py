"""Greedy evaluation protocol and checkpoint loading."""

from __future__ import annotations

import os

import numpy as np

from ..autodiff import load_checkpoint
from ..env import BattleEnv
from ..learners import Learner, make_learner
from ..perception import PerceptionConfig
from .config import RunConfig


def build_env(cfg: RunConfig) -> BattleEnv:
    perception = PerceptionConfig(
        communicate=cfg.comm_enabled,
        broadcast=cfg.comm_broadcast,
        transitive=cfg.comm_transitive,
        state_mode=cfg.state_mode,
    )
    return BattleEnv(cfg.scenario, seed=cfg.seed, perception=perception, reward=cfg.reward)


def build_learner(cfg: RunConfig, env: BattleEnv) -> Learner:
    kw = dict(
        obs_dim=env.obs_size,
        state_dim=env.state_size,
        n_agents=env.n_agents,
        n_actions=env.n_actions,
        hidden=cfg.hidden,
        gamma=cfg.gamma,
        lr=cfg.lr,
        seed=cfg.seed,
    )
    if cfg.algo in ("qmix", "masac"):
        kw["mixing_embed"] = cfg.mixing_embed
    if cfg.algo in ("diql", "ddn", "dmix", "drima"):
        kw["n_quantiles"] = cfg.n_quantiles
    if cfg.algo in ("dmix", "drima"):
        kw["mixing_embed"] = cfg.mixing_embed
    if cfg.algo == "drima":
        kw["agent_risk"] = cfg.agent_risk
        kw["env_risk"] = cfg.env_risk
    if cfg.algo == "masac":
        kw["alpha"] = cfg.alpha
    if cfg.algo == "maddpg":
        kw["temperature"] = cfg.temperature
    return make_learner(cfg.algo, **kw)


def load_for_eval(ckpt_path: str, cfg: RunConfig) -> tuple[Learner, BattleEnv]:
    """Rebuild the learner for a config and restore its parameters.
    Shape mismatches against the scenario surface as load errors."""
    env = build_env(cfg)
    learner = build_learner(cfg, env)
    arrays = load_checkpoint(ckpt_path)
    learner.load_tensors(arrays)
    return learner, env


EVAL_SEED_BASE = 977_000_000  # keeps evaluation seeds clear of training seeds


def evaluate(
    learner: Learner,
    env: BattleEnv,
    episodes: int,
    seed_base: int = EVAL_SEED_BASE,
    replay_dir: str | None = None,
) -> dict:
    """Run greedy episodes on fixed seeds and count wins.

    Exploration is off (epsilon 0); episode j always uses seed_base + j
    so successive evaluations are comparable.
    """
    if episodes <= 0:
        raise ValueError("evaluation needs at least one episode")
    rng = np.random.default_rng(seed_base)
    wins = 0
    returns = []
    for j in range(episodes):
        replay_path = None
        if replay_dir is not None:
            os.makedirs(replay_dir, exist_ok=True)
            replay_path = os.path.join(replay_dir, f"eval_{j:03d}.jsonl")
        env.reset(seed=seed_base + j, replay_path=replay_path)
        hidden = learner.initial_hidden()
        done = False
        total = 0.0
        info = {}
        while not done:
            obs = env.get_obs()
            avail = env.get_avail_actions()
            actions, hidden = learner.act(obs, avail, hidden, 0.0, rng)
            reward, done, info = env.step(actions)
            total += reward
        wins += int(info.get("won", False))
        returns.append(total)
    return {
        "episodes": episodes,
        "wins": wins,
        "win_rate": wins / episodes,
        "returns": returns,
    }
