"""The training loop: rollouts into the episode buffer, cadenced
updates, periodic greedy evaluation, metrics and checkpoint emission.

Runners execute sequentially in worker order, so a run is a pure
function of (seed, config) even in parallel mode.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..autodiff import save_checkpoint
from ..replay import EpisodeRecord, ReplayBuffer, pad_and_stack
from .config import RunConfig
from .evaluate import build_env, build_learner, evaluate

METRICS_HEADER = "step,episodes,train_return,eval_winrate,loss"


class TrainingDiverged(RuntimeError):
    """Raised when the loss turns non-finite; a diagnostic snapshot is
    written next to the metrics before raising."""


def _cell(x) -> str:
    return "" if x is None else repr(float(x))


def _line(row: dict) -> str:
    return (
        f"{row['step']},{row['episodes']},{_cell(row['train_return'])},"
        f"{_cell(row['eval_winrate'])},{_cell(row['loss'])}"
    )


class _Runner:
    """One environment plus its rollout state."""

    def __init__(self, index: int, cfg: RunConfig):
        self.index = index
        self.env = build_env(cfg)
        self.episode_seed = int(np.random.default_rng((cfg.seed, index)).integers(0, 2**31 - 1))
        self.action_rng = np.random.default_rng((cfg.seed, index, 1))
        self.episodes_done = 0

    def next_seed(self) -> int:
        self.episodes_done += 1
        return self.episode_seed + self.episodes_done


def _run_episode(runner: _Runner, learner, epsilon_of, global_steps: int):
    env = runner.env
    env.reset(seed=runner.next_seed(), global_step=global_steps)
    hidden = learner.initial_hidden()
    obs = [env.get_obs()]
    states = [env.get_state()]
    avail = [env.get_avail_actions()]
    actions, rewards, terms = [], [], []
    done = False
    info = {}
    step_at = global_steps
    while not done:
        eps = epsilon_of(step_at)
        acts, hidden = learner.act(obs[-1], avail[-1], hidden, eps, runner.action_rng)
        reward, done, info = env.step(acts)
        actions.append(acts)
        rewards.append(reward)
        terms.append(float(done))
        obs.append(env.get_obs())
        states.append(env.get_state())
        avail.append(env.get_avail_actions())
        step_at += 1
    record = EpisodeRecord(
        obs=np.asarray(obs),
        state=np.asarray(states),
        avail=np.asarray(avail),
        actions=np.asarray(actions),
        rewards=np.asarray(rewards),
        terminated=np.asarray(terms),
        won=bool(info.get("won", False)),
    )
    return record, len(rewards)


def train(cfg: RunConfig, out_dir: str) -> list[dict]:
    """Run the full protocol; returns the metrics rows as dicts.

    Writes out_dir/metrics.csv and out_dir/checkpoint.hfck; on a
    non-finite loss a diagnostic snapshot lands in out_dir before the
    raise.  Metrics rows keep strictly increasing step stamps: an
    evaluation crossed mid-episode is written at its exact boundary,
    before the row of the episode that crossed it.
    """
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    ckpt_path = os.path.join(out_dir, "checkpoint.hfck")

    eval_env = build_env(cfg)
    learner = build_learner(cfg, eval_env)
    schedule = cfg.epsilon_schedule()
    cadence = cfg.cadence()
    buffer = ReplayBuffer(cfg.buffer_episodes)
    sample_rng = np.random.default_rng((cfg.seed, 202_208))

    rows: list[dict] = []
    lines = [METRICS_HEADER]

    def emit(step, episodes, train_return=None, eval_winrate=None, loss=None):
        row = {
            "step": step,
            "episodes": episodes,
            "train_return": train_return,
            "eval_winrate": eval_winrate,
            "loss": loss,
        }
        rows.append(row)
        lines.append(_line(row))
        return row

    def flush():
        with open(metrics_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    if cfg.total_steps == 0:
        save_checkpoint(ckpt_path, learner.checkpoint_tensors())
        flush()
        return rows

    runners = [_Runner(i, cfg) for i in range(cfg.resolved_runners())]
    global_steps = 0
    episodes = 0
    next_eval = cfg.eval_interval  # step 0 gets its own row below
    loss_tail: list[float] = []
    turn = 0

    first = evaluate(learner, eval_env, cfg.resolved_eval_episodes())
    emit(0, 0, eval_winrate=first["win_rate"])

    while global_steps < cfg.total_steps:
        runner = runners[turn % len(runners)]
        turn += 1
        record, length = _run_episode(runner, learner, schedule.value, global_steps)
        global_steps += length
        episodes += 1
        buffer.add(record)

        merged_winrate = None
        evaluated = False
        while next_eval <= global_steps:
            evaluated = True
            result = evaluate(learner, eval_env, cfg.resolved_eval_episodes())
            if next_eval == global_steps:
                merged_winrate = result["win_rate"]  # same stamp: share the row
                next_eval += cfg.eval_interval
                break
            emit(next_eval, episodes, eval_winrate=result["win_rate"])
            next_eval += cfg.eval_interval
        episode_row = emit(
            global_steps, episodes, train_return=record.episode_return, eval_winrate=merged_winrate
        )
        if evaluated:
            flush()  # checkpointable progress for long runs

        if episodes % cadence.behavior_interval_episodes == 0:
            if getattr(learner, "on_policy", False):
                batch_eps = buffer.latest(cfg.batch_size)
            else:
                batch_eps = buffer.sample(cfg.batch_size, sample_rng)
            if batch_eps is not None:
                loss = learner.update(pad_and_stack(batch_eps))
                loss_tail = (loss_tail + [loss])[-20:]
                if not np.isfinite(loss):
                    diag = {
                        "reason": "non-finite loss",
                        "step": global_steps,
                        "episodes": episodes,
                        "recent_losses": loss_tail,
                        "algo": cfg.algo,
                        "scenario": cfg.scenario,
                    }
                    with open(os.path.join(out_dir, "diagnostic.json"), "w", encoding="utf-8") as fh:
                        json.dump(diag, fh, indent=2)
                    save_checkpoint(ckpt_path, learner.checkpoint_tensors())
                    flush()
                    raise TrainingDiverged(f"loss became {loss} at step {global_steps}")
                episode_row["loss"] = loss
                lines[-1] = _line(episode_row)
        if episodes % cadence.target_interval_episodes == 0:
            learner.sync_targets()

    save_checkpoint(ckpt_path, learner.checkpoint_tensors())
    flush()
    return rows
