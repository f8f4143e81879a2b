"""Episode storage and exploration schedules.

Episodes are stored whole (recurrent learners replay full sequences).
The buffer is a fixed-capacity ring with FIFO eviction and uniform
sampling without replacement; sampling reports not-ready (None) until
it holds a full batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EpisodeRecord:
    """One finished episode; index t holds the transition t -> t+1.

    obs/state/avail carry T+1 entries so the final bootstrap target has
    its own row; actions/rewards/terminated carry T.
    """

    obs: np.ndarray  # (T+1, n_agents, obs_len)
    state: np.ndarray  # (T+1, state_len)
    avail: np.ndarray  # (T+1, n_agents, n_actions) bool
    actions: np.ndarray  # (T, n_agents) int
    rewards: np.ndarray  # (T,)
    terminated: np.ndarray  # (T,) float, 1.0 on the closing step
    won: bool = False

    @property
    def length(self) -> int:
        return self.actions.shape[0]

    @property
    def episode_return(self) -> float:
        return float(self.rewards.sum())


def pad_and_stack(records: list[EpisodeRecord]) -> dict:
    """Stack variable-length episodes into padded batch arrays.

    mask[b, t] is 1 for real transitions; padded tail rows repeat zeros
    with every action index 0 and the full avail row of the final entry
    (so padded steps stay well-formed for masked computations).
    """
    batch = len(records)
    t_max = max(r.length for r in records)
    n_agents = records[0].obs.shape[1]
    obs_len = records[0].obs.shape[2]
    state_len = records[0].state.shape[1]
    n_actions = records[0].avail.shape[2]

    obs = np.zeros((batch, t_max + 1, n_agents, obs_len))
    state = np.zeros((batch, t_max + 1, state_len))
    avail = np.zeros((batch, t_max + 1, n_agents, n_actions), dtype=bool)
    actions = np.zeros((batch, t_max, n_agents), dtype=np.int64)
    rewards = np.zeros((batch, t_max))
    terminated = np.zeros((batch, t_max))
    mask = np.zeros((batch, t_max))
    for b, r in enumerate(records):
        t = r.length
        obs[b, : t + 1] = r.obs
        state[b, : t + 1] = r.state
        avail[b, : t + 1] = r.avail
        avail[b, t + 1 :] = r.avail[t]
        actions[b, :t] = r.actions
        rewards[b, :t] = r.rewards
        terminated[b, :t] = r.terminated
        mask[b, :t] = 1.0
    return {
        "obs": obs,
        "state": state,
        "avail": avail,
        "actions": actions,
        "rewards": rewards,
        "terminated": terminated,
        "mask": mask,
    }


class ReplayBuffer:
    """Ring of whole episodes, capacity-bounded, FIFO eviction."""

    def __init__(self, capacity: int = 5000):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._episodes: list[EpisodeRecord] = []
        self._next = 0
        self.total_added = 0

    def __len__(self) -> int:
        return len(self._episodes)

    def add(self, record: EpisodeRecord) -> None:
        if len(self._episodes) < self.capacity:
            self._episodes.append(record)
        else:
            self._episodes[self._next] = record
            self._next = (self._next + 1) % self.capacity
        self.total_added += 1

    def ready(self, batch_size: int) -> bool:
        return len(self._episodes) >= batch_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[EpisodeRecord] | None:
        """Uniform without replacement; None until the buffer holds a
        full batch."""
        if not self.ready(batch_size):
            return None
        idx = rng.choice(len(self._episodes), size=batch_size, replace=False)
        return [self._episodes[i] for i in idx]

    def latest(self, batch_size: int) -> list[EpisodeRecord] | None:
        """Most recently added episodes, oldest first (on-policy users)."""
        if not self.ready(batch_size):
            return None
        n = len(self._episodes)
        order = [(self._next + i) % n for i in range(n)] if n == self.capacity else list(range(n))
        return [self._episodes[i] for i in order[-batch_size:]]


# ---- exploration schedules -----------------------------------------------


@dataclass
class EpsilonSchedule:
    """Exploration-rate decay indexed by environment steps.

    linear: straight line from start to end over anneal_steps, then flat.
    exponential: end + (start-end) * exp(-step/kappa), kappa chosen so
        one percent of the gap remains at anneal_steps.
    piecewise: linear between (step, value) knots, flat at end after the
        final knot.
    """

    kind: str = "linear"  # linear | exponential | piecewise
    start: float = 1.0
    end: float = 0.05
    anneal_steps: int = 50_000
    knots: list = field(default_factory=list)  # interior (step, value) pairs

    def __post_init__(self):
        if self.kind not in ("linear", "exponential", "piecewise"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.start < self.end:
            raise ValueError("schedule must not increase")
        if self.anneal_steps <= 0:
            raise ValueError("anneal_steps must be positive")
        if self.kind == "piecewise":
            pts = [(0, self.start)] + [(int(s), float(v)) for s, v in self.knots]
            pts.append((self.anneal_steps, self.end))
            for (s0, v0), (s1, v1) in zip(pts, pts[1:]):
                if s1 <= s0 or v1 > v0:
                    raise ValueError("piecewise knots must increase in step and not in value")
            self._points = pts

    def value(self, step: int) -> float:
        step = max(int(step), 0)
        if self.kind == "linear":
            if step >= self.anneal_steps:
                return self.end
            frac = step / self.anneal_steps
            return self.start + (self.end - self.start) * frac
        if self.kind == "exponential":
            import math

            kappa = self.anneal_steps / math.log(100.0)
            return self.end + (self.start - self.end) * math.exp(-step / kappa)
        for (s0, v0), (s1, v1) in zip(self._points, self._points[1:]):
            if step < s1:
                return v0 + (v1 - v0) * (step - s0) / (s1 - s0)
        return self.end


def default_piecewise() -> EpsilonSchedule:
    """Fast first drop to 0.1 by 10k steps, then drift to 0.05 by 50k."""
    return EpsilonSchedule(kind="piecewise", knots=[(10_000, 0.1)])


@dataclass(frozen=True)
class UpdateCadence:
    behavior_interval_episodes: int
    target_interval_episodes: int


def update_cadence(mode: str) -> UpdateCadence:
    """Learning rhythm per rollout mode: episodic trains once per
    episode, parallel trains once per gathered batch of twenty; both
    refresh targets every 200 episodes."""
    if mode == "episodic":
        return UpdateCadence(1, 200)
    if mode == "parallel":
        return UpdateCadence(20, 200)
    raise ValueError(f"unknown rollout mode {mode!r}")
