"""Episode-level environment facade.

Wraps a scenario into the usual reset/step loop: builds the world,
exposes per-agent observations, legality masks, and the global state,
and turns engine event logs into scalar team rewards.
"""

from __future__ import annotations

import numpy as np

from .engine.replaylog import ReplayWriter
from .engine.world import WorldState, legal_actions, outcome, step as world_step
from .perception import (
    PerceptionConfig,
    global_state,
    observation_length,
    observe_all,
    state_length,
)
from .rewards import (
    RewardConfig,
    alt_reward,
    base_reward,
    schedule_reward,
    snapshot_positions,
)
from .scenarios import Scenario, build_world, load_scenario


class BattleEnv:
    def __init__(
        self,
        scenario: Scenario | str,
        seed: int = 0,
        perception: PerceptionConfig | None = None,
        reward: RewardConfig | None = None,
    ):
        self.scenario = load_scenario(scenario) if isinstance(scenario, str) else scenario
        self.perception = perception or PerceptionConfig()
        self.reward_config = reward or RewardConfig()
        self.reward_config.validate()
        self.seed = seed
        self.n_agents = self.scenario.n_agents
        self.n_enemies = self.scenario.n_enemies
        self.n_buildings = self.scenario.n_buildings
        from .engine.world import action_space_size

        self.n_actions = action_space_size(self.n_enemies, self.n_buildings)
        self.obs_size = observation_length(self.n_agents, self.n_enemies, self.n_buildings)
        self.state_size = state_length(
            self.n_agents, self.n_enemies, self.n_buildings, self.perception.state_mode
        )
        self.episode_limit = self.scenario.episode_limit
        self.world: WorldState | None = None
        self._obs = None
        self._replay: ReplayWriter | None = None
        self._global_offset = 0
        self._steps = 0
        self.reset(seed)

    # ---- lifecycle -------------------------------------------------------

    def reset(self, seed: int | None = None, global_step: int = 0,
              replay_path: str | None = None) -> np.ndarray:
        if seed is not None:
            self.seed = seed
        if self._replay is not None:
            self._replay.close()
            self._replay = None
        self.world = build_world(self.scenario, self.seed)
        self._global_offset = global_step
        self._steps = 0
        if replay_path is not None:
            self._replay = ReplayWriter(replay_path, self.scenario.name, self.world)
        self._refresh_obs()
        return self._obs

    def _refresh_obs(self) -> None:
        self._obs = observe_all(self.world, self.perception)

    # ---- views -----------------------------------------------------------

    def get_obs(self) -> np.ndarray:
        return self._obs

    def get_state(self) -> np.ndarray:
        if self.perception.state_mode == "concat":
            return self._obs.reshape(-1)
        return global_state(self.world, self.perception)

    def get_avail_actions(self) -> np.ndarray:
        return np.stack([legal_actions(self.world, u) for u in self.world.allies])

    # ---- stepping --------------------------------------------------------

    def step(self, actions) -> tuple[float, bool, dict]:
        before = snapshot_positions(self.world)
        events = world_step(self.world, actions)
        result = outcome(self.world)
        won = result == "win"
        base = base_reward(events, won, self.world, self.reward_config)
        alt = alt_reward(before, self.world)
        reward = schedule_reward(
            base, alt, self._global_offset + self._steps, self.reward_config
        )
        self._steps += 1
        terminated = result != "ongoing"
        if self._replay is not None:
            self._replay.record_tick(self.world, events)
            if terminated:
                self._replay.close()
                self._replay = None
        self._refresh_obs()
        info = {
            "outcome": result,
            "won": won,
            "events": events,
            "base_reward": base,
            "alt_reward": alt,
        }
        return reward, terminated, info

    def close(self) -> None:
        if self._replay is not None:
            self._replay.close()
            self._replay = None
