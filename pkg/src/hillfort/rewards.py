"""Reward shaping: damage-based returns plus a distance-delta signal
that pays agents for closing on the opposing side.

The base reward per tick is damage dealt to opposing units, a bonus per
kill, and a bonus on the winning tick, each scaled by a configurable
weight.  When normalization is on, the per-episode maximum (full enemy
health pool, all kills, the win) maps to ``scale``.

The alternative reward is the mean over living opposing units of how
much every agent closed distance this tick; positive values mean
approach.  It can replace the base reward up to a step threshold or be
blended with it at fixed weights.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine.geometry import distance
from .engine.world import WorldState


@dataclass
class RewardConfig:
    damage_weight: float = 1.0
    kill_bonus: float = 10.0
    win_bonus: float = 200.0
    normalize: bool = True
    scale: float = 20.0
    mode: str = "base"  # base | alt | switch | blend
    switch_step: int = 100_000
    alt_weight: float = 0.2
    base_weight: float = 0.8
    positive_only: bool = True

    def validate(self) -> None:
        if self.positive_only:
            for name in ("damage_weight", "kill_bonus", "win_bonus"):
                if getattr(self, name) < 0:
                    raise ValueError(f"{name} must be >= 0 with positive_only")
        if self.mode not in ("base", "alt", "switch", "blend"):
            raise ValueError(f"unknown reward mode {self.mode!r}")


def max_base_total(world: WorldState, config: RewardConfig) -> float:
    """Highest raw base return any episode on this roster can produce."""
    pool = sum(u.spec.max_health for u in world.enemies)
    return (
        config.damage_weight * pool
        + config.kill_bonus * len(world.enemies)
        + config.win_bonus
    )


def base_reward(events: list[dict], won: bool, world: WorldState, config: RewardConfig) -> float:
    """Tick reward from the event log: opposing-side damage, kills, win."""
    dmg = 0.0
    kills = 0
    for e in events:
        if e.get("type") == "hit" and e.get("team") == 1:
            dmg += e["amount"]
        elif e.get("type") == "kill" and e.get("team") == 1:
            kills += 1
    raw = config.damage_weight * dmg + config.kill_bonus * kills
    if won:
        raw += config.win_bonus
    if config.normalize:
        return config.scale * raw / max_base_total(world, config)
    return raw


def snapshot_positions(world: WorldState) -> dict:
    return {
        "allies": [(u.x, u.y) for u in world.allies],
        "enemies": [(u.x, u.y) for u in world.enemies],
    }


def max_alt_step(world: WorldState) -> float:
    """Largest possible single-tick drop in summed pair distance per
    living opponent: every agent stepping straight in."""
    if not world.allies:
        return 1.0
    top = max(u.spec.move_step for u in world.allies)
    return len(world.allies) * top


def alt_reward(before: dict, world: WorldState, normalize: bool = True) -> float:
    """Mean over living opposing units of the distance closed this tick.

    Antisymmetric in the displacement: undoing a move refunds exactly
    what the move earned.  Zero when nothing lives on the other side.
    """
    live_enemies = [(k, u) for k, u in enumerate(world.enemies) if u.alive]
    if not live_enemies:
        return 0.0
    live_allies = [(i, u) for i, u in enumerate(world.allies) if u.alive]
    total = 0.0
    for i, ally in live_allies:
        ax0, ay0 = before["allies"][i]
        for k, enemy in live_enemies:
            ex0, ey0 = before["enemies"][k]
            d_prev = distance(ax0, ay0, ex0, ey0)
            d_cur = distance(ally.x, ally.y, enemy.x, enemy.y)
            total += d_prev - d_cur
    value = total / len(live_enemies)
    if normalize:
        value /= max_alt_step(world)
    return value


def schedule_reward(base_value: float, alt_value: float, step: int, config: RewardConfig) -> float:
    """Combine the two signals for the given global environment step.

    switch: alternative strictly before switch_step, base at and after.
    blend: fixed alt_weight / base_weight mix.
    """
    if config.mode == "base":
        return base_value
    if config.mode == "alt":
        return alt_value
    if config.mode == "switch":
        return alt_value if step < config.switch_step else base_value
    if config.mode == "blend":
        return config.alt_weight * alt_value + config.base_weight * base_value
    raise ValueError(f"unknown reward mode {config.mode!r}")
