"""Deterministic scripted control of the opposing side.

Two ways of fighting, declared by the scenario:

* approach: units follow their assigned lane of waypoints toward the
  defended ground, engaging any controlled unit they can see.
* hold: units keep formation; siege-capable units dig in on the first
  tick; anyone who sees a controlled unit attacks it or closes distance.

A unit only reacts to what its own sight reaches (range 9, buildings
block).  Target ties break toward the lowest roster index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import distance, sight_blocked
from .units import UnitState
from .world import (
    ACT_EAST,
    ACT_NOOP,
    ACT_NORTH,
    ACT_SKILL,
    ACT_SOUTH,
    ACT_STOP,
    ACT_WEST,
    MOVE_DELTAS,
    NUM_BASIC_ACTIONS,
    WorldState,
    move_legal,
)

WAYPOINT_REACHED = 1.5


@dataclass
class EnemyBehavior:
    """Scripted-side plan carried by the scenario."""

    mode: str = "approach"  # approach | hold
    lanes: list = field(default_factory=list)  # each lane: [(x, y), ...]
    formation: str = "spread"  # spread | gathered, descriptive for hold mode


def _visible_targets(world: WorldState, unit: UnitState) -> list[tuple[float, int, UnitState]]:
    out = []
    for idx, ally in enumerate(world.allies):
        if not ally.alive:
            continue
        d = distance(unit.x, unit.y, ally.x, ally.y)
        if d > unit.spec.sight_range:
            continue
        if sight_blocked(world, unit.x, unit.y, ally.x, ally.y):
            continue
        out.append((d, idx, ally))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def _move_toward(world: WorldState, unit: UnitState, tx: float, ty: float) -> int:
    best_action = ACT_STOP
    best_dist = None
    for action in (ACT_NORTH, ACT_SOUTH, ACT_EAST, ACT_WEST):
        if not move_legal(world, unit, action):
            continue
        dx, dy = MOVE_DELTAS[action]
        nd = distance(unit.x + dx * unit.spec.move_step, unit.y + dy * unit.spec.move_step, tx, ty)
        if best_dist is None or nd < best_dist - 1e-12:
            best_dist = nd
            best_action = action
    if best_dist is None:
        return ACT_STOP
    here = distance(unit.x, unit.y, tx, ty)
    if best_dist >= here:
        return ACT_STOP
    return best_action


def _lane_action(world: WorldState, unit: UnitState, lanes: list) -> int:
    if not lanes:
        return ACT_STOP
    assign_key = ("lane", unit.uid)
    lane_idx = world._script_state.get(assign_key)
    if lane_idx is None:
        # bind each unit to whichever lane starts closest to its spawn
        lane_idx = min(
            range(len(lanes)),
            key=lambda i: (distance(unit.x, unit.y, lanes[i][0][0], lanes[i][0][1]), i),
        )
        world._script_state[assign_key] = lane_idx
    lane = lanes[lane_idx]
    if not lane:
        return ACT_STOP
    key = ("wp", unit.uid)
    idx = world._script_state.get(key, 0)
    while idx < len(lane) and distance(unit.x, unit.y, lane[idx][0], lane[idx][1]) <= WAYPOINT_REACHED:
        idx += 1
    world._script_state[key] = idx
    if idx >= len(lane):
        return ACT_STOP
    return _move_toward(world, unit, lane[idx][0], lane[idx][1])


def scripted_enemy_policy(world: WorldState, behavior: EnemyBehavior | None = None) -> list[int]:
    """Action index per scripted unit, in roster order."""
    behavior = behavior if behavior is not None else world.behavior
    if behavior is None:
        behavior = EnemyBehavior(mode="hold")
    actions: list[int] = []
    for unit in world.enemies:
        if not unit.alive:
            actions.append(ACT_NOOP)
            continue
        if behavior.mode == "hold" and unit.spec.can_siege and not unit.sieged:
            actions.append(ACT_SKILL)
            continue
        visible = _visible_targets(world, unit)
        in_range = [(d, idx) for d, idx, _ally in visible if d <= unit.shooting_range]
        if in_range:
            actions.append(NUM_BASIC_ACTIONS + in_range[0][1])
            continue
        if visible:
            if unit.sieged:
                actions.append(ACT_STOP)
            else:
                _d, _idx, ally = visible[0]
                actions.append(_move_toward(world, unit, ally.x, ally.y))
            continue
        if behavior.mode == "approach":
            actions.append(_lane_action(world, unit, behavior.lanes))
        else:
            actions.append(ACT_STOP)
    return actions
