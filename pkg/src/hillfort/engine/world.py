"""World state and the deterministic tick-resolution step.

Per tick the phases run in a fixed order: skills, controlled-side
movement, scripted-side decisions, attacks, deaths, tick increment.
All randomness flows through the world's own generator, so equal seeds
and equal action sequences replay identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import distance
from .terrain import TerrainGrid
from .units import SIEGE_TANK, Building, UnitSpec, UnitState

# Discrete action layout: four moves, No-op (dead only), Stop, Skill,
# then one attack slot per enemy, then one per building.
ACT_NORTH = 0
ACT_SOUTH = 1
ACT_EAST = 2
ACT_WEST = 3
ACT_NOOP = 4
ACT_STOP = 5
ACT_SKILL = 6
NUM_BASIC_ACTIONS = 7

MOVE_DELTAS = {
    ACT_NORTH: (0.0, 1.0),
    ACT_SOUTH: (0.0, -1.0),
    ACT_EAST: (1.0, 0.0),
    ACT_WEST: (-1.0, 0.0),
}


class IllegalActionError(ValueError):
    """Raised when a joint action violates the legality mask."""


@dataclass
class WorldState:
    terrain: TerrainGrid
    allies: list[UnitState]
    enemies: list[UnitState]
    buildings: list[Building]
    rng: np.random.Generator
    tick: int = 0
    episode_limit: int = 200
    behavior: object | None = None  # scripted-side behavior, set by the scenario builder
    _script_state: dict = field(default_factory=dict)

    def team(self, team: int) -> list[UnitState]:
        return self.allies if team == 0 else self.enemies

    def opponents(self, team: int) -> list[UnitState]:
        return self.enemies if team == 0 else self.allies

    def all_units(self):
        return self.allies + self.enemies

    def elevation_of(self, unit: UnitState) -> int:
        return self.terrain.elevation_at(unit.x, unit.y)


def action_space_size(n_enemies: int, n_buildings: int) -> int:
    return NUM_BASIC_ACTIONS + n_enemies + n_buildings


def hit_probability(attacker_elevation: int, target_elevation: int) -> float:
    """Shots fired uphill connect half the time; everything else connects."""
    return 0.5 if attacker_elevation < target_elevation else 1.0


def damage(attacker_spec: UnitSpec, target_attributes: frozenset) -> float:
    if attacker_spec.enhanced_vs & target_attributes:
        return attacker_spec.enhanced_fire_power
    return attacker_spec.fire_power


def _cell_occupied(world: WorldState, cx: int, cy: int, mover: UnitState) -> bool:
    for u in world.all_units():
        if u is mover or not u.alive:
            continue
        if u.cell() == (cx, cy):
            return True
    for b in world.buildings:
        if b.alive and (cx, cy) in set(b.cells()):
            return True
    return False


def _building_blocks(world: WorldState, cx: int, cy: int) -> bool:
    for b in world.buildings:
        if b.alive:
            if b.x0 <= cx < b.x0 + b.width and b.y0 <= cy < b.y0 + b.height:
                return True
    return False


def move_legal(world: WorldState, unit: UnitState, action: int) -> bool:
    """Destination-cell passability; unit collisions are resolved at
    execution time, not in the mask."""
    if unit.sieged:
        return False
    dx, dy = MOVE_DELTAS[action]
    nx = unit.x + dx * unit.spec.move_step
    ny = unit.y + dy * unit.spec.move_step
    cx, cy = math.floor(nx), math.floor(ny)
    if not world.terrain.passable_at(cx, cy):
        return False
    if _building_blocks(world, cx, cy):
        return False
    return True


def legal_actions(world: WorldState, unit: UnitState, targets: list[UnitState] | None = None) -> np.ndarray:
    """Boolean mask over the unit's action space.

    ``targets`` defaults to the opposing team; attack slots cover targets
    then buildings, in roster order.
    """
    if targets is None:
        targets = world.opponents(unit.team)
    n = action_space_size(len(targets), len(world.buildings))
    mask = np.zeros(n, dtype=bool)
    if not unit.alive:
        mask[ACT_NOOP] = True
        return mask
    for act in (ACT_NORTH, ACT_SOUTH, ACT_EAST, ACT_WEST):
        mask[act] = move_legal(world, unit, act)
    mask[ACT_STOP] = True
    mask[ACT_SKILL] = True  # aliases Stop for troops without a siege mode
    rng_ = unit.shooting_range
    for k, t in enumerate(targets):
        if t.alive and distance(unit.x, unit.y, t.x, t.y) <= rng_:
            mask[NUM_BASIC_ACTIONS + k] = True
    for m, b in enumerate(world.buildings):
        if b.alive:
            bx, by = b.center()
            if distance(unit.x, unit.y, bx, by) <= rng_:
                mask[NUM_BASIC_ACTIONS + len(targets) + m] = True
    return mask


def _apply_move(world: WorldState, unit: UnitState, action: int, log: list) -> None:
    dx, dy = MOVE_DELTAS[action]
    nx = unit.x + dx * unit.spec.move_step
    ny = unit.y + dy * unit.spec.move_step
    cx, cy = math.floor(nx), math.floor(ny)
    if not world.terrain.passable_at(cx, cy) or _building_blocks(world, cx, cy):
        return
    if (cx, cy) != unit.cell() and _cell_occupied(world, cx, cy, unit):
        log.append({"type": "move_blocked", "unit": unit.uid})
        return
    unit.x, unit.y = nx, ny


def _splash_victims(world: WorldState, attacker: UnitState, tx: float, ty: float, radius: float):
    for u in world.all_units():
        if u is attacker or not u.alive:
            continue
        if distance(tx, ty, u.x, u.y) <= radius:
            yield u
    for b in world.buildings:
        if b.alive:
            bx, by = b.center()
            if distance(tx, ty, bx, by) <= radius:
                yield b


def _deal(victim, spec: UnitSpec, log: list, attacker_id: int, splash: bool) -> None:
    if isinstance(victim, Building):
        amount = min(spec.fire_power, victim.health)
        victim.health -= amount
        log.append(
            {"type": "hit", "attacker": attacker_id, "building": victim.bid,
             "amount": amount, "splash": splash}
        )
    else:
        amount = min(damage(spec, victim.spec.attributes), victim.health)
        victim.health -= amount
        log.append(
            {"type": "hit", "attacker": attacker_id, "target": victim.uid,
             "team": victim.team, "amount": amount, "splash": splash}
        )


def _resolve_attack(world: WorldState, unit: UnitState, action: int,
                    targets: list[UnitState], log: list) -> None:
    if unit.cooldown_remaining > 0:
        return
    k = action - NUM_BASIC_ACTIONS
    spec = unit.spec
    if k < len(targets):
        target = targets[k]
        if not target.alive:
            return
        if distance(unit.x, unit.y, target.x, target.y) > unit.shooting_range:
            return
        p = hit_probability(world.elevation_of(unit), world.elevation_of(target))
        roll = world.rng.random()
        if roll >= p:
            log.append({"type": "miss", "attacker": unit.uid, "target": target.uid})
            unit.cooldown_remaining = spec.cooldown_ticks
            return
        if unit.sieged and spec.splash_radius > 0.0:
            # splash shares the primary roll and deals full damage in radius
            tx, ty = target.x, target.y
            _deal(target, spec, log, unit.uid, splash=False)
            for victim in _splash_victims(world, unit, tx, ty, spec.splash_radius):
                if victim is target:
                    continue
                _deal(victim, spec, log, unit.uid, splash=True)
        else:
            _deal(target, spec, log, unit.uid, splash=False)
        unit.cooldown_remaining = spec.cooldown_ticks
    else:
        m = k - len(targets)
        b = world.buildings[m]
        if not b.alive:
            return
        bx, by = b.center()
        if distance(unit.x, unit.y, bx, by) > unit.shooting_range:
            return
        # building shots always land, no elevation roll
        _deal(b, unit.spec, log, unit.uid, splash=False)
        unit.cooldown_remaining = spec.cooldown_ticks


def step(world: WorldState, joint_action) -> list[dict]:
    """Advance one tick under the controlled side's joint action.

    Raises IllegalActionError when any submitted action is outside the
    unit's legality mask.  Returns the tick's event log.
    """
    joint_action = [int(a) for a in joint_action]
    if len(joint_action) != len(world.allies):
        raise IllegalActionError(
            f"expected {len(world.allies)} actions, got {len(joint_action)}"
        )
    for unit, action in zip(world.allies, joint_action):
        mask = legal_actions(world, unit)
        if action < 0 or action >= mask.size or not mask[action]:
            raise IllegalActionError(
                f"unit {unit.uid} cannot take action {action} at tick {world.tick}"
            )

    log: list[dict] = []

    # phase 1: siege toggles (consumes the tick for the toggling unit)
    for unit, action in zip(world.allies, joint_action):
        if unit.alive and action == ACT_SKILL and unit.spec.can_siege:
            unit.sieged = not unit.sieged
            log.append({"type": "siege" if unit.sieged else "unsiege", "unit": unit.uid})

    # phase 2: controlled-side movement, roster order, collisions reject
    for unit, action in zip(world.allies, joint_action):
        if unit.alive and action in MOVE_DELTAS:
            _apply_move(world, unit, action, log)

    # phase 3: scripted-side decisions; their toggles and moves apply now,
    # their attacks queue for phase 4
    from .scripted import scripted_enemy_policy

    enemy_actions = scripted_enemy_policy(world)
    enemy_attacks: list[tuple[UnitState, int]] = []
    for unit, action in zip(world.enemies, enemy_actions):
        if not unit.alive:
            continue
        if action == ACT_SKILL and unit.spec.can_siege:
            unit.sieged = not unit.sieged
            log.append({"type": "siege" if unit.sieged else "unsiege", "unit": unit.uid})
        elif action in MOVE_DELTAS and not unit.sieged:
            _apply_move(world, unit, action, log)
        elif action >= NUM_BASIC_ACTIONS:
            enemy_attacks.append((unit, action))

    # phase 4: attacks, controlled side first, then scripted side
    for unit, action in zip(world.allies, joint_action):
        if unit.alive and action >= NUM_BASIC_ACTIONS:
            _resolve_attack(world, unit, action, world.enemies, log)
    for unit, action in enemy_attacks:
        _resolve_attack(world, unit, action, world.allies, log)

    # phase 5: deaths and destruction become observable events
    for u in world.all_units():
        if u.health <= 0.0 and not u.death_logged:
            u.death_logged = True
            u.sieged = False
            log.append({"type": "kill", "unit": u.uid, "team": u.team})
    for b in world.buildings:
        if not b.alive and not b.death_logged:
            b.death_logged = True
            log.append({"type": "building_destroyed", "building": b.bid})

    # record the actions taken, then advance the clock
    for unit, action in zip(world.allies, joint_action):
        unit.last_action = action
    for unit, action in zip(world.enemies, enemy_actions):
        unit.last_action = action

    # phase 6: tick increment and cooldown decay
    for u in world.all_units():
        if u.alive and u.cooldown_remaining > 0:
            u.cooldown_remaining -= 1
    world.tick += 1
    return log


def outcome(world: WorldState) -> str:
    """ongoing | win | loss | timeout; mutual annihilation counts as loss."""
    allies_alive = any(u.alive for u in world.allies)
    enemies_alive = any(u.alive for u in world.enemies)
    if not allies_alive:
        return "loss"
    if not enemies_alive:
        return "win"
    if world.tick >= world.episode_limit:
        return "timeout"
    return "ongoing"
