"""Sighting, communication, and feature-vector construction.

The visibility matrix has one row per controlled agent and one column
per entity (agents, then opposing units, then buildings).  Sight reaches
9 cells and is cut by living sight-blocking buildings.  Communication
OR-merges rows between agents inside mutual radio range (16 for siege
platforms, 12 otherwise), transitively by default, so a chain of allies
can extend what any one of them sees.

Observation layout per agent:

    movement block   4 legality bits + 8 neighbor-passability bits
    own block        health, x, y, elevation + 8-wide type one-hot
    per other agent  14 base features + last-action one-hot
    per opposing unit  14 base features
    per building       14 base features

The 14 base features are visibility flag, health fraction, distance,
relative x, relative y, relative elevation (distances scaled by sight
range), then the type one-hot.  Hidden or dead entities zero their
block; a dead agent observes all zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine.geometry import distance, sight_blocked
from .engine.units import NUM_TYPE_SLOTS
from .engine.world import (
    ACT_EAST,
    ACT_NORTH,
    ACT_SOUTH,
    ACT_WEST,
    NUM_BASIC_ACTIONS,
    WorldState,
    action_space_size,
    legal_actions,
)

BASE_ENTITY_FEATURES = 6 + NUM_TYPE_SLOTS  # 14

# neighbor probe order for the pathing bits: clockwise from north
_NEIGHBOR_OFFSETS = (
    (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1),
)

# compact state mode uses the classic 6-slot basic-action encoding
SMAC_BASIC_ACTIONS = 6


@dataclass
class PerceptionConfig:
    communicate: bool = True  # merge sight over the radio graph
    broadcast: bool = False  # unlimited-range merge when set
    transitive: bool = True  # closure vs single hop
    state_mode: str = "concat"  # concat | smac


def observation_length(n_agents: int, n_enemies: int, n_buildings: int) -> int:
    move = 4 + 8
    own = 4 + NUM_TYPE_SLOTS
    ally = (n_agents - 1) * (
        BASE_ENTITY_FEATURES + action_space_size(n_enemies, n_buildings)
    )
    others = (n_enemies + n_buildings) * BASE_ENTITY_FEATURES
    return move + own + ally + others


def state_length(n_agents: int, n_enemies: int, n_buildings: int, mode: str = "concat") -> int:
    if mode == "concat":
        return n_agents * observation_length(n_agents, n_enemies, n_buildings)
    if mode == "smac":
        ally = n_agents * (4 + NUM_TYPE_SLOTS + SMAC_BASIC_ACTIONS + n_enemies)
        enemy = n_enemies * (3 + NUM_TYPE_SLOTS)
        return ally + enemy
    raise ValueError(f"unknown state mode {mode!r}")


def visibility(world: WorldState) -> np.ndarray:
    """Raw line-of-sight matrix, agents x entities, no communication."""
    n_a = len(world.allies)
    n_e = len(world.enemies)
    n_b = len(world.buildings)
    vis = np.zeros((n_a, n_a + n_e + n_b), dtype=np.int8)
    for i, agent in enumerate(world.allies):
        if not agent.alive:
            continue
        sight = agent.spec.sight_range
        for j, other in enumerate(world.allies):
            if not other.alive:
                continue
            if i == j:
                vis[i, j] = 1
                continue
            if distance(agent.x, agent.y, other.x, other.y) <= sight and not sight_blocked(
                world, agent.x, agent.y, other.x, other.y
            ):
                vis[i, j] = 1
        for k, enemy in enumerate(world.enemies):
            if not enemy.alive:
                continue
            if distance(agent.x, agent.y, enemy.x, enemy.y) <= sight and not sight_blocked(
                world, agent.x, agent.y, enemy.x, enemy.y
            ):
                vis[i, n_a + k] = 1
        for m, b in enumerate(world.buildings):
            if not b.alive:
                continue
            bx, by = b.center()
            if distance(agent.x, agent.y, bx, by) <= sight and not sight_blocked(
                world, agent.x, agent.y, bx, by, skip_building=b
            ):
                vis[i, n_a + n_e + m] = 1
    return vis


def communicate(vis: np.ndarray, world: WorldState, config: PerceptionConfig | None = None) -> np.ndarray:
    """Extend sight rows over the communication graph.

    Disabled communication returns the matrix unchanged.  Merging only
    ever adds entries, so the result dominates the input elementwise.
    """
    config = config or PerceptionConfig()
    if not config.communicate:
        return vis.copy()
    n_a = len(world.allies)
    adj = np.eye(n_a, dtype=bool)
    for i, a in enumerate(world.allies):
        if not a.alive:
            adj[i, i] = False
            continue
        for j in range(i + 1, n_a):
            b = world.allies[j]
            if not b.alive:
                continue
            if config.broadcast:
                adj[i, j] = adj[j, i] = True
                continue
            reach = min(a.spec.comm_range, b.spec.comm_range)
            if distance(a.x, a.y, b.x, b.y) <= reach:
                adj[i, j] = adj[j, i] = True
    if config.transitive:
        # boolean closure; the graph is tiny
        closure = adj.copy()
        while True:
            nxt = closure | (closure @ closure)
            if (nxt == closure).all():
                break
            closure = nxt
        adj = closure
    merged = (adj @ (vis > 0)).astype(np.int8)
    # dead agents share nothing and receive nothing
    for i, a in enumerate(world.allies):
        if not a.alive:
            merged[i, :] = 0
    return merged


def _entity_block(agent, world, visible: bool, ent_x, ent_y, ent_health, ent_max, type_slot) -> list[float]:
    if not visible:
        return [0.0] * BASE_ENTITY_FEATURES
    sight = agent.spec.sight_range
    d = distance(agent.x, agent.y, ent_x, ent_y)
    block = [
        1.0,
        ent_health / ent_max,
        d / sight,
        (ent_x - agent.x) / sight,
        (ent_y - agent.y) / sight,
        float(world.terrain.elevation_at(ent_x, ent_y) - world.elevation_of(agent)),
    ]
    one_hot = [0.0] * NUM_TYPE_SLOTS
    one_hot[type_slot] = 1.0
    return block + one_hot


def observe(world: WorldState, vis: np.ndarray, agent_idx: int) -> np.ndarray:
    """Feature vector for one agent given a (possibly comm-extended)
    visibility matrix."""
    n_a = len(world.allies)
    n_e = len(world.enemies)
    n_b = len(world.buildings)
    agent = world.allies[agent_idx]
    total = observation_length(n_a, n_e, n_b)
    if not agent.alive:
        return np.zeros(total, dtype=np.float64)

    feats: list[float] = []
    mask = legal_actions(world, agent)
    feats.extend(float(mask[a]) for a in (ACT_NORTH, ACT_SOUTH, ACT_EAST, ACT_WEST))
    cx, cy = agent.cell()
    for dx, dy in _NEIGHBOR_OFFSETS:
        nx, ny = cx + dx, cy + dy
        passable = world.terrain.passable_at(nx, ny)
        if passable:
            for b in world.buildings:
                if b.alive and b.x0 <= nx < b.x0 + b.width and b.y0 <= ny < b.y0 + b.height:
                    passable = False
                    break
        feats.append(float(passable))

    feats.append(agent.health / agent.spec.max_health)
    feats.append(agent.x / world.terrain.width)
    feats.append(agent.y / world.terrain.height)
    feats.append(float(world.elevation_of(agent)))
    own_type = [0.0] * NUM_TYPE_SLOTS
    own_type[agent.type_slot] = 1.0
    feats.extend(own_type)

    n_actions = action_space_size(n_e, n_b)
    for j, ally in enumerate(world.allies):
        if j == agent_idx:
            continue
        visible = bool(vis[agent_idx, j]) and ally.alive
        feats.extend(
            _entity_block(
                agent, world, visible, ally.x, ally.y, ally.health,
                ally.spec.max_health, ally.type_slot,
            )
        )
        last = [0.0] * n_actions
        if visible and ally.last_action is not None:
            last[ally.last_action] = 1.0
        feats.extend(last)

    for k, enemy in enumerate(world.enemies):
        visible = bool(vis[agent_idx, n_a + k]) and enemy.alive
        feats.extend(
            _entity_block(
                agent, world, visible, enemy.x, enemy.y, enemy.health,
                enemy.spec.max_health, enemy.type_slot,
            )
        )

    for m, b in enumerate(world.buildings):
        visible = bool(vis[agent_idx, n_a + n_e + m]) and b.alive
        bx, by = b.center()
        feats.extend(
            _entity_block(agent, world, visible, bx, by, b.health, b.max_health, b.type_slot)
        )

    out = np.asarray(feats, dtype=np.float64)
    assert out.size == total
    return out


def observe_all(world: WorldState, config: PerceptionConfig | None = None) -> np.ndarray:
    config = config or PerceptionConfig()
    vis = visibility(world)
    vis = communicate(vis, world, config)
    return np.stack([observe(world, vis, i) for i in range(len(world.allies))])


def global_state(world: WorldState, config: PerceptionConfig | None = None,
                 obs: np.ndarray | None = None) -> np.ndarray:
    """Training-side state vector: concatenated observations by default,
    or the compact classic table layout when state_mode is 'smac'."""
    config = config or PerceptionConfig()
    if config.state_mode == "concat":
        if obs is None:
            obs = observe_all(world, config)
        return obs.reshape(-1)
    if config.state_mode != "smac":
        raise ValueError(f"unknown state mode {config.state_mode!r}")
    n_e = len(world.enemies)
    half_w = world.terrain.width / 2.0
    half_h = world.terrain.height / 2.0
    cx = world.terrain.width / 2.0
    cy = world.terrain.height / 2.0
    feats: list[float] = []
    last_dim = SMAC_BASIC_ACTIONS + n_e
    for u in world.allies:
        block = [0.0] * (4 + NUM_TYPE_SLOTS + last_dim)
        if u.alive:
            block[0] = u.health / u.spec.max_health
            block[1] = u.cooldown_remaining / max(u.spec.cooldown_ticks, 1)
            block[2] = (u.x - cx) / half_w
            block[3] = (u.y - cy) / half_h
            block[4 + u.type_slot] = 1.0
            la = u.last_action
            if la is not None:
                # classic 6-slot encoding: moves, no-op, stop, then attacks
                if la < SMAC_BASIC_ACTIONS:
                    block[4 + NUM_TYPE_SLOTS + la] = 1.0
                elif la >= NUM_BASIC_ACTIONS and la < NUM_BASIC_ACTIONS + n_e:
                    block[4 + NUM_TYPE_SLOTS + SMAC_BASIC_ACTIONS + (la - NUM_BASIC_ACTIONS)] = 1.0
        feats.extend(block)
    for u in world.enemies:
        block = [0.0] * (3 + NUM_TYPE_SLOTS)
        if u.alive:
            block[0] = u.health / u.spec.max_health
            block[1] = (u.x - cx) / half_w
            block[2] = (u.y - cy) / half_h
            block[3 + u.type_slot] = 1.0
        feats.extend(block)
    return np.asarray(feats, dtype=np.float64)
