from .geometry import distance, segment_hits_cell, sight_blocked
from .terrain import TerrainGrid
from .units import (
    ARCHETYPES,
    BUILDING_TYPES,
    HEAVY_ARMOR,
    MACHINERY,
    MARAUDER,
    MARINE,
    NUM_TYPE_SLOTS,
    SIEGE_TANK,
    SUPPLY,
    TANK,
    TYPE_SLOTS,
    UNIT_SPECS,
    Building,
    UnitSpec,
    UnitState,
)
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
    IllegalActionError,
    WorldState,
    action_space_size,
    damage,
    hit_probability,
    legal_actions,
    move_legal,
    outcome,
    step,
)
from .scripted import EnemyBehavior, scripted_enemy_policy
from .replaylog import ReplayWriter, read_replay, tick_record
