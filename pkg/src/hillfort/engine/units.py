"""Unit archetypes, their combat statistics, and per-unit mutable state."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

# Attribute tags drive the enhanced-fire lookup.
MACHINERY = "machinery"
HEAVY_ARMOR = "heavy_armor"

MARINE = "Marine"
MARAUDER = "Marauder"
TANK = "Tank"
SIEGE_TANK = "SiegeTank"

ARCHETYPES = (MARINE, MARAUDER, TANK, SIEGE_TANK)

# Supply costs used for roster bookkeeping.
SUPPLY = {MARINE: 1, MARAUDER: 2, TANK: 3, SIEGE_TANK: 3}

# One-hot slots for entity typing in observations: the four troop types,
# the sieged variant, and the three neutral building types.
TYPE_SLOTS = (
    MARINE,
    MARAUDER,
    TANK,
    SIEGE_TANK,
    "SiegeTankSieged",
    "tree",
    "stone",
    "wall",
)
NUM_TYPE_SLOTS = len(TYPE_SLOTS)

BUILDING_TYPES = ("tree", "stone", "wall")


@dataclass(frozen=True)
class UnitSpec:
    """Static combat numbers for one archetype."""

    archetype: str
    max_health: float
    shooting_range: float
    sight_range: float
    fire_power: float
    enhanced_fire_power: float
    enhanced_vs: frozenset
    attributes: frozenset
    cooldown_ticks: int
    move_step: float
    comm_range: float
    siege_shooting_range: float = 0.0
    splash_radius: float = 0.0

    @property
    def can_siege(self) -> bool:
        return self.archetype == SIEGE_TANK


def _spec(**kw) -> UnitSpec:
    kw["enhanced_vs"] = frozenset(kw.get("enhanced_vs", ()))
    kw["attributes"] = frozenset(kw.get("attributes", ()))
    return UnitSpec(**kw)


# Fire-power and range table.  Sight is 9 across the board; the sieged
# turret is the one weapon that can shoot past its own sight.
UNIT_SPECS: dict[str, UnitSpec] = {
    MARINE: _spec(
        archetype=MARINE,
        max_health=45.0,
        shooting_range=6.0,
        sight_range=9.0,
        fire_power=6.0,
        enhanced_fire_power=6.0,
        enhanced_vs=(),
        attributes=(),
        cooldown_ticks=8,
        move_step=1.0,
        comm_range=12.0,
    ),
    MARAUDER: _spec(
        archetype=MARAUDER,
        max_health=125.0,
        shooting_range=7.0,
        sight_range=9.0,
        fire_power=10.0,
        enhanced_fire_power=30.0,
        enhanced_vs=(MACHINERY,),
        attributes=(HEAVY_ARMOR,),
        cooldown_ticks=12,
        move_step=0.9,
        comm_range=12.0,
    ),
    TANK: _spec(
        archetype=TANK,
        max_health=160.0,
        shooting_range=8.0,
        sight_range=9.0,
        fire_power=15.0,
        enhanced_fire_power=25.0,
        enhanced_vs=(HEAVY_ARMOR,),
        attributes=(MACHINERY, HEAVY_ARMOR),
        cooldown_ticks=15,
        move_step=0.8,
        comm_range=12.0,
    ),
    SIEGE_TANK: _spec(
        archetype=SIEGE_TANK,
        max_health=175.0,
        shooting_range=7.0,
        sight_range=9.0,
        fire_power=5.0,
        enhanced_fire_power=10.0,
        enhanced_vs=(HEAVY_ARMOR,),
        attributes=(MACHINERY, HEAVY_ARMOR),
        cooldown_ticks=25,
        move_step=0.8,
        comm_range=16.0,
        siege_shooting_range=17.0,
        splash_radius=1.25,
    ),
}


@dataclass
class UnitState:
    """Mutable battlefield state of one unit."""

    uid: int
    team: int  # 0 allies, 1 enemies
    spec: UnitSpec
    x: float
    y: float
    health: float
    cooldown_remaining: int = 0
    sieged: bool = False
    last_action: int | None = None
    death_logged: bool = False

    @property
    def alive(self) -> bool:
        return self.health > 0.0

    @property
    def shooting_range(self) -> float:
        if self.sieged:
            return self.spec.siege_shooting_range
        return self.spec.shooting_range

    @property
    def type_slot(self) -> int:
        if self.spec.archetype == SIEGE_TANK and self.sieged:
            return TYPE_SLOTS.index("SiegeTankSieged")
        return TYPE_SLOTS.index(self.spec.archetype)

    def cell(self) -> tuple[int, int]:
        return int(self.x), int(self.y)


@dataclass
class Building:
    """Neutral destructible obstacle occupying a rectangle of cells."""

    bid: int
    kind: str  # tree | stone | wall
    x0: int
    y0: int
    width: int
    height: int
    health: float
    max_health: float
    blocks_sight: bool = True
    death_logged: bool = False

    @property
    def alive(self) -> bool:
        return self.health > 0.0

    @property
    def type_slot(self) -> int:
        return TYPE_SLOTS.index(self.kind)

    def cells(self):
        for dx in range(self.width):
            for dy in range(self.height):
                yield (self.x0 + dx, self.y0 + dy)

    def center(self) -> tuple[float, float]:
        return self.x0 + self.width / 2.0, self.y0 + self.height / 2.0

    def copy(self) -> "Building":
        return replace(self)
