"""Scenario catalogue: map layouts, rosters, scripted-side behavior.

Scenarios live in a small sectioned text format (see ``data/*.scn``):

    [meta]    name, category, episode_limit, supply_difference, distance_class
    [map]     width, height, plateau/impassable rectangles, building entries
    [allies]  unit = Archetype,x,y   (one line per unit)
    [enemies] unit = Archetype,x,y
    [behavior] mode, approach, formation, lane waypoint chains

Unknown sections or keys are rejected.  ``serialize`` produces canonical
text, so serialize(load(text)) is a normal form.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

from ..engine.scripted import EnemyBehavior
from ..engine.terrain import TerrainGrid
from ..engine.units import (
    ARCHETYPES,
    BUILDING_TYPES,
    SUPPLY,
    UNIT_SPECS,
    Building,
    UnitState,
)
from ..engine.world import WorldState


class ScenarioFormatError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    category: str  # defensive | offensive | fixture
    width: int = 32
    height: int = 32
    episode_limit: int = 200
    supply_difference: int = 0
    distance_class: str = "none"  # near | distant | complicated | none
    plateaus: list[tuple[int, int, int, int]] = field(default_factory=list)
    impassable: list[tuple[int, int, int, int]] = field(default_factory=list)
    buildings: list[tuple[str, int, int, int, int, float]] = field(default_factory=list)
    allies: list[tuple[str, float, float]] = field(default_factory=list)
    enemies: list[tuple[str, float, float]] = field(default_factory=list)
    mode: str = "approach"  # approach | hold
    approach: str = "none"  # one_sided | two_sided | none
    formation: str = "none"  # spread | gathered | none
    lanes: list[list[tuple[float, float]]] = field(default_factory=list)

    @property
    def n_agents(self) -> int:
        return len(self.allies)

    @property
    def n_enemies(self) -> int:
        return len(self.enemies)

    @property
    def n_buildings(self) -> int:
        return len(self.buildings)

    def roster_counts(self, side: str) -> dict[str, int]:
        units = self.allies if side == "allies" else self.enemies
        out: dict[str, int] = {}
        for archetype, _x, _y in units:
            out[archetype] = out.get(archetype, 0) + 1
        return out

    def supply_gap(self) -> int:
        a = sum(SUPPLY[t] for t, _x, _y in self.allies)
        e = sum(SUPPLY[t] for t, _x, _y in self.enemies)
        return a - e


# ---- parsing -------------------------------------------------------------

_SECTIONS = ("meta", "map", "allies", "enemies", "behavior")
_KEYS = {
    "meta": {"name", "category", "episode_limit", "supply_difference", "distance_class"},
    "map": {"width", "height", "plateau", "impassable", "building"},
    "allies": {"unit"},
    "enemies": {"unit"},
    "behavior": {"mode", "approach", "formation", "lane"},
}


def _num(tok: str) -> float:
    try:
        return float(tok)
    except ValueError as exc:
        raise ScenarioFormatError(f"bad number {tok!r}") from exc


def loads(text: str) -> Scenario:
    sc = Scenario(name="", category="fixture")
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ScenarioFormatError(f"line {lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise ScenarioFormatError(f"line {lineno}: content before any section")
        if "=" not in line:
            raise ScenarioFormatError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS[section]:
            raise ScenarioFormatError(f"line {lineno}: unknown key {key!r} in [{section}]")
        _apply(sc, section, key, value, lineno)
    if not sc.name:
        raise ScenarioFormatError("scenario has no meta.name")
    return sc


def _apply(sc: Scenario, section: str, key: str, value: str, lineno: int) -> None:
    if section == "meta":
        if key == "name":
            sc.name = value
        elif key == "category":
            if value not in ("defensive", "offensive", "fixture"):
                raise ScenarioFormatError(f"line {lineno}: bad category {value!r}")
            sc.category = value
        elif key == "episode_limit":
            sc.episode_limit = int(value)
        elif key == "supply_difference":
            sc.supply_difference = int(value)
        elif key == "distance_class":
            if value not in ("near", "distant", "complicated", "none"):
                raise ScenarioFormatError(f"line {lineno}: bad distance_class {value!r}")
            sc.distance_class = value
    elif section == "map":
        if key == "width":
            sc.width = int(value)
        elif key == "height":
            sc.height = int(value)
        elif key in ("plateau", "impassable"):
            parts = [int(_num(t)) for t in value.split(",")]
            if len(parts) != 4:
                raise ScenarioFormatError(f"line {lineno}: {key} needs x0,y0,x1,y1")
            getattr(sc, "plateaus" if key == "plateau" else "impassable").append(tuple(parts))
        elif key == "building":
            toks = [t.strip() for t in value.split(",")]
            if len(toks) != 6:
                raise ScenarioFormatError(f"line {lineno}: building needs kind,x,y,w,h,health")
            kind = toks[0]
            if kind not in BUILDING_TYPES:
                raise ScenarioFormatError(f"line {lineno}: unknown building kind {kind!r}")
            sc.buildings.append(
                (kind, int(_num(toks[1])), int(_num(toks[2])), int(_num(toks[3])),
                 int(_num(toks[4])), _num(toks[5]))
            )
    elif section in ("allies", "enemies"):
        toks = [t.strip() for t in value.split(",")]
        if len(toks) != 3:
            raise ScenarioFormatError(f"line {lineno}: unit needs Archetype,x,y")
        if toks[0] not in ARCHETYPES:
            raise ScenarioFormatError(f"line {lineno}: unknown archetype {toks[0]!r}")
        getattr(sc, section).append((toks[0], _num(toks[1]), _num(toks[2])))
    elif section == "behavior":
        if key == "mode":
            if value not in ("approach", "hold"):
                raise ScenarioFormatError(f"line {lineno}: bad mode {value!r}")
            sc.mode = value
        elif key == "approach":
            if value not in ("one_sided", "two_sided", "none"):
                raise ScenarioFormatError(f"line {lineno}: bad approach {value!r}")
            sc.approach = value
        elif key == "formation":
            if value not in ("spread", "gathered", "none"):
                raise ScenarioFormatError(f"line {lineno}: bad formation {value!r}")
            sc.formation = value
        elif key == "lane":
            lane = []
            for pair in value.split(";"):
                pair = pair.strip()
                if not pair:
                    continue
                xy = [t.strip() for t in pair.split(",")]
                if len(xy) != 2:
                    raise ScenarioFormatError(f"line {lineno}: lane waypoint needs x,y")
                lane.append((_num(xy[0]), _num(xy[1])))
            if not lane:
                raise ScenarioFormatError(f"line {lineno}: empty lane")
            sc.lanes.append(lane)


def _fmt(v: float) -> str:
    if float(v) == int(v):
        return str(int(v))
    return format(float(v), "g")


def serialize(sc: Scenario) -> str:
    """Canonical text form; stable section and key order."""
    lines = ["[meta]"]
    lines.append(f"name = {sc.name}")
    lines.append(f"category = {sc.category}")
    lines.append(f"episode_limit = {sc.episode_limit}")
    lines.append(f"supply_difference = {sc.supply_difference}")
    lines.append(f"distance_class = {sc.distance_class}")
    lines.append("")
    lines.append("[map]")
    lines.append(f"width = {sc.width}")
    lines.append(f"height = {sc.height}")
    for rect in sc.plateaus:
        lines.append("plateau = " + ",".join(str(v) for v in rect))
    for rect in sc.impassable:
        lines.append("impassable = " + ",".join(str(v) for v in rect))
    for kind, x, y, w, h, hp in sc.buildings:
        lines.append(f"building = {kind},{x},{y},{w},{h},{_fmt(hp)}")
    for side in ("allies", "enemies"):
        lines.append("")
        lines.append(f"[{side}]")
        for archetype, x, y in getattr(sc, side):
            lines.append(f"unit = {archetype},{_fmt(x)},{_fmt(y)}")
    lines.append("")
    lines.append("[behavior]")
    lines.append(f"mode = {sc.mode}")
    lines.append(f"approach = {sc.approach}")
    lines.append(f"formation = {sc.formation}")
    for lane in sc.lanes:
        lines.append("lane = " + "; ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in lane))
    return "\n".join(lines) + "\n"


# ---- validation ----------------------------------------------------------

# Canonical rosters for the named scenarios, as archetype counts.
_CANONICAL_ROSTERS = {
    "def_infantry": ({"Marauder": 1, "Marine": 4}, {"Marauder": 1, "Marine": 6}),
    "def_armored": (
        {"SiegeTank": 1, "Tank": 1, "Marauder": 1, "Marine": 5},
        {"Tank": 2, "Marauder": 2, "Marine": 9},
    ),
    "def_outnumbered": (
        {"SiegeTank": 1, "Tank": 1, "Marauder": 1, "Marine": 5},
        {"Tank": 2, "Marauder": 3, "Marine": 10},
    ),
    "off_near": (
        {"SiegeTank": 3, "Tank": 3, "Marauder": 3, "Marine": 4},
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
    ),
    "off_distant": (
        {"SiegeTank": 3, "Tank": 3, "Marauder": 3, "Marine": 4},
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
    ),
    "off_complicated": (
        {"SiegeTank": 3, "Tank": 3, "Marauder": 3, "Marine": 4},
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
    ),
    "off_hard": (
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
    ),
    "off_superhard": (
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
        {"SiegeTank": 1, "Tank": 2, "Marauder": 2, "Marine": 4},
    ),
}

_DEFENSIVE_SUPPLY = {-2, -6, -9}


def _build_terrain(sc: Scenario) -> TerrainGrid:
    terrain = TerrainGrid(sc.width, sc.height)
    for x0, y0, x1, y1 in sc.plateaus:
        terrain.fill_elevation(x0, y0, x1, y1, 1)
    for x0, y0, x1, y1 in sc.impassable:
        terrain.fill_impassable(x0, y0, x1, y1)
    return terrain


def validate(sc: Scenario) -> list[str]:
    """Return a list of violation strings; empty means the scenario is sound."""
    v: list[str] = []
    terrain = _build_terrain(sc)
    building_cells = set()
    for kind, x, y, w, h, hp in sc.buildings:
        if hp <= 0:
            v.append(f"building {kind} at ({x},{y}) has non-positive health")
        for dx in range(w):
            for dy in range(h):
                cell = (x + dx, y + dy)
                if not terrain.in_bounds(*cell):
                    v.append(f"building {kind} cell {cell} out of bounds")
                building_cells.add(cell)
    seen_cells: set[tuple[int, int]] = set()
    for side in ("allies", "enemies"):
        for archetype, x, y in getattr(sc, side):
            cell = (int(x), int(y))
            if not terrain.in_bounds(*cell):
                v.append(f"{side} {archetype} at ({x},{y}) out of bounds")
                continue
            if not terrain.passable[cell]:
                v.append(f"{side} {archetype} at ({x},{y}) on impassable cell")
            if cell in building_cells:
                v.append(f"{side} {archetype} at ({x},{y}) inside a building footprint")
            if cell in seen_cells:
                v.append(f"{side} {archetype} at ({x},{y}) shares a cell with another unit")
            seen_cells.add(cell)
    if sc.category == "defensive":
        for archetype, x, y in sc.allies:
            if terrain.elevation_at(x, y) != 1:
                v.append(f"defensive ally {archetype} at ({x},{y}) not on the plateau")
        if sc.supply_difference not in _DEFENSIVE_SUPPLY:
            v.append(f"defensive supply_difference {sc.supply_difference} not in {{-2,-6,-9}}")
        if sc.mode != "approach":
            v.append("defensive scenario without approach behavior")
        if not sc.lanes:
            v.append("approach behavior declared but no lanes")
    if sc.category == "offensive":
        for archetype, x, y in sc.allies:
            if terrain.elevation_at(x, y) != 0:
                v.append(f"offensive ally {archetype} at ({x},{y}) must start on the plain")
        for archetype, x, y in sc.enemies:
            if terrain.elevation_at(x, y) != 1:
                v.append(f"offensive enemy {archetype} at ({x},{y}) must start on the plateau")
        if sc.mode != "hold":
            v.append("offensive scenario without hold behavior")
    if sc.mode == "approach" and not sc.lanes:
        v.append("approach mode needs at least one lane")
    if sc.supply_difference != sc.supply_gap():
        v.append(
            f"supply_difference metadata {sc.supply_difference} "
            f"!= computed {sc.supply_gap()}"
        )
    if sc.name in _CANONICAL_ROSTERS:
        want_allies, want_enemies = _CANONICAL_ROSTERS[sc.name]
        if sc.roster_counts("allies") != want_allies:
            v.append(f"{sc.name} ally roster {sc.roster_counts('allies')} != canonical {want_allies}")
        if sc.roster_counts("enemies") != want_enemies:
            v.append(f"{sc.name} enemy roster {sc.roster_counts('enemies')} != canonical {want_enemies}")
    return v


# ---- world construction --------------------------------------------------

_BUILDING_BLOCKS_SIGHT = {"tree": True, "stone": True, "wall": True}


def build_world(sc: Scenario, seed: int = 0) -> WorldState:
    terrain = _build_terrain(sc)
    allies = []
    uid = 0
    for archetype, x, y in sc.allies:
        spec = UNIT_SPECS[archetype]
        allies.append(UnitState(uid=uid, team=0, spec=spec, x=x, y=y, health=spec.max_health))
        uid += 1
    enemies = []
    for archetype, x, y in sc.enemies:
        spec = UNIT_SPECS[archetype]
        enemies.append(UnitState(uid=uid, team=1, spec=spec, x=x, y=y, health=spec.max_health))
        uid += 1
    buildings = []
    for bid, (kind, x, y, w, h, hp) in enumerate(sc.buildings):
        buildings.append(
            Building(
                bid=bid, kind=kind, x0=x, y0=y, width=w, height=h,
                health=hp, max_health=hp,
                blocks_sight=_BUILDING_BLOCKS_SIGHT[kind],
            )
        )
    behavior = EnemyBehavior(mode=sc.mode, lanes=[list(l) for l in sc.lanes], formation=sc.formation)
    return WorldState(
        terrain=terrain,
        allies=allies,
        enemies=enemies,
        buildings=buildings,
        rng=np.random.default_rng(seed),
        episode_limit=sc.episode_limit,
        behavior=behavior,
    )


# ---- registry ------------------------------------------------------------

BUILTIN_NAMES = (
    "def_infantry",
    "def_armored",
    "def_outnumbered",
    "off_near",
    "off_distant",
    "off_complicated",
    "off_hard",
    "off_superhard",
    "smoke_3v2",
)

# Shipped alongside the built-ins but kept out of the canonical listing:
# cut-down variants used by fast end-to-end checks.
EXTRA_NAMES = ("off_distant_mini",)


def list_scenarios() -> tuple[str, ...]:
    return BUILTIN_NAMES


def load_scenario(name: str) -> Scenario:
    """Load a built-in by name, or any .scn path."""
    if name in BUILTIN_NAMES or name in EXTRA_NAMES:
        text = (
            importlib.resources.files("hillfort.scenarios")
            .joinpath(f"data/{name}.scn")
            .read_text(encoding="utf-8")
        )
    else:
        with open(name, "r", encoding="utf-8") as fh:
            text = fh.read()
    return loads(text)
