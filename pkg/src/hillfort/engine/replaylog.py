"""Line-delimited replay records, one JSON object per tick.

The first line is a header carrying the scenario name and map extents so
downstream consumers (the occupancy heat-map) know the grid without the
scenario file.
"""

from __future__ import annotations

import json

from .world import WorldState


def header_record(scenario_name: str, world: WorldState) -> dict:
    return {
        "header": True,
        "scenario": scenario_name,
        "width": world.terrain.width,
        "height": world.terrain.height,
    }


def tick_record(world: WorldState, events: list[dict]) -> dict:
    units = []
    for u in world.all_units():
        units.append(
            [
                u.uid,
                u.team,
                round(u.x, 4),
                round(u.y, 4),
                round(u.health, 4),
                int(u.sieged),
                -1 if u.last_action is None else int(u.last_action),
            ]
        )
    return {"tick": world.tick, "units": units, "events": events}


class ReplayWriter:
    def __init__(self, path: str, scenario_name: str, world: WorldState):
        self._fh = open(path, "w", encoding="utf-8")
        self._write(header_record(scenario_name, world))

    def _write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def record_tick(self, world: WorldState, events: list[dict]) -> None:
        self._write(tick_record(world, events))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_replay(path: str):
    """Yield (header, records) where records is the list of tick dicts."""
    header = None
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("header"):
                header = obj
            else:
                records.append(obj)
    return header, records
