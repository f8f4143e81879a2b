"""Combat engine: units, terrain, tick resolution, outcomes."""

import numpy as np
import pytest

from hillfort.engine import (
    ACT_EAST,
    ACT_NOOP,
    ACT_NORTH,
    ACT_SKILL,
    ACT_SOUTH,
    ACT_STOP,
    ACT_WEST,
    Building,
    IllegalActionError,
    TerrainGrid,
    UnitState,
    WorldState,
    action_space_size,
    damage,
    hit_probability,
    legal_actions,
    outcome,
    scripted_enemy_policy,
    sight_blocked,
    step,
)
from hillfort.engine.units import HEAVY_ARMOR, MACHINERY, UNIT_SPECS
from hillfort.scenarios import build_world, load_scenario


def flat_world(allies, enemies, buildings=(), width=20, height=20, limit=100, seed=0):
    terrain = TerrainGrid(width, height)
    ally_units = [
        UnitState(uid=i, team=0, spec=UNIT_SPECS[a], x=x, y=y, health=UNIT_SPECS[a].max_health)
        for i, (a, x, y) in enumerate(allies)
    ]
    enemy_units = [
        UnitState(uid=100 + i, team=1, spec=UNIT_SPECS[a], x=x, y=y, health=UNIT_SPECS[a].max_health)
        for i, (a, x, y) in enumerate(enemies)
    ]
    return WorldState(
        terrain=terrain,
        allies=ally_units,
        enemies=enemy_units,
        buildings=list(buildings),
        rng=np.random.default_rng(seed),
        episode_limit=limit,
    )


def hits_by(events, attacker_uid):
    return [e for e in events if e["type"] == "hit" and e["attacker"] == attacker_uid]


class TestSpecs:
    def test_ranges_table(self):
        assert (UNIT_SPECS["Marine"].shooting_range, UNIT_SPECS["Marine"].sight_range) == (6, 9)
        assert (UNIT_SPECS["Marauder"].shooting_range, UNIT_SPECS["Marauder"].sight_range) == (7, 9)
        assert (UNIT_SPECS["Tank"].shooting_range, UNIT_SPECS["Tank"].sight_range) == (8, 9)
        assert UNIT_SPECS["SiegeTank"].siege_shooting_range == 17
        assert UNIT_SPECS["SiegeTank"].sight_range == 9

    def test_fire_power_table(self):
        # all eight (archetype, target-attribute) combinations
        marine = UNIT_SPECS["Marine"]
        marauder = UNIT_SPECS["Marauder"]
        tank = UNIT_SPECS["Tank"]
        siege = UNIT_SPECS["SiegeTank"]
        plain = frozenset()
        assert damage(marine, plain) == 6
        assert damage(marine, frozenset({MACHINERY, HEAVY_ARMOR})) == 6
        assert damage(marauder, plain) == 10
        assert damage(marauder, frozenset({MACHINERY})) == 30
        assert damage(tank, plain) == 15
        assert damage(tank, frozenset({HEAVY_ARMOR})) == 25
        assert damage(siege, plain) == 5
        assert damage(siege, frozenset({HEAVY_ARMOR})) == 10

    def test_attribute_tags(self):
        assert HEAVY_ARMOR in UNIT_SPECS["Marauder"].attributes
        assert MACHINERY in UNIT_SPECS["Tank"].attributes
        assert HEAVY_ARMOR in UNIT_SPECS["Tank"].attributes
        assert not UNIT_SPECS["Marine"].attributes


class TestActionSpace:
    def test_formula(self):
        assert action_space_size(7, 0) == 14
        assert action_space_size(0, 0) == 7
        assert action_space_size(9, 4) == 20


class TestHitProbability:
    def test_table(self):
        assert hit_probability(1, 0) == 1.0
        assert hit_probability(0, 1) == 0.5
        assert hit_probability(0, 0) == 1.0
        assert hit_probability(1, 1) == 1.0


class TestLegalActions:
    def test_dead_agent_noop_only(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 10, 10)])
        w.allies[0].health = 0.0
        mask = legal_actions(w, w.allies[0])
        expected = np.zeros(action_space_size(1, 0))
        expected[ACT_NOOP] = 1
        np.testing.assert_array_equal(mask, expected)

    def test_attack_range_boundary(self):
        w = flat_world([("Marine", 2.0, 2.0)], [("Marine", 8.5, 2.0)])
        mask = legal_actions(w, w.allies[0])
        assert mask[7] == 0  # distance 6.5 > range 6
        w.enemies[0].x = 7.9
        mask = legal_actions(w, w.allies[0])
        assert mask[7] == 1

    def test_sieged_tank_cannot_move(self):
        w = flat_world([("SiegeTank", 5, 5)], [("Marine", 15, 15)])
        w.allies[0].sieged = True
        mask = legal_actions(w, w.allies[0])
        assert mask[ACT_NORTH] == mask[ACT_SOUTH] == mask[ACT_EAST] == mask[ACT_WEST] == 0
        assert mask[ACT_STOP] == 1

    def test_siege_range_switch(self):
        w = flat_world([("SiegeTank", 2, 2)], [("Marine", 14, 2)])
        assert legal_actions(w, w.allies[0])[7] == 0  # 12 > 7 unsieged
        w.allies[0].sieged = True
        assert legal_actions(w, w.allies[0])[7] == 1  # 12 <= 17 sieged

    def test_impassable_blocks_move(self):
        w = flat_world([("Marine", 1.5, 1.5)], [("Marine", 15, 15)])
        w.terrain.fill_impassable(0, 2, 4, 3)
        mask = legal_actions(w, w.allies[0])
        assert mask[ACT_NORTH] == 0  # the strip just above is blocked
        assert mask[ACT_EAST] == 1

    def test_map_edge_blocks_move(self):
        w = flat_world([("Marine", 0.5, 0.5)], [("Marine", 15, 15)])
        mask = legal_actions(w, w.allies[0])
        assert mask[ACT_SOUTH] == 0
        assert mask[ACT_WEST] == 0


class TestStep:
    def test_null_step_changes_only_tick(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 18, 18)])
        before = [(u.x, u.y, u.health) for u in w.all_units()]
        events = step(w, [ACT_STOP])
        after = [(u.x, u.y, u.health) for u in w.all_units()]
        assert w.tick == 1
        assert before == after
        assert not [e for e in events if e["type"] == "hit"]

    def test_illegal_action_raises(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 18, 18)])
        with pytest.raises(IllegalActionError):
            step(w, [ACT_NOOP])  # living agents may not no-op

    def test_wrong_arity_raises(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 18, 18)])
        with pytest.raises(IllegalActionError):
            step(w, [ACT_STOP, ACT_STOP])

    def test_equal_ground_damage_oracle(self):
        w = flat_world([("Marauder", 2, 2)], [("Tank", 6, 2)])
        w.enemies[0].health = 100.0
        step(w, [7])
        assert w.enemies[0].health == 70.0  # enhanced 30 vs machinery, sure hit

    def test_monte_carlo_uphill_hit_rate(self):
        # low -> high: empirical hit rate close to one half
        trials = 10_000
        hits = 0
        w = flat_world([("Marine", 4, 2)], [("Marine", 8, 2)], seed=123)
        w.terrain.fill_elevation(7, 0, 20, 20, 1)
        ally, enemy = w.allies[0], w.enemies[0]
        for _ in range(trials):
            ally.health = ally.spec.max_health
            enemy.health = enemy.spec.max_health
            ally.cooldown_remaining = 0
            events = step(w, [7])
            if hits_by(events, ally.uid):
                hits += 1
        rate = hits / trials
        assert 0.48 <= rate <= 0.52, rate

    def test_downhill_always_hits(self):
        w = flat_world([("Marine", 4, 2)], [("Marine", 8, 2)], seed=7)
        w.terrain.fill_elevation(0, 0, 6, 20, 1)  # attacker on the hill
        ally, enemy = w.allies[0], w.enemies[0]
        hits = 0
        for _ in range(200):
            ally.health = ally.spec.max_health
            enemy.health = enemy.spec.max_health
            ally.cooldown_remaining = 0
            events = step(w, [7])
            hits += bool(hits_by(events, ally.uid))
        assert hits == 200

    def test_cooldown_gates_attacks(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 6, 2)])
        step(w, [7])
        h_after_first = w.enemies[0].health
        assert h_after_first == 45.0 - 6.0
        # the post-step decay has already ticked once
        assert w.allies[0].cooldown_remaining == UNIT_SPECS["Marine"].cooldown_ticks - 1
        step(w, [7])  # still cooling down; the attack resolves to nothing
        assert w.enemies[0].health == h_after_first

    def test_health_never_negative_and_conservation(self):
        w = flat_world([("Tank", 2, 2), ("Tank", 3, 2)], [("Marine", 8, 2)], seed=5)
        w.enemies[0].health = 20.0
        total_damage = 0.0
        start_health = sum(u.health for u in w.all_units())
        for _ in range(30):
            acts = []
            for u in w.allies:
                if not u.alive:
                    acts.append(ACT_NOOP)
                    continue
                mask = legal_actions(w, u)
                acts.append(7 if mask[7] else ACT_STOP)
            events = step(w, acts)
            total_damage += sum(e["amount"] for e in events if e["type"] == "hit")
            assert all(u.health >= 0 for u in w.all_units())
        end_health = sum(u.health for u in w.all_units())
        assert total_damage == pytest.approx(start_health - end_health)

    def test_dead_units_deal_no_damage(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 6, 2)])
        w.allies[0].health = 0.0
        step(w, [ACT_NOOP])
        assert w.enemies[0].health == 45.0

    def test_movement_directions(self):
        w = flat_world([("Marine", 10, 10)], [("Marine", 18, 2)])
        step(w, [ACT_NORTH])
        assert (w.allies[0].x, w.allies[0].y) == (10.0, 11.0)
        step(w, [ACT_EAST])
        assert (w.allies[0].x, w.allies[0].y) == (11.0, 11.0)
        step(w, [ACT_SOUTH])
        step(w, [ACT_WEST])
        assert (w.allies[0].x, w.allies[0].y) == (10.0, 10.0)

    def test_collision_rejected(self):
        w = flat_world([("Marine", 10.5, 10.5), ("Marine", 11.5, 10.5)], [("Marine", 18, 2)])
        events = step(w, [ACT_EAST, ACT_STOP])
        assert (w.allies[0].x, w.allies[0].y) == (10.5, 10.5)
        assert any(e["type"] == "move_blocked" for e in events)

    def test_sieged_position_fixed(self):
        w = flat_world([("SiegeTank", 5.5, 5.5)], [("Marine", 18, 18)])
        step(w, [ACT_SKILL])
        assert w.allies[0].sieged
        pos = (w.allies[0].x, w.allies[0].y)
        for _ in range(3):
            step(w, [ACT_STOP])
        assert (w.allies[0].x, w.allies[0].y) == pos
        step(w, [ACT_SKILL])
        assert not w.allies[0].sieged

    def test_siege_extends_range_and_splashes(self):
        w = flat_world(
            [("SiegeTank", 2, 2)],
            [("Marine", 14.0, 2.0), ("Marine", 14.8, 2.0), ("Marine", 17.0, 2.0)],
        )
        step(w, [ACT_SKILL])
        events = step(w, [7])  # range 17 while sieged
        hit_uids = {e["target"] for e in hits_by(events, 0)}
        assert 100 in hit_uids and 101 in hit_uids  # primary plus splash neighbor
        assert 102 not in hit_uids  # outside splash radius 1.25
        assert w.enemies[0].health == 45.0 - 5.0
        assert w.enemies[1].health == 45.0 - 5.0

    def test_skill_aliases_stop_for_other_units(self):
        w = flat_world([("Marine", 5, 5)], [("Marine", 18, 18)])
        events = step(w, [ACT_SKILL])
        assert not w.allies[0].sieged
        assert (w.allies[0].x, w.allies[0].y) == (5.0, 5.0)
        assert not [e for e in events if e["type"] == "hit"]

    def test_building_attack_always_lands(self):
        b = Building(bid=0, kind="wall", x0=8, y0=1, width=2, height=2, health=50.0, max_health=50.0)
        w = flat_world([("Marine", 4, 2)], [("Marine", 30, 30)], buildings=[b], width=32, height=32)
        w.terrain.fill_elevation(7, 0, 32, 32, 1)  # building uphill; still a sure hit
        n_actions = action_space_size(1, 1)
        for _ in range(3):
            w.allies[0].cooldown_remaining = 0
            step(w, [n_actions - 1])
        assert b.health == 50.0 - 3 * 6.0

    def test_destroyed_building_stops_blocking_sight(self):
        b = Building(bid=0, kind="wall", x0=9, y0=1, width=1, height=3, health=6.0, max_health=6.0)
        w = flat_world([("Marine", 4, 2)], [("Marine", 14, 2)], buildings=[b], width=32, height=32)
        assert sight_blocked(w, 4, 2, 14, 2)
        w.allies[0].cooldown_remaining = 0
        step(w, [8])  # building slot right after the single enemy slot
        assert b.health == 0.0
        assert not sight_blocked(w, 4, 2, 14, 2)


class TestOutcome:
    def test_win_loss_timeout(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 18, 18)], limit=3)
        assert outcome(w) == "ongoing"
        w.enemies[0].health = 0.0
        assert outcome(w) == "win"
        w.enemies[0].health = 10.0
        w.allies[0].health = 0.0
        assert outcome(w) == "loss"
        w.allies[0].health = 10.0
        w.tick = 3
        assert outcome(w) == "timeout"

    def test_simultaneous_annihilation_is_loss(self):
        w = flat_world([("Marine", 2, 2)], [("Marine", 18, 18)])
        w.allies[0].health = 0.0
        w.enemies[0].health = 0.0
        assert outcome(w) == "loss"


class TestDeterminism:
    def test_same_seed_same_trajectory(self):
        logs = []
        for _ in range(2):
            w = build_world(load_scenario("smoke_3v2"), seed=42)
            rng = np.random.default_rng(1)
            events_all = []
            for _ in range(40):
                acts = []
                for u in w.allies:
                    mask = legal_actions(w, u)
                    acts.append(int(rng.choice(np.flatnonzero(mask))))
                events_all.append(step(w, acts))
                if outcome(w) != "ongoing":
                    break
            logs.append(events_all)
        assert logs[0] == logs[1]


class TestScriptedEnemies:
    def test_approach_lane_when_nothing_visible(self):
        sc = load_scenario("def_infantry")
        w = build_world(sc, seed=0)
        for u in w.allies:  # nothing to see: pure lane traffic
            u.health = 0.0
        acts = scripted_enemy_policy(w)
        move_acts = {ACT_NORTH, ACT_SOUTH, ACT_EAST, ACT_WEST}
        assert all(a in move_acts or a == ACT_STOP for a in acts)
        assert any(a in move_acts for a in acts)

    def test_hold_mode_stops_when_nothing_visible(self):
        sc = load_scenario("off_near")
        w = build_world(sc, seed=0)
        for u in w.allies:
            u.health = 0.0
        acts = scripted_enemy_policy(w)
        for enemy, a in zip(w.enemies, acts):
            if enemy.spec.can_siege and not enemy.sieged:
                assert a == ACT_SKILL
            else:
                assert a == ACT_STOP

    def test_visible_ally_draws_attack_or_chase(self):
        w = flat_world([("Marine", 8, 2)], [("Marine", 12, 2)])
        acts = scripted_enemy_policy(w)
        assert acts[0] == 7  # in range 6 at distance 4: attack the only ally
        w2 = flat_world([("Marine", 4, 2)], [("Marine", 12, 2)])
        acts2 = scripted_enemy_policy(w2)
        assert acts2[0] == ACT_WEST  # visible at 8 > range 6: close the gap

    def test_dead_enemy_noops(self):
        w = flat_world([("Marine", 8, 2)], [("Marine", 12, 2)])
        w.enemies[0].health = 0.0
        assert scripted_enemy_policy(w) == [ACT_NOOP]
