"""Harness behavior: config parsing, the training loop's metrics
contract, greedy evaluation, checkpoint reload, heat-maps, and the
command-line surface with its exit codes."""

import json
import os

import numpy as np
import pytest

from hillfort.engine.replaylog import read_replay
from hillfort.harness.cli import _apply_param, main
from hillfort.harness.config import ConfigError, RunConfig, load_config, parse_config
from hillfort.harness.evaluate import (
    EVAL_SEED_BASE,
    build_env,
    build_learner,
    evaluate,
    load_for_eval,
)
from hillfort.harness.heatmap import (
    collect_logs,
    emit_heatmaps,
    heatmap_counts,
    write_heatmap_csv,
)
from hillfort.harness.train import METRICS_HEADER, TrainingDiverged, train
from hillfort.autodiff import save_checkpoint
from hillfort.learners.qlearners import QLearner


def tiny_cfg(**overrides) -> RunConfig:
    """A seconds-scale run on the flat 3v2 map."""
    kw = dict(
        scenario="smoke_3v2",
        algo="iql",
        seed=3,
        mode="episodic",
        total_steps=220,
        hidden=16,
        batch_size=2,
        buffer_episodes=50,
        target_update_episodes=5,
        eval_interval=100,
        eval_episodes=2,
    )
    kw.update(overrides)
    cfg = RunConfig(**kw)
    cfg.validate()
    return cfg


TINY_CFG_TEXT = """\
scenario = smoke_3v2
algo = iql
seed = 3
train.total_steps = 220
train.hidden = 16
train.batch_size = 2
train.buffer_episodes = 50
train.target_update_episodes = 5
eval.interval = 100
eval.episodes = 2
"""


def read_metrics(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == METRICS_HEADER
    rows = []
    for line in lines[1:]:
        step_s, eps_s, ret_s, win_s, loss_s = line.split(",")
        rows.append(
            {
                "step": int(step_s),
                "episodes": int(eps_s),
                "train_return": float(ret_s) if ret_s else None,
                "eval_winrate": float(win_s) if win_s else None,
                "loss": float(loss_s) if loss_s else None,
            }
        )
    return rows


class TestConfigParsing:
    def test_empty_text_gives_defaults(self):
        cfg = parse_config("")
        assert cfg.scenario == "smoke_3v2"
        assert cfg.algo == "qmix"
        assert cfg.total_steps == 10_050_000
        assert cfg.lr == 5e-4
        assert cfg.buffer_episodes == 5000
        assert cfg.target_update_episodes == 200
        assert cfg.n_quantiles == 32
        assert cfg.reward.mode == "base"

    def test_dotted_keys_set_typed_attributes(self):
        cfg = parse_config(
            "scenario = off_near\n"
            "algo = dmix\n"
            "seed = 11\n"
            "mode = parallel\n"
            "train.total_steps = 5000\n"
            "train.gamma = 0.95\n"
            "train.lr = 0.001\n"
            "train.n_quantiles = 8\n"
            "comm.enabled = false\n"
            "comm.broadcast = on\n"
            "state.mode = smac\n"
            "risk.agent = neutral\n"
            "eval.interval = 2500\n"
        )
        assert cfg.scenario == "off_near"
        assert cfg.algo == "dmix"
        assert cfg.seed == 11 and isinstance(cfg.seed, int)
        assert cfg.mode == "parallel"
        assert cfg.total_steps == 5000
        assert cfg.gamma == 0.95
        assert cfg.lr == 0.001
        assert cfg.n_quantiles == 8
        assert cfg.comm_enabled is False
        assert cfg.comm_broadcast is True
        assert cfg.state_mode == "smac"
        assert cfg.agent_risk == "neutral"
        assert cfg.eval_interval == 2500

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# leading comment\n\nalgo = vdn  # trailing\n\n")
        assert cfg.algo == "vdn"

    def test_unknown_key_reports_line_number(self):
        with pytest.raises(ConfigError, match=r"line 2: unknown key 'bogus\.key'"):
            parse_config("algo = qmix\nbogus.key = 3\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="expected key = value"):
            parse_config("algo qmix\n")

    def test_knots_parse_and_schedule(self):
        cfg = parse_config(
            "epsilon.kind = piecewise\n"
            "epsilon.knots = 10000:0.1, 20000:0.08\n"
        )
        assert cfg.epsilon_knots == ((10000, 0.1), (20000, 0.08))
        sched = cfg.epsilon_schedule()
        assert sched.value(10_000) == pytest.approx(0.1)
        assert sched.value(0) == 1.0

    def test_bad_knot_entry_rejected(self):
        with pytest.raises(ConfigError, match="bad knot entry"):
            parse_config("epsilon.knots = 10000-0.1\n")

    def test_reward_keys_build_reward_config(self):
        cfg = parse_config(
            "reward.mode = switch\n"
            "reward.switch_step = 12345\n"
            "reward.kill_bonus = 7.5\n"
        )
        assert cfg.reward.mode == "switch"
        assert cfg.reward.switch_step == 12345
        assert cfg.reward.kill_bonus == 7.5
        # untouched fields keep their defaults
        assert cfg.reward.win_bonus == RunConfig().reward.win_bonus

    def test_validate_rejects_unknown_algo(self):
        with pytest.raises(ConfigError, match="unknown algorithm"):
            parse_config("algo = dqn\n")

    def test_validate_rejects_bad_mode_and_gamma(self):
        with pytest.raises(ConfigError, match="unknown mode"):
            parse_config("mode = async\n")
        with pytest.raises(ConfigError, match="gamma"):
            parse_config("train.gamma = 1.0\n")

    def test_increasing_epsilon_rejected(self):
        with pytest.raises(ValueError, match="must not increase"):
            parse_config("epsilon.start = 0.01\n")  # below the 0.05 end

    def test_load_config_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(TINY_CFG_TEXT, encoding="utf-8")
        cfg = load_config(str(path))
        assert cfg.total_steps == 220
        assert cfg.hidden == 16

    def test_resolved_runner_and_eval_counts(self):
        episodic = parse_config("mode = episodic\n")
        parallel = parse_config("mode = parallel\n")
        assert episodic.resolved_runners() == 1
        assert parallel.resolved_runners() == 20
        assert episodic.resolved_eval_episodes() == 32
        assert parallel.resolved_eval_episodes() == 20
        assert parse_config("train.runners = 3\n").resolved_runners() == 3
        assert parse_config("eval.episodes = 5\n").resolved_eval_episodes() == 5


class TestTrainLoop:
    def test_metrics_contract(self, tmp_path):
        out = str(tmp_path / "run")
        rows = train(tiny_cfg(), out)
        assert os.path.exists(os.path.join(out, "checkpoint.hfck"))
        parsed = read_metrics(os.path.join(out, "metrics.csv"))
        # returned rows and the file agree
        assert len(parsed) == len(rows)
        for file_row, mem_row in zip(parsed, rows):
            assert file_row == {k: mem_row[k] for k in file_row}
        steps = [r["step"] for r in parsed]
        assert steps == sorted(steps) and len(set(steps)) == len(steps)
        # a pre-training evaluation at step 0
        assert parsed[0]["step"] == 0
        assert parsed[0]["eval_winrate"] is not None
        assert parsed[0]["train_return"] is None
        # every eval boundary inside the run got a row at its exact stamp
        final = steps[-1]
        assert final >= 220
        for boundary in range(100, final + 1, 100):
            marked = [r for r in parsed if r["step"] == boundary]
            assert marked and marked[0]["eval_winrate"] is not None
        # every row is an episode row, an eval row, or a merged one
        assert all(r["train_return"] is not None or r["eval_winrate"] is not None for r in parsed)
        counts = [r["episodes"] for r in parsed]
        assert counts == sorted(counts)

    def test_zero_step_run_writes_header_and_checkpoint(self, tmp_path):
        out = str(tmp_path / "zero")
        rows = train(tiny_cfg(total_steps=0), out)
        assert rows == []
        with open(os.path.join(out, "metrics.csv"), "r", encoding="utf-8") as fh:
            assert fh.read() == METRICS_HEADER + "\n"
        assert os.path.exists(os.path.join(out, "checkpoint.hfck"))

    def test_loss_column_fills_once_buffer_suffices(self, tmp_path):
        out = str(tmp_path / "lossy")
        train(tiny_cfg(batch_size=1), out)
        parsed = read_metrics(os.path.join(out, "metrics.csv"))
        assert any(r["loss"] is not None for r in parsed)

    def test_same_seed_runs_are_bitwise_identical(self, tmp_path):
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        train(tiny_cfg(seed=5), out_a)
        train(tiny_cfg(seed=5), out_b)
        with open(os.path.join(out_a, "metrics.csv"), "rb") as fh:
            bytes_a = fh.read()
        with open(os.path.join(out_b, "metrics.csv"), "rb") as fh:
            bytes_b = fh.read()
        assert bytes_a == bytes_b
        with open(os.path.join(out_a, "checkpoint.hfck"), "rb") as fh:
            ck_a = fh.read()
        with open(os.path.join(out_b, "checkpoint.hfck"), "rb") as fh:
            ck_b = fh.read()
        assert ck_a == ck_b

    def test_different_seeds_differ(self, tmp_path):
        out_a = str(tmp_path / "s1")
        out_b = str(tmp_path / "s2")
        train(tiny_cfg(seed=1), out_a)
        train(tiny_cfg(seed=2), out_b)
        with open(os.path.join(out_a, "metrics.csv"), "rb") as fh:
            bytes_a = fh.read()
        with open(os.path.join(out_b, "metrics.csv"), "rb") as fh:
            bytes_b = fh.read()
        assert bytes_a != bytes_b

    def test_divergence_writes_diagnostic_then_raises(self, tmp_path, monkeypatch):
        out = str(tmp_path / "diverged")
        monkeypatch.setattr(QLearner, "update", lambda self, batch: float("nan"))
        with pytest.raises(TrainingDiverged, match="nan"):
            train(tiny_cfg(batch_size=1), out)
        with open(os.path.join(out, "diagnostic.json"), "r", encoding="utf-8") as fh:
            diag = json.load(fh)
        assert diag["reason"] == "non-finite loss"
        assert diag["algo"] == "iql"
        assert isinstance(diag["step"], int)
        # the partial run still left a checkpoint and readable metrics
        assert os.path.exists(os.path.join(out, "checkpoint.hfck"))
        read_metrics(os.path.join(out, "metrics.csv"))


@pytest.fixture(scope="module")
def learner_env():
    cfg = tiny_cfg()
    env = build_env(cfg)
    return build_learner(cfg, env), env


class TestEvaluate:
    def test_rejects_nonpositive_episode_counts(self, learner_env):
        learner, env = learner_env
        with pytest.raises(ValueError):
            evaluate(learner, env, 0)
        with pytest.raises(ValueError):
            evaluate(learner, env, -3)

    def test_fixed_seeds_make_evaluation_repeatable(self, learner_env):
        learner, env = learner_env
        first = evaluate(learner, env, 4)
        second = evaluate(learner, env, 4)
        assert first["returns"] == second["returns"]
        assert first["win_rate"] == second["win_rate"]

    def test_result_bookkeeping(self, learner_env):
        learner, env = learner_env
        result = evaluate(learner, env, 3, seed_base=EVAL_SEED_BASE + 50)
        assert result["episodes"] == 3
        assert len(result["returns"]) == 3
        assert result["win_rate"] == result["wins"] / 3

    def test_replay_logs_written_per_episode(self, learner_env, tmp_path):
        learner, env = learner_env
        replay_dir = str(tmp_path / "replays")
        evaluate(learner, env, 2, replay_dir=replay_dir)
        paths = collect_logs(replay_dir)
        assert [os.path.basename(p) for p in paths] == ["eval_000.jsonl", "eval_001.jsonl"]
        header, records = read_replay(paths[0])
        assert header["header"] is True
        assert header["scenario"] == "smoke_3v2"
        assert header["width"] == 16 and header["height"] == 16
        assert records, "at least one tick recorded"
        for entry in records[0]["units"]:
            assert len(entry) == 7


class TestCheckpointRoundtrip:
    def test_saved_parameters_restore_exactly(self, tmp_path):
        cfg = tiny_cfg(algo="qmix", mixing_embed=8)
        env = build_env(cfg)
        learner = build_learner(cfg, env)
        path = str(tmp_path / "ck.hfck")
        save_checkpoint(path, learner.checkpoint_tensors())
        restored, _ = load_for_eval(path, cfg)
        saved = learner.checkpoint_tensors()
        loaded = restored.checkpoint_tensors()
        assert set(saved) == set(loaded)
        for name in saved:
            np.testing.assert_array_equal(saved[name], loaded[name])

    def test_restored_learner_evaluates_identically(self, tmp_path):
        cfg = tiny_cfg()
        out = str(tmp_path / "run")
        train(cfg, out)
        learner_a, env_a = load_for_eval(os.path.join(out, "checkpoint.hfck"), cfg)
        learner_b, env_b = load_for_eval(os.path.join(out, "checkpoint.hfck"), cfg)
        res_a = evaluate(learner_a, env_a, 3)
        res_b = evaluate(learner_b, env_b, 3)
        assert res_a["returns"] == res_b["returns"]

    def test_shape_mismatch_is_a_load_error(self, tmp_path):
        cfg = tiny_cfg()
        env = build_env(cfg)
        learner = build_learner(cfg, env)
        path = str(tmp_path / "ck.hfck")
        save_checkpoint(path, learner.checkpoint_tensors())
        wider = tiny_cfg(hidden=24)
        with pytest.raises(ValueError):
            load_for_eval(path, wider)


def _write_log(path, header, ticks):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for tick_idx, units in enumerate(ticks):
            fh.write(json.dumps({"tick": tick_idx, "units": units, "events": []}) + "\n")


HEADER_5X4 = {"header": True, "scenario": "synthetic", "width": 5, "height": 4}


class TestHeatmap:
    def test_counts_conserve_living_ally_ticks(self, tmp_path):
        # 3 ticks: two allies alive, one enemy, and an ally that dies
        ticks = [
            [[0, 0, 1.2, 1.8, 45.0, 0, 0], [1, 0, 3.5, 0.5, 45.0, 0, 0], [2, 1, 4.0, 3.0, 45.0, 0, 0]],
            [[0, 0, 1.2, 1.8, 30.0, 0, 2], [1, 0, 3.5, 0.5, 0.0, 0, 3], [2, 1, 4.0, 3.0, 45.0, 0, 0]],
            [[0, 0, 2.2, 1.8, 30.0, 0, 2], [2, 1, 4.0, 3.0, 45.0, 0, 0]],
        ]
        path = str(tmp_path / "one.jsonl")
        _write_log(path, HEADER_5X4, ticks)
        counts = heatmap_counts([path])
        assert counts.shape == (4, 5)
        # living allies: 2 on tick 0, 1 on tick 1 (uid 1 died), 1 on tick 2
        assert counts.sum() == 4
        assert counts[1, 1] == 2  # uid 0 at (1.2, 1.8) twice
        assert counts[0, 3] == 1  # uid 1 before dying
        assert counts[1, 2] == 1  # uid 0 after moving

    def test_stationary_unit_accumulates_in_one_cell(self, tmp_path):
        ticks = [[[0, 0, 2.3, 1.7, 45.0, 0, 0]] for _ in range(6)]
        path = str(tmp_path / "still.jsonl")
        _write_log(path, HEADER_5X4, ticks)
        counts = heatmap_counts([path])
        assert counts[1, 2] == 6
        assert counts.sum() == 6

    def test_positions_clamp_to_grid(self, tmp_path):
        ticks = [[[0, 0, 10.0, -3.0, 45.0, 0, 0]]]
        path = str(tmp_path / "edge.jsonl")
        _write_log(path, HEADER_5X4, ticks)
        counts = heatmap_counts([path])
        assert counts[0, 4] == 1

    def test_multiple_logs_sum(self, tmp_path):
        for name in ("a.jsonl", "b.jsonl"):
            _write_log(
                str(tmp_path / name),
                HEADER_5X4,
                [[[0, 0, 0.5, 0.5, 45.0, 0, 0]]],
            )
        counts = heatmap_counts(collect_logs(str(tmp_path)))
        assert counts[0, 0] == 2

    def test_explicit_dims_allow_empty_input(self):
        counts = heatmap_counts([], width=5, height=4)
        assert counts.shape == (4, 5)
        assert counts.sum() == 0

    def test_no_logs_and_no_dims_rejected(self):
        with pytest.raises(ValueError):
            heatmap_counts([])

    def test_collect_logs_sorted(self, tmp_path):
        for name in ("b.jsonl", "a.jsonl", "ignored.txt"):
            (tmp_path / name).write_text("", encoding="utf-8")
        names = [os.path.basename(p) for p in collect_logs(str(tmp_path))]
        assert names == ["a.jsonl", "b.jsonl"]

    def test_csv_layout_counts_blank_density(self, tmp_path):
        counts = np.array([[2, 0], [0, 2]], dtype=np.int64)
        out = str(tmp_path / "heat.csv")
        write_heatmap_csv(counts, out)
        with open(out, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "2,0"
        assert lines[1] == "0,2"
        assert lines[2] == ""
        density = np.array([[float(v) for v in line.split(",")] for line in lines[3:]])
        assert density.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(density, counts / 4.0)

    def test_zero_counts_density_has_no_nan(self, tmp_path):
        out = str(tmp_path / "flatline.csv")
        write_heatmap_csv(np.zeros((2, 2), dtype=np.int64), out)
        with open(out, "r", encoding="utf-8") as fh:
            body = fh.read()
        assert "nan" not in body.lower()

    def test_emit_pair_with_late_suffix(self, tmp_path):
        early = tmp_path / "early"
        late = tmp_path / "late"
        early.mkdir()
        late.mkdir()
        _write_log(str(early / "e.jsonl"), HEADER_5X4, [[[0, 0, 0.5, 0.5, 45.0, 0, 0]]])
        _write_log(str(late / "l.jsonl"), HEADER_5X4, [[[0, 0, 4.5, 3.5, 45.0, 0, 0]]])
        out = str(tmp_path / "occupancy.csv")
        written = emit_heatmaps(str(early), out, str(late))
        assert written == [out, str(tmp_path / "occupancy_late.csv")]
        for path in written:
            assert os.path.exists(path)


class TestCli:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["train", "--config", "x", "--bogus"]) == 1

    def test_scenarios_list(self, capsys):
        assert main(["scenarios", "list"]) == 0
        out = capsys.readouterr().out
        assert "smoke_3v2: 3 allies vs 2 enemies" in out
        assert "off_distant" in out

    def test_scenarios_validate_all_clean(self, capsys):
        assert main(["scenarios", "validate"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out and all(line.endswith(": ok") for line in out)
        assert any(line.startswith("off_distant_mini") for line in out)

    def test_train_eval_cycle(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(TINY_CFG_TEXT, encoding="utf-8")
        out = str(tmp_path / "run")
        assert main(["train", "--config", str(cfg_path), "--out", out]) == 0
        stdout = capsys.readouterr().out
        assert "trained iql on smoke_3v2: final win-rate" in stdout
        assert os.path.join(out, "metrics.csv") in stdout
        assert os.path.exists(os.path.join(out, "metrics.csv"))

        code = main(
            [
                "eval",
                "--ckpt", os.path.join(out, "checkpoint.hfck"),
                "--scenario", "smoke_3v2",
                "--algo", "iql",
                "--config", str(cfg_path),
                "--episodes", "2",
            ]
        )
        assert code == 0
        assert "win-rate" in capsys.readouterr().out

    def test_train_malformed_config_exits_1(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text("bogus.key = 1\n", encoding="utf-8")
        assert main(["train", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_train_unknown_scenario_exits_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(TINY_CFG_TEXT + "scenario = nosuch\n", encoding="utf-8")
        assert main(["train", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err

    def test_eval_missing_checkpoint_exits_2(self, capsys):
        code = main(
            [
                "eval",
                "--ckpt", "/nonexistent/ck.hfck",
                "--scenario", "smoke_3v2",
                "--episodes", "1",
            ]
        )
        assert code == 2

    def test_heatmap_empty_dir_exits_2(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        code = main(["heatmap", "--logs", str(empty), "--out", str(tmp_path / "h.csv")])
        assert code == 2

    def test_heatmap_writes_csv(self, tmp_path, capsys):
        logs = tmp_path / "logs"
        logs.mkdir()
        _write_log(str(logs / "r.jsonl"), HEADER_5X4, [[[0, 0, 0.5, 0.5, 45.0, 0, 0]]])
        out = str(tmp_path / "h.csv")
        assert main(["heatmap", "--logs", str(logs), "--out", out]) == 0
        assert os.path.exists(out)
        assert f"wrote {out}" in capsys.readouterr().out

    def test_sweep_runs_each_value(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(TINY_CFG_TEXT, encoding="utf-8")
        out = str(tmp_path / "sweep")
        code = main(
            [
                "sweep",
                "--config", str(cfg_path),
                "--param", "train.total_steps",
                "--values", "0,60",
                "--out", out,
            ]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "2 runs complete" in stdout
        for leaf in ("train_total_steps_0", "train_total_steps_60"):
            assert os.path.exists(os.path.join(out, leaf, "metrics.csv"))

    def test_apply_param_replaces_or_appends(self):
        base = "algo = qmix\ntrain.lr = 0.01\n"
        replaced = _apply_param(base, "train.lr", "0.002")
        assert "train.lr = 0.002" in replaced
        assert replaced.count("train.lr") == 1
        appended = _apply_param(base, "eval.interval", "500")
        assert "eval.interval = 500" in appended

    def test_help_exits_0(self):
        assert main(["--help"]) == 0
