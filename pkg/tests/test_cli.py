import json

import pytest

from swapbalance.cli import main
from swapbalance.evaluation import Dataset
from swapbalance.level import Level, serialize_level

FAST = ["--set", "env.n_sims=4"]
# mirror-symmetric 6x6 level; balanced at four simulations
SYMMETRIC = ["PGGGGP", "GFGGFG", "GGWWGG", "GGSSGG", "GFGGFG", "GGGGGG"]


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("ds") / "dataset.jsonl"
    assert main(["generate", "--count", "12", "--seed", "3", "--out", str(path),
                 "--out-dir", str(path.parent), *FAST]) == 0
    return path


@pytest.fixture(scope="module")
def checkpoint(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("ckpt")
    assert main(["train", "--dataset", str(dataset), "--repr", "swap-narrow", "--steps", "256",
                 "--out-dir", str(out), *FAST, "--set", "train.rollout_length=128",
                 "--set", "train.minibatch_size=64"]) == 0
    return out / "checkpoint.json"


def write_level(path, rows):
    path.write_text(serialize_level(Level.from_rows(rows)))
    return path


class TestGenerate:
    def test_rerun_is_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            assert main(["generate", "--count", "5", "--seed", "1", "--out-dir",
                         str(tmp_path / name), *FAST]) == 0
        a = (tmp_path / "a" / "dataset.jsonl").read_bytes()
        assert a == (tmp_path / "b" / "dataset.jsonl").read_bytes()
        assert len(a.splitlines()) == 5
        assert (tmp_path / "a" / "generate.config.ini").exists()

    def test_count_zero(self, out):
        assert main(["generate", "--count", "0", "--out-dir", str(out)]) == 2


class TestCalibrate:
    def test_loose_threshold_picks_four(self, out, capsys):
        assert main(["calibrate", "--n-max", "6", "--threshold", "1.0", "--out-dir", str(out),
                     "--set", "calibrate.levels=4"]) == 0
        assert "chosen n = 4" in capsys.readouterr().out
        assert (out / "calibration.csv").read_text().count("\n") >= 2

    def test_odd_n_max(self, out):
        assert main(["calibrate", "--n-max", "7", "--out-dir", str(out)]) == 2


class TestTrain:
    def test_unknown_representation(self, dataset, out):
        assert main(["train", "--dataset", str(dataset), "--repr", "swap-diagonal",
                     "--out-dir", str(out)]) == 2

    def test_same_seed_same_checkpoint(self, dataset, checkpoint, tmp_path):
        other = tmp_path / "again"
        assert main(["train", "--dataset", str(dataset), "--repr", "swap-narrow", "--steps", "256",
                     "--out-dir", str(other), *FAST, "--set", "train.rollout_length=128",
                     "--set", "train.minibatch_size=64"]) == 0
        assert (other / "checkpoint.json").read_bytes() == checkpoint.read_bytes()
        assert (other / "curve.csv").read_text().startswith("update,")


class TestBalance:
    def test_already_balanced(self, checkpoint, tmp_path, capsys):
        level = write_level(tmp_path / "sym.txt", SYMMETRIC)
        assert main(["balance", "--checkpoint", str(checkpoint), "--level", str(level),
                     "--out-dir", str(tmp_path), *FAST]) == 0
        assert "already balanced" in capsys.readouterr().out

    def test_single_spawn_is_rejected(self, checkpoint, tmp_path, capsys):
        level = write_level(tmp_path / "one.txt", ["G" + SYMMETRIC[0][1:]] + SYMMETRIC[1:])
        assert main(["balance", "--checkpoint", str(checkpoint), "--level", str(level),
                     "--out-dir", str(tmp_path)]) == 2
        assert "two player spawns" in capsys.readouterr().err

    def test_unbalanced_level_prints_both_renders(self, checkpoint, dataset, tmp_path, capsys):
        target = next(e for e in Dataset.load(dataset) if e.b0 != 0.5)
        path = tmp_path / "lvl.txt"
        path.write_text(serialize_level(target.level))
        assert main(["balance", "--checkpoint", str(checkpoint), "--level", str(path),
                     "--out-dir", str(tmp_path), "--out", str(tmp_path / "rec.json"),
                     *FAST]) == 0
        text = capsys.readouterr().out
        if "already balanced" not in text:
            assert "before: b =" in text and "after" in text
            assert json.loads((tmp_path / "rec.json").read_text())["b0"] == target.b0


class TestEvaluate:
    def test_never_swap_improves_nothing(self, dataset, out):
        assert main(["evaluate", "--dataset", str(dataset), "--policy", "never",
                     "--out-dir", str(out), *FAST]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["improved_pct"] == 0.0 and report["balanced_pct"] == 0.0
        assert (out / "histogram.csv").read_text().startswith("b,before,after")

    def test_needs_a_policy(self, dataset, out):
        assert main(["evaluate", "--dataset", str(dataset), "--out-dir", str(out)]) == 2

    def test_analyze_writes_ten_pairs(self, dataset, checkpoint, out):
        assert main(["analyze", "--dataset", str(dataset), "--checkpoint", str(checkpoint),
                     "--levels", "4", "--out-dir", str(out), *FAST]) == 0
        lines = (out / "swap_frequency.csv").read_text().splitlines()
        assert len(lines) == 11


class TestConfig:
    def test_unknown_key(self, out, capsys):
        assert main(["generate", "--count", "1", "--out-dir", str(out),
                     "--set", "env.speed=3"]) == 2
        assert "valid keys" in capsys.readouterr().err

    def test_unknown_section_in_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[bogus]\nx = 1\n")
        assert main(["generate", "--count", "1", "--config", str(cfg)]) == 2
        assert "unknown section" in capsys.readouterr().err

    def test_config_file_values_are_echoed(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[env]\nn_sims = 4\n[sim]\nfood_goal = 4\n")
        assert main(["generate", "--count", "2", "--config", str(cfg),
                     "--out-dir", str(tmp_path / "o")]) == 0
        echo = (tmp_path / "o" / "generate.config.ini").read_text()
        assert "n_sims = 4" in echo and "food_goal = 4" in echo

    def test_env_var_overrides(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("SWAPBALANCE_OUT_DIR", str(target))
        monkeypatch.setenv("SWAPBALANCE_WORKERS", "2")
        assert main(["generate", "--count", "2", *FAST]) == 0
        echo = (target / "generate.config.ini").read_text()
        assert "workers = 2" in echo

    def test_flag_beats_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SWAPBALANCE_OUT_DIR", str(tmp_path / "env"))
        assert main(["generate", "--count", "1", "--out-dir", str(tmp_path / "flag"), *FAST]) == 0
        assert (tmp_path / "flag" / "dataset.jsonl").exists()
        assert not (tmp_path / "env").exists()


class TestSimulateAndRender:
    def test_simulate_trace(self, tmp_path, capsys):
        level = write_level(tmp_path / "l.txt", ["PFFP", "GGGG"])
        assert main(["simulate", "--level", str(level), "--trace"]) == 0
        text = capsys.readouterr().out
        assert "winners={" in text and "player 1" in text

    def test_render_highlight(self, tmp_path, capsys):
        level = write_level(tmp_path / "l.txt", ["PFFP", "GGGG"])
        assert main(["render", "--level", str(level), "--highlight", "0,1"]) == 0
        assert capsys.readouterr().out

    def test_bad_highlight(self, tmp_path):
        level = write_level(tmp_path / "l.txt", ["PFFP", "GGGG"])
        assert main(["render", "--level", str(level), "--highlight", "x"]) == 2

    def test_wrong_size_level(self, checkpoint, tmp_path, capsys):
        level = write_level(tmp_path / "small.txt", ["PFFP", "GGGG"])
        assert main(["balance", "--checkpoint", str(checkpoint), "--level", str(level),
                     "--out-dir", str(tmp_path)]) == 2
        assert "6x6" in capsys.readouterr().err
