from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swapbalance.balance import BalanceEstimate, BalanceOracle
from swapbalance.generator import GenConfig, generate, validate
from swapbalance.level import Level, Position, TileKind
from swapbalance.observation import N_PLANES, decode_obs, encode_obs, obs_length
from swapbalance.sim import InvalidLevelError
from swapbalance.swap_env import (EnvConfig, LevelPoolEnv, Representation, SwapEnv,
                                  action_space, action_space_size)

BASE = Level.from_rows(["PGGFGG", "GGSGGG", "GGGGWG", "GFGGGG", "GGGSGG", "GGGGGP"])


class TableOracle:
    """Stand-in oracle: b looked up from a dict, default 0.3; counts calls."""

    def __init__(self, table=None, default=0.3):
        self.table = table or {}
        self.default = default
        self.calls = 0

    def __call__(self, level):
        self.calls += 1
        return BalanceEstimate(self.table.get(level, self.default), 14, (0, 0), 0)


def env_for(rep, oracle=None, **kw):
    return SwapEnv(EnvConfig(representation=rep, **kw), oracle or TableOracle())


class TestActionSpace:
    def test_sizes(self):
        assert action_space_size("swap-narrow", 6, 6) == 2
        assert action_space_size("swap-turtle", 6, 6) == 32
        assert action_space_size("swap-wide", 6, 6) == 2592
        assert action_space("swap-wide", 5, 3) == (5, 3, 5, 3, 2)

    def test_unknown_representation_lists_valid(self):
        with pytest.raises(ValueError, match="swap-narrow, swap-turtle, swap-wide"):
            Representation.parse("narrow")


class TestObservation:
    def test_all_grass(self):
        obs = encode_obs(Level.filled(4, 3)).reshape(N_PLANES, 3, 4)
        assert obs[0].sum() == 12 and obs[1:].sum() == 0

    def test_cursor_plane(self):
        obs = encode_obs(BASE, (Position(2, 3), Position(0, 0))).reshape(N_PLANES, 6, 6)
        assert obs[5].sum() == 1 and obs[5, 2, 3] == 1
        assert obs[6, 0, 0] == 1

    def test_round_trip_and_one_hot(self):
        for seed in range(20):
            lv = generate(GenConfig(seed=seed))
            obs = encode_obs(lv)
            assert obs.shape == (obs_length(6, 6),)
            assert np.all(obs.reshape(N_PLANES, 36)[:5].sum(axis=0) == 1)
            assert decode_obs(obs, 6, 6) == lv

    def test_scrub_rejected(self):
        with pytest.raises(ValueError):
            encode_obs(Level.from_rows(["PC", "GP"]))


class TestReset:
    def test_balanced_level_is_done_immediately(self):
        env = env_for("swap-narrow", TableOracle(default=0.5))
        env.reset(BASE)
        assert env.state.done and env.state.steps == 0
        assert env.record["reason"] == "balanced"

    def test_same_seed_same_cursors(self):
        a, b = env_for("swap-narrow"), env_for("swap-narrow")
        a.reset(BASE, seed=4)
        b.reset(BASE, seed=4)
        assert a.state.cursors == b.state.cursors
        assert a.state.cursors[0] != a.state.cursors[1]

    def test_wide_has_no_cursors(self):
        env = env_for("swap-wide")
        obs = env.reset(BASE).reshape(N_PLANES, 6, 6)
        assert obs[5:].sum() == 0

    def test_invalid_level(self):
        with pytest.raises(InvalidLevelError, match="connectivity"):
            env_for("swap-narrow").reset(Level.from_rows(
                ["PSGGGG", "SSGGGG", "GGGGGG", "GGGGGG", "GGGGGG", "GGGGGP"]))
        with pytest.raises(ValueError):
            env_for("swap-narrow").reset(Level.from_rows(["PG", "GP"]))


class TestStep:
    def test_same_kind_is_free(self):
        oracle = TableOracle()
        env = env_for("swap-wide", oracle)
        env.reset(BASE)
        _, r, done, info = env.step([1, 0, 2, 0, 1])  # grass <-> grass
        assert (r, done, info["outcome"], oracle.calls) == (0.0, False, "same_kind", 1)

    def test_swap_to_balanced(self):
        swapped = BASE.swap(Position(0, 3), Position(0, 4))
        oracle = TableOracle({swapped: 0.5}, default=0.3)
        env = env_for("swap-wide", oracle)
        env.reset(BASE)
        _, r, done, info = env.step([3, 0, 4, 0, 1])
        assert info["outcome"] == "executed"
        assert r == pytest.approx(0.2 + 0.5)
        assert done and info["reason"] == "balanced"
        assert env.record["swaps"][0]["kinds"] == ["F", "G"]

    def test_disconnecting_swap_rejected(self):
        lv = Level.from_rows(["PGS", "SGS", "SGP"])
        env = SwapEnv(EnvConfig("swap-wide", width=3, height=3), TableOracle())
        env.reset(lv)
        # moving the stone at (0,2) into the corridor cell (1,1) seals player 0 in
        _, r, _, info = env.step([1, 1, 2, 0, 1])
        assert info["outcome"] == "disconnects" and r == 0.0
        assert env.state.level == lv

    def test_turtle_moves_and_clamps(self):
        env = env_for("swap-turtle")
        env.reset(BASE, seed=0)
        env.state.cursors = (Position(0, 0), Position(5, 5))
        env.step([0, 1, 0])  # N for cursor 1 (clamped), E for cursor 2 (clamped)
        assert env.state.cursors == (Position(0, 0), Position(5, 5))
        env.step([2, 3, 0])  # S, W
        assert env.state.cursors == (Position(1, 0), Position(5, 4))

    def test_turtle_swap_keeps_cursors(self):
        env = env_for("swap-turtle")
        env.reset(BASE, seed=0)
        env.state.cursors = (Position(0, 3), Position(0, 4))
        env.step([2, 2, 1])
        assert env.state.cursors == (Position(0, 3), Position(0, 4))
        assert env.state.level[Position(0, 4)] == TileKind.FOREST

    def test_narrow_resamples_each_step(self):
        env = env_for("swap-narrow")
        env.reset(BASE, seed=1)
        seen = set()
        for _ in range(10):
            seen.add(env.state.cursors)
            env.step([0])
        assert len(seen) > 1

    def test_out_of_range_action(self):
        env = env_for("swap-turtle")
        env.reset(BASE)
        with pytest.raises(ValueError):
            env.step([4, 0, 0])
        with pytest.raises(ValueError):
            env.step([0, 0])

    def test_step_after_done(self):
        env = env_for("swap-narrow", TableOracle(default=0.5))
        env.reset(BASE)
        with pytest.raises(RuntimeError):
            env.step([0])

    def test_caps(self):
        env = env_for("swap-narrow", max_steps=5, max_changes=5)
        env.reset(BASE)
        while not env.state.done:
            env.step([0])
        assert env.state.reason == "step_cap" and env.state.steps == 5

        env = env_for("swap-wide", max_changes=2)
        env.reset(BASE)
        env.step([3, 0, 4, 0, 1])
        env.step([3, 0, 4, 0, 1])
        assert env.state.reason == "change_cap" and env.state.changes == 2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EnvConfig(max_steps=4, max_changes=8)
        with pytest.raises(ValueError):
            EnvConfig(n_sims=13)


@st.composite
def episodes(draw):
    rep = draw(st.sampled_from(list(Representation)))
    seed = draw(st.integers(0, 10_000))
    comps = action_space(rep, 6, 6)
    acts = draw(st.lists(st.tuples(*[st.integers(0, n - 1) for n in comps]),
                         min_size=1, max_size=40))
    return rep, seed, acts


class TestProperties:
    @given(episodes())
    @settings(max_examples=60, deadline=None)
    def test_playable_and_conserved(self, case):
        rep, seed, acts = case
        lv = generate(GenConfig(seed=seed))
        oracle = TableOracle(default=0.25)
        env = SwapEnv(EnvConfig(rep, max_steps=60, max_changes=60), oracle)
        env.reset(lv, seed=seed)
        tiles = Counter(lv.cells)
        executed = 0
        for a in acts:
            if env.state.done:
                break
            _, r, _, info = env.step(list(a))
            assert validate(env.state.level).valid
            assert Counter(env.state.level.cells) == tiles
            if info["outcome"] == "executed":
                executed += 1
            else:
                assert r == 0.0
        assert oracle.calls == executed + 1
        assert env.state.steps <= 60

    def test_real_oracle_counts(self):
        oracle = BalanceOracle(n=4)
        env = SwapEnv(EnvConfig("swap-narrow", n_sims=4), oracle)
        env.reset(generate(GenConfig(seed=3)), seed=3)
        executed = 0
        while not env.state.done:
            _, _, _, info = env.step([1])
            executed += info["outcome"] == "executed"
        assert oracle.calls == executed + 1


class TestLevelPool:
    def test_skips_balanced_levels(self):
        other = BASE.swap(Position(0, 3), Position(0, 4))
        oracle = TableOracle({BASE: 0.5}, default=0.2)
        pool = LevelPoolEnv([BASE, other], EnvConfig(), seed=0, oracle=oracle)
        for _ in range(5):
            pool.reset()
            assert pool.env.state.level == other

    def test_all_balanced_raises(self):
        pool = LevelPoolEnv([BASE], EnvConfig(), oracle=TableOracle(default=0.5))
        with pytest.raises(RuntimeError):
            pool.reset()
