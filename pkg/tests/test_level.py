import pytest
from hypothesis import given, settings, strategies as st

from swapbalance.level import (Level, LevelParseError, Position, TileKind, count_tiles,
                               parse_level, passable, path_exists, render_ascii,
                               serialize_level)

from conftest import levels, random_level

G, F, C, S, W, P = (TileKind.GRASS, TileKind.FOREST, TileKind.SCRUB, TileKind.STONE,
                    TileKind.WATER, TileKind.PLAYER_SPAWN)


def components_oracle(level):
    """Union-find labelling of passable cells (independent of the BFS)."""
    parent = list(range(len(level.cells)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    ok = [k not in (S, W) for k in level.cells]
    for i in range(len(level.cells)):
        r, c = divmod(i, level.width)
        if not ok[i]:
            continue
        if c + 1 < level.width and ok[i + 1]:
            parent[find(i)] = find(i + 1)
        if r + 1 < level.height and ok[i + level.width]:
            parent[find(i)] = find(i + level.width)
    return find, ok


class TestTileKind:
    def test_six_kinds_with_stable_codes_and_ids(self):
        assert [int(k) for k in TileKind] == [0, 1, 2, 3, 4, 5]
        assert "".join(k.code for k in TileKind) == "GFCSWP"
        for k in TileKind:
            assert TileKind.from_code(k.code) is k

    @pytest.mark.parametrize("kind,expected", [
        (S, False), (W, False), (G, True), (C, True), (F, True), (P, True),
    ])
    def test_passable(self, kind, expected):
        assert passable(kind) is expected


class TestLevel:
    def test_cells_length_checked(self):
        with pytest.raises(ValueError):
            Level(2, 2, (G, G, G))

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            Level(1, 3, (G, G, G))

    def test_swap_and_lookup(self):
        lv = Level(2, 2, (G, F, S, W))
        sw = lv.swap(Position(0, 1), Position(1, 1))
        assert sw.cells == (G, W, S, F)
        with pytest.raises(IndexError):
            lv[Position(2, 0)]


class TestPathExists:
    def test_open_grid(self):
        lv = Level.filled(6, 6)
        assert path_exists(lv, Position(0, 0), Position(5, 5))

    def test_stone_column_blocks(self):
        rows = ["PGSGGG"] + ["GGSGGG"] * 4 + ["GGSGGP"]
        lv = Level.from_rows(rows)
        assert not path_exists(lv, Position(0, 0), Position(5, 5))

    def test_reflexive_even_on_blocked_cell(self):
        lv = Level.filled(3, 3, S)
        assert path_exists(lv, Position(1, 1), Position(1, 1))

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            path_exists(Level.filled(3, 3), Position(0, 0), Position(3, 0))

    def test_matches_union_find_on_random_levels(self, rng):
        for _ in range(200):
            lv = random_level(rng, p=[0.35, 0.15, 0.05, 0.2, 0.2, 0.05])
            find, ok = components_oracle(lv)
            a = lv.position(int(rng.integers(36)))
            b = lv.position(int(rng.integers(36)))
            ia, ib = lv.index(a), lv.index(b)
            expected = a == b or (ok[ia] and ok[ib] and find(ia) == find(ib))
            assert path_exists(lv, a, b) == expected

    @given(levels(), st.data())
    @settings(max_examples=60)
    def test_symmetric(self, lv, data):
        a = Position(data.draw(st.integers(0, lv.height - 1)), data.draw(st.integers(0, lv.width - 1)))
        b = Position(data.draw(st.integers(0, lv.height - 1)), data.draw(st.integers(0, lv.width - 1)))
        assert path_exists(lv, a, b) == path_exists(lv, b, a)


class TestCountTiles:
    def test_all_grass(self):
        counts = count_tiles(Level.filled(6, 6))
        assert counts[G] == 36
        assert sum(counts.values()) == 36
        assert all(counts[k] == 0 for k in TileKind if k != G)

    def test_matches_naive_recount(self, rng):
        for _ in range(50):
            lv = random_level(rng)
            naive = {k: 0 for k in TileKind}
            for r in range(lv.height):
                for c in range(lv.width):
                    naive[lv[Position(r, c)]] += 1
            assert count_tiles(lv) == naive

    @given(levels(), st.data())
    @settings(max_examples=60)
    def test_swap_conserves_counts(self, lv, data):
        cells = st.tuples(st.integers(0, lv.height - 1), st.integers(0, lv.width - 1))
        a, b = Position(*data.draw(cells)), Position(*data.draw(cells))
        assert count_tiles(lv.swap(a, b)) == count_tiles(lv)


class TestText:
    def test_parse_small(self):
        lv = parse_level("GG\nGW")
        assert lv == Level(2, 2, (G, G, G, W))

    def test_canonical_round_trip(self):
        s = "3 2\nGPF\nSWC\n"
        assert serialize_level(parse_level(s)) == s

    def test_unknown_code_position(self):
        with pytest.raises(LevelParseError) as err:
            parse_level("3 2\nGGG\nGXG\n")
        assert (err.value.line, err.value.column) == (3, 2)

    def test_ragged_rows(self):
        with pytest.raises(LevelParseError) as err:
            parse_level("GGG\nGG\n")
        assert err.value.line == 2

    def test_header_mismatch(self):
        with pytest.raises(LevelParseError):
            parse_level("3 3\nGGG\nGGG\n")

    @given(levels())
    def test_round_trip_identity(self, lv):
        assert parse_level(serialize_level(lv)) == lv

    @given(levels())
    def test_json_round_trip(self, lv):
        assert Level.from_json(lv.to_json()) == lv


class TestRender:
    def test_row_glyphs(self):
        lv = Level(3, 2, (G, W, S, F, C, P))
        assert render_ascii(lv) == "G W S\nF C P\n"

    @given(levels())
    def test_render_parse_fixpoint(self, lv):
        text = render_ascii(lv)
        assert render_ascii(parse_level(text)) == text

    def test_highlight_marks_exactly_given_cells(self):
        lv = Level.filled(3, 3)
        out = render_ascii(lv, highlight=[Position(0, 1), Position(2, 2)])
        assert out.count("[") == 2
        assert out.splitlines()[0] == " G [G] G "
        assert out.splitlines()[2].endswith("[G]")
