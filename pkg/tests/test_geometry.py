import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jnqkit.core import Cube, DyadicCube, Packing
from jnqkit.geometry import (
    PartitionResult,
    bracket_level,
    check_delta_bound,
    dominated_cube,
    dyadic_cubes_of_level,
    dyadic_distance,
    lattice_shift_covers,
    partition_packing,
    random_grid_packing,
    sparse_family_index,
)


class TestLevels:
    def test_halves(self):
        cubes = dyadic_cubes_of_level(DyadicCube(0, (0,)), 1)
        assert [c.to_cube() for c in cubes] == [Cube((0.0,), 0.5), Cube((0.5,), 0.5)]

    def test_quadrants(self):
        cubes = dyadic_cubes_of_level(DyadicCube(0, (0, 0)), 1)
        assert {c.index for c in cubes} == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_count(self):
        assert len(dyadic_cubes_of_level(DyadicCube(0, (0,)), 3)) == 8
        assert len(dyadic_cubes_of_level(DyadicCube(1, (1, 2)), 3)) == 16

    def test_coarser_level_rejected(self):
        with pytest.raises(ValueError):
            dyadic_cubes_of_level(DyadicCube(2, (0,)), 1)


class TestDyadicDistance:
    def test_same_cell(self):
        D = DyadicCube(3, (5,))
        assert dyadic_distance(D, D) == 2.0**-3

    def test_siblings_and_cousins(self):
        assert dyadic_distance(DyadicCube(2, (0,)), DyadicCube(2, (1,))) == 0.5
        assert dyadic_distance(DyadicCube(2, (0,)), DyadicCube(2, (2,))) == 1.0

    def test_delta_bound_examples(self):
        c = DyadicCube(2, (0,))
        assert check_delta_bound((0.1,), (0.2,), c, c)
        assert check_delta_bound((0.24,), (0.26,), DyadicCube(2, (0,)), DyadicCube(2, (1,)))

    def test_delta_bound_exhaustive_16_cells(self):
        L = 4
        cells = [DyadicCube(L, (j,)) for j in range(16)]
        for a, b in itertools.product(cells, repeat=2):
            for x in (a.to_cube().corner[0], a.to_cube().upper[0]):
                for y in (b.to_cube().corner[0], b.to_cube().upper[0]):
                    # closed-cell corners are limits of interior points
                    assert abs(x - y) <= dyadic_distance(a, b) + 1e-15

    @settings(max_examples=60)
    @given(st.integers(1, 5), st.data())
    def test_symmetric_and_bound_2d(self, level, data):
        side = 1 << level
        i = tuple(data.draw(st.integers(0, side - 1)) for _ in range(2))
        j = tuple(data.draw(st.integers(0, side - 1)) for _ in range(2))
        a, b = DyadicCube(level, i), DyadicCube(level, j)
        d = dyadic_distance(a, b)
        assert d == dyadic_distance(b, a)
        xs = data.draw(st.tuples(st.floats(0, 0.999), st.floats(0, 0.999)))
        ys = data.draw(st.tuples(st.floats(0, 0.999), st.floats(0, 0.999)))
        h = 2.0**-level
        x = tuple((k + t) * h for k, t in zip(i, xs))
        y = tuple((k + t) * h for k, t in zip(j, ys))
        assert check_delta_bound(x, y, a, b)


class TestDominatedCube:
    def test_interval(self):
        d = dominated_cube(Cube((0.3,), 0.6))
        assert d.level == 0
        assert d.lower_left == DyadicCube(0, (0,))
        assert d.flat == Cube((0.0,), 2.0)

    def test_dyadic_input(self):
        d = dominated_cube(Cube((0.0,), 0.5))
        assert d.level == 1 and d.lower_left.to_cube() == Cube((0.0,), 0.5)
        assert d.flat == Cube((0.0,), 1.0)

    def test_square(self):
        d = dominated_cube(Cube((0.3, 1.1), 0.6))
        assert d.lower_left == DyadicCube(0, (0, 1))
        assert d.flat == Cube((0.0, 1.0), 2.0)

    @given(st.floats(0, 10), st.floats(0, 10), st.floats(1e-3, 8))
    def test_containment_and_edge_ratio(self, x, y, edge):
        Q = Cube((x, y), edge)
        d = dominated_cube(Q)
        assert d.flat.contains_cube(Q)
        assert d.lower_left.to_cube().contains_point(Q.corner)
        assert Q.edge <= d.flat.edge / 2 < 2 * Q.edge

    def test_bracket_level(self):
        assert bracket_level(1.0) == 0
        assert bracket_level(0.6) == 0
        assert bracket_level(0.5) == 1
        assert bracket_level(3.0) == -2


class TestSparseFamilies:
    def test_examples(self):
        assert sparse_family_index(DyadicCube(2, (0,))) == sparse_family_index(DyadicCube(2, (3,))) == 1
        assert sparse_family_index(DyadicCube(2, (1,))) == 2
        # (2 mod 3, 4 mod 3) = (2, 1) in mixed radix 3
        assert sparse_family_index(DyadicCube(3, (2, 4))) == 1 + 2 + 1 * 3

    def test_same_family_gaps(self):
        cubes = dyadic_cubes_of_level(DyadicCube(0, (0, 0)), 3)
        for a, b in itertools.combinations(cubes, 2):
            if sparse_family_index(a) == sparse_family_index(b):
                gap = max(abs(i - j) for i, j in zip(a.index, b.index)) - 1
                assert gap >= 1
                assert not a.to_cube().closures_meet(b.to_cube())


class TestPartition:
    def test_unit_tiling(self):
        P = Packing(tuple(Cube((float(j),), 1.0) for j in range(4)), 1.0)
        res = partition_packing(P)
        assert len(res.families) <= 6
        assert sorted(i for fam in res.families for i in fam) == [0, 1, 2, 3]

    def test_single_cube(self):
        res = partition_packing(Packing((Cube((0.2, 0.2), 0.3),), 0.3))
        assert res.families == ((0,),)

    def test_empty(self):
        assert partition_packing(Packing((), 1.0)).families == ()

    @pytest.mark.parametrize("n", [1, 2])
    def test_random_packings(self, n):
        rng = np.random.default_rng(5)
        for _ in range(60):
            edge = int(rng.integers(1, 6))
            P = random_grid_packing(rng, n, 24, edge, 1 / 8)
            res = partition_packing(P)
            assert len(res.families) <= 6**n
            members = sorted(i for fam in res.families for i in fam)
            assert members == list(range(len(P)))
            for fam in res.families:
                flats = [dominated_cube(P.cubes[i]).flat for i in fam]
                for a, b in itertools.combinations(flats, 2):
                    assert not a.interiors_overlap(b)

    def test_json_round_trip(self):
        P = Packing(tuple(Cube((float(j),), 1.0) for j in range(5)), 1.0)
        res = partition_packing(P)
        assert PartitionResult.from_json(res.to_json()) == res


class TestLatticeCovers:
    @pytest.mark.parametrize("ell", [1.0, 0.6])
    def test_one_dimensional(self, ell):
        fams = lattice_shift_covers(ell)
        assert len(fams) == 2
        assert all(fam.edge == 2.0 for fam in fams)
        starts = sorted({c.corner[0] % 2.0 for fam in fams for c in fam.cubes})
        assert len(starts) == 2 and starts[1] - starts[0] == 1.0

    def test_two_dimensional_cover(self):
        root = Cube((0.0, 0.0), 1.0)
        fams = lattice_shift_covers(0.2, root)
        assert len(fams) == 4
        h = 2.0 ** -bracket_level(0.2)
        k = round(1 / h)
        for i, j in itertools.product(range(k), repeat=2):
            cell = Cube((i * h, j * h), h)
            assert any(m.contains_cube(cell) for fam in fams for m in fam.cubes)

    def test_every_window_inside_a_member(self):
        # any cube of edge ell sits inside a member of one of the families
        ell = 0.3
        fams = lattice_shift_covers(ell, Cube((0.0,), 2.0))
        for x in np.linspace(0, 1.7, 35):
            Q = Cube((float(x),), ell)
            assert any(m.contains_cube(Q) for fam in fams for m in fam.cubes)
