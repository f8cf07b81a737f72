import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jnqkit import oracles
from jnqkit import packing as pk
from jnqkit.catalog import CATALOG, LIPSCHITZ_MAPS, g_map, make_function
from jnqkit.core import ConfigError, Cube, DivergenceError, DyadicCube, GridFunction, Params
from jnqkit.functionals import phi
from jnqkit.norms import (
    PackingStrategy,
    campanato_norm,
    compose_left,
    extend_cylinder,
    gagliardo_seminorm,
    jn_con_norm,
    jnq_dyadic_norm,
    jnq_dyadic_psi_norm,
    jnq_norm_integral,
    jnq_norm_on_cube,
    jnq_norm_packing,
    jnq_norm_variants,
    left_compose_norm_check,
    limit_p_sequence,
    lipschitz_norm,
    rescale_function,
    right_compose_scaling_check,
    sobolev_w1_seminorm,
)

ROOT1 = DyadicCube(0, (0,))
PRM = Params(2.0, 2.0, -0.25)
weights = st.floats(0.0, 10.0, allow_nan=False, width=64)


class TestConstant:
    @pytest.mark.parametrize("n", [1, 2])
    def test_all_norms_vanish(self, n):
        f = make_function("constant", n, 4 if n == 1 else 3)
        assert jn_con_norm(f, 2.0, 1.0).value == 0.0
        assert jnq_norm_packing(f, PRM).value == 0.0
        assert jnq_norm_packing(f, PRM.with_p(math.inf)).value == 0.0
        assert jnq_norm_integral(f, PRM).value == 0.0
        assert jnq_dyadic_norm(f, PRM).value == 0.0
        assert jnq_dyadic_psi_norm(f, PRM).value == 0.0
        for which in ("I", "II", "III"):
            assert jnq_norm_variants(f, PRM, which).value == 0.0
        assert campanato_norm(f, 1.0) == 0.0
        assert jnq_norm_on_cube(f, f.root_cube, PRM, "free_edge").value == 0.0

    def test_smooth_seminorms_vanish(self):
        c = CATALOG["constant"]
        assert sobolev_w1_seminorm(c, 1.5, ROOT1, 4) == 0.0
        assert lipschitz_norm(c, ROOT1, 4) == 0.0
        assert gagliardo_seminorm(GridFunction(ROOT1, 3, np.zeros(8)), 0.25, 2.0) == 0.0

    def test_constant_extension(self):
        F = extend_cylinder(make_function("constant", 1, 3))
        assert jnq_norm_packing(F, PRM).value == 0.0

    def test_limit_sequence_zero(self):
        seq = limit_p_sequence(make_function("constant", 1, 3), -0.25, (2.0, 4.0))
        assert seq.values == (0.0, 0.0) and seq.p_inf_value == 0.0


class TestOptimizers:
    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 4), st.data())
    def test_dp_matches_enumeration(self, m, data):
        cells = data.draw(st.integers(m, 12))
        w = data.draw(arrays(np.float64, cells - m + 1, elements=weights))
        value, starts = pk.dp_exact_1d(w, m)
        assert value == pytest.approx(oracles.best_packing_enumeration(w, m), rel=1e-12, abs=1e-12)
        chosen = sorted(s[0] for s in starts)
        assert all(b - a >= m for a, b in zip(chosen, chosen[1:]))
        assert value == pytest.approx(sum(w[s] for s in chosen), rel=1e-12, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([(1, 1), (1, 2), (1, 3), (2, 1), (2, 2)]), st.data())
    def test_tree_dp_matches_antichains(self, nd, data):
        n, depth = nd
        levels = [data.draw(arrays(np.float64, (1 << j,) * n, elements=weights)) for j in range(depth + 1)]
        value, chosen = pk.tree_dp(levels)
        best, _ = oracles.best_antichain_enumeration(levels)
        assert value == pytest.approx(best, rel=1e-12, abs=1e-12)
        assert value == pytest.approx(sum(levels[j][idx] for j, idx in chosen), rel=1e-12, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 3), st.data())
    def test_exhaustive_small_2d(self, m, data):
        k = data.draw(st.integers(1, 4))
        w = data.draw(arrays(np.float64, (k, k), elements=weights))
        value, starts = pk.exhaustive_small(w, m)
        assert value == pytest.approx(oracles.best_packing_enumeration(w, m), rel=1e-12, abs=1e-12)
        assert pk.lattice_shift(w, m)[0] <= value + 1e-12

    def test_exhaustive_cap(self):
        with pytest.raises(ConfigError):
            pk.exhaustive_small(np.ones((9, 9)), 2, cap=64)

    def test_unknown_strategy(self):
        with pytest.raises(ConfigError):
            PackingStrategy("simulated_annealing")

    def test_dp_rejected_in_2d(self):
        with pytest.raises(ConfigError):
            jn_con_norm(make_function("step", 2, 2), 2.0, 1.0, PackingStrategy("dp_exact_1d"))

    def test_twelve_cell_instance(self):
        f = make_function("random", 1, 4, seed=9)
        window = Cube((0.0,), 0.75)
        strat = PackingStrategy("dp_exact_1d", edges=(3,))
        res = jnq_norm_packing(f, PRM, strat, window=window)
        w = np.array([(3 * f.h) * phi(f, Cube((s * f.h,), 3 * f.h), PRM) ** 2 for s in range(10)])
        assert res.value == pytest.approx(math.sqrt(oracles.best_packing_enumeration(w, 3)), rel=1e-10)


class TestCertificates:
    @pytest.mark.parametrize("name", ["step", "log", "random", "bump"])
    @pytest.mark.parametrize("n", [1, 2])
    def test_rescoring(self, name, n):
        f = make_function(name, n, 5 if n == 1 else 3)
        for res in (jnq_norm_packing(f, PRM), jn_con_norm(f, 2.0, 1.5), jnq_norm_variants(f, PRM, "III")):
            assert res.value == pytest.approx(res.detail["search_value"], rel=1e-12)
            if res.packing is not None:
                assert len(res.packing) == len(res.certificate)

    def test_json(self):
        res = jnq_norm_packing(make_function("step", 1, 3), PRM)
        doc = res.to_json()
        assert doc["value"] == res.value and doc["certificate"]


class TestRelations:
    @pytest.mark.parametrize("name", ["step", "linear", "log", "random"])
    @pytest.mark.parametrize("n", [1, 2])
    def test_jn_con_is_the_flat_kernel_case(self, name, n):
        f = make_function(name, n, 5 if n == 1 else 3)
        for q in (1.0, 2.0):
            con = jn_con_norm(f, 2.0, q).value
            jnq = jnq_norm_packing(f, Params(2.0, q, -n / q)).value
            assert con * (1 - 1e-12) <= jnq <= 2 * con * (1 + 1e-12)

    @pytest.mark.parametrize("name", ["step", "log", "random", "bump"])
    def test_variant_order(self, name):
        f = make_function(name, 1, 5)
        I, II, III = (jnq_norm_variants(f, PRM, w).value for w in ("I", "II", "III"))
        assert I >= II * (1 - 1e-12) and III >= II * (1 - 1e-12)
        eq = jnq_norm_on_cube(f, f.root_cube, PRM, "equal_edge").value
        free = jnq_norm_on_cube(f, f.root_cube, PRM, "free_edge").value
        assert free >= II * (1 - 1e-12) and eq == pytest.approx(I, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 2])
    def test_dyadic_monotone_in_alpha(self, n):
        f = make_function("random", n, 5 if n == 1 else 3, seed=1)
        alphas = (-1.0, -0.5, 0.0, 0.3, 0.9)
        vals = [jnq_dyadic_norm(f, Params(2.0, 1.0, a)).value for a in alphas]
        assert all(a <= b * (1 + 1e-10) for a, b in zip(vals, vals[1:]))

    def test_integral_single_window(self):
        f = make_function("bump", 1, 4)
        # one center whose stride cell is the whole root
        res = jnq_norm_integral(f, PRM, center_stride=f.side, edges=[f.side])
        assert res.value == pytest.approx(phi(f, f.root_cube, PRM), rel=1e-12)
        g = make_function("bump", 1, 4, root_level=1)
        res = jnq_norm_integral(g, PRM, center_stride=g.side, edges=[g.side])
        assert res.value == pytest.approx(0.5 ** 0.5 * phi(g, g.root_cube, PRM), rel=1e-12)

    def test_intersection_lower_side(self):
        f = make_function("step", 1, 5)
        prm = Params(2.0, 1.0, -1.0)
        jnq = jnq_norm_packing(f, prm).value
        assert jn_con_norm(f, 2.0, 1.0).value <= jnq * (1 + 1e-12)
        assert jnq_dyadic_norm(f, prm).value <= jnq * (1 + 1e-12)

    def test_p_infinity_is_single_cube_sup(self):
        f = make_function("log", 1, 4)
        res = jnq_norm_packing(f, PRM.with_p(math.inf))
        assert len(res.certificate) == 1
        assert res.value == pytest.approx(phi(f, res.certificate[0], PRM), rel=1e-12)

    def test_divergent_alpha(self):
        with pytest.raises(DivergenceError):
            jnq_norm_packing(make_function("step", 1, 3), Params(2.0, 2.0, 0.6))


class TestScaling:
    def test_identity_and_ratios(self):
        f = make_function("random", 1, 6, seed=2)
        rep = right_compose_scaling_check(f, 1.0, 2.0)
        assert rep.passed and rep.measured["rel_error"] == 0.0
        for r, p, ratio in ((0.5, 2.0, math.sqrt(2.0)), (2.0, 1.0, 0.5)):
            a = jn_con_norm(f, p, 1.0).value
            b = jn_con_norm(rescale_function(f, r), p, 1.0).value
            assert b / a == pytest.approx(ratio, rel=1e-12)

    def test_jnq_scaling(self):
        f = make_function("bump", 2, 3)
        assert right_compose_scaling_check(f, 0.5, 4.0, 2.0, -0.25).passed

    def test_non_dyadic_factor(self):
        with pytest.raises(ValueError):
            rescale_function(make_function("step", 1, 3), 3.0)


class TestCompositions:
    def test_identity_and_double(self):
        f = make_function("random", 1, 5, seed=3)
        base = jnq_norm_packing(f, PRM).value
        assert jnq_norm_packing(compose_left(f, lambda x: x), PRM).value == base
        assert jnq_norm_packing(compose_left(f, lambda x: 2 * x), PRM).value == pytest.approx(2 * base, rel=1e-12)

    @pytest.mark.parametrize("name", sorted(LIPSCHITZ_MAPS))
    def test_lipschitz_maps(self, name):
        L, lip = LIPSCHITZ_MAPS[name]
        f = make_function("log", 1, 5)
        assert left_compose_norm_check(L, lip, f, PRM, name).passed

    def test_g_decomposition(self):
        x = np.linspace(-50, 50, 1001)
        assert np.max(np.abs(g_map(x) - 1.0 / g_map(x) - x)) <= 1e-12 * 50
        f = make_function("log", 1, 4)
        for L in (g_map, lambda v: 1.0 / g_map(v)):
            assert math.isfinite(jnq_norm_packing(compose_left(f, L), PRM).value)


class TestSeminorms:
    def test_gagliardo_indicator(self):
        # 1_[1,2) on [0,4): 2 * int_I int_{R\I} |x-y|^{-3/2} = 16
        for level in (0, 2):
            side = 4 << level
            x = np.zeros(side)
            x[side // 4: side // 2] = 1.0
            f = GridFunction(DyadicCube(-2, (0,)), level, x)
            assert gagliardo_seminorm(f, 0.25, 2.0) == pytest.approx(4.0, rel=1e-10)

    def test_gagliardo_nonpositive_s(self):
        with pytest.raises(DivergenceError):
            gagliardo_seminorm(make_function("step", 1, 3), 0.0, 2.0)

    @pytest.mark.parametrize("name", ["step", "random", "bump", "linear"])
    def test_embedding_constant_one(self, name):
        f = make_function(name, 1, 5)
        prm = Params(4.0, 2.0, 0.25)
        a0 = prm.alpha0(1)
        assert jnq_norm_packing(f, prm).value <= gagliardo_seminorm(f, a0, prm.q) * (1 + 1e-10)

    def test_sobolev_linear(self):
        root = DyadicCube(1, (0, 0))
        gamma = 1.5
        val = sobolev_w1_seminorm(CATALOG["linear"], gamma, root, 4)
        assert val == pytest.approx(0.25 ** (1 / gamma), rel=1e-14)

    def test_lipschitz_linear(self):
        assert lipschitz_norm(CATALOG["linear"], ROOT1, 5) == pytest.approx(1.0, rel=1e-12)
        assert lipschitz_norm(CATALOG["linear"], DyadicCube(0, (0, 0)), 3) == pytest.approx(1.0, rel=1e-12)

    def test_campanato_bounded_by_lipschitz(self):
        s = CATALOG["bump"]
        f = s.sample(ROOT1, 6)
        assert 0 < campanato_norm(f, 1.0) <= lipschitz_norm(s, ROOT1, 6)


class TestExtension:
    def test_replication(self):
        f = make_function("random", 1, 3, seed=4)
        F = extend_cylinder(f)
        assert F.n == 2
        for j in range(F.side):
            assert np.array_equal(F.values[:, j], f.values)

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            extend_cylinder(make_function("step", 2, 2))

    def test_stable_ratio_for_halves(self):
        ratios = []
        for root_level in (0, -1, -2):
            f = GridFunction(DyadicCube(root_level, (0,)), root_level + 3, [1.0] * 4 + [0.0] * 4)
            F = extend_cylinder(f)
            prm = Params(2.0, 1.0, 0.25)
            a = jnq_norm_on_cube(F, F.root_cube, prm).value
            b = jnq_norm_on_cube(f, f.root_cube, prm).value
            ratios.append(a / (f.root.edge ** 0.5 * b))
        assert max(ratios) == pytest.approx(min(ratios), rel=1e-12)


class TestLimit:
    def test_halves_sequence(self):
        f = GridFunction(DyadicCube(1, (0,)), 5, [1.0] * 8 + [0.0] * 8)
        seq = limit_p_sequence(f, -0.25, (2.0, 4.0, 8.0, 16.0, 32.0))
        assert all(a < b for a, b in zip(seq.values, seq.values[1:]))
        assert all(a > b > 0 for a, b in zip(seq.gaps, seq.gaps[1:]))
        assert all(lb <= v * (1 + 1e-12) for lb, v in zip(seq.lower_bounds, seq.values))
        assert seq.values[-1] <= seq.p_inf_value
