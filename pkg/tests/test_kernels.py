import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jnqkit.core import Cube, DivergenceError
from jnqkit.kernels import (
    KernelSpec,
    exterior_weight_1d,
    kernel_weight,
    unit_weight_1d,
    unit_weight_2d,
    weight_table_1d,
    weight_table_2d,
)
from jnqkit.oracles import quad_weight_1d, quad_weight_2d
from scipy import integrate


def spec1(beta):
    return KernelSpec(beta, 1)


class TestOneDimensional:
    def test_flat_kernel_is_area(self):
        assert kernel_weight(Cube((0.0,), 1.0), Cube((1.0,), 1.0), spec1(0.0)) == pytest.approx(1.0, rel=1e-15)

    def test_half_power_closed_form(self):
        w = kernel_weight(Cube((0.0,), 1.0), Cube((1.0,), 1.0), spec1(0.5))
        assert w == pytest.approx(4.0 / 3.0 * (2.0 * math.sqrt(2.0) - 2.0), rel=1e-14)
        assert w == pytest.approx(1.10457, abs=5e-6)

    def test_log_branch_separated(self):
        # int_0^1 int_2^3 (y-x)^-2 = ln(4/3)
        w = kernel_weight(Cube((0.0,), 1.0), Cube((2.0,), 1.0), spec1(2.0))
        assert w == pytest.approx(math.log(4.0 / 3.0), rel=1e-14)
        assert abs(w - quad_weight_1d(2.0, 2.0)) <= 1e-8

    @pytest.mark.parametrize("beta", [-1.5, -0.5, 0.0, 0.3, 0.999, 1.0, 1.0 + 1e-11, 1.5])
    def test_touching_against_quadrature(self, beta):
        assert unit_weight_1d(1.0, beta) == pytest.approx(quad_weight_1d(1.0, beta), rel=1e-9)

    @pytest.mark.parametrize("beta", [1.9, 1.9999, 1.999999])
    def test_touching_near_divergence(self, beta):
        # int_0^1 int_1^2 (y-x)^-beta dy dx in closed form
        exact = (2.0 ** (2.0 - beta) - 2.0) / ((1.0 - beta) * (2.0 - beta))
        assert unit_weight_1d(1.0, beta) == pytest.approx(exact, rel=1e-9)

    @pytest.mark.parametrize("u", [2, 3, 5, 9])
    @pytest.mark.parametrize("beta", [-1.0, 0.5, 1.0, 2.0, 2.0 - 1e-11, 3.5])
    def test_separated_against_quadrature(self, u, beta):
        assert unit_weight_1d(float(u), beta) == pytest.approx(quad_weight_1d(float(u), beta), rel=1e-10)

    def test_continuity_across_log_branches(self):
        for b in (1.0, 2.0):
            for u in (1.0, 3.0) if b == 1.0 else (3.0,):
                lo, mid, hi = (unit_weight_1d(u, b + d) for d in (-1e-7, 0.0, 1e-7))
                assert abs(lo - mid) < 1e-5 * mid and abs(hi - mid) < 1e-5 * mid

    def test_touching_divergence(self):
        with pytest.raises(DivergenceError):
            unit_weight_1d(1.0, 2.0)
        with pytest.raises(DivergenceError):
            kernel_weight(Cube((0.0,), 0.5), Cube((0.5,), 0.5), spec1(2.5))
        assert not spec1(2.0).touching_finite and spec1(1.99).touching_finite

    def test_table_matches_unit_weights(self):
        t = weight_table_1d(0.75, 6)
        assert t[0] == 0.0
        for d in range(1, 7):
            assert t[d] == pytest.approx(unit_weight_1d(float(d), 0.75), rel=1e-13)
        inf_table = weight_table_1d(2.5, 3, divergent_as_inf=True)
        assert math.isinf(inf_table[1]) and math.isfinite(inf_table[2])

    @settings(max_examples=50)
    @given(st.integers(-6, 6), st.floats(0.0, 20.0), st.sampled_from([0.125, 0.25, 1.0, 4.0]),
           st.floats(-2.0, 1.9))
    def test_symmetry_and_translation(self, d, z, h, beta):
        if d == 0:
            return
        A, B = Cube((0.0,), h), Cube((d * h,), h)
        w = kernel_weight(A, B, spec1(beta))
        assert kernel_weight(B, A, spec1(beta)) == w
        Az, Bz = Cube((z,), h), Cube((z + d * h,), h)
        assert kernel_weight(Az, Bz, spec1(beta)) == pytest.approx(w, rel=1e-12)

    def test_scaling_law(self):
        beta = 0.7
        base = kernel_weight(Cube((0.0,), 1.0), Cube((3.0,), 1.0), spec1(beta))
        small = kernel_weight(Cube((0.0,), 0.25), Cube((0.75,), 0.25), spec1(beta))
        assert small == pytest.approx(0.25 ** (2 - beta) * base, rel=1e-14)

    def test_exterior_weight(self):
        beta = 1.5
        x0, x1, A, B = 0.25, 0.5, 0.0, 1.0

        def outer(x):
            return (integrate.quad(lambda y: (x - y) ** -beta, -np.inf, A)[0]
                    + integrate.quad(lambda y: (y - x) ** -beta, B, np.inf)[0])

        ref = integrate.quad(outer, x0, x1, epsrel=1e-12)[0]
        assert exterior_weight_1d(x0, x1, A, B, beta) == pytest.approx(ref, rel=1e-9)
        with pytest.raises(DivergenceError):
            exterior_weight_1d(x0, x1, A, B, 1.0)


class TestTwoDimensional:
    @pytest.mark.parametrize("u", [(1, 0), (0, 1), (1, 1), (2, 1), (3, 0), (4, 4)])
    @pytest.mark.parametrize("beta", [-1.0, 0.5, 1.5, 2.5])
    def test_against_quadrature(self, u, beta):
        assert unit_weight_2d(u, beta) == pytest.approx(quad_weight_2d(float(u[0]), float(u[1]), beta), rel=1e-9)

    def test_touching_divergence(self):
        with pytest.raises(DivergenceError):
            unit_weight_2d((1, 0), 3.0)
        # a single shared corner stays integrable until beta = 4
        assert math.isfinite(unit_weight_2d((1, 1), 3.2))
        with pytest.raises(DivergenceError):
            weight_table_2d(3.0, 3)

    def test_table_symmetries(self):
        W = weight_table_2d(1.25, 5)
        assert W[0, 0] == 0.0
        assert np.array_equal(W, W.T)
        assert W[2, 1] == pytest.approx(unit_weight_2d((2, 1), 1.25), rel=1e-9)

    def test_kernel_weight_reflection(self):
        spec = KernelSpec(1.5, 2)
        A, B = Cube((0.5, 0.5), 0.25), Cube((0.75, 0.25), 0.25)
        assert kernel_weight(A, B, spec) == kernel_weight(B, A, spec)
        C = Cube((0.25, 0.75), 0.25)
        assert kernel_weight(A, C, spec) == pytest.approx(kernel_weight(A, B, spec), rel=1e-12)
