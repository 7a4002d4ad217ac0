"""Tests for gain control, midrise quantization, and Bussgang constants."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from beamslice.quantizer import (
    GainMatrix,
    QuantizerSpec,
    ZeroRowError,
    bussgang_constants,
    compquant,
    learn_gains,
    optimal_step_size,
    quantize,
    quantize_scalar,
    quantizer_mse,
)


def brute_force_mse(q: int, delta: float) -> float:
    """Independent oracle: quadrature of the raw MSE integrand."""

    def integrand(x):
        return (quantize(np.asarray([x]), q, delta)[0] - x) ** 2 * norm.pdf(x)

    top = delta * 2 ** (q - 1)
    val, _ = integrate.quad(integrand, 0, top, limit=300,
                            points=(np.arange(1, 2 ** (q - 1)) * delta).tolist() or None)
    tail, _ = integrate.quad(integrand, top, np.inf, limit=200)
    return 2.0 * (val + tail)


def brute_force_optimal_delta(q: int, lo: float, hi: float, step: float = 1e-4) -> float:
    grid = np.arange(lo, hi, step)
    vals = [brute_force_mse(q, d) for d in grid]
    return float(grid[int(np.argmin(vals))])


class TestOptimalStepSize:
    def test_q1_closed_form(self):
        assert optimal_step_size(1) == pytest.approx(2 * math.sqrt(2 / math.pi), abs=1e-6)

    @pytest.mark.parametrize("q", [2, 4])
    def test_matches_grid_oracle(self, q):
        # Narrow bracket around the known optimum keeps the fine grid cheap.
        d_star = optimal_step_size(q)
        oracle = brute_force_optimal_delta(q, d_star - 0.02, d_star + 0.02)
        assert abs(d_star - oracle) < 1e-3

    @pytest.mark.parametrize("q", range(1, 9))
    def test_local_optimality(self, q):
        d_star = optimal_step_size(q)
        assert quantizer_mse(q, d_star) <= quantizer_mse(q, d_star + 0.01)
        assert quantizer_mse(q, d_star) <= quantizer_mse(q, d_star - 0.01)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            optimal_step_size(0)
        with pytest.raises(ValueError):
            optimal_step_size(13)


class TestQuantize:
    def test_zero_maps_to_half_step(self):
        spec = QuantizerSpec.create(3)
        assert quantize_scalar(0.0, spec) == pytest.approx(spec.delta / 2)

    def test_clipping_branch(self):
        spec = QuantizerSpec.create(2)
        assert quantize_scalar(1e10, spec) == pytest.approx(spec.delta / 2 * 3)
        assert quantize_scalar(-1e10, spec) == pytest.approx(-spec.delta / 2 * 3)

    def test_first_cell_example(self):
        spec = QuantizerSpec.create(2)
        assert spec.delta == pytest.approx(0.9957, abs=1e-3)
        assert quantize_scalar(0.5, spec) == pytest.approx(spec.delta / 2)

    def test_odd_and_monotone_on_grid(self):
        q, delta = 3, optimal_step_size(3)
        # Offset grid avoids exact cell boundaries where Q jumps.
        x = np.linspace(-4, 4, 2001) + 1e-7
        qx = quantize(x, q, delta)
        np.testing.assert_allclose(quantize(-x, q, delta), -qx, atol=1e-12)
        assert np.all(np.diff(qx) >= 0)

    def test_error_bounded_inside_range(self):
        q, delta = 4, optimal_step_size(4)
        x = np.linspace(-delta * 2 ** (q - 1) + 1e-9, delta * 2 ** (q - 1) - 1e-9, 4001)
        assert np.max(np.abs(quantize(x, q, delta) - x)) <= delta / 2 + 1e-12

    def test_scalar_rejects_infinite_spec(self):
        with pytest.raises(ValueError):
            quantize_scalar(1.0, QuantizerSpec.infinite())


class TestLearnGains:
    def test_unit_rows(self):
        y = np.full((3, 10), 1 + 1j)
        np.testing.assert_allclose(learn_gains(y).g, 1.0)

    def test_homogeneity(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=(4, 16)) + 1j * rng.normal(size=(4, 16))
        g1 = learn_gains(y).g
        g2 = learn_gains(3.0 * y).g
        np.testing.assert_allclose(g2, g1 / 3.0)

    def test_constant_two_rows(self):
        y = np.full((2, 8), 2.0 + 0j)
        np.testing.assert_allclose(learn_gains(y).g, 1 / np.sqrt(2))

    def test_zero_row_raises(self):
        y = np.ones((3, 4), dtype=complex)
        y[1] = 0.0
        with pytest.raises(ZeroRowError):
            learn_gains(y)

    def test_zero_row_capped(self):
        y = np.ones((3, 4), dtype=complex)
        y[1] = 0.0
        g = learn_gains(y, g_max=1e6).g
        assert g[1] == 1e6
        assert g[0] == pytest.approx(np.sqrt(2.0))


class TestCompquant:
    def test_infinite_resolution_identity(self):
        y = np.array([1 + 2j, -0.3 + 0.1j])
        gains = GainMatrix(g=np.ones(2))
        out = compquant(y, gains, QuantizerSpec.infinite())
        np.testing.assert_array_equal(out, y)

    def test_real_input_imag_half_step(self):
        spec = QuantizerSpec.create(3)
        y = np.array([0.4, -0.9], dtype=complex)
        out = compquant(y, GainMatrix(g=np.ones(2)), spec)
        expect_re = quantize(y.real, spec.q, spec.delta)
        np.testing.assert_allclose(out.real, expect_re)
        np.testing.assert_allclose(out.imag, spec.delta / 2)

    def test_gain_scaling_identity(self):
        rng = np.random.default_rng(1)
        spec = QuantizerSpec.create(4)
        y = rng.normal(size=6) + 1j * rng.normal(size=6)
        g = GainMatrix(g=rng.uniform(0.5, 2.0, size=6))
        lhs = compquant(y, g, spec)
        rhs = compquant(g.g * y, GainMatrix(g=np.ones(6)), spec) / g.g
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)

    def test_matrix_input(self):
        spec = QuantizerSpec.create(2)
        y = np.ones((3, 5), dtype=complex)
        g = GainMatrix(g=np.array([1.0, 2.0, 4.0]))
        out = compquant(y, g, spec)
        assert out.shape == (3, 5)


class TestBussgang:
    def test_q1_closed_forms(self):
        delta = 2 * math.sqrt(2 / math.pi)
        gamma, d = bussgang_constants(1, delta)
        assert gamma == pytest.approx(2 / math.pi, abs=1e-6)
        assert d == pytest.approx((2 / math.pi) * (1 - 2 / math.pi), abs=1e-6)

    def test_high_resolution_limits(self):
        gamma, d = bussgang_constants(8, optimal_step_size(8))
        assert gamma >= 0.999
        assert d <= 1e-3

    def test_monotone_in_q(self):
        gammas, ds = [], []
        for q in range(1, 11):
            g, d = bussgang_constants(q, optimal_step_size(q))
            gammas.append(g)
            ds.append(d)
        assert np.all(np.diff(gammas) > 0)
        assert np.all(np.diff(ds) < 0)
        assert gammas[-1] < 1.0 and ds[-1] > 0.0

    @pytest.mark.parametrize("q", [1, 4, 8])
    def test_distortion_uncorrelated_with_input(self, q):
        rng = np.random.default_rng(q)
        delta = optimal_step_size(q)
        gamma, d_var = bussgang_constants(q, delta)
        x = rng.normal(size=1_000_000)
        d = quantize(x, q, delta) - gamma * x
        corr = np.corrcoef(d, x)[0, 1]
        assert abs(corr) <= 5e-3

    def test_empirical_constants_match_quadrature(self):
        rng = np.random.default_rng(2)
        q = 4
        delta = optimal_step_size(q)
        gamma, d_var = bussgang_constants(q, delta)
        x = rng.normal(size=1_000_000)
        qx = quantize(x, q, delta)
        gamma_hat = np.sum(qx * x) / np.sum(x * x)
        assert abs(gamma_hat - gamma) < 1e-2
        d_hat = np.var(qx - gamma * x)
        assert abs(d_hat - d_var) / d_var < 2e-2


class TestQuantizerSpec:
    def test_create_finite(self):
        spec = QuantizerSpec.create(4)
        assert spec.q == 4 and 0 < spec.gamma <= 1 and spec.d >= 0

    def test_infinite_marker(self):
        spec = QuantizerSpec.infinite()
        assert spec.is_infinite and spec.gamma == 1.0 and spec.d == 0.0

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            QuantizerSpec(q=None, delta=1.0, gamma=0.9, d=0.0)
        with pytest.raises(ValueError):
            QuantizerSpec(q=4, delta=-1.0, gamma=0.9, d=0.1)
        with pytest.raises(ValueError):
            QuantizerSpec(q=4, delta=1.0, gamma=1.5, d=0.1)
