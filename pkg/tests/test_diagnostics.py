import numpy as np
import pytest

from cyclecast import diagnostics as dg
from cyclecast.errors import InputError, NumericError


class TestPrelogits:
    def test_zero_input_zero_bias_tanh_is_zero(self):
        a = dg.attention_prelogits(np.zeros(5), np.ones(4), np.ones(4),
                                   activation="tanh")
        np.testing.assert_array_equal(a, np.zeros((5, 5)))

    def test_single_element_is_scalar_product(self):
        x = np.array([0.3])
        q = np.array([1.0, -2.0])
        k = np.array([0.5, 0.5])
        a = dg.attention_prelogits(x, q, k)
        expected = (q * x[0]) @ (k * x[0]) / np.sqrt(2)
        np.testing.assert_allclose(a, [[expected]])

    def test_linear_zero_bias_exactly_rank_one(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(12)
        q = rng.standard_normal(6)
        k = rng.standard_normal(6)
        a = dg.attention_prelogits(x, q, k, activation="linear")
        expected = (q @ k / np.sqrt(6)) * np.outer(x, x)
        np.testing.assert_allclose(a, expected, atol=1e-12)
        assert dg.rank1_deviation(a) <= 1e-12


class TestRank1Deviation:
    def test_outer_product_is_zero(self):
        u = np.arange(1.0, 5.0)
        v = np.arange(2.0, 8.0)
        assert dg.rank1_deviation(np.outer(u, v)) <= 1e-12

    def test_identity_2x2(self):
        np.testing.assert_allclose(
            dg.rank1_deviation(np.eye(2)), np.sqrt(0.5), rtol=1e-12
        )

    def test_zero_matrix_rejected(self):
        with pytest.raises(NumericError):
            dg.rank1_deviation(np.zeros((3, 3)))

    def test_tanh_small_scale_near_rank_one(self):
        # linearization claim: |x| <= 0.1 keeps tanh effectively linear
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = rng.uniform(-0.1, 0.1, 24)
            a = dg.attention_prelogits(
                x, rng.standard_normal(8), rng.standard_normal(8),
                activation="tanh",
            )
            assert dg.rank1_deviation(a) < 1e-2

    def test_breakdown_monotone_in_scale(self):
        means = []
        for scale in (0.01, 0.1, 1.0):
            devs = []
            for seed in range(20):
                rng = np.random.default_rng(seed)
                x = rng.uniform(-1, 1, 24) * scale
                a = dg.attention_prelogits(
                    x, rng.standard_normal(8), rng.standard_normal(8),
                    activation="tanh",
                )
                devs.append(dg.rank1_deviation(a))
            means.append(np.mean(devs))
        assert means[0] <= means[1] <= means[2]

    def test_multivariate_tokens_not_degenerate(self):
        devs = [dg.multivariate_deviation(seed) for seed in range(20)]
        assert np.median(devs) > 0.1


class TestBiasTermFit:
    def test_exact_basis_recovered(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(10)
        ones = np.ones(10)
        a = (0.7 * np.outer(x, x) - 1.2 * np.outer(x, ones)
             + 0.3 * np.outer(ones, x) + 2.0 * np.outer(ones, ones))
        coeffs, residual = dg.bias_term_fit(a, x)
        np.testing.assert_allclose(coeffs, [0.7, -1.2, 0.3, 2.0], atol=1e-10)
        assert residual <= 1e-12

    def test_small_signal_tanh_with_biases(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-0.1, 0.1, 20)
        a = dg.attention_prelogits(
            x, rng.standard_normal(8), rng.standard_normal(8),
            q_bias=0.05 * rng.standard_normal(8),
            k_bias=0.05 * rng.standard_normal(8),
            activation="tanh",
        )
        _, residual = dg.bias_term_fit(a, x)
        assert residual < 1e-2

    def test_saturation_breaks_linearization(self):
        rng = np.random.default_rng(3)
        x_small = rng.uniform(-0.1, 0.1, 20)
        x_large = x_small * 100.0  # |x| up to 10
        q, k = rng.standard_normal(8), rng.standard_normal(8)
        qb, kb = 0.05 * rng.standard_normal(8), 0.05 * rng.standard_normal(8)
        small = dg.bias_term_fit(
            dg.attention_prelogits(x_small, q, k, qb, kb, "tanh"), x_small
        )[1]
        large = dg.bias_term_fit(
            dg.attention_prelogits(x_large, q, k, qb, kb, "tanh"), x_large
        )[1]
        assert large > 10 * small

    def test_constant_x_rejected(self):
        with pytest.raises(InputError):
            dg.bias_term_fit(np.ones((4, 4)), np.ones(4))

    def test_residual_vanishes_with_scale(self):
        rng = np.random.default_rng(4)
        base = rng.uniform(-1, 1, 20)
        q, k = rng.standard_normal(8), rng.standard_normal(8)
        residuals = []
        for scale in (1.0, 0.1, 0.01):
            x = base * scale
            a = dg.attention_prelogits(x, q, k, activation="tanh")
            residuals.append(dg.bias_term_fit(a, x)[1])
        assert residuals[2] < residuals[1] < residuals[0]


class TestReluQuadrants:
    def test_all_positive_needs_both_signs(self):
        with pytest.raises(InputError, match="both signs"):
            dg.relu_quadrant_analysis(np.ones(5), np.ones(3), np.ones(3))

    def test_within_quadrant_spread_is_tiny(self):
        rng = np.random.default_rng(5)
        x = np.concatenate([rng.uniform(0.1, 1, 8), rng.uniform(-1, -0.1, 8)])
        out = dg.relu_quadrant_analysis(
            x, rng.standard_normal(6), rng.standard_normal(6)
        )
        for (si, sj), (const, spread) in out.items():
            assert spread < 1e-10 * max(1.0, abs(const))

    def test_negative_quadrants_zero_when_map_single_signed(self):
        # q,k all positive: negative x kills every query/key feature
        x = np.array([0.5, 1.0, -0.5, -1.0])
        q = np.ones(4)
        k = np.ones(4)
        out = dg.relu_quadrant_analysis(x, q, k)
        assert out[(-1, 1)][0] == 0.0
        assert out[(1, -1)][0] == 0.0
        assert out[(-1, -1)][0] == 0.0
        assert out[(1, 1)][0] > 0.0


class TestGrid:
    def test_grid_dimensions(self):
        records = dg.run_breakdown_grid(seeds=range(3))
        assert len(records) == 4 * 2 * 3
        assert all(0.0 <= r.rank1_deviation <= 1.0 for r in records)

    def test_grid_deterministic(self):
        a = dg.run_breakdown_grid(seeds=range(2))
        b = dg.run_breakdown_grid(seeds=range(2))
        assert a == b
