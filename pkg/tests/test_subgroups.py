import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairopt.errors import InvalidParameterError, ValidationError
from fairopt.stats import SeededStream
from fairopt.subgroups import (
    NgosSpec,
    QuadraticSubgroups,
    dp_gap,
    population_gradient,
    population_loss,
    sample_gradient,
    sample_ngos_batch,
    sample_ngos_gradient,
    sample_subgroup_ngos,
    subgroup_gradient,
    subgroup_loss,
    validate_ngos,
)


class TestQuadratic:
    @pytest.mark.parametrize("q,w,expected", [(0, 1.0, 0.0), (1, 1.0, 2.0), (0, 0.0, 0.5)])
    def test_subgroup_loss(self, q, w, expected):
        assert subgroup_loss(QuadraticSubgroups(), q, w) == expected

    def test_bad_subgroup(self):
        with pytest.raises(InvalidParameterError):
            subgroup_loss(QuadraticSubgroups(), 2, 0.0)

    def test_population_loss_balanced(self):
        assert population_loss(QuadraticSubgroups(0.5), 0.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("p0,root", [(0.5, 0.0), (0.9, 0.8), (0.1, -0.8)])
    def test_minimizer(self, p0, root):
        m = QuadraticSubgroups(p0)
        assert m.minimizer == pytest.approx(root, abs=1e-15)
        assert population_gradient(m, m.minimizer) == pytest.approx(0.0, abs=1e-15)

    def test_p1_derived(self):
        m = QuadraticSubgroups(0.3)
        assert m.p0 + m.p1 == 1.0

    @given(st.floats(0, 1), st.floats(-50, 50))
    def test_population_gradient_matches_mixture(self, p0, w):
        m = QuadraticSubgroups(p0)
        mix = p0 * subgroup_gradient(m, 0, w) + (1 - p0) * subgroup_gradient(m, 1, w)
        assert population_gradient(m, w) == pytest.approx(mix, abs=1e-9)

    @pytest.mark.parametrize("w,gap", [(0.0, 0.0), (0.5, 1.0), (-2.0, 4.0)])
    def test_dp_gap(self, w, gap):
        assert dp_gap(QuadraticSubgroups(), w) == pytest.approx(gap)

    def test_gradient_variance(self):
        assert QuadraticSubgroups(0.1).gradient_variance == pytest.approx(0.36)

    @pytest.mark.parametrize("p0", [-0.1, 1.1, math.nan])
    def test_invalid_p0(self, p0):
        with pytest.raises(InvalidParameterError):
            QuadraticSubgroups(p0)


class TestSampleGradient:
    def test_degenerate_mixture(self):
        m = QuadraticSubgroups(1.0)
        s = SeededStream(0)
        for _ in range(100):
            g, q = sample_gradient(m, s, 0.3)
            assert q == 0 and g == pytest.approx(0.3 - 1.0)

    def test_moments(self):
        m = QuadraticSubgroups(0.1)
        s = SeededStream(4)
        # vectorised equivalent of 10**6 calls: subgroup 0 when uniform < p0
        u = s.uniform(1_000_000)
        g = np.where(u < m.p0, 0.0 - m.center_0, 0.0 - m.center_1)
        se_mean = math.sqrt(0.36 / g.size)
        assert abs(g.mean() - 0.8) < 3 * se_mean
        # var of the sample variance for a two-point law: (mu4 - sigma^4)/n
        mu4 = 0.1 * 0.9 * (0.9**3 + 0.1**3) * 16
        assert abs(g.var() - 0.36) < 3 * math.sqrt((mu4 - 0.36**2) / g.size)

    def test_scalar_sampler_matches_rule(self):
        m = QuadraticSubgroups(0.3)
        a, b = SeededStream(8), SeededStream(8)
        for _ in range(50):
            g, q = sample_gradient(m, a, 0.2)
            assert q == (0 if b.uniform() < 0.3 else 1)


class TestNgos:
    def test_noiseless(self):
        spec = NgosSpec(mu_0=(1.5, -2.0), mu_1=(0.0, 0.0), theta_0=(0.0, 0.0), theta_1=(0.0, 0.0), p0=1.0)
        # p0 = 1 is outside the validated (0, 1) range, so draw the subgroup directly
        g = sample_subgroup_ngos(spec, SeededStream(0), 0, 3)
        assert np.array_equal(g, np.tile([1.5, -2.0], (3, 1)))

    def test_mixture_mean_and_second_moment(self):
        spec = NgosSpec()
        g, _ = sample_ngos_batch(spec, SeededStream(1), (1_000_000,))
        assert abs(g.mean()) < 3 * math.sqrt(2.0 / 1e6)
        # var(g^2) for the mixture: E[g^4] - 4, E[g^4] = 1 + 6 + 3 = 10
        assert abs((g**2).mean() - 2.0) < 3 * math.sqrt(6.0 / 1e6)

    def test_second_moment_and_d(self):
        spec = NgosSpec()
        assert spec.second_moment()[0] == pytest.approx(2.0)
        assert spec.preconditioner(0.0)[0] == pytest.approx(0.70711, abs=1e-5)

    def test_theta_global_scales_noise(self):
        spec = NgosSpec(theta_global=2.0)
        assert spec.second_moment()[0] == pytest.approx(1.0 + 4.0)

    def test_single_draw_validates(self):
        with pytest.raises(ValidationError):
            sample_ngos_gradient(NgosSpec(theta_0=(-1.0,)), SeededStream(0))

    def test_single_draw_shape(self):
        g, q = sample_ngos_gradient(NgosSpec(mu_0=(1, 2, 3), mu_1=(0, 0, 0), theta_0=(1, 1, 1), theta_1=(2, 2, 2)),
                                    SeededStream(0))
        assert g.shape == (3,) and q in (0, 1)


class TestValidation:
    def test_gaussian_passes(self):
        assert validate_ngos(NgosSpec()).ok

    def test_negative_theta(self):
        r = validate_ngos(NgosSpec(theta_0=(-1.0,)))
        assert "nonnegative_noise_scales" in r.failures

    def test_infinite_mu(self):
        r = validate_ngos(NgosSpec(mu_0=(math.inf,)))
        assert "finite_parameters" in r.failures

    def test_dimension_mismatch(self):
        r = validate_ngos(NgosSpec(mu_0=(1.0, 2.0)))
        assert "dimensions" in r.failures

    def test_huge_noise(self):
        r = validate_ngos(NgosSpec(theta_0=(1e7,)))
        assert "bounded_covariance_root" in r.failures

    def test_report_serialises(self):
        d = validate_ngos(NgosSpec()).to_dict()
        assert d["ok"] and d["checks"]["low_skewness"]["passed"]
