import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairopt.analytic import (
    StationaryParams,
    delta_threshold,
    density_grid,
    density_rmsprop,
    density_sgd,
    neighbourhood_mass,
    quadrature_moments,
    ratio_at_fair_min,
    rmsprop_favours_fair_min,
)
from fairopt.errors import InvalidParameterError, UndefinedThresholdError

GRID = [(round(p0, 2), eta) for p0 in np.arange(0.05, 0.46, 0.05) for eta in (0.01, 0.1, 0.2)]


class TestConstants:
    def test_kappa_vartheta(self):
        p = StationaryParams(0.1, 0.1)
        assert p.kappa == pytest.approx(8.3333, abs=1e-4)
        assert p.vartheta == pytest.approx(13.8889, abs=1e-4)

    def test_balanced_constants_coincide(self):
        p = StationaryParams(0.5, 0.1)
        assert p.kappa == pytest.approx(5.0) and p.vartheta == pytest.approx(5.0)

    @pytest.mark.parametrize("p0,eta", GRID)
    def test_vartheta_dominates(self, p0, eta):
        p = StationaryParams(p0, eta)
        assert p.vartheta > p.kappa

    @pytest.mark.parametrize("kwargs", [dict(p0=0.0, eta=0.1), dict(p0=1.0, eta=0.1), dict(p0=0.3, eta=0.0),
                                        dict(p0=0.3, eta=0.1, theta_global=0.0)])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            StationaryParams(**kwargs)


class TestDensities:
    def test_mode_height(self):
        p = StationaryParams(0.1, 0.1)
        # the mode sits at p0 - p1 = -0.8
        assert density_rmsprop(p, -0.8) == pytest.approx(math.sqrt(p.kappa / math.pi), rel=1e-15)
        assert density_sgd(p, -0.8) == pytest.approx(math.sqrt(p.vartheta / math.pi), rel=1e-15)

    def test_symmetric_at_balance(self):
        p = StationaryParams(0.5, 0.1)
        w = np.linspace(-1, 1, 11)
        assert np.allclose(density_rmsprop(p, w), density_rmsprop(p, -w))
        assert np.argmax(density_rmsprop(p, np.linspace(-1, 1, 201))) == 100
        assert np.allclose(density_rmsprop(p, w), density_sgd(p, w))

    @pytest.mark.parametrize("p0,eta", GRID)
    @pytest.mark.parametrize("which", ["rmsprop", "sgd"])
    def test_normalisation_and_mean(self, p0, eta, which):
        p = StationaryParams(p0, eta)
        mass, first = quadrature_moments(p, which)
        assert mass == pytest.approx(1.0, abs=1e-6)
        assert first == pytest.approx(p.mean, abs=1e-6)

    def test_normalisation_fixed_window(self):
        from scipy.integrate import simpson

        p = StationaryParams(0.1, 0.1)
        w = np.linspace(-10, 10, 200_001)
        assert simpson(density_rmsprop(p, w), x=w) == pytest.approx(1.0, abs=1e-6)
        assert simpson(density_sgd(p, w), x=w) == pytest.approx(1.0, abs=1e-6)

    def test_scalar_and_vector(self):
        p = StationaryParams(0.2, 0.1)
        assert isinstance(density_sgd(p, 0.0), float)
        assert density_sgd(p, np.zeros(3)).shape == (3,)

    def test_grid_default_range(self):
        p = StationaryParams(0.1, 0.1)
        w, _, _ = density_grid(p)
        half = 5 / math.sqrt(min(p.kappa, p.vartheta))
        assert w[0] == pytest.approx(p.mean - half) and w[-1] == pytest.approx(p.mean + half)
        assert len(w) == 401


class TestThreshold:
    def test_severe(self):
        assert delta_threshold(StationaryParams(0.1, 0.1)) == pytest.approx(0.21442, abs=1e-5)

    def test_mild(self):
        # kappa = 5.45545, vartheta = 5.95238: sqrt(0.5 * ln(1.091089) / 0.496933) = 0.296167
        assert delta_threshold(StationaryParams(0.3, 0.1)) == pytest.approx(0.296167, abs=1e-6)

    def test_balanced_undefined(self):
        with pytest.raises(UndefinedThresholdError):
            delta_threshold(StationaryParams(0.5, 0.1))

    def test_ratio_balanced(self):
        assert ratio_at_fair_min(StationaryParams(0.5, 0.1)) == 1.0

    def test_ratio_severe(self):
        p = StationaryParams(0.1, 0.1)
        r = ratio_at_fair_min(p)
        # independent route: evaluate both densities at the fair minimum
        assert r == pytest.approx(density_rmsprop(p, 0.0) / density_sgd(p, 0.0), rel=1e-12)
        assert r == pytest.approx(27.12, abs=0.02)

    @pytest.mark.parametrize("eta", [0.01, 0.1, 0.2])
    def test_ratio_grows_with_imbalance_once_above_one(self, eta):
        # near balance the ratio can dip below 1 (the threshold region) before
        # returning to exactly 1 at p0 = 0.5, so monotonicity holds on the >= 1 branch
        p0s = (0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15, 0.1, 0.05)
        ratios = [r for r in (ratio_at_fair_min(StationaryParams(p0, eta)) for p0 in p0s) if r >= 1]
        assert len(ratios) >= 3
        assert all(b > a for a, b in zip(ratios, ratios[1:]))

    def test_ratio_dips_below_one_inside_threshold(self):
        p = StationaryParams(0.45, 0.2)
        assert abs(p.mean) < delta_threshold(p)
        assert ratio_at_fair_min(p) < 1

    @pytest.mark.parametrize("p0,eta", GRID)
    def test_iff_identity_grid(self, p0, eta):
        p = StationaryParams(p0, eta)
        gap = abs(p.mean) - delta_threshold(p)
        assert abs(gap) > 1e-9
        assert (ratio_at_fair_min(p) > 1) == (gap > 0) == rmsprop_favours_fair_min(p)

    @given(st.floats(0.01, 0.49), st.floats(1e-3, 1.0))
    def test_iff_identity_random(self, p0, eta):
        p = StationaryParams(p0, eta)
        gap = abs(p.mean) - delta_threshold(p)
        if abs(gap) < 1e-9:
            return
        assert (ratio_at_fair_min(p) > 1) == (gap > 0) == rmsprop_favours_fair_min(p)

    def test_ratio_overflow_is_inf(self):
        assert ratio_at_fair_min(StationaryParams(0.015625, 0.0078125)) == math.inf


class TestNeighbourhoodMass:
    def test_matches_quadrature(self):
        from scipy.integrate import quad

        p = StationaryParams(0.3, 0.1)
        rms, sgd = neighbourhood_mass(p, 0.0, 0.2)
        assert rms == pytest.approx(quad(lambda w: density_rmsprop(p, w), -0.2, 0.2)[0], abs=1e-10)
        assert sgd == pytest.approx(quad(lambda w: density_sgd(p, w), -0.2, 0.2)[0], abs=1e-10)

    def test_full_line(self):
        rms, sgd = neighbourhood_mass(StationaryParams(0.2, 0.1), 0.0, 100.0)
        assert rms == pytest.approx(1.0) and sgd == pytest.approx(1.0)
