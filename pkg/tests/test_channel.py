"""Channel density, capacity, and the scalar functionals, against independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from raptorde.channel import (
    ChannelSpec,
    bhattacharyya,
    capacity,
    d_mean,
    error_probability,
    llr_density,
)
from raptorde.density import DEFAULT_GRID, Grid, QuantizedDensity, point_mass

from conftest import random_density, symmetry_residual


def q_func(x):
    return norm.sf(x)


class TestChannelSpec:
    def test_db_round_trip(self):
        ch = ChannelSpec.from_db(0.5)
        assert ch.gamma == pytest.approx(10 ** 0.05)
        assert ch.snr_db == pytest.approx(0.5)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ChannelSpec(0.0)


class TestLlrDensity:
    def test_moments(self):
        gamma = 1.0
        d = llr_density(ChannelSpec(gamma))
        assert d.total == pytest.approx(1.0, abs=1e-12)
        assert d.mean() == pytest.approx(2 * gamma, abs=d.grid.spacing)

    def test_huge_snr_saturates(self):
        d = llr_density(ChannelSpec(1e4))
        assert d.sat_pos == pytest.approx(1.0, abs=1e-12)

    def test_ber_matches_gaussian_tail(self):
        # tail of N(2*gamma, 4*gamma) below zero is Q(sqrt(gamma))
        gamma = 1.0
        d = llr_density(ChannelSpec(gamma))
        assert error_probability(d) == pytest.approx(q_func(np.sqrt(gamma)), abs=1e-3)

    def test_symmetry_condition(self):
        d = llr_density(ChannelSpec(1.0))
        assert symmetry_residual(d) < 3 * d.grid.spacing


class TestCapacity:
    def test_limits(self):
        assert capacity(ChannelSpec(1e-6)) < 1e-4
        assert capacity(ChannelSpec(1e4)) > 1 - 1e-6

    def test_monotone_in_snr(self):
        gammas = np.logspace(-2, 2, 20)
        caps = [capacity(ChannelSpec(g)) for g in gammas]
        assert all(b > a for a, b in zip(caps, caps[1:]))

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(123)
        for gamma in (10 ** 0.05, 1.0):
            n = 1_000_000
            x = rng.normal(2 * gamma, 2 * np.sqrt(gamma), size=n)
            samples = np.logaddexp(0.0, -x) / np.log(2.0)
            est = 1.0 - samples.mean()
            se = samples.std(ddof=1) / np.sqrt(n)
            assert abs(capacity(ChannelSpec(gamma)) - est) < 3 * se


class TestFunctionals:
    def test_point_mass_values(self, odd_grid):
        at_inf = QuantizedDensity(odd_grid, np.zeros(odd_grid.n), sat_pos=1.0)
        at_zero = point_mass(odd_grid, 0.0)
        assert bhattacharyya(at_inf) == 0.0
        assert bhattacharyya(at_zero) == pytest.approx(1.0)
        assert d_mean(at_inf) == pytest.approx(1.0)
        assert d_mean(at_zero) == pytest.approx(0.0)
        assert error_probability(at_inf) == 0.0
        assert error_probability(at_zero) == pytest.approx(0.5)

    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
    def test_bhattacharyya_closed_form(self, gamma):
        # integral of N(2g, 4g) against exp(-l/2) equals exp(-g/2)
        d = llr_density(ChannelSpec(gamma))
        assert bhattacharyya(d) == pytest.approx(np.exp(-gamma / 2), abs=1e-3)

    def test_d_mean_quadrature_oracle(self):
        gamma = 1.0
        d = llr_density(ChannelSpec(gamma))
        ref, _ = quad(
            lambda l: norm.pdf(l, 2 * gamma, 2 * np.sqrt(gamma)) * np.tanh(l / 2),
            -30,
            40,
        )
        assert d_mean(d) == pytest.approx(ref, abs=1e-3)

    def test_d_mean_monotone_under_degradation(self):
        d1 = llr_density(ChannelSpec(2.0))
        d2 = llr_density(ChannelSpec(0.5))
        assert d_mean(d1) > d_mean(d2)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_error_probability_bounded_by_bhattacharyya(self, seed):
        grid = Grid(401, 0.05)
        d = random_density(grid, np.random.default_rng(seed))
        assert error_probability(d) <= bhattacharyya(d) + 1e-12
