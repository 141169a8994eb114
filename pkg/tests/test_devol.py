"""Density-evolution engine: schedules, fixed points, and the rate search."""

import math

import numpy as np
import pytest

from raptorde.channel import ChannelSpec, d_mean, error_probability, llr_density
from raptorde.density import Grid, point_mass
from raptorde.devol import (
    EdgeDensities,
    IncrementalTandem,
    Joint,
    RaptorCodeFamily,
    ScaledEnsembleFamily,
    Tandem,
    check_convolve,
    de_incremental_attempt,
    de_joint,
    de_tandem,
    realized_rate_search,
    run_incremental_schedule,
    variable_convolve,
)
from raptorde.ensemble import (
    EDGE_LT,
    EDGE_NEW,
    CheckNodeTerm,
    LtDistribution,
    NodeChannel,
    PrecodeDistribution,
    VariableNodeTerm,
    build_incremental_ensemble,
    build_raptor,
    lt_rate,
    make_ensemble,
    scale_lt_rate,
)
from raptorde.errors import NoFeasibleRate
from raptorde.fixtures import load_fixture

V = VariableNodeTerm
C = CheckNodeTerm
P = NodeChannel.PUNCTURED
T = NodeChannel.TRANSMITTED

COARSE = Grid(1000, 0.03)


def repetition_toy():
    """Every input bit is copied onto three output bits; no precode."""
    return make_ensemble(
        [V((0, 3, 0), P, 1.0 / 3), V((0, 0, 1), T, 1.0)],
        [C((0, 1, 1), 1.0)],
    )


class TestConvolutionExports:
    def test_ops_are_shared_with_density_layer(self):
        import raptorde.density as d

        assert variable_convolve is d.variable_convolve
        assert check_convolve is d.check_convolve


class TestJoint:
    def test_repetition_toy_matches_sampled_graph(self):
        gamma = 2.0
        e = repetition_toy()
        res = de_joint(e, ChannelSpec(gamma), Joint(max_iter=40), p_star=1e-6)
        traj = res.ber_trajectory
        assert traj.shape[0] == res.iterations_used
        assert all(b <= a + 1e-12 for a, b in zip(traj, traj[1:]))
        assert not res.converged and res.stalled

        # independent oracle: belief propagation on a sampled 200-node graph;
        # outputs are copies, so the posterior is the sum of each bit's three
        # channel observations
        rng = np.random.default_rng(42)
        n, copies, trials = 200, 3, 400
        errs = 0
        for _ in range(trials):
            assign = np.repeat(np.arange(n), copies)
            rng.shuffle(assign)
            llr = rng.normal(2 * gamma, 2 * np.sqrt(gamma), size=assign.shape[0])
            post = np.zeros(n)
            np.add.at(post, assign, llr)
            errs += int((post < 0).sum())
        mc = errs / (n * trials)
        sigma = math.sqrt(mc * (1 - mc) / (n * trials))
        assert abs(traj[-1] - mc) < 3 * sigma + 5e-4

    def test_scaled_above_capacity_fails(self):
        fx = load_fixture("table4_0db")
        e = scale_lt_rate(fx.ensemble, lt_rate(fx.ensemble) * 1.1)  # > capacity
        res = de_joint(e, ChannelSpec(1.0), Joint(max_iter=120), p_star=1e-6, grid=COARSE)
        assert not res.converged

    @pytest.mark.slow
    def test_published_point_converges_just_below_design(self):
        fx = load_fixture("table4_0db")
        e = scale_lt_rate(fx.ensemble, lt_rate(fx.ensemble) * 0.95)
        res = de_joint(e, ChannelSpec(1.0), Joint(max_iter=300), p_star=1e-6, grid=COARSE)
        assert res.converged
        assert all(
            b <= a + 1e-12 for a, b in zip(res.ber_trajectory, res.ber_trajectory[1:])
        )


class TestTandem:
    def test_zero_target_skips_the_rateless_stage(self):
        fx = load_fixture("lt_0db_incremental")
        e = build_raptor(fx.omega, fx.precode, 0.45)
        res = de_tandem(e, ChannelSpec(1.0), Tandem(mu0=0.0, max_iter_ldpc=50), grid=COARSE)
        assert res.stage_one_iterations == 0
        assert not res.converged
        assert res.ber_trajectory[-1] == pytest.approx(0.5, abs=0.02)

    def test_repetition_mean_reaches_channel_limit(self):
        gamma = 2.0
        e = repetition_toy()
        res = de_tandem(
            e, ChannelSpec(gamma), Tandem(mu0=1e9, max_iter_lt=60, max_iter_ldpc=5),
            grid=COARSE,
        )
        # copies hand the channel message straight through: the decoded mean
        # settles at (average degree) * (channel mean)
        assert res.stage_one_stalled
        assert res.decoded_mean == pytest.approx(3 * 2 * gamma, rel=0.01)

    def test_stage_one_messages_approach_channel(self):
        # the check-to-variable density drifts toward the channel message as
        # iterations accumulate
        from raptorde.devol import _MetDe
        from raptorde.ensemble import EDGE_CHANNEL

        gamma = 3.0
        e = make_ensemble(
            [V((0, 2, 0), P, 0.6), V((0, 3, 0), P, 0.1), V((0, 0, 1), T, 1.0)],
            [C((0, 1, 1), 0.4), C((0, 2, 1), 0.45), C((0, 1, 1), 0.0), C((0, 3, 1), 0.15)],
        )
        grid = COARSE
        chan = llr_density(ChannelSpec(gamma), grid)
        engine = _MetDe(e, chan, active=(EDGE_LT, EDGE_CHANNEL))
        a = engine.var_messages(None)
        dists = []
        for _ in range(25):
            b = engine.check_messages(a)
            dists.append(abs(d_mean(b[EDGE_LT]) - d_mean(chan)))
            a = engine.var_messages(b)
        assert dists[-1] < dists[0]
        tail = dists[5:]
        assert all(y <= x + 1e-9 for x, y in zip(tail, tail[1:]))


class TestIncremental:
    def _code(self):
        fx = load_fixture("lt_0db_incremental")
        return fx.omega, fx.precode

    def test_zero_reuse_ignores_priors(self):
        omega, precode = self._code()
        e4 = build_incremental_ensemble(omega, precode, r_prev=0.6, r_now=0.5, reuse_fraction=0.0)
        grid = COARSE
        sched = IncrementalTandem(T=8, x=0.0, max_iter_ldpc=10)
        ch = ChannelSpec(1.0)
        rich_prior = EdgeDensities({}, {EDGE_LT: llr_density(ch, grid)}, 5)
        a = de_incremental_attempt(e4, None, ch, sched, grid=grid)
        b = de_incremental_attempt(e4, rich_prior, ch, sched, grid=grid)
        np.testing.assert_array_equal(a.ber_trajectory, b.ber_trajectory)

    def test_zero_prior_equals_message_reset_exactly(self):
        omega, precode = self._code()
        e4 = build_incremental_ensemble(omega, precode, r_prev=0.6, r_now=0.5, reuse_fraction=1.0)
        grid = Grid(1001, 0.03)  # zero LLR is exactly on odd grids
        sched = IncrementalTandem(T=10, x=1.0, max_iter_ldpc=10)
        ch = ChannelSpec(1.0)
        zero_prior = EdgeDensities({}, {EDGE_LT: point_mass(grid, 0.0)}, 3)
        reset = de_incremental_attempt(e4, None, ch, sched, grid=grid)
        seeded = de_incremental_attempt(e4, zero_prior, ch, sched, grid=grid)
        np.testing.assert_array_equal(reset.ber_trajectory, seeded.ber_trajectory)
        for key in reset.final_densities.check_to_var:
            np.testing.assert_array_equal(
                reset.final_densities.check_to_var[key].masses,
                seeded.final_densities.check_to_var[key].masses,
            )

    @pytest.mark.slow
    def test_chained_reuse_beats_message_reset(self):
        omega, precode = self._code()
        ch = ChannelSpec(1.0)
        sched = IncrementalTandem(T=50, x=1.0, max_iter_ldpc=150)
        # output bits accumulate: rateless rate falls step by step
        rates = [0.60, 0.55, 0.52, 0.50, 0.485, 0.47, 0.455, 0.44]
        inc = run_incremental_schedule(
            omega, precode, ch, sched, rates, p_star=1e-6, grid=COARSE
        )
        reset = run_incremental_schedule(
            omega, precode, ch, sched, rates, message_reset=True, p_star=1e-6, grid=COARSE
        )

        def first_success(outcomes):
            for o in outcomes:
                if o.converged:
                    return o.attempt
            return len(rates) + 1

        assert first_success(inc) <= first_success(reset)


class TestRateSearch:
    @pytest.mark.slow
    def test_family_far_above_design_point(self):
        # decoding only gets easier as the channel improves, so the realized
        # rate at 6 dB clears the 0 dB design point (joint decoding: no
        # hand-off threshold to retune)
        fx = load_fixture("lt_0db_incremental")  # designed at 0 dB
        fam = RaptorCodeFamily(fx.omega, fx.precode)
        res = realized_rate_search(
            fam,
            ChannelSpec.from_db(6.0),
            Joint(max_iter=300),
            resolution=2e-3,
            grid=COARSE,
            screen_grid=None,
        )
        design_at_zero = 0.4595  # its design-point rate
        assert res.design_rate >= design_at_zero
        assert 0 < res.eta <= 1.02

    def test_no_feasible_rate(self):
        e = repetition_toy()
        fam = ScaledEnsembleFamily(e)
        with pytest.raises(NoFeasibleRate):
            realized_rate_search(
                fam,
                ChannelSpec(1.0),
                Joint(max_iter=30),
                r_lo=0.25,
                r_hi=0.4,
                resolution=5e-3,
                grid=Grid(500, 0.06),
                screen_grid=None,
            )

    @pytest.mark.slow
    def test_scaled_family_brackets_published_threshold(self):
        fx = load_fixture("table4_0db")
        fam = ScaledEnsembleFamily(fx.ensemble)
        res = realized_rate_search(
            fam,
            ChannelSpec(1.0),
            Joint(max_iter=250),
            resolution=1e-3,
            grid=COARSE,
            screen_grid=None,
            r_lo=0.40,
            r_hi=0.52,
        )
        assert 0.9 <= res.eta <= 1.0
        assert res.r_lt <= res.bracket[1]
