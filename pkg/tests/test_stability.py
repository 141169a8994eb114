"""Closed-form stability checkers against plug-in values and published codes."""

import numpy as np
import pytest

from raptorde.channel import ChannelSpec, bhattacharyya, capacity, d_mean, llr_density
from raptorde.density import Grid, QuantizedDensity, point_mass
from raptorde.ensemble import (
    CheckNodeTerm,
    LtDistribution,
    MetEnsemble,
    NodeChannel,
    PrecodeDistribution,
    VariableNodeTerm,
    make_ensemble,
)
from raptorde.fixtures import load_fixture
from raptorde.stability import joint_stability, ldpc_stability, tandem_lt_stability

V = VariableNodeTerm
C = CheckNodeTerm
P = NodeChannel.PUNCTURED
T = NodeChannel.TRANSMITTED


class TestJointStability:
    def test_without_degree_two_is_vacuous(self):
        fx = load_fixture("table4_m10db")  # all precode degrees are 3
        rep = joint_stability(fx.ensemble, ChannelSpec.from_db(-10.0))
        assert rep.condition_value == 0.0
        assert rep.satisfied

    def test_high_snr_limit(self):
        e = make_ensemble(
            [V((2, 2, 0), P, 0.5), V((0, 0, 1), T, 1.0)],
            [C((2, 0, 0), 0.5), C((0, 1, 1), 1.0)],
        )
        rep = joint_stability(e, ChannelSpec(1e4))
        assert rep.condition_value < 1e-3
        assert rep.satisfied

    @pytest.mark.parametrize(
        "name,db",
        [
            ("table4_m10db", -10.0),
            ("table4_m5db", -5.0),
            ("table4_0db", 0.0),
            ("table4_5db", 5.0),
            ("table4_10db", 10.0),
        ],
    )
    def test_published_designs_pass(self, name, db):
        fx = load_fixture(name)
        rep = joint_stability(fx.ensemble, ChannelSpec.from_db(db))
        assert rep.satisfied, str(rep)

    def test_monotone_in_snr(self):
        e = make_ensemble(
            [V((2, 3, 0), P, 0.5), V((0, 0, 1), T, 1.0)],
            [C((2, 0, 0), 0.5), C((0, 1, 1), 0.6), C((0, 2, 1), 0.4)],
        )
        values = [
            joint_stability(e, ChannelSpec(g)).condition_value
            for g in np.logspace(-1, 1, 8)
        ]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_scaling_leaves_verdict_unchanged(self):
        fx = load_fixture("table4_5db")
        e = fx.ensemble
        scaled = MetEnsemble(
            tuple(V(t.degrees, t.channel, 3.0 * t.fraction) for t in e.variable_terms),
            tuple(C(c.degrees, 3.0 * c.fraction) for c in e.check_terms),
            3,
        )
        ch = ChannelSpec.from_db(5.0)
        a = joint_stability(e, ch)
        b = joint_stability(scaled, ch)
        assert a.condition_value == pytest.approx(b.condition_value, rel=1e-12)


class TestTandemLtStability:
    def test_noiseless_limit_bound(self):
        # with beta/alpha -> 1 and the channel nearly noiseless the bound is 1/2
        lt = LtDistribution({1: 0.5, 3: 0.5})
        ch = ChannelSpec(1e4)
        rep = tandem_lt_stability(lt, alpha=lt.beta, ch=ch)
        assert rep.threshold == pytest.approx(0.5, abs=1e-6)

    def test_missing_degree_two_fails(self):
        lt = LtDistribution({1: 0.3, 3: 0.7})
        rep = tandem_lt_stability(lt, alpha=5.0, ch=ChannelSpec(1.0))
        assert not rep.satisfied

    def test_reference_code_capacity_bound(self):
        fx = load_fixture("table1_reference2")
        ch = ChannelSpec.from_db(0.5)
        alpha = fx.beta / 0.5056
        rep = tandem_lt_stability(fx.omega, alpha, ch)
        cap_bound = rep.inputs_summary["capacity_approaching_bound"]
        assert cap_bound < 0.492
        assert rep.inputs_summary["capacity_approaching_satisfied"]
        assert rep.satisfied

    def test_exact_form_reported(self):
        fx = load_fixture("table1_reference2")
        rep = tandem_lt_stability(fx.omega, 22.0, ChannelSpec.from_db(0.5))
        assert "exact_form_value" in rep.inputs_summary
        assert rep.inputs_summary["exact_form_satisfied"] == (
            rep.inputs_summary["exact_form_value"] >= 1.0
        )


class TestLdpcStability:
    def test_no_degree_two_always_satisfied(self):
        p = PrecodeDistribution.regular(3, 60)
        junk = point_mass(Grid(101, 0.1), -2.0)
        rep = ldpc_stability(p, junk)
        assert rep.condition_value == 0.0
        assert rep.satisfied

    def test_perfect_handoff(self):
        p = PrecodeDistribution(lam={2: 0.4, 3: 0.6}, rho={10: 1.0}, rate=0.7)
        g = Grid(101, 0.1)
        certain = QuantizedDensity(g, np.zeros(101), sat_pos=1.0)
        rep = ldpc_stability(p, certain)
        assert rep.threshold == float("inf")
        assert rep.satisfied

    def test_threshold_formula(self):
        p = PrecodeDistribution(lam={2: 0.5, 3: 0.5}, rho={6: 1.0}, rate=0.5)
        d = llr_density(ChannelSpec(1.0), Grid(2001, 0.02))
        rep = ldpc_stability(p, d)
        assert rep.condition_value == pytest.approx(0.5 * 5.0)
        assert rep.threshold == pytest.approx(1.0 / bhattacharyya(d))
        assert rep.satisfied == (rep.condition_value <= rep.threshold)
