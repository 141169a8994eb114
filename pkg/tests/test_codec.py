"""Finite-length codec: sampling, encoding, decoding, protocol, op accounting."""

import itertools

import numpy as np
import pytest

from raptorde.codec import (
    Incremental,
    MessageReset,
    TransmissionConfig,
    bp_decode_attempt,
    encode,
    incremental_ops,
    message_reset_ops,
    run_transmission,
    sample_graph,
)
from raptorde.ensemble import LtDistribution, PrecodeDistribution
from raptorde.fixtures import load_fixture

REP = LtDistribution({1: 1.0})
MIX = LtDistribution({1: 0.06, 2: 0.46, 3: 0.28, 4: 0.2})
PRE_3_60 = PrecodeDistribution.regular(3, 60)


class TestSampling:
    def test_identity_precode_repetition(self):
        g = sample_graph((REP, None), k=4, rng_seed=11)
        msg = np.array([1, 0, 1, 1], dtype=np.uint8)
        out = encode(g, msg, 12)
        for i in range(12):
            assert out[i] == msg[g.lt_neighbors(i)[0]]

    def test_regular_precode_shape(self):
        g = sample_graph((REP, PRE_3_60), k=950, rng_seed=1)
        assert g.n == 1000
        degrees = np.bincount(g.pc_var, minlength=g.n)
        assert set(degrees.tolist()) == {3}
        assert g.pc_ptr.shape[0] - 1 == 50
        # no duplicate neighbors inside any check
        for c in range(50):
            seg = g.pc_var[g.pc_ptr[c] : g.pc_ptr[c + 1]]
            assert np.unique(seg).shape[0] == seg.shape[0]

    def test_same_seed_same_graph(self):
        a = sample_graph((MIX, PRE_3_60), k=950, rng_seed=42)
        b = sample_graph((MIX, PRE_3_60), k=950, rng_seed=42)
        a.grow_lt(64)
        b.grow_lt(64)
        assert np.array_equal(a.pc_var, b.pc_var)
        for x, y in zip(a._lt_neighbors, b._lt_neighbors):
            assert np.array_equal(x, y)

    def test_growth_order_independent_of_batching(self):
        a = sample_graph((MIX, PRE_3_60), k=950, rng_seed=9)
        b = sample_graph((MIX, PRE_3_60), k=950, rng_seed=9)
        a.grow_lt(10)
        a.grow_lt(40)
        b.grow_lt(40)
        for x, y in zip(a._lt_neighbors, b._lt_neighbors):
            assert np.array_equal(x, y)


class TestEncoding:
    def test_zero_message_zero_outputs(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=2)
        assert not encode(g, np.zeros(950, np.uint8), 200).any()

    def test_parity_holds(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=3)
        msg = np.random.default_rng(0).integers(0, 2, 950).astype(np.uint8)
        assert g.parity_ok(g.precode_codeword(msg))

    def test_linearity_over_random_pairs(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=4)
        rng = np.random.default_rng(5)
        for _ in range(100):
            m1 = rng.integers(0, 2, 950).astype(np.uint8)
            m2 = rng.integers(0, 2, 950).astype(np.uint8)
            assert np.array_equal(
                encode(g, m1, 40) ^ encode(g, m2, 40), encode(g, m1 ^ m2, 40)
            )


class TestBpExactness:
    def test_tree_instances_match_brute_force(self):
        """Chain-shaped instances: sum-product equals exact marginalization."""
        gamma = 0.8
        rng = np.random.default_rng(17)
        for k in (3, 5, 8):
            g = sample_graph((REP, None), k=k, rng_seed=1)
            # overwrite the rateless adjacency with a deterministic tree:
            # one single-bit output per bit plus a chain of pair outputs
            neighbors = [np.array([i], dtype=np.int32) for i in range(k)]
            neighbors += [np.array([i, i + 1], dtype=np.int32) for i in range(k - 1)]
            g._lt_neighbors = neighbors
            g._lt_offsets = [0] + list(
                itertools.accumulate(len(nb) for nb in neighbors)
            )
            msg = rng.integers(0, 2, k).astype(np.uint8)
            out = encode(g, msg, len(neighbors))
            sigma = 1.0 / np.sqrt(gamma)
            y = (1.0 - 2.0 * out) + rng.normal(0, sigma, out.shape[0])
            llrs = 2.0 * y / sigma**2

            est, _msgs, _ops, stats = bp_decode_attempt(
                g, llrs, MessageReset(T=4 * k), msg_clamp=np.inf
            )

            # brute force over all messages
            words = np.array(list(itertools.product([0, 1], repeat=k)), dtype=np.uint8)
            outs = np.zeros((words.shape[0], len(neighbors)), dtype=np.uint8)
            for j, nb in enumerate(neighbors):
                outs[:, j] = np.bitwise_xor.reduce(words[:, nb], axis=1)
            # log-likelihood of each word given the received llrs
            loglik = (llrs * (1.0 - 2.0 * outs.astype(float)) / 2.0).sum(axis=1)
            w = np.exp(loglik - loglik.max())
            exact = np.log(
                np.array(
                    [
                        w[words[:, v] == 0].sum() / w[words[:, v] == 1].sum()
                        for v in range(k)
                    ]
                )
            )
            np.testing.assert_allclose(stats.posterior, exact, atol=1e-9)


class TestOpAccounting:
    def test_formula_arithmetic(self):
        ops = message_reset_ops(n=100, i_v=3, m=50, dm=10, j_c=3, d_c=3, T=2)
        assert ops.variable_ops == (100 * 3 + 50 + 10) * 2 == 720
        assert ops.check_ops == (50 * 3 + 10 * 3) * 2

    def test_run_counters_match_formulas(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=8)
        msg = np.random.default_rng(1).integers(0, 2, 950).astype(np.uint8)
        rng = np.random.default_rng(2)
        T = 12
        cfg = TransmissionConfig(
            m_f=1250, delta_m=100, strategy=MessageReset(T=T), max_attempts=3,
            gamma=0.05, lt_stall_exit=False,
        )
        res = run_transmission(g, msg, cfg, rng)
        for p, st in enumerate(res.per_attempt, start=1):
            m_prev = cfg.m_f + (p - 2) * cfg.delta_m if p > 1 else 0
            dm = st.outputs_used - m_prev
            i_v = st.lt_edges / g.n
            # old/new checks share the degree distribution; split edge counts
            used = np.arange(st.outputs_used)
            degs = np.array([g.lt_neighbors(int(i)).shape[0] for i in used])
            j_c = degs[:m_prev].mean() if m_prev else 0.0
            d_c = degs[m_prev:].mean()
            expect = message_reset_ops(g.n, i_v, m_prev, dm, j_c, d_c, st.lt_iterations)
            assert st.ops.variable_ops == expect.variable_ops
            assert st.ops.check_ops == expect.check_ops

    def test_incremental_reuse_cuts_variable_ops(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=8)
        msg = np.random.default_rng(1).integers(0, 2, 950).astype(np.uint8)
        T = 10
        base = dict(m_f=1250, delta_m=100, max_attempts=3, gamma=0.05, lt_stall_exit=False)
        full = run_transmission(
            g, msg, TransmissionConfig(strategy=MessageReset(T=T), **base),
            np.random.default_rng(3),
        )
        partial = run_transmission(
            g, msg, TransmissionConfig(strategy=Incremental(T=T, x=0.5), **base),
            np.random.default_rng(3),
        )
        for a, b in zip(full.per_attempt[1:], partial.per_attempt[1:]):
            assert b.ops.variable_ops < a.ops.variable_ops

    def test_incremental_x1_zero_priors_equals_reset(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=12)
        g.grow_lt(1400)
        llrs = np.random.default_rng(4).normal(0.4, 1.0, 1400)
        E = g.lt_edge_count(1400)
        est_r, _, ops_r, st_r = bp_decode_attempt(g, llrs, MessageReset(T=9))
        est_i, _, ops_i, st_i = bp_decode_attempt(
            g, llrs, Incremental(T=9, x=1.0), prior_messages=np.zeros(E)
        )
        assert np.array_equal(est_r, est_i)
        np.testing.assert_array_equal(st_r.posterior, st_i.posterior)
        assert ops_r == ops_i


class TestTransmission:
    def test_generous_budget_single_attempt(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=21)
        msg = np.random.default_rng(7).integers(0, 2, 950).astype(np.uint8)
        cfg = TransmissionConfig(
            m_f=1600, delta_m=50, strategy=MessageReset(T=120), gamma=30.0,
            lt_stall_exit=True,
        )
        res = run_transmission(g, msg, cfg, np.random.default_rng(8))
        assert res.success and res.attempts_used == 1
        assert res.realized_rate == pytest.approx(950 / 1600)

    def test_max_attempts_recorded_not_raised(self):
        g = sample_graph((MIX, PRE_3_60), k=950, rng_seed=22)
        msg = np.random.default_rng(9).integers(0, 2, 950).astype(np.uint8)
        cfg = TransmissionConfig(
            m_f=1000, delta_m=10, strategy=MessageReset(T=5), max_attempts=3,
            gamma=0.05, lt_stall_exit=True,
        )
        res = run_transmission(g, msg, cfg, np.random.default_rng(10))
        assert not res.success
        assert res.max_attempts_exceeded
        assert res.attempts_used == 3
