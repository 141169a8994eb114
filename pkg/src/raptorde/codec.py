"""Finite-length Raptor codec and the multi-attempt rateless transmission protocol.

A sampled graph couples a precode parity-check structure with a lazily grown
rateless adjacency.  Decoding runs the rateless stage for a fixed number of
belief-propagation iterations (message-reset from zero, or incremental from
the previous attempt's check-to-variable messages), hands the decoded LLRs to
the precode decoder, and reports exact operation counts for the rateless
component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .ensemble import LtDistribution, MetEnsemble, PrecodeDistribution, extract_lt, extract_precode
from .errors import SamplingFailed, SingularPrecode

DEFAULT_MSG_CLAMP = 15.0


# ---------------------------------------------------------------------------
# Strategies and configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MessageReset:
    """Restart rateless BP from zero messages at every decoding attempt."""

    T: int


@dataclass(frozen=True)
class Incremental:
    """Seed each attempt from the previous attempt's check-to-variable messages.

    Only a fraction ``x`` of the previously received output bits stays in the
    decoding graph.
    """

    T: int
    x: float

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError("reuse fraction x must lie in [0, 1]")


Strategy = MessageReset | Incremental


@dataclass(frozen=True)
class TransmissionConfig:
    m_f: int
    delta_m: int
    strategy: Strategy
    max_attempts: int = 100
    gamma: float = 1.0
    ldpc_iters: int = 200
    msg_clamp: float = DEFAULT_MSG_CLAMP
    lt_stall_exit: bool = False

    def __post_init__(self):
        if self.m_f < 1 or self.delta_m < 1:
            raise ValueError("m_f and delta_m must be at least 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass
class ComplexityCount:
    variable_ops: int = 0
    check_ops: int = 0

    def __add__(self, other: "ComplexityCount") -> "ComplexityCount":
        return ComplexityCount(
            self.variable_ops + other.variable_ops, self.check_ops + other.check_ops
        )


# ---------------------------------------------------------------------------
# Graph sampling
# ---------------------------------------------------------------------------


def _degree_counts(fractions: dict[int, float], total: int) -> dict[int, int]:
    """Integer node counts per degree by largest remainder."""
    raw = {d: w * total for d, w in fractions.items()}
    counts = {d: int(np.floor(v)) for d, v in raw.items()}
    short = total - sum(counts.values())
    rema = sorted(raw, key=lambda d: raw[d] - counts[d], reverse=True)
    for d in rema[:short]:
        counts[d] += 1
    return {d: c for d, c in counts.items() if c > 0}


class RaptorGraph:
    """One sampled code instance: precode structure plus growable rateless side.

    ``precode=None`` means the identity precode (input bits are the message
    bits, no parity constraints).
    """

    def __init__(
        self,
        omega: LtDistribution,
        precode: PrecodeDistribution | None,
        k: int,
        seed: int,
    ):
        self.omega = omega
        self.precode = precode
        self.k = k
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.n = k if precode is None else int(round(k / precode.rate_from_profile))
        if precode is None:
            self.pc_ptr = np.zeros(1, dtype=np.int64)
            self.pc_var = np.zeros(0, dtype=np.int32)
            self.rank = 0
            self.info_positions = np.arange(k)
            self.pinned_positions = np.zeros(0, dtype=np.int64)
            self.parity_positions = np.zeros(0, dtype=np.int64)
            self._parity_matrix = np.zeros((0, k), dtype=np.uint8)
        else:
            self._sample_precode()
            self._setup_encoder()
        # rateless adjacency, grown on demand; a flat copy is kept in sync for
        # cheap subgraph extraction
        self._lt_neighbors: list[np.ndarray] = []
        self._lt_offsets = [0]
        self._flat_nb = np.zeros(0, dtype=np.int32)
        self._flat_upto = 0
        # inverse-CDF table for output degrees
        degs = sorted(omega.coefficients)
        self._out_degrees = np.array(degs)
        self._out_cdf = np.cumsum([omega.coefficients[d] for d in degs])
        self._out_cdf[-1] = 1.0

    # -- precode ------------------------------------------------------------

    def _sample_precode(self) -> None:
        n = self.n
        mc = n - self.k
        if mc < 1:
            raise SamplingFailed(f"precode rate leaves no checks for k={self.k}")
        node_v = {d: w / d for d, w in self.precode.lam.items()}
        sv = sum(node_v.values())
        node_v = {d: w / sv for d, w in node_v.items()}
        node_c = {d: w / d for d, w in self.precode.rho.items()}
        sc = sum(node_c.values())
        node_c = {d: w / sc for d, w in node_c.items()}

        vcounts = _degree_counts(node_v, n)
        ccounts = _degree_counts(node_c, mc)
        vdeg = np.repeat(
            np.fromiter(vcounts.keys(), int), np.fromiter(vcounts.values(), int)
        )
        cdeg = np.repeat(
            np.fromiter(ccounts.keys(), int), np.fromiter(ccounts.values(), int)
        )
        self.rng.shuffle(vdeg)
        self.rng.shuffle(cdeg)
        # reconcile socket totals by nudging check degrees
        diff = int(vdeg.sum() - cdeg.sum())
        step = 1 if diff > 0 else -1
        i = 0
        while diff != 0 and i < cdeg.shape[0] * 4:
            j = i % cdeg.shape[0]
            if cdeg[j] + step >= 1:
                cdeg[j] += step
                diff -= step
            i += 1
        if diff != 0:
            raise SamplingFailed("could not reconcile precode socket totals")

        sockets = np.repeat(np.arange(n), vdeg)
        self.rng.shuffle(sockets)
        cptr = np.zeros(mc + 1, dtype=np.int64)
        cptr[1:] = np.cumsum(cdeg)
        # repair duplicate neighbors within a check by global socket swaps
        for _pass in range(200):
            dup_pos = []
            for c in range(mc):
                seg = sockets[cptr[c] : cptr[c + 1]]
                _u, first = np.unique(seg, return_index=True)
                if first.shape[0] != seg.shape[0]:
                    mask = np.ones(seg.shape[0], bool)
                    mask[first] = False
                    dup_pos.extend((cptr[c] + np.flatnonzero(mask)).tolist())
            if not dup_pos:
                break
            swap_with = self.rng.integers(0, sockets.shape[0], size=len(dup_pos))
            for p, q in zip(dup_pos, swap_with):
                sockets[p], sockets[q] = sockets[q], sockets[p]
        else:
            raise SamplingFailed("precode double-edge repair did not settle")

        self.pc_ptr = cptr
        self.pc_var = sockets.astype(np.int32)

    def _setup_encoder(self) -> None:
        """Gaussian elimination over GF(2) to express parity bits from info bits.

        Regular precodes with an even variable degree are always rank
        deficient (all check rows sum to zero), so dependent rows are dropped
        rather than resampled; the spare free positions they leave behind are
        pinned to zero during encoding.
        """
        n, mc = self.n, self.n - self.k
        words = (n + 63) // 64
        rows = np.zeros((mc, words), dtype=np.uint64)
        for c in range(mc):
            for v in self.pc_var[self.pc_ptr[c] : self.pc_ptr[c + 1]]:
                rows[c, v >> 6] ^= np.uint64(1) << np.uint64(v & 63)
        pivots: list[int] = []
        r = 0
        for col in range(n):
            if r >= mc:
                break
            w, b = col >> 6, np.uint64(1) << np.uint64(col & 63)
            hit = -1
            for rr in range(r, mc):
                if rows[rr, w] & b:
                    hit = rr
                    break
            if hit < 0:
                continue
            if hit != r:
                rows[[r, hit]] = rows[[hit, r]]
            mask = (rows[:, w] & b).astype(bool)
            mask[r] = False
            rows[mask] ^= rows[r]
            pivots.append(col)
            r += 1
        piv = np.array(pivots, dtype=np.int64)
        free_mask = np.ones(n, dtype=bool)
        free_mask[piv] = False
        free = np.flatnonzero(free_mask)
        if free.shape[0] < self.k:
            raise SingularPrecode(
                f"rank {r} leaves {free.shape[0]} free positions for a {self.k}-bit message"
            )
        self.rank = r
        self.info_positions = free[: self.k]
        self.pinned_positions = free[self.k :]
        self.parity_positions = piv
        # pivot row i gives x[piv[i]] = sum of the row's free-column bits
        cols = self.info_positions
        self._parity_matrix = (
            (rows[:r, cols >> 6] >> (cols & 63).astype(np.uint64)) & np.uint64(1)
        ).astype(np.uint8)

    # -- rateless side --------------------------------------------------------

    def grow_lt(self, count: int) -> None:
        """Ensure at least ``count`` output checks exist (deterministic order)."""
        while len(self._lt_neighbors) < count:
            u = self.rng.random()
            d = int(self._out_degrees[np.searchsorted(self._out_cdf, u)])
            d = min(d, self.n)
            nb = self.rng.choice(self.n, size=d, replace=False).astype(np.int32)
            self._lt_neighbors.append(nb)
            self._lt_offsets.append(self._lt_offsets[-1] + d)

    def lt_neighbors(self, idx: int) -> np.ndarray:
        self.grow_lt(idx + 1)
        return self._lt_neighbors[idx]

    def lt_edge_count(self, count: int) -> int:
        self.grow_lt(count)
        return self._lt_offsets[count]

    def lt_flat(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated neighbor array and offsets covering ``count`` outputs."""
        self.grow_lt(count)
        if self._flat_upto < len(self._lt_neighbors):
            fresh = self._lt_neighbors[self._flat_upto :]
            self._flat_nb = np.concatenate([self._flat_nb, *fresh])
            self._flat_upto = len(self._lt_neighbors)
        offsets = np.asarray(self._lt_offsets[: count + 1], dtype=np.int64)
        return self._flat_nb[: offsets[-1]], offsets

    # -- encoding -------------------------------------------------------------

    def precode_codeword(self, message: np.ndarray) -> np.ndarray:
        message = np.asarray(message, dtype=np.uint8)
        if message.shape != (self.k,):
            raise ValueError(f"message must have length {self.k}")
        x = np.zeros(self.n, dtype=np.uint8)
        x[self.info_positions] = message
        x[self.parity_positions] = (self._parity_matrix @ message) & 1
        return x

    def parity_ok(self, codeword: np.ndarray) -> bool:
        if self.pc_var.shape[0] == 0:
            return True
        sums = np.add.reduceat(codeword[self.pc_var], self.pc_ptr[:-1])
        return not np.any(sums & 1)


def sample_graph(
    source: MetEnsemble | tuple[LtDistribution, PrecodeDistribution | None],
    k: int,
    rng_seed: int,
    max_resample: int = 10,
) -> RaptorGraph:
    """Sample a finite graph; resamples on a rank-deficient precode."""
    if isinstance(source, MetEnsemble):
        omega, precode = extract_lt(source), extract_precode(source)
    else:
        omega, precode = source
    for trial in range(max_resample):
        try:
            return RaptorGraph(omega, precode, k, seed=rng_seed + trial * 1_000_003)
        except SingularPrecode:
            continue
    raise SamplingFailed(f"no full-rank precode within {max_resample} samples")


def encode(graph: RaptorGraph, message: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` output bits for ``message``."""
    x = graph.precode_codeword(message)
    graph.grow_lt(count)
    if count == 0:
        return np.zeros(0, dtype=np.uint8)
    nb = np.concatenate(graph._lt_neighbors[:count])
    offsets = np.asarray(graph._lt_offsets[:count])
    return np.bitwise_xor.reduceat(x[nb], offsets).astype(np.uint8)


# ---------------------------------------------------------------------------
# Belief-propagation kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _bp_pass(
    chk_ptr, chan_tanh, var_ptr, var_eids, intrinsic,
    v2c, c2v, max_iter, clamp, stall_exit,
):  # pragma: no cover
    """Flooding BP; returns (iterations run, posterior sums)."""
    C = chk_ptr.shape[0] - 1
    n = var_ptr.shape[0] - 1
    E = v2c.shape[0]
    tanhbuf = np.empty(E)
    post = np.zeros(n)
    best_mean = -1.0
    flat = 0
    it_done = 0
    for it in range(max_iter):
        for e in range(E):
            tanhbuf[e] = np.tanh(0.5 * v2c[e])
        # check update with prefix/suffix tanh products
        for c in range(C):
            lo, hi = chk_ptr[c], chk_ptr[c + 1]
            deg = hi - lo
            if deg == 0:
                continue
            pre = 1.0
            # forward pass stores prefix products in c2v temporarily
            for e in range(lo, hi):
                c2v[e] = pre
                pre *= tanhbuf[e]
            suf = chan_tanh[c]
            for e in range(hi - 1, lo - 1, -1):
                p = c2v[e] * suf
                if p > 0.999999999999999:
                    p = 0.999999999999999
                elif p < -0.999999999999999:
                    p = -0.999999999999999
                c2v[e] = 2.0 * np.arctanh(p)
                suf *= tanhbuf[e]
        # variable update
        acc = 0.0
        for v in range(n):
            s = intrinsic[v]
            for q in range(var_ptr[v], var_ptr[v + 1]):
                s += c2v[var_eids[q]]
            post[v] = s
            acc += abs(s)
            for q in range(var_ptr[v], var_ptr[v + 1]):
                e = var_eids[q]
                m = s - c2v[e]
                if m > clamp:
                    m = clamp
                elif m < -clamp:
                    m = -clamp
                v2c[e] = m
        it_done = it + 1
        mean = acc / n
        # stop once the posterior mass has stopped improving: converged and
        # hopeless attempts both plateau, and only the iterations actually run
        # enter the operation counts
        if stall_exit:
            if mean > best_mean * (1.0 + 1e-5) + 1e-7:
                best_mean = mean
                flat = 0
            else:
                flat += 1
                if flat >= 15 and it >= 12:
                    break
    return it_done, post


@njit(cache=True)
def _ldpc_bp(
    chk_ptr, edge_var, var_ptr, var_eids, intrinsic, max_iter, clamp
):  # pragma: no cover
    """Precode BP with a parity-satisfaction early stop; returns posterior."""
    C = chk_ptr.shape[0] - 1
    n = var_ptr.shape[0] - 1
    E = edge_var.shape[0]
    v2c = np.empty(E)
    c2v = np.zeros(E)
    post = intrinsic.copy()
    best_mean = -1.0
    flat = 0
    for v in range(n):
        for q in range(var_ptr[v], var_ptr[v + 1]):
            m = intrinsic[v]
            if m > clamp:
                m = clamp
            elif m < -clamp:
                m = -clamp
            v2c[var_eids[q]] = m
    it_done = 0
    for it in range(max_iter):
        for c in range(C):
            lo, hi = chk_ptr[c], chk_ptr[c + 1]
            pre = 1.0
            for e in range(lo, hi):
                c2v[e] = pre
                pre *= np.tanh(0.5 * v2c[e])
            suf = 1.0
            for e in range(hi - 1, lo - 1, -1):
                t = np.tanh(0.5 * v2c[e])
                p = c2v[e] * suf
                if p > 0.999999999999999:
                    p = 0.999999999999999
                elif p < -0.999999999999999:
                    p = -0.999999999999999
                c2v[e] = 2.0 * np.arctanh(p)
                suf *= t
        acc = 0.0
        for v in range(n):
            s = intrinsic[v]
            for q in range(var_ptr[v], var_ptr[v + 1]):
                s += c2v[var_eids[q]]
            post[v] = s
            acc += abs(s)
            for q in range(var_ptr[v], var_ptr[v + 1]):
                e = var_eids[q]
                m = s - c2v[e]
                if m > clamp:
                    m = clamp
                elif m < -clamp:
                    m = -clamp
                v2c[e] = m
        it_done = it + 1
        # parity early stop on the hard decision
        ok = True
        for c in range(C):
            par = 0
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                if post[edge_var[e]] < 0.0:
                    par ^= 1
            if par:
                ok = False
                break
        if ok:
            break
        mean = acc / n
        if mean > best_mean * (1.0 + 1e-5) + 1e-7:
            best_mean = mean
            flat = 0
        else:
            flat += 1
            if flat >= 15 and it >= 12:
                break
    return it_done, post


def _var_csr(edge_var: np.ndarray, n: int):
    order = np.argsort(edge_var, kind="stable")
    counts = np.bincount(edge_var, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(counts)
    return ptr, order.astype(np.int64)


# ---------------------------------------------------------------------------
# Decoding attempts and the transmission protocol
# ---------------------------------------------------------------------------


@dataclass
class AttemptStats:
    attempt: int
    outputs_used: int
    lt_edges: int
    lt_iterations: int
    ldpc_iterations: int
    ops: ComplexityCount
    posterior: np.ndarray | None = None


def message_reset_ops(
    n: int, i_v: float, m: int, dm: int, j_c: float, d_c: float, T: int
) -> ComplexityCount:
    """Rateless-stage operation counts of a message-reset attempt.

    ``i_v`` is the average input-bit degree over the decoding graph; ``m`` and
    ``dm`` count the carried-over and fresh output bits, with average check
    degrees ``j_c`` and ``d_c``.
    """
    return ComplexityCount(
        variable_ops=int(round((n * i_v + m + dm) * T)),
        check_ops=int(round((m * j_c + dm * d_c) * T)),
    )


def incremental_ops(
    n: int, i_v_bar: float, m: int, dm: int, x: float, j_c_bar: float, d_c_bar: float, T: int
) -> ComplexityCount:
    """Rateless-stage operation counts of a reused-message attempt; averages
    are taken over the reused fraction of the graph only."""
    return ComplexityCount(
        variable_ops=int(round((n * i_v_bar + x * m + dm) * T)),
        check_ops=int(round((x * m * j_c_bar + dm * d_c_bar) * T)),
    )


def bp_decode_attempt(
    graph: RaptorGraph,
    channel_llrs: np.ndarray,
    schedule: Strategy,
    prior_messages: np.ndarray | None = None,
    used_ids: np.ndarray | None = None,
    ldpc_iters: int = 200,
    msg_clamp: float = DEFAULT_MSG_CLAMP,
    lt_stall_exit: bool = False,
):
    """One decoding attempt over the outputs in ``used_ids`` (default: all).

    ``channel_llrs`` holds the LLRs of all received outputs, indexed by output
    id.  ``prior_messages`` is the global check-to-variable archive used by the
    incremental strategy (zeros where no message was ever computed).  Returns
    ``(estimate, messages, ops, stats)`` where ``messages`` maps the used
    edges' final check-to-variable values back to the global archive layout.
    """
    m_recv = channel_llrs.shape[0]
    flat, offsets = graph.lt_flat(m_recv)
    if used_ids is None:
        used_ids = np.arange(m_recv)
    else:
        used_ids = np.asarray(used_ids, dtype=np.int64)
    contiguous = used_ids.shape[0] > 0 and (
        used_ids[0] == 0 and used_ids[-1] == used_ids.shape[0] - 1
    )
    if contiguous:
        m_used = used_ids.shape[0]
        chk_ptr = offsets[: m_used + 1]
        global_eid = np.arange(chk_ptr[-1], dtype=np.int64)
        edge_var = flat[: chk_ptr[-1]].astype(np.int64)
    else:
        degs = offsets[used_ids + 1] - offsets[used_ids]
        chk_ptr = np.zeros(used_ids.shape[0] + 1, dtype=np.int64)
        chk_ptr[1:] = np.cumsum(degs)
        # vectorized concatenation of the used outputs' edge-id ranges
        starts = offsets[used_ids]
        global_eid = np.repeat(starts - chk_ptr[:-1], degs) + np.arange(chk_ptr[-1])
        edge_var = flat[global_eid].astype(np.int64)
    var_ptr, var_eids = _var_csr(edge_var, graph.n)
    chan_tanh = np.tanh(0.5 * channel_llrs[used_ids])

    E = edge_var.shape[0]
    c2v = np.zeros(E)
    v2c = np.zeros(E)
    if isinstance(schedule, Incremental) and prior_messages is not None:
        prior_local = prior_messages[global_eid]
        # seed each edge with the sum of the node's other archived messages
        sums = np.zeros(graph.n)
        np.add.at(sums, edge_var, prior_local)
        v2c = np.clip(sums[edge_var] - prior_local, -msg_clamp, msg_clamp)

    intrinsic = np.zeros(graph.n)
    T = schedule.T
    lt_iters, decoded = _bp_pass(
        chk_ptr, chan_tanh, var_ptr, var_eids, intrinsic,
        v2c, c2v, T, msg_clamp, lt_stall_exit,
    )

    pc_csr = getattr(graph, "_pc_var_csr", None)
    if pc_csr is None:
        pc_csr = _var_csr(graph.pc_var.astype(np.int64), graph.n)
        graph._pc_var_csr = pc_csr
    pvar_ptr, pvar_eids = pc_csr
    ldpc_done, post = _ldpc_bp(
        graph.pc_ptr, graph.pc_var.astype(np.int64), pvar_ptr, pvar_eids,
        decoded, ldpc_iters, msg_clamp,
    )

    estimate = (post[graph.info_positions] < 0).astype(np.uint8)
    ops = ComplexityCount(
        variable_ops=int((E + used_ids.shape[0]) * lt_iters),
        check_ops=int(E * lt_iters),
    )
    stats = AttemptStats(
        attempt=0,
        outputs_used=int(used_ids.shape[0]),
        lt_edges=int(E),
        lt_iterations=int(lt_iters),
        ldpc_iterations=int(ldpc_done),
        ops=ops,
        posterior=post,
    )
    return estimate, (global_eid, c2v), ops, stats


@dataclass
class TransmissionResult:
    success: bool
    attempts_used: int
    bits_consumed: int
    realized_rate: float
    total_ops: ComplexityCount
    max_attempts_exceeded: bool
    per_attempt: list[AttemptStats] = field(default_factory=list)


def run_transmission(
    graph: RaptorGraph,
    message: np.ndarray,
    cfg: TransmissionConfig,
    rng: np.random.Generator,
) -> TransmissionResult:
    """Stream output bits over the channel until the message is recovered.

    Attempt ``p`` decodes with ``m_f + (p-1) delta_m`` received bits.  Success
    is detected by comparison with the true message (an idealized error check;
    its cost is excluded from the complexity accounting).
    """
    sigma = 1.0 / np.sqrt(cfg.gamma)
    out_bits = np.zeros(0, dtype=np.uint8)
    llrs = np.zeros(0)
    archive = np.zeros(0)
    total = ComplexityCount()
    per_attempt: list[AttemptStats] = []
    prev_used: np.ndarray | None = None

    for p in range(1, cfg.max_attempts + 1):
        m = cfg.m_f + (p - 1) * cfg.delta_m
        if m > out_bits.shape[0]:
            fresh = encode(graph, message, m)[out_bits.shape[0] :]
            noise = rng.normal(0.0, sigma, size=fresh.shape[0])
            y = (1.0 - 2.0 * fresh.astype(np.float64)) + noise
            llrs = np.concatenate([llrs, 2.0 * y / sigma**2])
            out_bits = np.concatenate([out_bits, fresh])
        edge_total = graph.lt_edge_count(m)
        if archive.shape[0] < edge_total:
            archive = np.concatenate([archive, np.zeros(edge_total - archive.shape[0])])

        if isinstance(cfg.strategy, Incremental) and p > 1:
            m_prev = cfg.m_f + (p - 2) * cfg.delta_m
            n_reuse = int(round(cfg.strategy.x * m_prev))
            pool = prev_used if prev_used is not None else np.arange(m_prev)
            reused = (
                rng.choice(pool, size=min(n_reuse, pool.shape[0]), replace=False)
                if n_reuse > 0
                else np.zeros(0, dtype=np.int64)
            )
            used = np.sort(np.concatenate([reused, np.arange(m_prev, m)]))
        else:
            used = np.arange(m)

        estimate, (geid, c2v), ops, stats = bp_decode_attempt(
            graph,
            llrs,
            cfg.strategy,
            prior_messages=archive if isinstance(cfg.strategy, Incremental) else None,
            used_ids=used,
            ldpc_iters=cfg.ldpc_iters,
            msg_clamp=cfg.msg_clamp,
            lt_stall_exit=cfg.lt_stall_exit,
        )
        stats.attempt = p
        per_attempt.append(stats)
        total = total + ops
        if isinstance(cfg.strategy, Incremental):
            archive[geid] = c2v
            prev_used = used

        if np.array_equal(estimate, np.asarray(message, dtype=np.uint8)):
            return TransmissionResult(
                success=True,
                attempts_used=p,
                bits_consumed=m,
                realized_rate=graph.k / m,
                total_ops=total,
                max_attempts_exceeded=False,
                per_attempt=per_attempt,
            )

    m = cfg.m_f + (cfg.max_attempts - 1) * cfg.delta_m
    return TransmissionResult(
        success=False,
        attempts_used=cfg.max_attempts,
        bits_consumed=m,
        realized_rate=graph.k / m,
        total_ops=total,
        max_attempts_exceeded=True,
        per_attempt=per_attempt,
    )
