"""Multi-edge density evolution: joint, tandem, and incremental decoding analysis.

The engine tracks one variable-to-check and one check-to-variable density per
edge type, mixing node classes with edge-perspective weights derived from the
node fractions.  Check-side work is done in the sign/magnitude transform
domain so that binary powering covers high degrees cheaply.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import density as dens
from .channel import ChannelSpec, capacity, error_probability, llr_density
from .density import (
    DEFAULT_GRID,
    Grid,
    QuantizedDensity,
    check_convolve,
    variable_convolve,
    zero_llr,
)
from .ensemble import (
    EDGE_CHANNEL,
    EDGE_LT,
    EDGE_NEW,
    EDGE_PRECODE,
    LtDistribution,
    MetEnsemble,
    NodeChannel,
    PrecodeDistribution,
    build_incremental_ensemble,
    build_raptor,
    lt_rate,
    poisson_input_profile,
    precode_rate,
    require_valid,
    scale_lt_rate,
    socket_count,
)
from .errors import GridMismatch, InfeasibleProfile, InvalidEnsemble, NoFeasibleRate

__all__ = [
    "variable_convolve",
    "check_convolve",
    "EdgeDensities",
    "DeResult",
    "Joint",
    "Tandem",
    "IncrementalTandem",
    "de_joint",
    "de_tandem",
    "de_incremental_attempt",
    "realized_rate_search",
    "RateSearchResult",
    "ScaledEnsembleFamily",
    "RaptorCodeFamily",
    "run_incremental_schedule",
]

log = logging.getLogger(__name__)

#: per-iteration BER improvement below which density evolution is declared stuck
STALL_TOL = 1e-12
_STALL_HITS = 3
#: relative-improvement stall window: progress this slow cannot reach any
#: target within a feasible iteration budget, so the run is cut short
_SLOW_TOL = 1e-9
_SLOW_HITS = 25


class _StallDetector:
    """Flags a monotone-ish scalar trajectory that has stopped moving."""

    def __init__(self, tol: float = STALL_TOL, slow_tol: float = _SLOW_TOL):
        self.tol = tol
        self.slow_tol = slow_tol
        self.prev: float | None = None
        self.hits = 0
        self.slow_hits = 0

    def update(self, value: float) -> bool:
        if self.prev is not None:
            delta = abs(self.prev - value)
            if delta < self.tol:
                self.hits += 1
            else:
                self.hits = 0
            if delta < self.slow_tol * max(1.0, abs(value)):
                self.slow_hits += 1
            else:
                self.slow_hits = 0
        self.prev = value
        return self.hits >= _STALL_HITS or self.slow_hits >= _SLOW_HITS


@dataclass(frozen=True)
class Joint:
    """Both component codes decoded in parallel with extrinsic exchange."""

    max_iter: int = 2000


@dataclass(frozen=True)
class Tandem:
    """Rateless stage first, to a target decoded-LLR mean, then the precode."""

    mu0: float
    max_iter_lt: int = 1000
    max_iter_ldpc: int = 1000

    def __post_init__(self):
        if self.mu0 < 0:
            raise ValueError("mu0 must be non-negative")


@dataclass(frozen=True)
class IncrementalTandem:
    """Tandem decoding that seeds each attempt from the previous one's messages."""

    T: int
    x: float
    mu0: float = math.inf
    max_iter_ldpc: int = 1000

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("need at least one iteration per attempt")
        if not 0.0 <= self.x <= 1.0:
            raise ValueError("reuse fraction x must lie in [0, 1]")
        if self.mu0 < 0:
            raise ValueError("mu0 must be non-negative")


DecodeSchedule = Joint | Tandem | IncrementalTandem


@dataclass
class EdgeDensities:
    """Per-edge-type message densities after some number of iterations."""

    var_to_check: dict[int, QuantizedDensity]
    check_to_var: dict[int, QuantizedDensity]
    iteration: int


@dataclass
class DeResult:
    converged: bool
    iterations_used: int
    ber_trajectory: np.ndarray
    final_densities: EdgeDensities
    stalled: bool = False
    stage_one_stalled: bool = False
    stage_one_iterations: int = 0
    decoded_mean: float | None = None


def _renorm(d: QuantizedDensity) -> QuantizedDensity:
    t = d.total
    if t <= 0 or abs(t - 1.0) > 1e-6:
        return d
    return QuantizedDensity(d.grid, d.masses / t, d.sat_pos / t, d.sat_neg / t)


def _mix(parts: list[tuple[float, QuantizedDensity]]) -> QuantizedDensity:
    grid = parts[0][1].grid
    m = np.zeros(grid.n)
    sp = sn = 0.0
    for w, d in parts:
        m += w * d.masses
        sp += w * d.sat_pos
        sn += w * d.sat_neg
    return QuantizedDensity(grid, m, sp, sn)


def _grid_powers(base: QuantizedDensity, exps: set[int]) -> dict[int, QuantizedDensity]:
    """Variable-convolution powers of ``base`` for every exponent in ``exps``."""
    out: dict[int, QuantizedDensity] = {}
    pos = [e for e in exps if e > 0]
    if not pos:
        return out
    squares = {1: base}
    k = 1
    while 2 * k <= max(pos):
        squares[2 * k] = dens._var_pair(squares[k], squares[k])
        k *= 2
    for e in pos:
        acc = None
        rem, bit = e, 1
        while rem:
            if rem & 1:
                acc = squares[bit] if acc is None else dens._var_pair(acc, squares[bit])
            rem >>= 1
            bit <<= 1
        out[e] = acc
    return out


def _mag_powers(base, exps: set[int]):
    out = {}
    pos = [e for e in exps if e > 0]
    if 0 in exps:
        out[0] = dens._mag_identity(base.grid)
    if not pos:
        return out
    squares = {1: base}
    k = 1
    while 2 * k <= max(pos):
        squares[2 * k] = dens._mag_pair(squares[k], squares[k])
        k *= 2
    for e in pos:
        acc = None
        rem, bit = e, 1
        while rem:
            if rem & 1:
                acc = squares[bit] if acc is None else dens._mag_pair(acc, squares[bit])
            rem >>= 1
            bit <<= 1
        out[e] = acc
    return out


class _MetDe:
    """One density-evolution instance over a subset of edge types.

    ``active`` lists the edge-type indices whose messages evolve; node degrees
    on inactive types are ignored (tandem stages).  ``intrinsics`` optionally
    gives punctured node classes a fixed channel-replacement density, keyed by
    term index in ``ensemble.variable_terms``.
    """

    def __init__(
        self,
        ensemble: MetEnsemble,
        channel_density: QuantizedDensity,
        active: tuple[int, ...],
        intrinsics: dict[int, QuantizedDensity] | None = None,
    ):
        self.e = ensemble
        self.grid = channel_density.grid
        self.chan = channel_density
        self.active = tuple(active)
        self.intrinsics = intrinsics or {}

        self.var_sockets = {
            t: sum(term.fraction * term.degrees[t] for term in ensemble.variable_terms)
            for t in self.active
        }
        self.check_sockets = {
            t: sum(c.fraction * c.degrees[t] for c in ensemble.check_terms)
            for t in self.active
        }
        self.punctured = [
            (idx, term)
            for idx, term in enumerate(ensemble.variable_terms)
            if term.channel is NodeChannel.PUNCTURED and term.fraction > 0
        ]
        punct_total = sum(term.fraction for _, term in self.punctured)
        self.punct_weights = [term.fraction / punct_total for _, term in self.punctured]
        # check-to-variable densities are needed only where punctured nodes listen
        self.needed_b = tuple(
            t
            for t in self.active
            if any(term.degrees[t] > 0 for _, term in self.punctured)
        )
        # variable-to-check densities are needed wherever checks have sockets
        self.needed_a = tuple(t for t in self.active if self.check_sockets[t] > 0)
        self.zero = zero_llr(self.grid)

    def _term_channel(self, idx: int, term) -> QuantizedDensity | None:
        if term.channel is NodeChannel.TRANSMITTED:
            return self.chan
        return self.intrinsics.get(idx)

    def var_messages(
        self,
        b: dict[int, QuantizedDensity] | None,
        initial: dict[int, QuantizedDensity] | None = None,
        want_posteriors: bool = False,
    ):
        """Variable-to-check densities; ``b=None`` is the channel-only first pass.

        With ``want_posteriors`` the punctured full-sum densities are computed
        in the same pass (sharing the power table) and returned alongside.
        """
        a: dict[int, QuantizedDensity] = {}
        pw: dict[int, dict[int, QuantizedDensity]] = {}
        if b is not None:
            for s in self.needed_b:
                exps = set()
                for _, term in self.punctured:
                    d = term.degrees[s]
                    if d > 0:
                        exps.add(d)
                        exps.add(d - 1)
                pw[s] = _grid_powers(b[s], exps)
        for t in self.needed_a:
            if initial is not None and t in initial:
                a[t] = initial[t]
                continue
            parts: list[tuple[float, QuantizedDensity]] = []
            for idx, term in enumerate(self.e.variable_terms):
                dt = term.degrees[t]
                if dt <= 0 or term.fraction <= 0:
                    continue
                weight = term.fraction * dt / self.var_sockets[t]
                chan = self._term_channel(idx, term)
                acc = chan
                if b is not None:
                    for s in self.needed_b:
                        k = term.degrees[s] - (1 if s == t else 0)
                        if k > 0:
                            p = pw[s][k]
                            acc = p if acc is None else dens._var_pair(acc, p)
                if acc is None:
                    acc = self.zero
                parts.append((weight, acc))
            a[t] = _renorm(_mix(parts))
        if not want_posteriors:
            return a
        posts = []
        for w, (idx, term) in zip(self.punct_weights, self.punctured):
            acc = self.intrinsics.get(idx)
            if b is not None:
                for s in self.needed_b:
                    d = term.degrees[s]
                    if d > 0:
                        p = pw[s][d]
                        acc = p if acc is None else dens._var_pair(acc, p)
            if acc is None:
                acc = self.zero
            posts.append((w, acc))
        return a, posts

    def check_messages(self, a: dict[int, QuantizedDensity]) -> dict[int, QuantizedDensity]:
        mags = {t: dens._to_mag(a[t]) for t in self.needed_a}
        exps: dict[int, set[int]] = {t: set() for t in self.needed_a}
        for c in self.e.check_terms:
            if all(c.degrees[t] == 0 for t in self.active):
                continue
            for target in self.needed_b:
                if c.degrees[target] <= 0:
                    continue
                for s in self.needed_a:
                    exps[s].add(c.degrees[s] - (1 if s == target else 0))
        pw = {s: _mag_powers(mags[s], exps[s]) for s in self.needed_a}

        b: dict[int, QuantizedDensity] = {}
        for target in self.needed_b:
            cross_cache: dict[tuple, object] = {}
            grouped: dict[tuple, list[tuple[float, int]]] = {}
            for c in self.e.check_terms:
                dt = c.degrees[target]
                if dt <= 0 or c.fraction <= 0:
                    continue
                weight = c.fraction * dt / self.check_sockets[target]
                sig = tuple(
                    (s, c.degrees[s]) for s in self.needed_a if s != target and c.degrees[s] > 0
                )
                grouped.setdefault(sig, []).append((weight, dt - 1))
            contribs = []
            for sig, items in grouped.items():
                own = dens._mag_mix([(w, pw[target][k]) for w, k in items])
                cross = cross_cache.get(sig)
                if cross is None and sig:
                    cross = pw[sig[0][0]][sig[0][1]]
                    for s, k in sig[1:]:
                        cross = dens._mag_pair(cross, pw[s][k])
                    cross_cache[sig] = cross
                contribs.append((1.0, own if not sig else dens._mag_pair(own, cross)))
            b[target] = _renorm(dens._from_mag(dens._mag_mix(contribs)))
        return b

    def posteriors(self, b: dict[int, QuantizedDensity]) -> list[tuple[float, QuantizedDensity]]:
        """Full-sum densities of the punctured node classes, with their weights."""
        pw: dict[int, dict[int, QuantizedDensity]] = {}
        for s in self.needed_b:
            exps = {term.degrees[s] for _, term in self.punctured if term.degrees[s] > 0}
            pw[s] = _grid_powers(b[s], exps)
        out = []
        for w, (idx, term) in zip(self.punct_weights, self.punctured):
            acc = self.intrinsics.get(idx)
            for s in self.needed_b:
                d = term.degrees[s]
                if d > 0:
                    p = pw[s][d]
                    acc = p if acc is None else dens._var_pair(acc, p)
            if acc is None:
                acc = self.zero
            out.append((w, acc))
        return out

    def max_ber(self, b: dict[int, QuantizedDensity]) -> float:
        return max(error_probability(d) for _, d in self.posteriors(b))

    def decoded_mean(self, b: dict[int, QuantizedDensity]) -> float:
        """Mean of the decoded-LLR mixture, computed additively per edge type.

        Means add under the variable convolution, so this avoids the grid-edge
        clamping that a high-degree convolution would suffer.
        """
        means = {s: b[s].mean() for s in self.needed_b}
        total = 0.0
        for w, (idx, term) in zip(self.punct_weights, self.punctured):
            m = sum(term.degrees[s] * means[s] for s in self.needed_b)
            intr = self.intrinsics.get(idx)
            if intr is not None:
                m += intr.mean()
            total += w * m
        return total


def _edge_snapshot(a, b, iteration) -> EdgeDensities:
    return EdgeDensities(dict(a), dict(b or {}), iteration)


def _require_de_ready(e: MetEnsemble, edge_types: int) -> None:
    if e.num_edge_types != edge_types:
        raise InvalidEnsemble(
            f"expected {edge_types} edge types, ensemble has {e.num_edge_types}"
        )
    require_valid(e)


def de_joint(
    e: MetEnsemble,
    ch: ChannelSpec,
    sched: Joint = Joint(),
    p_star: float = 1e-6,
    grid: Grid | None = None,
) -> DeResult:
    """Track the joint belief-propagation decoder on the full three-edge graph."""
    _require_de_ready(e, 3)
    grid = grid or DEFAULT_GRID
    engine = _MetDe(e, llr_density(ch, grid), active=(EDGE_PRECODE, EDGE_LT, EDGE_CHANNEL))
    traj: list[float] = []
    a = engine.var_messages(None)
    b: dict[int, QuantizedDensity] = {}
    converged = stalled = False
    detector = _StallDetector()
    it = 0
    for it in range(1, sched.max_iter + 1):
        b = engine.check_messages(a)
        a, posts = engine.var_messages(b, want_posteriors=True)
        ber = max(error_probability(d) for _, d in posts)
        traj.append(ber)
        if ber < p_star:
            converged = True
            break
        if detector.update(ber):
            stalled = True
            break
    return DeResult(
        converged=converged,
        iterations_used=it,
        ber_trajectory=np.asarray(traj),
        final_densities=_edge_snapshot(a, b, it),
        stalled=stalled,
    )


def _lt_stage(
    engine: _MetDe,
    mu0: float,
    max_iter: int,
    track_ber: bool = True,
) -> tuple[dict, dict, int, bool, float, list[float]]:
    """Run the rateless stage until the decoded-LLR mean reaches ``mu0``.

    Returns (a, b, iterations, stalled, final mean, ber trajectory).  With
    ``track_ber`` off the trajectory is left empty, which roughly halves the
    per-iteration cost; rate searches use that path.
    """
    traj: list[float] = []
    if 0.0 >= mu0:
        return {}, {}, 0, False, 0.0, traj
    a = engine.var_messages(None)
    b: dict[int, QuantizedDensity] = {}
    detector = _StallDetector()
    mean = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        b = engine.check_messages(a)
        if track_ber:
            a, posts = engine.var_messages(b, want_posteriors=True)
            traj.append(max(error_probability(d) for _, d in posts))
        else:
            a = engine.var_messages(b)
        mean = engine.decoded_mean(b)
        if mean >= mu0:
            return a, b, it, False, mean, traj
        if detector.update(mean):
            return a, b, it, True, mean, traj
    return a, b, it, True, mean, traj


def _decoded_densities(
    engine: _MetDe, b: dict[int, QuantizedDensity]
) -> dict[int, QuantizedDensity]:
    """Per-term decoded-LLR densities at the end of the rateless stage."""
    out = {}
    if not b:
        for idx, _term in engine.punctured:
            out[idx] = engine.zero
        return out
    for (idx, term), (_w, post) in zip(engine.punctured, engine.posteriors(b)):
        out[idx] = post
    return out


def _precode_stage(
    e: MetEnsemble,
    grid: Grid,
    chan: QuantizedDensity,
    intrinsics: dict[int, QuantizedDensity],
    p_star: float,
    max_iter: int,
) -> tuple[bool, int, list[float], dict, dict]:
    if socket_count(e, "variable", EDGE_PRECODE) <= 0:
        # nothing to run; convergence rests on the handed-off densities alone
        ber = max(error_probability(d) for d in intrinsics.values())
        return ber < p_star, 0, [ber], {}, {}
    engine = _MetDe(e, chan, active=(EDGE_PRECODE,), intrinsics=intrinsics)
    traj: list[float] = []
    a = engine.var_messages(None)
    b: dict[int, QuantizedDensity] = {}
    detector = _StallDetector()
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        b = engine.check_messages(a)
        a, posts = engine.var_messages(b, want_posteriors=True)
        ber = max(error_probability(d) for _, d in posts)
        traj.append(ber)
        if ber < p_star:
            converged = True
            break
        if detector.update(ber):
            break
    return converged, it, traj, a, b


def de_tandem(
    e: MetEnsemble,
    ch: ChannelSpec,
    sched: Tandem,
    p_star: float = 1e-6,
    grid: Grid | None = None,
    track_ber: bool = True,
) -> DeResult:
    """Rateless stage with the precode silent, then precode decoding on the
    decoded-LLR densities."""
    _require_de_ready(e, 3)
    grid = grid or DEFAULT_GRID
    chan = llr_density(ch, grid)
    lt_engine = _MetDe(e, chan, active=(EDGE_LT, EDGE_CHANNEL))
    a1, b1, it1, stalled1, mean1, traj1 = _lt_stage(
        lt_engine, sched.mu0, sched.max_iter_lt, track_ber=track_ber
    )
    if stalled1:
        log.info("rateless stage stalled at mean %.3f after %d iterations", mean1, it1)
    handoff = _decoded_densities(lt_engine, b1)
    converged, it2, traj2, a2, b2 = _precode_stage(
        e, grid, chan, handoff, p_star, sched.max_iter_ldpc
    )
    a_all = dict(a1)
    a_all.update(a2)
    b_all = dict(b1)
    b_all.update(b2)
    return DeResult(
        converged=converged,
        iterations_used=it1 + it2,
        ber_trajectory=np.asarray(traj1 + traj2),
        final_densities=_edge_snapshot(a_all, b_all, it1 + it2),
        stage_one_stalled=stalled1,
        stage_one_iterations=it1,
        decoded_mean=mean1,
    )


def de_incremental_attempt(
    e4: MetEnsemble,
    prior: EdgeDensities | None,
    ch: ChannelSpec,
    sched: IncrementalTandem,
    p_star: float = 1e-6,
    grid: Grid | None = None,
) -> DeResult:
    """One decoding attempt on the four-edge incremental graph.

    ``prior`` carries the previous attempt's check-to-variable density on the
    reused edges (key ``EDGE_LT`` of ``prior.check_to_var``); ``None`` means a
    message-reset attempt.  The returned ``final_densities`` snapshot the
    rateless component for chaining into the next attempt.
    """
    _require_de_ready(e4, 4)
    grid = grid or DEFAULT_GRID
    chan = llr_density(ch, grid)
    engine = _MetDe(e4, chan, active=(EDGE_LT, EDGE_CHANNEL, EDGE_NEW))

    initial = None
    if prior is not None:
        prior_b = prior.check_to_var.get(EDGE_LT)
        if prior_b is None:
            raise InvalidEnsemble("prior densities lack the reused-edge entry")
        if prior_b.grid != grid:
            raise GridMismatch("prior densities quantized on a different grid")
        exps = set()
        for _, term in engine.punctured:
            d2 = term.degrees[EDGE_LT]
            exps.add(d2)
            if d2 > 0:
                exps.add(d2 - 1)
        pw = _grid_powers(prior_b, exps)
        pw[0] = engine.zero
        initial = {}
        for target, excl in ((EDGE_LT, 1), (EDGE_NEW, 0)):
            if engine.check_sockets.get(target, 0.0) <= 0:
                continue
            parts = []
            for _, term in engine.punctured:
                dt = term.degrees[target]
                if dt <= 0:
                    continue
                w = term.fraction * dt / engine.var_sockets[target]
                k = term.degrees[EDGE_LT] - excl
                parts.append((w, pw[k] if k > 0 else engine.zero))
            if parts:
                initial[target] = _renorm(_mix(parts))

    a = engine.var_messages(None, initial=initial)
    b: dict[int, QuantizedDensity] = {}
    traj: list[float] = []
    it = 0
    for it in range(1, sched.T + 1):
        b = engine.check_messages(a)
        a, posts = engine.var_messages(b, want_posteriors=True)
        traj.append(max(error_probability(d) for _, d in posts))
        if engine.decoded_mean(b) >= sched.mu0:
            break
    lt_snapshot = _edge_snapshot(a, b, it)

    handoff = _decoded_densities(engine, b)
    converged, it2, traj2, _a2, _b2 = _precode_stage(
        e4, grid, chan, handoff, p_star, sched.max_iter_ldpc
    )
    return DeResult(
        converged=converged,
        iterations_used=it + it2,
        ber_trajectory=np.asarray(traj + traj2),
        final_densities=lt_snapshot,
        stage_one_iterations=it,
        decoded_mean=engine.decoded_mean(b) if b else 0.0,
    )


# ---------------------------------------------------------------------------
# Realized-rate search
# ---------------------------------------------------------------------------


class ScaledEnsembleFamily:
    """Rate family obtained by re-truncating a fixed code at other output counts."""

    def __init__(self, base: MetEnsemble):
        require_valid(base)
        self.base = base
        self.nominal_rate = lt_rate(base)
        self.r_ldpc = precode_rate(base)

    def at_rate(self, r_lt: float) -> MetEnsemble:
        return scale_lt_rate(self.base, r_lt)


class RaptorCodeFamily:
    """Rate family built fresh from an output degree distribution and precode.

    ``input_profile`` selects the input-bit degree model: ``"almost-regular"``
    (two consecutive degrees, the design default), ``"poisson"`` (the random
    uniform-neighbor encoder model, appropriate for codes from the linear
    -programming design tradition), or an explicit degree->weight mapping
    (only feasible at the rate its mean degree corresponds to).
    """

    def __init__(
        self,
        omega: LtDistribution,
        precode: PrecodeDistribution,
        input_profile: str | dict[int, float] = "almost-regular",
    ):
        self.omega = omega
        self.precode = precode
        self.input_profile = input_profile
        self.r_ldpc = precode.rate_from_profile

    def at_rate(self, r_lt: float) -> MetEnsemble:
        if self.input_profile == "almost-regular":
            prof = None
        elif self.input_profile == "poisson":
            prof = poisson_input_profile(self.omega.beta / r_lt, max_classes=60)
        else:
            prof = self.input_profile
        return build_raptor(self.omega, self.precode, r_lt, prof)


@dataclass
class RateSearchResult:
    r_lt: float
    design_rate: float
    eta: float
    de_runs: int
    bracket: tuple[float, float]
    capacity: float


def _run_schedule(e, ch, sched, p_star, grid) -> DeResult:
    if isinstance(sched, Joint):
        return de_joint(e, ch, sched, p_star, grid)
    if isinstance(sched, Tandem):
        return de_tandem(e, ch, sched, p_star, grid, track_ber=False)
    raise ValueError(f"rate search supports Joint and Tandem schedules, got {sched}")


def realized_rate_search(
    family,
    ch: ChannelSpec,
    sched: DecodeSchedule,
    p_star: float = 1e-6,
    *,
    resolution: float = 1e-4,
    r_lo: float | None = None,
    r_hi: float | None = None,
    grid: Grid | None = None,
    screen_grid: Grid | None = Grid(1000, 0.03),
) -> RateSearchResult:
    """Largest rateless rate at which density evolution still converges.

    Bisection over the rateless rate, to ``resolution``.  When ``screen_grid``
    is set, a coarse-grid bisection first narrows the bracket and the final
    grid only verifies and refines it; final numbers always come from ``grid``.
    """
    grid = grid or DEFAULT_GRID
    cap = capacity(ch)
    r_cap = cap / family.r_ldpc
    lo = r_lo if r_lo is not None else 0.4 * r_cap
    hi = r_hi if r_hi is not None else min(1.02 * r_cap, 1.0)
    if lo >= hi:
        raise ValueError(f"empty search bracket [{lo}, {hi}]")
    floor = lo
    runs = 0

    def converges(r: float, g: Grid) -> bool:
        nonlocal runs
        try:
            e = family.at_rate(r)
        except InfeasibleProfile:
            return False
        runs += 1
        res = _run_schedule(e, ch, sched, p_star, g)
        log.debug("rate %.6f on %dx%.3g grid: converged=%s iters=%d",
                  r, g.n, g.spacing, res.converged, res.iterations_used)
        return res.converged

    def bisect(lo: float, hi: float, g: Grid, tol: float) -> tuple[float, float]:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if converges(mid, g):
                lo = mid
            else:
                hi = mid
        return lo, hi

    if screen_grid is not None and screen_grid != grid:
        if not converges(lo, screen_grid):
            if not converges(lo, grid):
                raise NoFeasibleRate(f"no convergence at the minimum probed rate {lo:.6g}")
        else:
            c_tol = max(resolution * 8, 2e-3 * r_cap)
            c_lo, c_hi = bisect(lo, hi, screen_grid, c_tol)
            guard = max(6 * resolution, 4e-3 * r_cap)
            lo = max(floor, c_lo - guard)
            hi = min(hi, c_hi + guard)

    # verify the bracket on the final grid, expanding if the coarse screen lied
    step = max(8 * resolution, 5e-3 * r_cap)
    while not converges(lo, grid):
        hi = lo
        lo -= step
        step *= 2
        if lo < floor - 0.25 * r_cap:
            raise NoFeasibleRate(f"no convergence down to rate {lo + step:.6g}")
    while converges(hi, grid):
        lo = hi
        hi += step
        step *= 2
        if hi > 1.25 * r_cap:
            log.warning("rate search saturated above capacity bound at %.6g", lo)
            break

    lo, hi = bisect(lo, hi, grid, resolution)
    design = lo * family.r_ldpc
    return RateSearchResult(
        r_lt=lo,
        design_rate=design,
        eta=design / cap,
        de_runs=runs,
        bracket=(lo, hi),
        capacity=cap,
    )


# ---------------------------------------------------------------------------
# Chained incremental-decoding analysis
# ---------------------------------------------------------------------------


@dataclass
class AttemptOutcome:
    attempt: int
    r_lt: float
    ber: float
    converged: bool
    iterations_used: int


def run_incremental_schedule(
    omega: LtDistribution,
    precode: PrecodeDistribution,
    ch: ChannelSpec,
    sched: IncrementalTandem,
    rates: list[float],
    *,
    message_reset: bool = False,
    p_star: float = 1e-6,
    grid: Grid | None = None,
) -> list[AttemptOutcome]:
    """Chain decoding attempts over a falling rate schedule.

    ``rates`` lists the rateless rate seen at each attempt (rate = input bits
    over received output bits, so it decreases as output bits accumulate).
    With ``message_reset`` the prior messages are dropped at every attempt,
    which is the reference strategy the reused-message decoder must beat.
    """
    grid = grid or DEFAULT_GRID
    outcomes: list[AttemptOutcome] = []
    prior: EdgeDensities | None = None
    prev_ensemble: MetEnsemble | None = None
    r_prev = math.inf
    for p, r in enumerate(rates, start=1):
        e4 = build_incremental_ensemble(omega, precode, r_prev, r, sched.x)
        use_prior = None
        if not message_reset and prior is not None and prev_ensemble is not None:
            s_old = socket_count(prev_ensemble, "check", EDGE_LT)
            s_new = socket_count(prev_ensemble, "check", EDGE_NEW)
            parts = []
            if s_old > 0 and EDGE_LT in prior.check_to_var:
                parts.append((s_old / (s_old + s_new), prior.check_to_var[EDGE_LT]))
            if s_new > 0 and EDGE_NEW in prior.check_to_var:
                parts.append((s_new / (s_old + s_new), prior.check_to_var[EDGE_NEW]))
            if parts:
                use_prior = EdgeDensities({}, {EDGE_LT: _renorm(_mix(parts))}, prior.iteration)
        res = de_incremental_attempt(e4, use_prior, ch, sched, p_star, grid)
        outcomes.append(
            AttemptOutcome(
                attempt=p,
                r_lt=r,
                ber=float(res.ber_trajectory[-1]) if res.ber_trajectory.size else 0.5,
                converged=res.converged,
                iterations_used=res.iterations_used,
            )
        )
        prior = res.final_densities
        prev_ensemble = e4
        r_prev = r
        if res.converged:
            break
    return outcomes
