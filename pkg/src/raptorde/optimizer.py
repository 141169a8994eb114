"""Degree-distribution search: differential evolution over check-node degrees
combined with an adaptive-range walk over the node fractions.

Fitness is the realized rate found by the density-evolution rate search.  Two
problem modes exist: optimizing the full ensemble (precode structure included)
and optimizing only the rateless component against a fixed precode.  Candidate
screening runs on a coarse quantization; the final ranking re-evaluates the
best candidates on the full analysis grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelSpec, capacity
from .density import DEFAULT_GRID, Grid
from .devol import (
    DecodeSchedule,
    Joint,
    RaptorCodeFamily,
    RateSearchResult,
    realized_rate_search,
)
from .ensemble import (
    LtDistribution,
    MetEnsemble,
    PrecodeDistribution,
    build_raptor,
    validate,
)
from .errors import InfeasibleProfile, NoFeasibleCandidate, NoFeasibleRate
from .stability import joint_stability

log = logging.getLogger(__name__)

SCREEN_GRID = Grid(1000, 0.03)


@dataclass(frozen=True)
class FullEnsemble:
    """Optimize precode and rateless degree distributions together."""

    i_c_max: int
    j_c_max: int
    precode_var_degree: int = 3
    n_lt_slots: int = 8
    n_pc_slots: int = 2
    r_ldpc_bounds: tuple[float, float] = (0.90, 0.995)

    def __post_init__(self):
        if self.i_c_max < 2 or self.j_c_max < 2:
            raise ValueError("degree caps must be at least 2")


@dataclass(frozen=True)
class FixedPrecode:
    """Optimize only the rateless component against a given precode."""

    j_c_max: int
    precode: PrecodeDistribution
    n_lt_slots: int = 10

    def __post_init__(self):
        if self.j_c_max < 2:
            raise ValueError("degree cap must be at least 2")


@dataclass(frozen=True)
class SearchBudget:
    population: int = 10
    generations: int = 6
    de_runs_per_candidate: int = 40


@dataclass(frozen=True)
class OptimizationProblem:
    mode: FullEnsemble | FixedPrecode
    gamma: float
    p_star: float = 1e-6
    schedule: DecodeSchedule = Joint(max_iter=600)
    budget: SearchBudget = SearchBudget()
    screen_grid: Grid = SCREEN_GRID
    final_grid: Grid = DEFAULT_GRID
    rate_resolution: float = 5e-4

    def __post_init__(self):
        if not 0.0 < self.p_star < 0.5:
            raise ValueError("p_star must lie in (0, 0.5)")


@dataclass
class Candidate:
    degrees: np.ndarray  # integer genome
    fractions: np.ndarray  # real genome, one weight per degree slot (plus extras)
    fitness: float = -math.inf
    result: RateSearchResult | None = None

    def copy(self) -> "Candidate":
        return Candidate(self.degrees.copy(), self.fractions.copy(), self.fitness, self.result)


# ---------------------------------------------------------------------------
# Genome <-> ensemble
# ---------------------------------------------------------------------------


def _omega_from_genome(degrees: np.ndarray, weights: np.ndarray, j_max: int) -> LtDistribution:
    degs = np.clip(np.round(degrees).astype(int), 1, j_max)
    w = np.abs(weights)
    total = w.sum()
    if total <= 0:
        raise InfeasibleProfile("empty output degree distribution")
    coeffs: dict[int, float] = {}
    for d, x in zip(degs, w / total):
        if x > 0:
            coeffs[int(d)] = coeffs.get(int(d), 0.0) + float(x)
    if set(coeffs) == {1}:
        raise InfeasibleProfile("output distribution degenerates to repetition")
    return LtDistribution(coeffs)


def decode_candidate(
    c: Candidate, problem: OptimizationProblem, r_lt: float | None = None
) -> MetEnsemble | None:
    """Materialize a genome as an ensemble at rate ``r_lt`` (or a reference rate).

    Returns None when the genome is infeasible; infeasibility is scored as
    ``-inf`` fitness rather than raised.
    """
    try:
        fam = family_of(c, problem)
        if r_lt is None:
            r_lt = 0.85 * capacity(ChannelSpec(problem.gamma)) / fam.r_ldpc
        return fam.at_rate(r_lt)
    except (InfeasibleProfile, ValueError):
        return None


def family_of(c: Candidate, problem: OptimizationProblem) -> RaptorCodeFamily:
    mode = problem.mode
    if isinstance(mode, FixedPrecode):
        omega = _omega_from_genome(
            c.degrees[: mode.n_lt_slots], c.fractions[: mode.n_lt_slots], mode.j_c_max
        )
        return RaptorCodeFamily(omega, mode.precode, input_profile="almost-regular")
    # full-ensemble genome: rateless slots, then precode check slots, then the
    # precode-rate gene appended to the fractions
    nl, np_ = mode.n_lt_slots, mode.n_pc_slots
    omega = _omega_from_genome(c.degrees[:nl], c.fractions[:nl], mode.j_c_max)
    pc_deg = np.clip(np.round(c.degrees[nl : nl + np_]).astype(int), 2, mode.i_c_max)
    pc_w = np.abs(c.fractions[nl : nl + np_])
    if pc_w.sum() <= 0:
        raise InfeasibleProfile("empty precode check distribution")
    pc_w = pc_w / pc_w.sum()
    lo, hi = mode.r_ldpc_bounds
    r_ldpc = float(np.clip(c.fractions[nl + np_], lo, hi))
    rho: dict[int, float] = {}
    for d, x in zip(pc_deg, pc_w):
        if x > 0:
            rho[int(d)] = rho.get(int(d), 0.0) + float(x)
    # edge-perspective rho from the weights read as edge shares
    dv = mode.precode_var_degree
    avg_c = 1.0 / sum(w / d for d, w in rho.items())
    # a (dv, rho) profile fixes the precode rate; honour the rate gene by
    # scaling the average check degree through a two-point blend when possible
    target_avg_c = dv / (1.0 - r_ldpc)
    if abs(avg_c - target_avg_c) / target_avg_c > 0.5:
        raise InfeasibleProfile("check degrees cannot reach the precode-rate gene")
    precode = PrecodeDistribution(
        lam={dv: 1.0}, rho=rho, rate=1.0 - dv * sum(w / d for d, w in rho.items())
    )
    return RaptorCodeFamily(omega, precode, input_profile="almost-regular")


def evaluate_fitness(
    e: MetEnsemble, problem: OptimizationProblem, grid: Grid | None = None
) -> float:
    """Realized-rate fitness of a concrete ensemble (design rate for the full
    problem, rateless rate for the fixed-precode problem)."""
    from .devol import ScaledEnsembleFamily

    fam = ScaledEnsembleFamily(e)
    try:
        res = _search(fam, problem, grid or problem.screen_grid)
    except NoFeasibleRate:
        return -math.inf
    return res.r_lt if isinstance(problem.mode, FixedPrecode) else res.design_rate


def _search(fam, problem: OptimizationProblem, grid: Grid) -> RateSearchResult:
    return realized_rate_search(
        fam,
        ChannelSpec(problem.gamma),
        problem.schedule,
        problem.p_star,
        resolution=problem.rate_resolution,
        grid=grid,
        screen_grid=None,
    )


def _candidate_fitness(
    c: Candidate, problem: OptimizationProblem, grid: Grid
) -> tuple[float, RateSearchResult | None]:
    try:
        fam = family_of(c, problem)
    except (InfeasibleProfile, ValueError):
        return -math.inf, None
    if isinstance(problem.mode, FullEnsemble):
        probe = decode_candidate(c, problem)
        if probe is None:
            return -math.inf, None
        if not validate(probe).ok:
            return -math.inf, None
        # cheap feasibility screen implied by the degree-two stability bound
        if not joint_stability(probe, ChannelSpec(problem.gamma), grid).satisfied:
            return -math.inf, None
    try:
        res = _search(fam, problem, grid)
    except (NoFeasibleRate, InfeasibleProfile):
        return -math.inf, None
    fit = res.r_lt if isinstance(problem.mode, FixedPrecode) else res.design_rate
    return fit, res


# ---------------------------------------------------------------------------
# The combined search
# ---------------------------------------------------------------------------


def encode_seed(
    omega: LtDistribution, problem: OptimizationProblem
) -> Candidate:
    """Embed a known output distribution into the genome layout."""
    mode = problem.mode
    n_slots = mode.n_lt_slots
    pairs = sorted(omega.coefficients.items(), key=lambda kv: -kv[1])[:n_slots]
    degrees = np.array([d for d, _ in pairs], dtype=float)
    weights = np.array([w for _, w in pairs], dtype=float)
    if degrees.shape[0] < n_slots:
        pad = n_slots - degrees.shape[0]
        degrees = np.concatenate([degrees, np.full(pad, 2.0)])
        weights = np.concatenate([weights, np.zeros(pad)])
    if isinstance(mode, FixedPrecode):
        return Candidate(degrees, weights)
    pc_deg = np.full(mode.n_pc_slots, min(60, mode.i_c_max), dtype=float)
    pc_w = np.full(mode.n_pc_slots, 1.0 / mode.n_pc_slots)
    fractions = np.concatenate([weights, pc_w, [0.95]])
    return Candidate(np.concatenate([degrees, pc_deg]), fractions)


def _random_candidate(rng: np.random.Generator, problem: OptimizationProblem) -> Candidate:
    mode = problem.mode
    nl = mode.n_lt_slots
    degs = np.sort(rng.integers(1, mode.j_c_max + 1, size=nl)).astype(float)
    degs[0] = 1.0
    if nl > 1:
        degs[1] = 2.0
    w = rng.dirichlet(np.ones(nl))
    # nudge toward the soliton-like shape: emphasize low degrees
    nudge = np.zeros(nl)
    nudge[: min(nl, 3)] = [0.03, 0.45, 0.2][: min(nl, 3)]
    w = w + nudge
    w = w / w.sum()
    if isinstance(mode, FixedPrecode):
        return Candidate(degs, w)
    pc_deg = rng.integers(max(2, mode.i_c_max // 4), mode.i_c_max + 1, size=mode.n_pc_slots)
    pc_w = rng.dirichlet(np.ones(mode.n_pc_slots))
    r_gene = rng.uniform(*mode.r_ldpc_bounds)
    return Candidate(
        np.concatenate([degs, pc_deg.astype(float)]),
        np.concatenate([w, pc_w, [r_gene]]),
    )


@dataclass
class OptimizationOutcome:
    best: MetEnsemble
    best_rate: float
    best_eta: float
    history: list[float] = field(default_factory=list)
    best_candidate: Candidate | None = None


def optimize(
    problem: OptimizationProblem,
    rng_seed: int,
    seed_omegas: list[LtDistribution] | None = None,
) -> OptimizationOutcome:
    """Differential evolution (rand/1/bin, F=0.5, CR=0.9) on the degree genome,
    adaptive-range resampling on the fraction genome.

    Fraction ranges contract by 0.8 around the incumbent each generation and
    re-expand by 1.5 whenever the generation improved the best fitness.
    Elitism keeps the history non-decreasing; everything is driven by one
    seeded generator, so runs are reproducible.
    """
    rng = np.random.default_rng(rng_seed)
    pop_size = problem.budget.population
    pop: list[Candidate] = []
    if seed_omegas:
        pop.extend(encode_seed(om, problem) for om in seed_omegas)
    tries = 0
    while len(pop) < pop_size:
        cand = _random_candidate(rng, problem)
        if decode_candidate(cand, problem) is not None:
            pop.append(cand)
        tries += 1
        if tries > 50 * pop_size:
            raise NoFeasibleCandidate("population initialization kept producing invalid genomes")

    for c in pop:
        c.fitness, c.result = _candidate_fitness(c, problem, problem.screen_grid)
    if all(math.isinf(c.fitness) and c.fitness < 0 for c in pop):
        raise NoFeasibleCandidate("no member of the initial population is decodable")

    best = max(pop, key=lambda c: c.fitness).copy()
    history = [best.fitness]
    width = 0.25  # adaptive range half-width, in units of each fraction's scale
    F, CR = 0.5, 0.9

    for gen in range(problem.budget.generations):
        improved = False
        for i in range(len(pop)):
            r1, r2, r3 = rng.choice(len(pop), size=3, replace=False)
            mutant_deg = pop[r1].degrees + F * (pop[r2].degrees - pop[r3].degrees)
            mutant_frac = pop[r1].fractions + F * (pop[r2].fractions - pop[r3].fractions)
            # adaptive range keeps fraction moves near the incumbent best
            lo = best.fractions - width
            hi = best.fractions + width
            mutant_frac = np.clip(mutant_frac, np.maximum(lo, 0.0), np.maximum(hi, 0.0))
            nf = mutant_frac.shape[0]
            cross = rng.random(max(mutant_deg.shape[0], nf)) < CR
            cross[rng.integers(cross.shape[0])] = True
            trial = Candidate(
                np.where(cross[: mutant_deg.shape[0]], np.round(mutant_deg), pop[i].degrees),
                np.where(cross[:nf], mutant_frac, pop[i].fractions),
            )
            trial.fitness, trial.result = _candidate_fitness(trial, problem, problem.screen_grid)
            if trial.fitness >= pop[i].fitness:
                pop[i] = trial
            if trial.fitness > best.fitness:
                best = trial.copy()
                improved = True
        width *= 1.5 if improved else 0.8
        width = min(max(width, 0.02), 0.5)
        history.append(best.fitness)
        log.info("generation %d: best fitness %.6f (range width %.3f)", gen + 1, best.fitness, width)

    # final ranking of the top decile on the full grid
    ranked = sorted(pop + [best], key=lambda c: c.fitness, reverse=True)
    top = ranked[: max(1, len(ranked) // 10 + 1)]
    final_best, final_fit, final_res = None, -math.inf, None
    for c in top:
        fit, res = _candidate_fitness(c, problem, problem.final_grid)
        if fit > final_fit:
            final_best, final_fit, final_res = c, fit, res
    if final_best is None or final_res is None:
        raise NoFeasibleCandidate("no candidate survived full-grid re-evaluation")

    ensemble = decode_candidate(final_best, problem, r_lt=final_res.r_lt)
    assert ensemble is not None
    return OptimizationOutcome(
        best=ensemble,
        best_rate=final_fit,
        best_eta=final_res.eta,
        history=history,
        best_candidate=final_best,
    )
