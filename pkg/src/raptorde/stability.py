"""Stability checks for the three decoding regimes.

Each checker evaluates a closed-form condition on the degree distributions and
a channel functional: the joint-decoding condition bounds the degree-two
precode variable nodes, the rateless start-up condition bounds the degree-one
and degree-two output fractions, and the precode hand-off condition bounds the
degree-two input bits against the decoded-LLR quality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import ChannelSpec, bhattacharyya, capacity, d_mean, llr_density
from .density import DEFAULT_GRID, Grid, QuantizedDensity
from .ensemble import (
    EDGE_LT,
    EDGE_PRECODE,
    LtDistribution,
    MetEnsemble,
    NodeChannel,
    PrecodeDistribution,
    socket_count,
)
from .errors import DegeneratePrecode


@dataclass
class StabilityReport:
    condition: str
    condition_value: float
    threshold: float
    satisfied: bool
    inputs_summary: dict = field(default_factory=dict)

    def __str__(self) -> str:
        verdict = "satisfied" if self.satisfied else "violated"
        return f"{self.condition}: {self.condition_value:.6g} vs {self.threshold:.6g} ({verdict})"


def core_lambda_profile(e: MetEnsemble) -> dict[tuple[int, int], float]:
    """Edge-perspective weights, over precode edges, of the punctured classes.

    Keyed by (precode degree, rateless degree); used by the joint condition,
    which needs the degree-two precode classes together with how many rateless
    edges feed them.
    """
    sockets = socket_count(e, "variable", EDGE_PRECODE)
    if sockets <= 0:
        raise DegeneratePrecode("ensemble has no precode edges on the variable side")
    out: dict[tuple[int, int], float] = {}
    for t in e.variable_terms:
        if t.channel is not NodeChannel.PUNCTURED:
            continue
        i = t.degrees[EDGE_PRECODE]
        if i <= 0:
            continue
        key = (i, t.degrees[EDGE_LT])
        out[key] = out.get(key, 0.0) + t.fraction * i / sockets
    return out


def _precode_rho_prime(e: MetEnsemble) -> float:
    sockets = socket_count(e, "check", EDGE_PRECODE)
    if sockets <= 0:
        raise DegeneratePrecode("ensemble has no precode checks")
    acc = 0.0
    for c in e.precode_check_terms():
        i = c.degrees[EDGE_PRECODE]
        acc += (c.fraction * i / sockets) * (i - 1)
    return acc


def joint_stability(
    e: MetEnsemble, ch: ChannelSpec, grid: Grid | None = None
) -> StabilityReport:
    """Convergence stability of the jointly decoded fixed point.

    The degree-two precode classes, damped by the channel Bhattacharyya
    constant raised to their rateless degree, must stay below the reciprocal
    of the precode check-side derivative.
    """
    grid = grid or DEFAULT_GRID
    lam = core_lambda_profile(e)
    rho_prime = _precode_rho_prime(e)
    x0 = bhattacharyya(llr_density(ch, grid))
    total = sum(w * x0**j for (i, j), w in lam.items() if i == 2)
    value = total * rho_prime
    return StabilityReport(
        condition="joint-decoding stability",
        condition_value=value,
        threshold=1.0,
        satisfied=value < 1.0,
        inputs_summary={
            "bhattacharyya": x0,
            "degree_two_weights": {j: w for (i, j), w in lam.items() if i == 2},
            "precode_check_derivative": rho_prime,
        },
    )


def tandem_lt_stability(
    lt: LtDistribution,
    alpha: float,
    ch: ChannelSpec,
    grid: Grid | None = None,
) -> StabilityReport:
    """Start-up condition of the rateless stage under tandem decoding.

    The headline condition is the degree-two bound; the exact start-up
    inequality (which couples the degree-one fraction through an exponential
    damping) and the capacity-approaching form of the bound are reported in
    the summary.
    """
    if alpha <= 0:
        raise ValueError("average input degree must be positive")
    grid = grid or DEFAULT_GRID
    chan = llr_density(ch, grid)
    x0t = d_mean(chan)
    beta = lt.beta
    omega1 = lt.coeff(1)
    omega2 = lt.coeff(2)
    bound = beta / (2.0 * alpha * x0t)
    exact = (2.0 * alpha / beta) * omega2 * x0t * math.exp(-(alpha / beta) * omega1 * x0t)
    cap_bound = capacity(ch) / (2.0 * x0t)
    satisfied = omega1 >= 0.0 and omega2 >= bound
    return StabilityReport(
        condition="tandem rateless start-up",
        condition_value=omega2,
        threshold=bound,
        satisfied=satisfied,
        inputs_summary={
            "d_mean": x0t,
            "omega1": omega1,
            "omega2": omega2,
            "alpha": alpha,
            "beta": beta,
            "exact_form_value": exact,
            "exact_form_satisfied": exact >= 1.0,
            "capacity_approaching_bound": cap_bound,
            "capacity_approaching_satisfied": omega2 >= cap_bound,
        },
    )


def ldpc_stability(p: PrecodeDistribution, decoded_llr: QuantizedDensity) -> StabilityReport:
    """Hand-off condition for the precode under tandem decoding.

    The degree-two input-bit classes, scaled by the check-side derivative,
    must not exceed the reciprocal Bhattacharyya constant of their decoded
    LLR density.
    """
    lam2 = p.lambda2
    rho_prime = p.rho_prime_at_one
    b = bhattacharyya(decoded_llr)
    value = lam2 * rho_prime
    threshold = float("inf") if b == 0 else 1.0 / b
    return StabilityReport(
        condition="tandem precode hand-off",
        condition_value=value,
        threshold=threshold,
        satisfied=value <= threshold,
        inputs_summary={
            "lambda2": lam2,
            "rho_prime": rho_prime,
            "decoded_bhattacharyya": b,
        },
    )
