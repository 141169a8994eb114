"""Multi-edge-type ensemble representation of a Raptor code.

An ensemble is a pair of node-perspective multinomials: variable-node terms
(punctured input bits, transmitted output bits) and check-node terms (precode
checks, output checks), each carrying per-edge-type degrees and a node
fraction relative to the number of transmitted bits.

Edge-type positions in a degree vector:

* 0 - precode edges (input bits to precode checks)
* 1 - rateless edges (input bits to output checks)
* 2 - channel-side edges (output bits to their output check)
* 3 - present only in incremental-decoding graphs: edges from input bits to
  output checks received in the current attempt (position 1 then holds the
  edges to checks carried over from earlier attempts)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegeneratePrecode, InfeasibleProfile, InvalidEnsemble

EDGE_PRECODE = 0
EDGE_LT = 1
EDGE_CHANNEL = 2
EDGE_NEW = 3

#: equality tolerance for exactly-constructed ensembles
STRICT_TOL = 1e-9
#: slack for distributions transcribed from tables printed with four decimals;
#: socket counts amplify the per-term rounding by the node degree, so the
#: equality checks treat this as a relative bound
TABLE_TOL = 2e-2


class NodeChannel(Enum):
    PUNCTURED = "punctured"
    TRANSMITTED = "transmitted"


@dataclass(frozen=True)
class VariableNodeTerm:
    degrees: tuple[int, ...]
    channel: NodeChannel
    fraction: float


@dataclass(frozen=True)
class CheckNodeTerm:
    degrees: tuple[int, ...]
    fraction: float


@dataclass(frozen=True)
class MetEnsemble:
    variable_terms: tuple[VariableNodeTerm, ...]
    check_terms: tuple[CheckNodeTerm, ...]
    num_edge_types: int = 3

    def punctured_terms(self) -> tuple[VariableNodeTerm, ...]:
        return tuple(t for t in self.variable_terms if t.channel is NodeChannel.PUNCTURED)

    def transmitted_terms(self) -> tuple[VariableNodeTerm, ...]:
        return tuple(t for t in self.variable_terms if t.channel is NodeChannel.TRANSMITTED)

    def precode_check_terms(self) -> tuple[CheckNodeTerm, ...]:
        return tuple(c for c in self.check_terms if c.degrees[EDGE_PRECODE] > 0)

    def output_check_terms(self) -> tuple[CheckNodeTerm, ...]:
        return tuple(c for c in self.check_terms if c.degrees[EDGE_PRECODE] == 0)


def make_ensemble(variable_terms, check_terms, num_edge_types: int = 3) -> MetEnsemble:
    """Canonical constructor: merges duplicate degree signatures, sorts terms.

    Multinomials are sums, so terms sharing a degree signature (and channel)
    merge by adding their fractions.
    """
    vmap: dict = {}
    for t in variable_terms:
        key = (tuple(int(d) for d in t.degrees), t.channel)
        if len(key[0]) != num_edge_types:
            raise ValueError(f"variable term {t} does not have {num_edge_types} degrees")
        vmap[key] = vmap.get(key, 0.0) + float(t.fraction)
    cmap: dict = {}
    for c in check_terms:
        key = tuple(int(d) for d in c.degrees)
        if len(key) != num_edge_types:
            raise ValueError(f"check term {c} does not have {num_edge_types} degrees")
        cmap[key] = cmap.get(key, 0.0) + float(c.fraction)
    vterms = tuple(
        VariableNodeTerm(deg, chan, frac)
        for (deg, chan), frac in sorted(vmap.items(), key=lambda kv: (kv[0][1].value, kv[0][0]))
    )
    cterms = tuple(
        CheckNodeTerm(deg, frac) for deg, frac in sorted(cmap.items())
    )
    return MetEnsemble(vterms, cterms, num_edge_types)


# ---------------------------------------------------------------------------
# Interrogation helpers
# ---------------------------------------------------------------------------


def socket_count(e: MetEnsemble, side: str, edge_type: int) -> float:
    """Total edge count of one edge type on the variable or check side."""
    if side == "variable":
        return sum(t.fraction * t.degrees[edge_type] for t in e.variable_terms)
    if side == "check":
        return sum(c.fraction * c.degrees[edge_type] for c in e.check_terms)
    raise ValueError(f"side must be 'variable' or 'check', got {side!r}")


def lt_rate(e: MetEnsemble) -> float:
    """Rateless-stage code rate: total fraction of punctured variable nodes."""
    return sum(t.fraction for t in e.punctured_terms())


def precode_rate(e: MetEnsemble) -> float:
    """Precode rate implied by the node counts."""
    lp = lt_rate(e)
    if lp <= 0:
        raise DegeneratePrecode("no punctured variable nodes")
    checks = sum(c.fraction for c in e.precode_check_terms())
    return 1.0 - checks / lp


def average_input_degree(e: MetEnsemble, edge_type: int = EDGE_LT) -> float:
    """Average degree of punctured nodes on one edge type."""
    terms = e.punctured_terms()
    tot = sum(t.fraction for t in terms)
    if tot <= 0:
        raise DegeneratePrecode("no punctured variable nodes")
    return sum(t.fraction * t.degrees[edge_type] for t in terms) / tot


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    constraint: str
    residual: float
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, constraint: str, residual: float, detail: str) -> None:
        self.violations.append(Violation(constraint, float(residual), detail))

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"{v.constraint} (residual {v.residual:.3g}): {v.detail}" for v in self.violations)


def validate(e: MetEnsemble, tol: float = STRICT_TOL) -> ValidationReport:
    """Check all structural constraints; violations are reported, not raised.

    ``tol`` bounds the equality residuals.  Exactly-constructed ensembles hold
    at ``STRICT_TOL``; distributions typed in from published tables need
    ``TABLE_TOL`` because the printed fractions carry four decimals.
    """
    rep = ValidationReport()
    ne = e.num_edge_types
    if ne not in (3, 4):
        rep.add("edge-type-count", ne, "ensembles use 3 edge types (4 for incremental graphs)")
        return rep

    for t in e.variable_terms:
        if t.fraction < -tol:
            rep.add("negative-fraction", -t.fraction, f"variable term {t.degrees}")
        if all(d == 0 for d in t.degrees):
            rep.add("empty-variable-term", 1.0, f"variable term {t.degrees} has no edges")
        if t.channel is NodeChannel.TRANSMITTED:
            want = tuple(1 if i == EDGE_CHANNEL else 0 for i in range(ne))
            if t.degrees != want:
                rep.add(
                    "transmitted-node-form",
                    1.0,
                    f"transmitted nodes carry exactly one channel-side edge, got {t.degrees}",
                )
        else:
            if t.degrees[EDGE_CHANNEL] != 0:
                rep.add(
                    "punctured-node-form",
                    t.degrees[EDGE_CHANNEL],
                    f"punctured nodes take no channel-side edges, got {t.degrees}",
                )

    for c in e.check_terms:
        if c.fraction < -tol:
            rep.add("negative-fraction", -c.fraction, f"check term {c.degrees}")
        d = c.degrees
        if d[EDGE_PRECODE] > 0:
            ok_form = d[EDGE_PRECODE] >= 2 and all(
                x == 0 for i, x in enumerate(d) if i != EDGE_PRECODE
            )
            if not ok_form:
                rep.add("precode-check-form", 1.0, f"precode checks look like [i,0,0], got {d}")
        elif d[EDGE_CHANNEL] == 1:
            if ne == 3:
                if d[EDGE_LT] < 1:
                    rep.add("output-check-form", 1.0, f"output checks need rateless edges, got {d}")
            else:
                old_style = d[EDGE_LT] >= 1 and d[EDGE_NEW] == 0
                new_style = d[EDGE_LT] == 0 and d[EDGE_NEW] >= 1
                if not (old_style or new_style):
                    rep.add(
                        "output-check-form",
                        1.0,
                        f"output checks connect to either carried-over or new input edges, got {d}",
                    )
        else:
            rep.add("unknown-check-form", 1.0, f"check term {d} matches no known node class")

    trans = sum(t.fraction for t in e.transmitted_terms())
    if abs(trans - 1.0) > tol:
        rep.add("transmitted-fraction", abs(trans - 1.0), "transmitted node fractions must sum to 1")

    lt_checks = sum(c.fraction for c in e.output_check_terms())
    if abs(lt_checks - 1.0) > tol:
        rep.add("output-check-total", abs(lt_checks - 1.0), "output check fractions must sum to 1")

    for et in range(ne):
        sv = socket_count(e, "variable", et)
        sc = socket_count(e, "check", et)
        resid = abs(sv - sc)
        # high-degree terms amplify printed rounding, so large socket counts
        # are also allowed their residual in relative terms
        if resid > tol and resid > tol * max(sv, sc):
            rep.add(
                f"socket-equality-{et + 1}",
                resid,
                f"edge type {et + 1}: variable side {sv:.9g} vs check side {sc:.9g}",
            )
    return rep


def require_valid(e: MetEnsemble, tol: float = TABLE_TOL) -> None:
    rep = validate(e, tol=tol)
    if not rep.ok:
        raise InvalidEnsemble(str(rep))


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------


def _scale_normalized(e: MetEnsemble) -> MetEnsemble:
    """The same multinomials with fractions renormalized to one transmitted node.

    Uniform scaling of all fractions is meaning-preserving (multinomials are
    only defined up to normalization), so structural checks run on this view.
    """
    t = sum(term.fraction for term in e.transmitted_terms())
    if t <= 0 or abs(t - 1.0) < 1e-12:
        return e
    return MetEnsemble(
        tuple(
            VariableNodeTerm(v.degrees, v.channel, v.fraction / t) for v in e.variable_terms
        ),
        tuple(CheckNodeTerm(c.degrees, c.fraction / t) for c in e.check_terms),
        e.num_edge_types,
    )


def design_rate(e: MetEnsemble, tol: float = TABLE_TOL, check: bool = True) -> float:
    """Design rate: total variable fraction minus total check fraction."""
    if check:
        require_valid(e, tol=tol)
    lv = sum(t.fraction for t in e.variable_terms)
    rc = sum(c.fraction for c in e.check_terms)
    return lv - rc


def rate_efficiency(rate: float, gamma: float) -> float:
    """Fraction of the BI-AWGN capacity achieved by ``rate`` at SNR ``gamma``."""
    from .channel import ChannelSpec, capacity

    return rate / capacity(ChannelSpec(gamma))


# ---------------------------------------------------------------------------
# Component distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LtDistribution:
    """Output-check degree distribution: degree -> node fraction."""

    coefficients: dict[int, float]

    def __post_init__(self):
        for d, w in self.coefficients.items():
            if d < 1:
                raise ValueError(f"output degrees start at 1, got {d}")
            if w < 0:
                raise ValueError(f"negative coefficient at degree {d}")
        s = sum(self.coefficients.values())
        if abs(s - 1.0) > 1e-6:
            raise ValueError(f"coefficients must sum to 1, got {s}")

    @property
    def beta(self) -> float:
        """Average output degree."""
        return sum(d * w for d, w in self.coefficients.items())

    def coeff(self, degree: int) -> float:
        return self.coefficients.get(degree, 0.0)

    @property
    def max_degree(self) -> int:
        return max(self.coefficients)


@dataclass(frozen=True)
class PrecodeDistribution:
    """Edge-perspective precode degree distributions and rate.

    ``lam``/``rho`` map node degree d to the coefficient of x^(d-1) in the
    edge-perspective variable/check polynomials.
    """

    lam: dict[int, float]
    rho: dict[int, float]
    rate: float

    def __post_init__(self):
        for name, coeffs in (("lam", self.lam), ("rho", self.rho)):
            if not coeffs:
                raise ValueError(f"{name} is empty")
            if any(w < 0 for w in coeffs.values()):
                raise ValueError(f"{name} has negative coefficients")
            s = sum(coeffs.values())
            if abs(s - 1.0) > 1e-6:
                raise ValueError(f"{name} must sum to 1, got {s}")

    @classmethod
    def regular(cls, var_degree: int, check_degree: int) -> "PrecodeDistribution":
        return cls(
            lam={var_degree: 1.0},
            rho={check_degree: 1.0},
            rate=1.0 - var_degree / check_degree,
        )

    @property
    def avg_variable_degree(self) -> float:
        return 1.0 / sum(w / d for d, w in self.lam.items())

    @property
    def avg_check_degree(self) -> float:
        return 1.0 / sum(w / d for d, w in self.rho.items())

    @property
    def rate_from_profile(self) -> float:
        return 1.0 - self.avg_variable_degree / self.avg_check_degree

    @property
    def lambda2(self) -> float:
        return self.lam.get(2, 0.0)

    @property
    def rho_prime_at_one(self) -> float:
        return sum(w * (d - 1) for d, w in self.rho.items())


def extract_lt(e: MetEnsemble, tol: float = TABLE_TOL) -> LtDistribution:
    """Output-degree distribution read off the output-check terms.

    Scale-invariant: uniformly rescaled representations extract identically.
    """
    require_valid(_scale_normalized(e), tol=tol)
    coeffs: dict[int, float] = {}
    for c in e.output_check_terms():
        d = c.degrees[EDGE_LT] + (c.degrees[EDGE_NEW] if e.num_edge_types == 4 else 0)
        coeffs[d] = coeffs.get(d, 0.0) + c.fraction
    total = sum(coeffs.values())
    return LtDistribution({d: w / total for d, w in sorted(coeffs.items())})


def extract_precode(e: MetEnsemble, tol: float = TABLE_TOL) -> PrecodeDistribution:
    """Precode degree distributions obtained by differentiating the multinomials.

    Scale-invariant, like :func:`extract_lt`.
    """
    require_valid(_scale_normalized(e), tol=tol)
    punct = e.punctured_terms()
    if sum(t.fraction for t in punct) <= 0:
        raise InvalidEnsemble("no punctured variable nodes")
    var_sockets = socket_count(e, "variable", EDGE_PRECODE)
    chk_sockets = socket_count(e, "check", EDGE_PRECODE)
    if var_sockets <= 0 or chk_sockets <= 0:
        raise DegeneratePrecode("ensemble has no precode edges")
    lam: dict[int, float] = {}
    for t in punct:
        i = t.degrees[EDGE_PRECODE]
        if i > 0:
            lam[i] = lam.get(i, 0.0) + t.fraction * i / var_sockets
    rho: dict[int, float] = {}
    for c in e.precode_check_terms():
        i = c.degrees[EDGE_PRECODE]
        rho[i] = rho.get(i, 0.0) + c.fraction * i / chk_sockets
    return PrecodeDistribution(
        lam=dict(sorted(lam.items())),
        rho=dict(sorted(rho.items())),
        rate=precode_rate(e),
    )


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _almost_regular_split(mean: float, allow_zero: bool = False) -> list[tuple[int, float]]:
    """Two consecutive integer degrees whose weighted mean is ``mean`` exactly."""
    floor_min = 0 if allow_zero else 1
    if mean < floor_min:
        raise InfeasibleProfile(f"mean degree {mean:.4g} below the minimum {floor_min}")
    base = int(mean)
    theta = mean - base
    if theta <= 1e-12:
        return [(base, 1.0)]
    return [(base, 1.0 - theta), (base + 1, theta)]


def poisson_input_profile(
    alpha: float, tail_mass: float = 1e-10, max_classes: int | None = None
) -> dict[int, float]:
    """Truncated Poisson degree profile with mean exactly ``alpha``.

    This is the input-bit degree model of a rateless encoder that picks
    neighbors uniformly at random.  Degree zero is kept (bits never picked
    lean entirely on the precode); the upper tail is cut at ``tail_mass`` and
    the mean restored by a tiny transfer around the mode.

    With ``max_classes`` the support is compressed onto that many
    equal-weight bins, each represented by two consecutive degrees hitting
    the bin's conditional mean exactly, which keeps the analysis cost of
    high-mean profiles bounded while preserving the overall degree spread.
    """
    if alpha <= 0:
        raise InfeasibleProfile(f"mean degree must be positive, got {alpha}")
    from scipy.stats import poisson as _poisson

    top = int(alpha + 12.0 * max(1.0, alpha) ** 0.5) + 1
    ds = np.arange(0, top + 1)
    w = _poisson.pmf(ds, alpha)
    keep = w > tail_mass
    ds, w = ds[keep], w[keep]
    w = w / w.sum()
    mean = float(ds @ w)
    mode = int(np.argmax(w))
    if mode + 1 >= len(ds):
        mode -= 1
    eps = alpha - mean
    w[mode] -= eps
    w[mode + 1] += eps
    if w[mode] < 0 or w[mode + 1] < 0:
        raise InfeasibleProfile(f"cannot rebalance truncated profile at mean {alpha:.4g}")

    if max_classes is None or len(ds) <= max_classes:
        return {int(d): float(x) for d, x in zip(ds, w) if x > 0}

    n_bins = max(2, max_classes // 2)
    cum = np.cumsum(w)
    edges = np.searchsorted(cum, np.linspace(0, cum[-1], n_bins + 1)[1:-1], side="right")
    starts = np.concatenate(([0], np.unique(edges)))
    profile: dict[int, float] = {}
    for b, s in enumerate(starts):
        e_ = starts[b + 1] if b + 1 < len(starts) else len(ds)
        wb = float(w[s:e_].sum())
        if wb <= 0:
            continue
        mb = float(ds[s:e_] @ w[s:e_]) / wb
        for d, share in _almost_regular_split(mb, allow_zero=True):
            profile[d] = profile.get(d, 0.0) + wb * share
    return profile


def _precode_node_fractions(p: PrecodeDistribution) -> dict[int, float]:
    inv = {d: w / d for d, w in p.lam.items()}
    s = sum(inv.values())
    return {d: w / s for d, w in inv.items()}


def _precode_check_fractions(p: PrecodeDistribution) -> dict[int, float]:
    inv = {d: w / d for d, w in p.rho.items()}
    s = sum(inv.values())
    return {d: w / s for d, w in inv.items()}


def build_raptor(
    lt: LtDistribution,
    precode: PrecodeDistribution,
    r_lt: float,
    input_degree_profile: dict[int, float] | None = None,
) -> MetEnsemble:
    """Assemble the three-edge-type ensemble for a code ``(precode, lt)`` at rate ``r_lt``.

    The rateless-edge degrees of the input bits default to an almost-regular
    profile over two consecutive degrees chosen so the socket counts balance
    exactly.  An explicit ``input_degree_profile`` (degree -> weight, summing
    to 1) must hit the required average degree itself.
    """
    if r_lt <= 0:
        raise InfeasibleProfile(f"rateless rate must be positive, got {r_lt}")
    alpha = lt.beta / r_lt
    if input_degree_profile is None:
        profile = _almost_regular_split(alpha)
    else:
        w_sum = sum(input_degree_profile.values())
        if abs(w_sum - 1.0) > 1e-9 or any(w < 0 for w in input_degree_profile.values()):
            raise InfeasibleProfile("input degree profile must be a distribution")
        got = sum(d * w for d, w in input_degree_profile.items())
        if abs(got - alpha) > 1e-9:
            raise InfeasibleProfile(
                f"profile average degree {got:.6g} does not meet the socket balance {alpha:.6g}"
            )
        profile = sorted(input_degree_profile.items())

    r_ldpc = precode.rate_from_profile
    node_v = _precode_node_fractions(precode)
    node_c = _precode_check_fractions(precode)

    vterms = [
        VariableNodeTerm(
            (i, d2, 0), NodeChannel.PUNCTURED, r_lt * vi * w2
        )
        for i, vi in node_v.items()
        for d2, w2 in profile
    ]
    vterms.append(VariableNodeTerm((0, 0, 1), NodeChannel.TRANSMITTED, 1.0))

    total_checks = r_lt * (1.0 - r_ldpc)
    cterms = [
        CheckNodeTerm((i, 0, 0), total_checks * ci) for i, ci in node_c.items()
    ]
    cterms.extend(CheckNodeTerm((0, d, 1), w) for d, w in lt.coefficients.items())

    e = make_ensemble(vterms, cterms, 3)
    rep = validate(e, tol=STRICT_TOL)
    if not rep.ok:
        raise InfeasibleProfile(f"constructed ensemble invalid: {rep}")
    return e


def scale_lt_rate(e: MetEnsemble, new_r_lt: float) -> MetEnsemble:
    """The same code family observed after collecting more or fewer output bits.

    Node fractions of input bits and precode checks rescale with the output
    count; rateless-edge degrees of the input bits rescale inversely and are
    split across two consecutive integers to keep socket counts exact.  The
    output degree distribution and the precode profile are untouched.
    """
    if e.num_edge_types != 3:
        raise InvalidEnsemble("rate scaling applies to three-edge-type ensembles")
    old = lt_rate(e)
    if old <= 0:
        raise DegeneratePrecode("no punctured variable nodes")
    if new_r_lt <= 0:
        raise InfeasibleProfile(f"rateless rate must be positive, got {new_r_lt}")
    s = new_r_lt / old
    vterms = []
    for t in e.variable_terms:
        if t.channel is NodeChannel.TRANSMITTED:
            vterms.append(t)
            continue
        i, j, _k = t.degrees
        jf = j / s
        if jf < 1.0 - 1e-12:
            raise InfeasibleProfile(
                f"rate {new_r_lt:.6g} drives a rateless degree below 1 (term {t.degrees})"
            )
        for d2, w in _almost_regular_split(jf):
            vterms.append(VariableNodeTerm((i, d2, 0), NodeChannel.PUNCTURED, t.fraction * s * w))
    cterms = []
    for c in e.check_terms:
        if c.degrees[EDGE_PRECODE] > 0:
            cterms.append(CheckNodeTerm(c.degrees, c.fraction * s))
        else:
            cterms.append(c)
    return make_ensemble(vterms, cterms, 3)


def build_incremental_ensemble(
    lt: LtDistribution,
    precode: PrecodeDistribution,
    r_prev: float,
    r_now: float,
    reuse_fraction: float,
) -> MetEnsemble:
    """Four-edge-type graph of one rateless decoding attempt that reuses output bits.

    ``r_prev``/``r_now`` are the rateless code rates before and after the new
    output bits arrive (``r_now < r_prev``); ``reuse_fraction`` is the share of
    previously received output bits kept in the graph.  Carried-over output
    checks attach to the input bits on edge type 2, fresh ones on edge type 4.
    """
    if not 0.0 <= reuse_fraction <= 1.0:
        raise InfeasibleProfile(f"reuse fraction must lie in [0,1], got {reuse_fraction}")
    if r_now >= r_prev and not (reuse_fraction == 1.0 and r_now == r_prev):
        raise InfeasibleProfile("the new attempt must add output bits (r_now < r_prev)")
    m_prev = 1.0 / r_prev  # per input bit
    dm = 1.0 / r_now - m_prev
    used = reuse_fraction * m_prev + dm
    if used <= 0:
        raise InfeasibleProfile("no output bits in the decoding graph")
    r_used = 1.0 / used

    alpha_old = lt.beta * reuse_fraction * m_prev
    alpha_new = lt.beta * dm
    prof_old = _almost_regular_split(alpha_old, allow_zero=True)
    prof_new = _almost_regular_split(alpha_new, allow_zero=True)

    node_v = _precode_node_fractions(precode)
    node_c = _precode_check_fractions(precode)
    r_ldpc = precode.rate_from_profile

    vterms = []
    for i, vi in node_v.items():
        for d2, w2 in prof_old:
            for d4, w4 in prof_new:
                vterms.append(
                    VariableNodeTerm((i, d2, 0, d4), NodeChannel.PUNCTURED, r_used * vi * w2 * w4)
                )
    vterms.append(VariableNodeTerm((0, 0, 1, 0), NodeChannel.TRANSMITTED, 1.0))

    cterms = [
        CheckNodeTerm((i, 0, 0, 0), r_used * (1.0 - r_ldpc) * ci) for i, ci in node_c.items()
    ]
    w_old = reuse_fraction * m_prev / used
    w_new = dm / used
    for d, w in lt.coefficients.items():
        if w_old > 0:
            cterms.append(CheckNodeTerm((0, d, 1, 0), w * w_old))
        if w_new > 0:
            cterms.append(CheckNodeTerm((0, 0, 1, d), w * w_new))

    e = make_ensemble(vterms, cterms, 4)
    rep = validate(e, tol=STRICT_TOL)
    if not rep.ok:
        raise InfeasibleProfile(f"constructed incremental ensemble invalid: {rep}")
    return e


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def to_json_dict(e: MetEnsemble) -> dict:
    return {
        "num_edge_types": e.num_edge_types,
        "variable_terms": [
            {"degrees": list(t.degrees), "channel": t.channel.value, "fraction": t.fraction}
            for t in e.variable_terms
        ],
        "check_terms": [
            {"degrees": list(c.degrees), "fraction": c.fraction} for c in e.check_terms
        ],
    }


def from_json_dict(d: dict) -> MetEnsemble:
    try:
        ne = int(d["num_edge_types"])
        vterms = [
            VariableNodeTerm(
                tuple(int(x) for x in t["degrees"]),
                NodeChannel(t["channel"]),
                float(t["fraction"]),
            )
            for t in d["variable_terms"]
        ]
        cterms = [
            CheckNodeTerm(tuple(int(x) for x in c["degrees"]), float(c["fraction"]))
            for c in d["check_terms"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidEnsemble(f"malformed ensemble document: {exc}") from exc
    return make_ensemble(vterms, cterms, ne)


def save(e: MetEnsemble, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(e), indent=2) + "\n")


def load(path: str | Path) -> MetEnsemble:
    return from_json_dict(json.loads(Path(path).read_text()))
