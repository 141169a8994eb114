"""Rateless-code analysis and design over the binary-input AWGN channel.

The package represents a rateless code (a high-rate sparse precode serially
concatenated with a rateless inner code) as a multi-edge-type ensemble, runs
quantized density evolution under joint, tandem, and incremental decoding,
checks the closed-form stability conditions, searches degree distributions,
and validates the analysis with a finite-length codec simulator.
"""

__version__ = "0.1.0"

from .channel import ChannelSpec, bhattacharyya, capacity, d_mean, error_probability, llr_density
from .density import DEFAULT_GRID, Grid, QuantizedDensity, point_mass, zero_llr
from .devol import (
    DeResult,
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
from .ensemble import (
    CheckNodeTerm,
    LtDistribution,
    MetEnsemble,
    NodeChannel,
    PrecodeDistribution,
    VariableNodeTerm,
    build_incremental_ensemble,
    build_raptor,
    design_rate,
    extract_lt,
    extract_precode,
    lt_rate,
    make_ensemble,
    poisson_input_profile,
    precode_rate,
    rate_efficiency,
    scale_lt_rate,
    socket_count,
    validate,
)
from .errors import (
    BadQuantization,
    DegeneratePrecode,
    GridMismatch,
    InfeasibleProfile,
    InvalidEnsemble,
    NoFeasibleCandidate,
    NoFeasibleRate,
    RaptordeError,
    SamplingFailed,
    SingularPrecode,
)
from .stability import StabilityReport, joint_stability, ldpc_stability, tandem_lt_stability
