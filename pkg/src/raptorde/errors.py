"""Exception hierarchy shared across the package."""


class RaptordeError(Exception):
    """Base class for all errors raised by this package."""


class BadQuantization(RaptordeError):
    """Grid parameters are unusable (non-positive spacing, too few points)."""


class GridMismatch(RaptordeError):
    """Densities from different quantization grids were combined."""


class InvalidEnsemble(RaptordeError):
    """An operation required a structurally valid ensemble and did not get one."""


class DegeneratePrecode(RaptordeError):
    """The ensemble carries no precode edges where some were required."""


class InfeasibleProfile(RaptordeError):
    """No non-negative node-fraction assignment satisfies the socket counts."""


class SamplingFailed(RaptordeError):
    """Graph sampling exhausted its rejection budget."""


class SingularPrecode(RaptordeError):
    """A sampled precode parity-check matrix was rank deficient."""


class NoFeasibleRate(RaptordeError):
    """Even the smallest probed rate failed to converge."""


class NoFeasibleCandidate(RaptordeError):
    """Optimizer initialization produced no valid ensemble within its retry budget."""
