"""Exception types shared across the package.

Every failure mode that callers are expected to catch programmatically gets
its own class here; modules never raise bare ValueError for domain errors.
"""


class BhfgpError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BhfgpError):
    """A config value or argument combination is invalid or unsupported."""


class ResolutionError(BhfgpError):
    """A grid cannot resolve the requested microscopic structure.

    Raised when the microscopic pair wavefunction would span fewer lattice
    points than the resolution rule allows, when its support wraps around
    the periodic box, or when a frequency grid truncates significant
    spectral mass. The message states the offending ratio and the minimal
    grid that would fix it.
    """


class GridTooSmallError(BhfgpError):
    """A solution has non-negligible weight at the grid boundary."""


class NoBoundStateError(BhfgpError):
    """The pair Hamiltonian has no negative-energy bound state."""


class BracketError(BhfgpError):
    """A scalar root search failed to bracket its root."""


class InfeasibleTraceError(BhfgpError):
    """No feasible state can meet the requested trace constraint."""


class InconsistentInputError(BhfgpError):
    """Inputs are individually valid but mutually contradictory."""


class PreconditionError(BhfgpError):
    """A documented precondition of the routine does not hold."""


class SolverError(BhfgpError):
    """An iterative solver failed to certify its result."""
