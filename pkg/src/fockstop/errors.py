"""Exception hierarchy shared by every module."""


class FockstopError(Exception):
    pass


class ConfigurationError(FockstopError, ValueError):
    """Bad grid, bad lab configuration or a request outside the dense budget."""


class ShapeError(FockstopError, ValueError):
    """Operand dimensions do not match the grid."""


class InvariantError(FockstopError, ValueError):
    """An operand that must be a projection (or similar) is not one."""


class ContractError(FockstopError, ValueError):
    """A precondition on adaptedness or kind was violated."""


class LatticeToleranceError(InvariantError):
    """Spectral lattice operations could not resolve a projection."""


class ValidationError(FockstopError, ValueError):
    """Base class for rejected stopping-time data."""


class AtomNotProjectionError(ValidationError):
    pass


class AtomsNotOrthogonalError(ValidationError):
    pass


class ResolutionOfIdentityError(ValidationError):
    pass


class InitialAtomError(ValidationError):
    """The atom at time zero must be 0 or I."""


class NotAdaptedError(ValidationError):
    """A cumulative projection depends on the future of its time."""


class ReportError(FockstopError):
    """A report file could not be written."""
