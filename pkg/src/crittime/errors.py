"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An argument violates a documented precondition (shape, range, sign)."""


class UnsupportedShapeError(ContractViolationError):
    """A set cannot be encoded without auxiliary variables (e.g. a
    non-square or ill-conditioned zonotope generator)."""


class InfeasibleOperatingPointError(ValueError):
    """No admissible steady-state input exists for the requested levels."""


class SimulationError(RuntimeError):
    """A trajectory produced non-finite values."""
