"""Exception types shared across the package."""


class BalflowError(Exception):
    """Base class for all balflow errors."""


class InputError(BalflowError):
    """Malformed instance data or infeasible parameters."""


class InvariantViolation(BalflowError):
    """An internal invariant failed; the run cannot be trusted."""


class ConvergenceError(BalflowError):
    """An iterative routine exceeded its iteration budget."""
