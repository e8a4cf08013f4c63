"""Exception types raised by polyrelax."""


class PolyrelaxError(Exception):
    """Base class for all errors raised by this package."""


class LatticeTooLarge(PolyrelaxError, ValueError):
    """The requested lattice exceeds the configured point cap."""


class EmptyGraphError(PolyrelaxError, ValueError):
    """Every sampled value was infinite, so the envelope is identically +inf."""


class DegenerateInput(PolyrelaxError, ValueError):
    """The point set does not span its ambient space."""


class IterationLimit(PolyrelaxError, RuntimeError):
    """The simplex solver exhausted its pivot budget."""
