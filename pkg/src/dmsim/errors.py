"""Exception taxonomy: validation errors (bad inputs) vs runtime model errors."""


class ValidationError(ValueError):
    """Malformed configuration, trace, or command-line input."""


class SimulationError(RuntimeError):
    """A model invariant was violated at run time (fault, exhaustion, divergence)."""


class PageFaultError(SimulationError):
    """Access to an unmapped virtual page.  Fatal: footprints are pre-allocated."""
