"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """An argument fell outside a documented precondition."""


class CapacityExceeded(OverflowError):
    """Exact-integer growth passed the configured capacity bound."""


class NoConvergentInRange(LookupError):
    """No certified convergent satisfies the selection targets."""


class PlacementFailed(RuntimeError):
    """Generation placement exhausted its rejection budget."""


class EmptyClass(LookupError):
    """A resonance class contains no admissible quadruple."""


class SmallDivisor(ArithmeticError):
    """A normal-form divisor fell below the configured floor."""


class RadiusExceeded(ValueError):
    """A truncation grew past its mode budget or radius."""


class SupportViolation(ValueError):
    """A state left the support an operation assumes."""


class StepSizeUnderflow(ArithmeticError):
    """The adaptive integrator could not meet its tolerance."""


class CascadeNotFound(RuntimeError):
    """Stage-wise shooting exhausted its search budget."""


class InfeasibleRegime(ValueError):
    """The strong-regime planner found no admissible window."""


class ConfigError(ValueError):
    """Configuration input is malformed or inconsistent."""
