"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid network or sweep configuration."""


class ShapeError(ValueError):
    """Array shapes that do not fit the network they are used with."""


class DomainError(ArithmeticError):
    """Numerical input outside the domain of a closed-form expression."""


class SingularKernelError(ArithmeticError):
    """Kernel system too ill-conditioned to solve without jitter."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class DegenerateMaskError(ArithmeticError):
    """A mask row leaves a zero normalizer in the pseudo-network."""

    def __init__(self, layer, row):
        super().__init__(f"zero row norm at layer {layer}, row {row}")
        self.layer = layer
        self.row = row


class ResourceError(RuntimeError):
    """Requested sweep point exceeds the configured width budget."""
