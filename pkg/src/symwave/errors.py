"""Exception types raised by the pipeline."""


class NotFinite(Exception):
    """Group closure exceeded its element cap."""


class NonConvergent(Exception):
    """A truncated lattice sum did not settle within tolerance."""

    def __init__(self, message, tail=None):
        super().__init__(message)
        self.tail = tail


class NotUniformlyPositive(Exception):
    """A Hermitian field has a sample whose smallest eigenvalue is below the floor."""

    def __init__(self, min_eig, location):
        super().__init__(f"minimum eigenvalue {min_eig:.3e} at {location}")
        self.min_eig = float(min_eig)
        self.location = location


class NotPositive(Exception):
    """Fixed point of the transfer operator is not bounded away from zero."""

    def __init__(self, min_value, location=None):
        super().__init__(f"fixed point minimum {min_value:.3e} at {location}")
        self.min_value = float(min_value)
        self.location = location


class NoInvariantBox(Exception):
    """Support-map iteration did not stabilize within the step cap."""


class NoUnitEigenvalue(Exception):
    """Transfer matrix has no eigenvalue within tolerance of 1."""


class ConfigError(Exception):
    """Malformed or inconsistent run configuration."""
