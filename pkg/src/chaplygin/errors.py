"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CriticalPointError(ArithmeticError):
    """The linear system for (f', g') is singular at the given state.

    Attributes
    ----------
    eta : float
        Similarity variable at which the singularity was met.
    determinant : float
        Value of the 2x2 determinant there.
    """

    def __init__(self, eta, determinant):
        self.eta = float(eta)
        self.determinant = float(determinant)
        super().__init__(
            f"critical point at eta={self.eta!r} (determinant={self.determinant!r})"
        )


class SetupError(RuntimeError):
    """The integration cannot start from the given initial state."""


class ConvergenceError(RuntimeError):
    """A convergence study could not be carried out at one of its levels."""

    def __init__(self, level, reason):
        self.level = level
        self.reason = reason
        super().__init__(f"convergence level {level!r} failed: {reason}")


class ConfigError(ValueError):
    """A run configuration is malformed or out of domain.

    Attributes
    ----------
    key : str or None
        Offending ``section.key`` when one can be named.
    line : int or None
        1-based line number for syntax errors.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
