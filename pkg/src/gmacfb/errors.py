"""Exception hierarchy shared by all gmacfb modules."""


class GMACError(ValueError):
    """Base class for invalid inputs and numerical failures."""


class DomainError(GMACError):
    """An argument lies outside the domain of the requested quantity."""


class PSDViolationError(GMACError):
    """A covariance or correlation matrix is not positive semidefinite."""

    def __init__(self, min_eigenvalue: float, message: str | None = None):
        self.min_eigenvalue = float(min_eigenvalue)
        if message is None:
            message = f"matrix is not PSD (smallest eigenvalue {self.min_eigenvalue:.3e})"
        super().__init__(message)


class InfeasibilityError(GMACError):
    """A log argument became nonpositive, i.e. the input violates a power limit."""


class SingularityError(GMACError):
    """A closed-form expression hit a vanishing denominator."""
