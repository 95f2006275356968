class DomainError(ValueError):
    """Raised when inputs violate a mathematical precondition."""


class StrongInterferenceError(DomainError):
    """Raised when an interference-channel gain satisfies g**2 < 1."""


class CapExceededError(DomainError):
    """Raised when an exhaustive search would exceed its configured size cap."""


class InvariantViolation(AssertionError):
    """Raised when a result fails its own certificate check.

    On valid input this signals an implementation bug rather than bad data.
    """
