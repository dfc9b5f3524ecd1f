"""Error types shared across the kit.

ValidationError covers bad inputs and contract violations (CLI exit code 2);
plain OSError/IOError from the filesystem maps to exit code 3.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class TensorFormatError(ValidationError):
    """Tensor file is malformed (bad magic, dtype, or truncated payload)."""


class BudgetExceededError(ValidationError):
    """Exhaustive search space exceeds the configured budget."""
