"""Exception hierarchy.

Every input/parse failure derives from :class:`InputError` and carries a short
machine-readable ``code`` (``"bad-magic"``, ``"out-of-bounds"`` ...). The CLI maps
``InputError`` to exit status 2 and :class:`InvariantViolation` to 3.
"""


class MinelensError(Exception):
    """Base class for all errors raised by minelens."""


class InputError(MinelensError):
    code = "input-error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self):
        return f"{self.code}: {self.args[0]}"


class PackageError(InputError):
    """Raised when an app artifact cannot be opened."""


class DexError(InputError):
    """Raised for malformed DEX content."""


class AxmlError(InputError):
    """Raised for malformed Android binary XML."""


class RulesetError(InputError):
    """Raised when a ruleset document does not compile."""


class TraceError(InputError):
    """Raised for unusable profiler traces or feature matrices."""


class ModelError(InputError):
    """Raised for invalid training input or model files."""


class ReportError(InputError):
    """Raised for malformed antivirus report documents."""


class InvariantViolation(MinelensError):
    """An internal consistency check failed; indicates a bug, not bad input."""
