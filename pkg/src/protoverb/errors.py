"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, data errors exit 2,
numerical errors exit 3.
"""


class ProtoverbError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(ProtoverbError):
    """Bad or conflicting command-line flags; rejected before any work."""


class DataError(ProtoverbError):
    """Invalid input data: malformed files, bad labels, inconsistent shapes."""


class ShapeError(DataError):
    """Array dimensions disagree with the declared model dimensions."""


class DegenerateInputError(DataError):
    """Zero-norm vector where a direction is required (cosine is undefined)."""


class TemplateError(DataError):
    """Template or prompted text violates the one-[MASK] contract."""


class ConfigError(DataError):
    """A configuration is unusable, e.g. a label with no matching sentences."""


class NumericalError(ProtoverbError):
    """Non-finite value produced where finite arithmetic was required."""
