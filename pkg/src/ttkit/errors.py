"""Exception types raised by ttkit operations.

Everything derives from :class:`TTKitError`, which itself derives from
``ValueError`` so callers that only know numpy conventions can still catch
failures the usual way.
"""


class TTKitError(ValueError):
    """Base class for all ttkit validation errors."""


class ElementCountMismatch(TTKitError):
    """Reshape target holds a different number of elements than the source."""


class ModeOutOfRange(TTKitError):
    """A mode index does not exist on the given tensor."""


class EmptyOrFullSubset(TTKitError):
    """Matricization subset must be nonempty and a strict subset of the modes."""


class ContractionModeMismatch(TTKitError):
    """Last mode of the left operand differs from the first mode of the right."""


class IndexOutOfRange(TTKitError):
    """An element index falls outside the valid 0-based range of its mode."""


class OrderTooLow(TTKitError):
    """Operation needs a higher tensor order than was supplied."""


class FactorLengthMismatch(TTKitError):
    """Row and column factor lists have different lengths (or are empty)."""


class ShapeMismatch(TTKitError):
    """An array does not have the shape the operation requires."""


class LengthMismatch(TTKitError):
    """A vector length does not match the expected dimension."""


class SpecMismatch(TTKitError):
    """A kernel or factorization is inconsistent with its declared spec."""


class ChannelMismatch(TTKitError):
    """Input channel count differs from the kernel's input channels."""


class RankLengthMismatch(TTKitError):
    """A rank vector has the wrong number of entries for the given shape."""


class FileFormatError(TTKitError):
    """A binary file has a bad magic, version, dtype, or truncated payload."""


class ConfigError(TTKitError):
    """An architecture config file is malformed or violates the schema."""
