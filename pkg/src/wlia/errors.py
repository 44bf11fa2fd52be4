"""Exception types shared across the package.

Plain ``ValueError`` is used for generic invalid arguments; the subclasses
below mark conditions that callers are expected to branch on.
"""


class MassImbalanceError(ValueError):
    """Source and target densities differ in total mass beyond tolerance."""


class DegenerateInputError(ValueError):
    """Input carries no usable mass (e.g. an all-zero patch)."""


class EmptyRoiError(ValueError):
    """A region of interest admits no valid patch position."""


class UndefinedEntropyError(ValueError):
    """Entropy requested for an all-zero pooled histogram."""


class ImageFormatError(ValueError):
    """Unsupported or corrupt image file."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
