"""Exception hierarchy shared by all modules."""


class UnistochasticError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(UnistochasticError, ValueError):
    """Matrix shapes do not fit the operation (non-square, mismatched N, wrong N)."""


class BoundsError(UnistochasticError, IndexError):
    """A modality index is outside ``[0, N)``."""


class DomainError(UnistochasticError, ValueError):
    """A scalar argument is outside its domain (e.g. ``n = 0``)."""


class ValidationError(UnistochasticError, ValueError):
    """A probability matrix violates a bistochastic constraint.

    Attributes
    ----------
    constraint : str
        One of ``"shape"``, ``"finite"``, ``"negative"``, ``"above_one"``,
        ``"row_sum"``, ``"column_sum"``.
    index : tuple of int
        Offending ``(row, col)`` for entry constraints, ``(row,)`` or
        ``(col,)`` for sum constraints.
    deficit : float
        Signed amount by which the constraint is missed (``sum - 1`` for sums,
        the entry itself for entry bounds).
    """

    def __init__(self, constraint, index=(), deficit=0.0, message=None):
        self.constraint = constraint
        self.index = tuple(int(i) for i in index)
        self.deficit = float(deficit)
        if message is None:
            message = f"{constraint} violated at {self.index} (deficit {self.deficit:.3g})"
        super().__init__(message)

    def to_dict(self):
        return {
            "status": "rejected",
            "constraint": self.constraint,
            "index": list(self.index),
            "deficit": self.deficit,
            "message": str(self),
        }


class ConfigError(UnistochasticError, ValueError):
    """Invalid solver configuration."""


class GroupError(UnistochasticError, ValueError):
    """Transformations from different knob groups were combined, or a payload is invalid."""


class RepresentationError(UnistochasticError, ValueError):
    """The requested (group, dimension) representation is not implemented."""


class ReconstructionError(UnistochasticError, ValueError):
    """The tomography frame could not be built or solved."""


class SupportError(UnistochasticError, ValueError):
    """A state has weight outside the requested support."""
