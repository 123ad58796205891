"""Exception types shared across the toolkit.

The command line front end maps these classes onto stable process exit
codes, so raising the right one is part of the public contract:

* input problems (bad files, short signals, malformed arrays)  -> exit 2
* numeric failures (non-finite state during integration)       -> exit 3
* configuration documents that violate their schema            -> exit 4
"""


class MirrorGameError(Exception):
    """Base class for all toolkit errors."""


class DegenerateInputError(MirrorGameError, ValueError):
    """Input is empty, too short, or otherwise unusable for the operation."""


class InsufficientDataError(MirrorGameError, ValueError):
    """Not enough observations to fit the requested model."""


class ShapeMismatchError(MirrorGameError, ValueError):
    """Array shapes, grids, or sample rates are inconsistent."""


class SymbolRangeError(MirrorGameError, IndexError):
    """A symbol index falls outside the codebook."""


class NumericBlowupError(MirrorGameError, ArithmeticError):
    """Numerical integration produced a non-finite state."""


class UndefinedPhaseError(MirrorGameError, ValueError):
    """Signal amplitude is too small for a meaningful instantaneous phase."""


class UndefinedStatisticError(MirrorGameError, ValueError):
    """The requested statistic is undefined for this input."""


class ConfigSchemaError(MirrorGameError, ValueError):
    """A configuration document does not match its schema."""
