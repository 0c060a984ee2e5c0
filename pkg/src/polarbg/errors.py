"""Exception hierarchy shared by all polarbg modules.

ValidationError subclasses indicate bad inputs (CLI exit code 2);
NumericalError subclasses indicate solver failures (CLI exit code 3).
"""


class PolarBGError(Exception):
    """Base class for all polarbg errors."""


class ValidationError(PolarBGError):
    """Invalid input data or configuration."""


class NumericalError(PolarBGError):
    """A numerical routine failed to produce a usable result."""


class DegenerateInput(ValidationError):
    """Input is degenerate for the requested operation (e.g. zero vector)."""


class InvalidPoint(ValidationError):
    """A point record violates its invariants.

    Carries the offending index in ``index``.
    """

    def __init__(self, index, message):
        super().__init__(f"point {index}: {message}")
        self.index = index


class ShapeMismatch(ValidationError):
    """Grids or matrices that must agree in shape do not."""


class TooFewFrames(ValidationError):
    """An operation needs more frames than were supplied."""


class DegenerateMatrix(ValidationError):
    """A matrix is all-zero or otherwise unusable for decomposition."""


class NumericalFailure(NumericalError):
    """Eigen/linear solver failure."""


class NoStaticMode(PolarBGError):
    """No eigenvalue close enough to 1; caller should fall back to a median model."""


class EmptySamples(ValidationError):
    """A sample collection that must be non-empty is empty."""


class EmptyHistogram(ValidationError):
    """A histogram with no counts cannot be thresholded."""


class InvalidPolygon(ValidationError):
    """Polygon is self-intersecting or otherwise not simple."""


class ModelMismatch(ValidationError):
    """A background model was trained under a different sensor configuration."""


class FrameOrderError(ValidationError):
    """Frames were presented out of order to a sequential consumer."""
