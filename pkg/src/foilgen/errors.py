"""Exception types shared across the toolkit."""


class FoilgenError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(FoilgenError):
    """A parameter is outside its admissible range."""


class ShapeError(FoilgenError):
    """A point set violates the airfoil shape conventions."""


class DegenerateShapeError(ShapeError):
    """Contour is self-intersecting or encloses no area."""


class SolverError(FoilgenError):
    """The panel solver could not produce a solution."""


class OptimizationError(FoilgenError):
    """An optimization failed to converge; carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class TrainingError(FoilgenError):
    """Training aborted (non-finite loss or gradients)."""


class FormatError(FoilgenError):
    """A persisted file is unreadable: wrong version, checksum, or layout."""
