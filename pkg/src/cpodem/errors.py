"""Exception types shared across the package."""


class CpodemError(Exception):
    """Base class for all package-specific errors."""


class OutOfBounds(CpodemError):
    """A design coordinate lies outside its parameter range."""

    def __init__(self, param, value, lo, hi):
        self.param = param
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(f"{param}={value!r} outside [{lo}, {hi}]")


class DegenerateDesign(CpodemError):
    """Two design rows share a coordinate, making the criterion infinite."""


class DimensionUnsupported(CpodemError):
    """Requested dimension exceeds the quasi-random direction table."""


class ZeroVariance(CpodemError):
    """Response is constant; sensitivity indices are undefined."""


class EmptyNode(CpodemError):
    """Impurity of an empty sample set is undefined."""


class NoSplit(CpodemError):
    """No feature separates the samples."""


class GeometryMismatch(CpodemError):
    """Grid does not cover the geometry it is being partitioned for."""


class DegenerateRegion(CpodemError):
    """A region box has zero extent and cannot be mapped."""


class EmptySource(CpodemError):
    """Interpolation source grid is empty."""


class ShapeMismatch(CpodemError):
    """Field or grid shapes are inconsistent."""


class SolverFailure(CpodemError):
    """Iterative eigensolver did not converge within the restart budget."""


class IllConditioned(CpodemError):
    """Correlation matrix could not be factorized at any optimizer start."""


class CorpusError(CpodemError):
    """Training corpus is missing variables or has inconsistent shapes."""


class ModelMissing(CpodemError):
    """Requested emulator component is not part of the trained model."""


class ZeroRange(CpodemError):
    """Reference field has zero range; relative error is undefined."""


class NoInterface(CpodemError):
    """Density gradient field is flat; no film interface can be located."""


class OutOfDomain(CpodemError):
    """Probe position lies outside the grid domain."""
