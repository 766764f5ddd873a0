"""Exception types shared across the package."""


class SkiTrainError(Exception):
    """Base class for all domain errors."""


class InvalidInput(SkiTrainError):
    """A value violates a documented invariant or precondition."""


class EmptySeries(SkiTrainError):
    """A time series had too few samples for the requested operation."""


class UnorderedInput(SkiTrainError):
    """Timestamps were not monotonically increasing."""


class CalibrationPoseInvalid(SkiTrainError):
    """Upright reference frames were missing or tracked with low confidence."""


class InsufficientCalibrationData(SkiTrainError):
    """A calibration prompt window contained too few samples."""


class DegenerateRange(SkiTrainError):
    """A calibrated movement range was too small to be usable."""


class UnknownLevel(SkiTrainError):
    """Requested difficulty level does not exist."""


class OutOfTerrain(SkiTrainError):
    """A queried or simulated position left the generated heightmap."""


class ZeroVariance(SkiTrainError):
    """A statistic required a non-constant series."""


class InsufficientData(SkiTrainError):
    """Too few paired samples for the requested statistic."""
