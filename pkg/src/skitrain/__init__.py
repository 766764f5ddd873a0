"""Head-motion ski trainer: simulation, calibration and motion analytics."""

__version__ = "0.1.0"
