"""Exception hierarchy for the pitotnav package."""


class PitotNavError(Exception):
    """Base class for all pitotnav-specific errors."""


class ConfigError(PitotNavError):
    """Invalid observer or run configuration (non-SPD covariance, bad gain, ...)."""


class DegenerateAirspeed(PitotNavError):
    """Airspeed too low (or forward component non-positive) for aero angles."""


class NumericalFailure(PitotNavError):
    """Filter covariance lost positive definiteness beyond tolerance."""


class StreamOrderError(PitotNavError):
    """Sensor stream timestamps are not monotonically increasing."""


class TrajectoryError(PitotNavError):
    """Trajectory specification describes an unreachable or invalid profile."""


class AlignmentError(PitotNavError):
    """Estimates and reference trace cannot be aligned (insufficient coverage)."""


class ParseError(PitotNavError):
    """Malformed log or config file content (carries a line number when known)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    """Row does not match the expected column layout for its sensor type."""


class OrderError(ParseError):
    """Per-sensor timestamps in a log file are not strictly increasing."""
