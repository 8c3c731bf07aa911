"""Python bindings for the gazerace core library."""

from ._core import (
    Action,
    AllZeroDifferences,
    CalibrationError,
    CalibrationProfile,
    Classifier,
    ConfigError,
    CorruptRecording,
    DegenerateGeometry,
    EmptyTrajectory,
    FlightPhase,
    GazeraceError,
    IoError,
    MalformedFrame,
    MissingLandmark,
    RatioVector,
    SmoothingParams,
    calibrate,
    classify_frame,
    compare_runs,
    encode_wire_frame,
    extract_ratios,
    parse_wire_frame,
    ratio,
    replay_race,
    signed_rank,
    trajectory_metrics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
