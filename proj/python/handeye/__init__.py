"""Synthetic ball-catching simulator, feature extraction and motor-state prediction."""

from ._handeye import (
    BLANK_FRAMES,
    FEATURE_NAMES,
    FRAME_MS,
    MOTOR_NAMES,
    AgentParams,
    DataError,
    DegenerateGeometry,
    FeaturizedTrial,
    HandeyeError,
    IllConditioned,
    InvalidArgument,
    IoError,
    MalformedTrial,
    Normalizer,
    NumericInput,
    RunConfig,
    TrainingDiverged,
    Trial,
    TrajectoryConfig,
    featurize,
    featurize_stage,
    fit_normalizer,
    horizon_frames_for_ms,
    report_stage,
    run_pipeline,
    simulate,
    simulate_stage,
    solve_ballistic,
    split_counts,
    summarize_behavior,
    train_stage,
    window_length,
)

__all__ = [name for name in dir() if not name.startswith("_")]
