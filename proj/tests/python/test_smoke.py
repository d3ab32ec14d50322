import math

import numpy as np
import pytest

import handeye


def small_config(tmp_path=None, **overrides):
    config = handeye.RunConfig()
    config.seed = 11
    config.subjects = 2
    config.trials_per_subject = 10
    config.workers = 1
    if tmp_path is not None:
        config.out_dir = str(tmp_path / "run")
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


def test_constants():
    assert handeye.BLANK_FRAMES == 37
    assert handeye.FRAME_MS == pytest.approx(1000.0 / 75.0)
    assert len(handeye.MOTOR_NAMES) == 8
    assert len(handeye.FEATURE_NAMES) == 16
    assert handeye.window_length(27.0) == 2
    assert handeye.horizon_frames_for_ms(267.0) == 20
    assert handeye.split_counts(1350) == (918, 162, 270)


def test_solve_ballistic_lands_on_target():
    launch = np.array([-2.0, 2.0, -8.0])
    target = np.array([0.3, 1.2, 0.0])
    gravity = np.array([0.0, -9.81, 0.0])
    v = handeye.solve_ballistic(launch, target, 1.4, gravity)
    end = launch + v * 1.4 + 0.5 * gravity * 1.4**2
    assert np.allclose(end, target, atol=1e-9)


def test_simulate_and_featurize():
    trials = handeye.simulate(small_config())
    assert len(trials) == 20
    t = trials[0]
    assert t.ball_positions.shape[1] == 3
    assert t.motor.shape == (t.ball_positions.shape[0], 8)
    assert sum(not v for v in t.visible) == 37

    featurized = handeye.featurize(trials, split_seed=11)
    partitions = [f.partition for f in featurized]
    assert partitions.count("train") == 14
    assert partitions.count("validation") == 2
    assert partitions.count("test") == 4
    f = featurized[0]
    assert f.features.shape == (t.ball_positions.shape[0], 16)
    assert f.reappearance - f.blank_onset == 37

    normalizer = handeye.fit_normalizer(featurized)
    z = normalizer.apply(f.features)
    assert np.allclose(normalizer.invert(z), f.features)

    summary = handeye.summarize_behavior(featurized)
    assert summary["trials"] == 20
    assert 0.0 <= summary["catch_rate"] <= 1.0
    assert math.isfinite(summary["pursuit_gain_mean"])


def test_simulation_is_seeded():
    a = handeye.simulate(small_config())
    b = handeye.simulate(small_config())
    c = handeye.simulate(small_config(seed=12))
    assert np.array_equal(a[3].motor, b[3].motor)
    assert not np.array_equal(a[3].motor, c[3].motor)


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(handeye.InvalidArgument):
        handeye.simulate(small_config(subjects=0))
    with pytest.raises(handeye.HandeyeError):
        handeye.featurize(handeye.simulate(small_config(trials_per_subject=2)))
    with pytest.raises(handeye.IoError):
        handeye.report_stage(small_config(tmp_path))


def test_desk_pipeline(tmp_path):
    config = small_config(tmp_path, desk_mode=True, epochs_cap=2, integration_ms=[27.0])
    handeye.run_pipeline(config)
    run = tmp_path / "run"
    assert (run / "models" / "lstm_I027" / "subnet_37.bin").exists()
    summary = (run / "report" / "summary.txt").read_text()
    assert "catch_rate" in summary
