import json
import math
import os

import numpy as np
import pytest

from gazeprivkit.cli import main
from gazeprivkit.datasets import parse_feature_csv, write_samples_csv
from gazeprivkit.pipeline import GazeSample


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth_args(**overrides):
    base = {"participants": "3", "length": "32", "features": "1", "rho": "0.9"}
    base.update(overrides)
    out = []
    for key, value in base.items():
        out += [f"--{key.replace('_', '-')}", value]
    return out


# ---------------------------------------------------------------------------
# General behaviour


def test_no_command_prints_help_and_exits_2(capsys):
    code, out, _ = run(capsys)
    assert code == 2
    assert "usage: gpk" in out


def test_seed_is_always_printed(capsys):
    code, out, _ = run(capsys, "privatize", *synth_args(), "--mechanism", "lpa",
                       "--epsilon", "4.8", "--seed", "7")
    assert code == 0
    assert "seed: 7" in out
    code, out, _ = run(capsys, "privatize", *synth_args(), "--mechanism", "lpa",
                       "--epsilon", "4.8")
    assert code == 0
    assert "seed: " in out  # randomly drawn, but always reported


def test_missing_input_file_exits_3(capsys):
    code, _, err = run(capsys, "privatize", "--input", "/nonexistent/file.csv",
                       "--mechanism", "lpa", "--epsilon", "1.0", "--seed", "0")
    assert code == 3
    assert "error:" in err


def test_malformed_csv_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,feature,header\n1,2,3,4\n")
    code, _, err = run(capsys, "utility", "--input", str(bad),
                       "--mechanism", "lpa", "--epsilon", "1.0", "--seed", "0")
    assert code == 3
    assert "error:" in err


def test_config_errors_exit_2(capsys):
    code, _, err = run(capsys, "privatize", *synth_args(), "--mechanism", "dcfpa",
                       "--epsilon", "1.0", "--seed", "0")
    assert code == 2 and "chunk-size" in err
    code, _, err = run(capsys, "privatize", *synth_args(rho="1.5"),
                       "--mechanism", "lpa", "--epsilon", "1.0", "--seed", "0")
    assert code == 2
    code, _, err = run(capsys, "utility", *synth_args(), "--mechanism", "lpa",
                       "--epsilon-grid", "1,spam", "--seed", "0")
    assert code == 2 and "epsilon-grid" in err


# ---------------------------------------------------------------------------
# privatize


def test_privatize_writes_parseable_deterministic_csv(capsys, tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    argv = ["privatize", *synth_args(), "--mechanism", "fpa", "--epsilon", "4.8",
            "--k", "4", "--seed", "11"]
    assert run(capsys, *argv, "--output", str(out_a))[0] == 0
    assert run(capsys, *argv, "--output", str(out_b))[0] == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    released = parse_feature_csv(out_a.read_text())
    signals = list(released)
    assert len(signals) == 3
    assert all(len(s) == 32 for s in signals)
    assert not any(path.name.startswith("tmp") for path in tmp_path.iterdir())


def test_privatize_reports_epsilon_and_chosen_k(capsys):
    code, out, _ = run(capsys, "privatize", *synth_args(length="16"),
                       "--mechanism", "dcfpa", "--chunk-size", "8",
                       "--accounting", "sequential", "--epsilon", "0.48",
                       "--optimal-k-trials", "5", "--seed", "3")
    assert code == 0
    assert "epsilon: 0.48" in out
    assert "composed" in out
    assert "chosen k:" in out


def test_privatize_to_stdout(capsys):
    code, out, _ = run(capsys, "privatize", *synth_args(length="8"),
                       "--mechanism", "lpa", "--epsilon", "10", "--seed", "1")
    assert code == 0
    assert "participant,feature,recording_type,step_seconds,t_index,value" in out


# ---------------------------------------------------------------------------
# utility / optimal-k / correlate / leak-eval


def test_utility_json_output(capsys, tmp_path):
    path = tmp_path / "utility.json"
    code, out, _ = run(capsys, "utility", *synth_args(length="16"),
                       "--mechanism", "fpa", "--epsilon", "4.8", "--k", "2",
                       "--trials", "5", "--seed", "2", "--output", str(path))
    assert code == 0
    reports = json.loads(path.read_text())["reports"]
    assert len(reports) == 1
    record = reports[0]
    assert record["mechanism"] == "fpa" and record["epsilon"] == 4.8
    assert record["trials"] == 5
    assert isinstance(record["utility"], (int, float)) or record["utility"] == "inf"


def test_utility_csv_format_by_extension_and_flag(capsys, tmp_path):
    path = tmp_path / "utility.csv"
    argv = ["utility", *synth_args(length="16"), "--mechanism", "lpa",
            "--epsilon", "4.8", "--trials", "3", "--seed", "2"]
    assert run(capsys, *argv, "--output", str(path))[0] == 0
    header = path.read_text().splitlines()[0]
    assert header.startswith("feature,recording_type,mechanism,epsilon")
    code, out, _ = run(capsys, *argv, "--format", "csv")
    assert code == 0 and "feature,recording_type,mechanism" in out


def test_utility_epsilon_grid_sweep(capsys, tmp_path):
    path = tmp_path / "sweep.json"
    code, _, _ = run(capsys, "utility", *synth_args(length="16"),
                     "--mechanism", "lpa", "--epsilon-grid", "0.5,5",
                     "--trials", "3", "--seed", "4", "--output", str(path))
    assert code == 0
    reports = json.loads(path.read_text())["reports"]
    assert sorted({r["epsilon"] for r in reports}) == [0.5, 5.0]


def test_optimal_k_outputs_group_table(capsys):
    code, out, _ = run(capsys, "optimal-k", *synth_args(length="16"),
                       "--mechanism", "fpa", "--epsilon", "4.8",
                       "--trials", "5", "--seed", "5")
    assert code == 0
    payload = json.loads(out.split("\n", 1)[1])
    assert payload["mechanism"] == "fpa" and payload["epsilon"] == 4.8
    assert len(payload["groups"]) == 1
    group = payload["groups"][0]
    assert group["feature"] == "f01" and group["recording_type"] == "ar1"
    assert 1 <= group["k"] <= 16


def test_correlate_json_profile(capsys):
    code, out, _ = run(capsys, "correlate", *synth_args(participants="8", length="64"),
                       "--feature", "f01", "--max-lag", "3", "--ref-index", "2",
                       "--seed", "6")
    assert code == 0
    payload = json.loads(out.split("\n", 1)[1])
    assert payload["feature"] == "f01"
    assert payload["recording_type"] == "ar1"  # inferred: only one present
    assert payload["lags"] == [1, 2, 3]
    assert len(payload["values"]) == 3
    assert payload["values"][0] is None or isinstance(payload["values"][0], float)


def test_correlate_unknown_feature_fails(capsys):
    code, _, err = run(capsys, "correlate", *synth_args(), "--feature", "nope",
                       "--seed", "0")
    assert code in (2, 3) and "error:" in err


def test_leak_eval_person_id(capsys, tmp_path):
    path = tmp_path / "leak.json"
    code, _, _ = run(capsys, "leak-eval", *synth_args(participants="4", length="60",
                                                      offset_scale="30.0"),
                     "--window", "5", "--neighbors", "3", "--seed", "8",
                     "--output", str(path))
    assert code == 0
    report = json.loads(path.read_text())
    assert report["kind"] == "person-id"
    assert 0.0 <= report["window_accuracy"] <= 1.0
    assert report["majority_accuracy"] is not None


def test_leak_eval_with_mechanism_requires_epsilon(capsys):
    code, _, err = run(capsys, "leak-eval", *synth_args(), "--mechanism", "lpa",
                       "--seed", "0")
    assert code == 2 and "epsilon" in err


def test_leak_eval_after_privatization(capsys):
    code, out, _ = run(capsys, "leak-eval", *synth_args(participants="3", length="40"),
                       "--window", "4", "--neighbors", "3",
                       "--mechanism", "lpa", "--epsilon", "100", "--seed", "9")
    assert code == 0
    report = json.loads(out.split("\n", 1)[1])
    assert report["kind"] == "person-id"


# ---------------------------------------------------------------------------
# re-demo


def test_re_demo_exact_mode_end_to_end(capsys, tmp_path):
    transcript_path = tmp_path / "transcript.jsonl"
    predictions_path = tmp_path / "predictions.csv"
    code, out, _ = run(capsys, "re-demo", "--n-alice", "30", "--n-bob", "30",
                       "--n-features", "6", "--exact", "--seed", "3",
                       "--transcript", str(transcript_path),
                       "--output", str(predictions_path))
    assert code == 0
    assert "max kernel deviation from plaintext: 0.000e+00" in out
    assert "predictions bit-identical to plaintext: True" in out
    dot_line = next(l for l in out.splitlines() if l.startswith("dot-product bytes:"))
    reported = int(dot_line.split()[2])
    closed_form = int(dot_line.split("closed form ")[1].rstrip(")"))
    assert reported == closed_form

    lines = transcript_path.read_text().strip().splitlines()
    records = [json.loads(line) for line in lines]
    assert [r["step"] for r in records] == list(range(1, len(records) + 1))
    assert {"handshake", "mask-vectors", "alice-share", "bob-share"} <= {r["kind"] for r in records}

    rows = predictions_path.read_text().strip().splitlines()
    assert rows[0] == "index,pred_pitch,pred_yaw,true_pitch,true_yaw"
    assert len(rows) > 1
    float(rows[1].split(",")[1])  # parseable values


def test_re_demo_learns_shared_manifold(capsys):
    code, out, _ = run(capsys, "re-demo", "--n-alice", "150", "--n-bob", "150",
                       "--seed", "1")
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("mean angular error:"))
    error_deg = float(line.split()[3])
    assert error_deg < 5.0  # far below the ~17 deg of a zero predictor


def test_re_demo_validation(capsys):
    code, _, err = run(capsys, "re-demo", "--n-alice", "1", "--seed", "0")
    assert code == 2
    code, _, err = run(capsys, "re-demo", "--gamma", "-2.0", "--seed", "0")
    assert code == 2


# ---------------------------------------------------------------------------
# pipeline


def forward(angle_deg):
    a = math.radians(angle_deg)
    return np.array([math.sin(a), 0.0, math.cos(a)])


def make_samples_csv(path, seconds=10.0, dt=0.05):
    """Oscillating fixation blocks separated by single-step jumps."""
    samples = []
    t, angle, direction = 0.0, 0.0, 1.0
    i = 0
    while t < seconds - 1e-9:
        block = i % 8
        if block == 7:
            angle += direction * 5.0
            direction = -direction
        else:
            angle += direction * 0.2
        pupil = None if i % 17 == 5 else 3.0 + 0.1 * math.sin(t)
        gaze = None if i % 23 == 7 else forward(angle)
        samples.append(GazeSample(t, gaze, forward(0.0), np.zeros(3), pupil))
        t += dt
        i += 1
    path.write_text(write_samples_csv({("p01", "game"): samples}))
    return samples


def test_pipeline_end_to_end(capsys, tmp_path):
    input_path = tmp_path / "samples.csv"
    make_samples_csv(input_path)
    colliders_path = tmp_path / "colliders.json"
    colliders_path.write_text(json.dumps([
        {"object_id": "screen", "center": [0.0, 0.0, 5.0], "half_extents": [2.0, 2.0, 0.5]}
    ]))
    features_path = tmp_path / "features.csv"
    attention_path = tmp_path / "attention.json"
    code, out, _ = run(capsys, "pipeline", "--input", str(input_path),
                       "--output", str(features_path),
                       "--window", "5", "--step", "0.5",
                       "--smooth-window", "5",
                       "--baseline-duration", "1.0",
                       "--colliders", str(colliders_path),
                       "--attention-output", str(attention_path))
    assert code == 0
    assert "p01/game:" in out and "events" in out

    dataset = parse_feature_csv(features_path.read_text())
    names = {s.feature for s in dataset}
    assert names == {"fixation_count", "fixation_duration_mean", "saccade_count",
                     "saccade_duration_mean", "saccade_amplitude_mean",
                     "pupil_diameter_mean"}
    fixation_count = next(s for s in dataset if s.feature == "fixation_count")
    assert len(fixation_count) == 10  # span 9.95 s: floor((9.95 - 5) / 0.5) + 1
    assert fixation_count.values.sum() > 0
    pupil = next(s for s in dataset if s.feature == "pupil_diameter_mean")
    assert np.all(np.abs(pupil.values - 1.0) < 0.2)  # divisive baseline lands near 1

    attention = json.loads(attention_path.read_text())
    assert "p01/game" in attention
    assert attention["p01/game"]["screen"]["visits"] >= 1
    assert attention["p01/game"]["screen"]["total_dwell"] > 5.0


def test_pipeline_notes_dropped_attention(capsys, tmp_path):
    input_path = tmp_path / "samples.csv"
    make_samples_csv(input_path)
    colliders_path = tmp_path / "colliders.json"
    colliders_path.write_text(json.dumps([
        {"object_id": "screen", "center": [0.0, 0.0, 5.0], "half_extents": [2.0, 2.0, 0.5]}
    ]))
    code, out, _ = run(capsys, "pipeline", "--input", str(input_path),
                       "--output", str(tmp_path / "features.csv"),
                       "--window", "5", "--step", "0.5",
                       "--colliders", str(colliders_path))
    assert code == 0
    assert "dwell stats dropped" in out


def test_pipeline_rejects_even_smooth_window(capsys, tmp_path):
    input_path = tmp_path / "samples.csv"
    make_samples_csv(input_path, seconds=6.0)
    code, _, err = run(capsys, "pipeline", "--input", str(input_path),
                       "--smooth-window", "4")
    assert code == 2 and "odd" in err


def test_pipeline_rejects_short_recording(capsys, tmp_path):
    input_path = tmp_path / "samples.csv"
    make_samples_csv(input_path, seconds=3.0)
    code, _, err = run(capsys, "pipeline", "--input", str(input_path),
                       "--window", "30")
    assert code == 3 and "shorter" in err


def test_pipeline_bad_input_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n1,2\n")
    code, _, err = run(capsys, "pipeline", "--input", str(bad))
    assert code == 3 and "error:" in err
