import json
import math
import os
from pathlib import Path

import pytest

import gazerace as gr

SOURCE = Path(os.environ.get("GAZERACE_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def pose_points(h, v, open_, brow):
    """Landmarks for the default eye geometry reproducing the given ratios."""
    width = 0.1
    inner, outer = (0.40, 0.50), (0.50, 0.50)
    gap = open_ * width
    upper = (0.45, 0.50 - gap / 2)
    lower = (0.45, 0.50 + gap / 2)
    brow_pt = (0.45, upper[1] - brow * width)
    r1, r2 = h * width, v * gap
    dx, dy = upper[0] - inner[0], upper[1] - inner[1]
    d = math.hypot(dx, dy)
    along = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    off = math.sqrt(r1 * r1 - along * along)
    iris = (inner[0] + (along * dx - off * dy) / d, inner[1] + (along * dy + off * dx) / d)
    return {33: inner, 133: outer, 159: upper, 145: lower, 105: brow_pt, 468: iris}


def action_ratios():
    s = 1 / math.sqrt(2)
    dirs = {
        "Up": (0, -1, 0, 0), "Down": (0, 1, 0, 0), "Left": (-1, 0, 0, 0), "Right": (1, 0, 0, 0),
        "FarLeft": (-s, 0, 0, -s), "FarRight": (s, 0, 0, -s), "Wide": (0, 0, 1, 0),
        "Squint": (0, 0, -1, 0), "Center": (0, 0, 0, 0), "Raise": (0, 0, 0, 1),
    }
    base = (0.5, 0.5, 0.4, 0.6)
    return {name: tuple(b + 0.06 * x for b, x in zip(base, d)) for name, d in dirs.items()}


@pytest.fixture(scope="module")
def profile():
    samples = []
    for name, target in action_ratios().items():
        r = gr.extract_ratios(pose_points(*target))
        samples += [(getattr(gr.Action, name), r)] * 30
    return gr.calibrate(samples)


def test_ratio_examples():
    assert gr.ratio((0, 0), (1, 0), (0, 0)) == 0.0
    assert gr.ratio((0, 0), (4, 0), (2, 0)) == 0.5
    assert gr.ratio((0, 0), (4, 0), (1, 2)) == pytest.approx(math.sqrt(5) / 4, rel=1e-12)
    with pytest.raises(gr.DegenerateGeometry):
        gr.ratio((1, 1), (1, 1), (0, 0))


def test_extract_ratios_matches_targets():
    r = gr.extract_ratios(pose_points(0.5, 0.44, 0.4, 0.6))
    assert r.to_list() == pytest.approx([0.5, 0.44, 0.4, 0.6], abs=1e-12)
    with pytest.raises(gr.MissingLandmark):
        gr.extract_ratios({33: (0, 0)})


def test_calibrate_and_classify(profile):
    for name in action_ratios():
        a = getattr(gr.Action, name)
        assert gr.classify_frame(profile.centroid(a), profile) == a
        assert profile.spread(a).to_list() == [0.01] * 4
    with pytest.raises(gr.CalibrationError):
        gr.calibrate([(gr.Action.Up, gr.RatioVector(0.5, 0.5, 0.5, 0.5))] * 30)


def test_classifier_debounces(profile):
    c = gr.Classifier(profile, gr.SmoothingParams(1.0, 3))
    wide = profile.centroid(gr.Action.Wide)
    emitted = [c.push(wide)[0] for _ in range(3)]
    assert emitted == [gr.Action.Center, gr.Action.Center, gr.Action.Wide]


def test_wire_round_trip():
    pts = {33: (0.1, 0.2), 468: (0.3, 0.4)}
    line = gr.encode_wire_frame(1234, pts)
    t, back = gr.parse_wire_frame(line)
    assert t == 1234
    assert back == pts
    with pytest.raises(gr.MalformedFrame):
        gr.parse_wire_frame('{"t_us": 1, "pts": [[999, 0, 0]]}')


def test_signed_rank():
    r = gr.signed_rank([1, 2, 3], [0, 0, 0])
    assert r["V"] == 0
    assert r["p"] == pytest.approx(0.25)
    assert r["method"] == "exact"


def test_replay_race(tmp_path, profile):
    ratios = action_ratios()
    route = [("Center", 20), ("Raise", 10), ("Center", 150), ("Wide", 500), ("Center", 100),
             ("Raise", 10), ("Center", 300)]
    rec = tmp_path / "run.jsonl"
    t = 0
    with rec.open("w") as f:
        f.write('{"proto":1}\n')
        for name, n in route:
            pts = pose_points(*ratios[name])
            for _ in range(n):
                t += 20000
                f.write(gr.encode_wire_frame(t, pts) + "\n")
    track = tmp_path / "track.json"
    track.write_text(json.dumps({
        "start": {"x": 0, "y": 0, "z": 0, "yaw": 0},
        "gates": [{"center": [5, 0, 1.5], "normal_yaw": 0, "size": 1.4}],
    }))
    res = gr.replay_race(rec, profile, track, tmp_path)
    assert res["finished"]
    assert res["gates_passed"] == 1
    m = gr.trajectory_metrics(tmp_path / "trajectory.jsonl", 1)
    assert m["path_length_m"] == pytest.approx(res["metrics"]["path_length_m"])
    assert 5.0 < m["path_length_m"] < 5.2


def test_compare_runs(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    header = "label,time_s,path_length_m,avg_velocity_mps,max_velocity_mps\n"
    a.write_text(header + ",60,73.44,1.224,2\n")
    b.write_text(header + ",70,89.29,1.2756,2\n")
    rep = json.loads(gr.compare_runs(a, b))
    path = next(r for r in rep["rows"] if r["metric"] == "Path length, m")
    assert round(path["change_pct"], 2) == -17.75


def test_default_track_file_loads(profile, tmp_path):
    rec = tmp_path / "empty.jsonl"
    rec.write_text("")
    res = gr.replay_race(rec, profile, SOURCE / "data" / "default_track.json")
    assert res["gate_count"] == 7
    assert not res["finished"]
    assert res["metrics"] is None
