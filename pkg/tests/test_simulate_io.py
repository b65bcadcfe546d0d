import numpy as np
import pytest

from pcra.exceptions import ArtifactError, IngestError
from pcra.io import dump_json, ingest, load_json, load_jsonl, dump_jsonl, read_trajectory_csv, write_trajectory_csv
from pcra.simulate import SimSpec, simulate
from pcra.trajectory import ObjectClass

HEADER = "scene_id,object_id,class,frame,time_s,x,y\n"


def rows(sid, oid, cls, times, xs, ys):
    return "".join(f"{sid},{oid},{cls},{k},{t},{x},{y}\n" for k, (t, x, y) in enumerate(zip(times, xs, ys)))


def two_scene_csv(path):
    t = np.arange(0, 3.01, 0.1)
    text = HEADER
    for sid in ("a", "b"):
        text += rows(sid, f"{sid}v", "vehicle", t, 10 * t - 15, np.zeros_like(t))
        text += rows(sid, f"{sid}p", "pedestrian", t, np.zeros_like(t), 3 - 1.2 * t)
    path.write_text(text)
    return path


class TestIngest:
    def test_two_scenes(self, tmp_path):
        scenes, report = ingest(two_scene_csv(tmp_path / "t.csv"))
        assert [s.scene_id for s in scenes] == ["a", "b"]
        assert report.rows == 4 * 31 and report.scenes_kept == 2
        # resampled to 5 Hz on the global grid
        np.testing.assert_allclose(np.diff(scenes[0].vehicle.times), 0.2)

    def test_non_overlapping_scene_dropped(self, tmp_path):
        text = HEADER + rows("a", "v", "vehicle", [0, 1, 2], [0, 1, 2], [0, 0, 0])
        text += rows("a", "p", "pedestrian", [5, 6, 7], [0, 0, 0], [0, 1, 2])
        text += rows("b", "v", "vehicle", [0, 1, 2], [0, 1, 2], [0, 0, 0])
        text += rows("b", "p", "pedestrian", [0, 1, 2], [0, 0, 0], [0, 1, 2])
        (tmp_path / "t.csv").write_text(text)
        scenes, report = ingest(tmp_path / "t.csv")
        assert [s.scene_id for s in scenes] == ["b"]
        assert list(report.dropped) == ["a"]
        assert report.to_dict()["scenes_dropped"] == 1

    def test_non_monotone_timestamps(self, tmp_path):
        text = HEADER + rows("bad", "v", "vehicle", [0, 2, 1], [0, 1, 2], [0, 0, 0])
        text += rows("bad", "p", "pedestrian", [0, 1, 2], [0, 0, 0], [0, 1, 2])
        (tmp_path / "t.csv").write_text(text)
        with pytest.raises(IngestError) as e:
            ingest(tmp_path / "t.csv")
        assert e.value.scene_id == "bad"

    def test_malformed_row_line_number(self, tmp_path):
        text = HEADER + rows("a", "v", "vehicle", [0, 1], [0, 1], [0, 0]) + "a,v,vehicle,2,oops,1,1\n"
        (tmp_path / "t.csv").write_text(text)
        with pytest.raises(IngestError) as e:
            read_trajectory_csv(tmp_path / "t.csv")
        assert e.value.line == 4

    def test_unknown_class(self, tmp_path):
        (tmp_path / "t.csv").write_text(HEADER + "a,v,bicycle,0,0,0,0\n")
        with pytest.raises(IngestError) as e:
            read_trajectory_csv(tmp_path / "t.csv")
        assert e.value.line == 2

    def test_empty_file(self, tmp_path):
        (tmp_path / "t.csv").write_text("")
        with pytest.raises(IngestError):
            read_trajectory_csv(tmp_path / "t.csv")
        (tmp_path / "h.csv").write_text(HEADER)
        with pytest.raises(IngestError):
            read_trajectory_csv(tmp_path / "h.csv")

    def test_two_vehicles_rejected(self, tmp_path):
        text = HEADER + rows("a", "v1", "vehicle", [0, 1], [0, 1], [0, 0]) + rows("a", "v2", "vehicle", [0, 1], [0, 1], [1, 1])
        text += rows("a", "p", "pedestrian", [0, 1], [0, 0], [0, 1])
        (tmp_path / "t.csv").write_text(text)
        with pytest.raises(IngestError, match="exactly one vehicle"):
            read_trajectory_csv(tmp_path / "t.csv")

    def test_write_read_exact(self, tmp_path):
        scenes, _ = simulate(SimSpec(n_scenes=3, seed=2))
        write_trajectory_csv(scenes, tmp_path / "s.csv", 10.0)
        back, _ = read_trajectory_csv(tmp_path / "s.csv")
        for a, b in zip(scenes, back):
            assert a.scene_id == b.scene_id
            for cls in ObjectClass:
                assert np.array_equal(a.trajectory(cls).times, b.trajectory(cls).times)
                assert np.array_equal(a.trajectory(cls).points, b.trajectory(cls).points)


class TestJson:
    def test_version_checked(self, tmp_path):
        dump_json({"version": "v1", "b": 1, "a": 2}, tmp_path / "x.json")
        assert (tmp_path / "x.json").read_text().index('"a"') < (tmp_path / "x.json").read_text().index('"b"')
        assert load_json(tmp_path / "x.json", "v1")["a"] == 2
        with pytest.raises(ArtifactError):
            load_json(tmp_path / "x.json", "v2")
        with pytest.raises(ArtifactError):
            load_json(tmp_path / "missing.json")

    def test_jsonl(self, tmp_path):
        dump_jsonl([{"version": "v", "k": i} for i in range(3)], tmp_path / "x.jsonl")
        assert [r["k"] for r in load_jsonl(tmp_path / "x.jsonl", "v")] == [0, 1, 2]


class TestSimulate:
    def test_forced_zero_gap(self):
        _, labels = simulate(SimSpec(n_scenes=5, noise=0.0, crossing_offset=(0.0, 0.0), seed=1))
        for l in labels:
            assert l.min_gap_s == pytest.approx(0.0, abs=1e-9)

    def test_parallel_paths(self):
        scenes, labels = simulate(SimSpec(n_scenes=5, parallel_paths=True, seed=1))
        assert all(not l.conflict for l in labels)
        for s in scenes:
            # the pedestrian never leaves the far sidewalk line
            assert np.all(s.pedestrian.points[:, 1] > 5.0)

    def test_deterministic(self):
        a, la = simulate(SimSpec(n_scenes=200, seed=9))
        b, lb = simulate(SimSpec(n_scenes=200, seed=9))
        assert la == lb
        for s, t in zip(a, b):
            assert np.array_equal(s.vehicle.points, t.vehicle.points)
            assert np.array_equal(s.pedestrian.times, t.pedestrian.times)

    def test_label_matches_geometry(self):
        """Close-gap labels mean the two objects really are near each other at some time."""
        scenes, labels = simulate(SimSpec(n_scenes=80, noise=0.0, seed=3))
        for s, l in zip(scenes, labels):
            t, iv, ip = np.intersect1d(np.round(s.vehicle.times * 10), np.round(s.pedestrian.times * 10), return_indices=True)
            dist = np.hypot(*(s.vehicle.points[iv] - s.pedestrian.points[ip]).T)
            if l.min_gap_s < 0.3:
                # gap * vehicle speed plus one frame of travel bounds the miss distance
                assert dist.min() <= l.min_gap_s * l.vehicle_speed + 0.1 * l.vehicle_speed + 1.0
            if l.min_gap_s > 5.0:
                assert dist.min() > 3.0

    def test_yielding_vehicle_stops(self):
        scenes, labels = simulate(SimSpec(n_scenes=10, yield_probability=1.0, crossing_offset=(-1.0, 1.0), seed=4))
        for s, l in zip(scenes, labels):
            assert l.yielded
            assert np.min(np.diff(s.vehicle.points[:, 0])) < 0.05
            assert l.min_gap_s > 0.5

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            SimSpec(yield_probability=1.5)
        with pytest.raises(ValueError):
            SimSpec(vehicle_speed=(5.0, 1.0))
