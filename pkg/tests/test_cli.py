"""End-to-end runs of the psm command line through main(argv)."""

import json
import math

import numpy as np
import pytest

from psm.cli import main
from psm.geometry import points_matrix
from psm.datagen import read_dataset_csv

from helpers import DIGIT3_BASE, digit3_configs, read_csv_rows


def write_digit_landmarks(path, n=12, seed=5):
    lines = ["specimen_id,landmark_index,x,y"]
    for config in digit3_configs(n=n, seed=seed):
        for i, (x, y) in enumerate(config.landmarks, start=1):
            lines.append(f"{config.specimen_id},{i},{float(x)!r},{float(y)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run(*argv):
    return main(list(argv))


class TestGenerate:
    def test_writes_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "data"
        code = run("generate", "--family", "s_curve", "--n", "50",
                   "--seed", "3", "--out", str(out))
        assert code == 0
        points, meta = read_dataset_csv(out / "s_curve.csv")
        assert len(points) == 50
        assert meta["kind"] == "dataset"
        assert meta["chart"] == "sphere"
        assert meta["family"] == "s_curve"
        assert meta["n"] == 50 and meta["seed"] == 3
        assert meta["shift"] == "auto"
        assert meta["resolved_shift"] > 0
        assert meta["generator"] == "numpy.random.PCG64"
        assert meta["params"] == {"noise_scale_u": 1.0 / 32.0}

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("generate", "--family", "sea_wave", "--n", "30",
                   "--seed", "9", "--out", str(a)) == 0
        assert run("generate", "--family", "sea_wave", "--n", "30",
                   "--seed", "9", "--out", str(b)) == 0
        assert (a / "sea_wave.csv").read_bytes() == (b / "sea_wave.csv").read_bytes()
        assert (a / "sea_wave.meta.json").read_bytes() == \
               (b / "sea_wave.meta.json").read_bytes()

    def test_family_required(self, tmp_path, capsys):
        code = run("generate", "--out", str(tmp_path))
        assert code == 2
        assert "family" in capsys.readouterr().err

    def test_invalid_family_rejected_by_parser(self, tmp_path):
        code = run("generate", "--family", "torus", "--out", str(tmp_path))
        assert code == 2

    def test_infeasible_shift_is_an_error(self, tmp_path, capsys):
        code = run("generate", "--family", "s_curve", "--n", "20",
                   "--shift", "0.001", "--out", str(tmp_path))
        assert code == 1
        assert "error" in capsys.readouterr().err
        assert not (tmp_path / "s_curve.csv").exists()

    def test_quiet_silences_stdout(self, tmp_path, capsys):
        code = run("generate", "--family", "s_curve", "--n", "20",
                   "--quiet", "--out", str(tmp_path))
        assert code == 0
        assert capsys.readouterr().out == ""

    def test_ellipsoid_params_forwarded(self, tmp_path):
        code = run("generate", "--family", "ellipsoid", "--n", "40",
                   "--a", "5", "--mode", "surface", "--out", str(tmp_path))
        assert code == 0
        meta = json.loads((tmp_path / "ellipsoid.meta.json").read_text())
        assert meta["params"]["a"] == 5.0
        assert meta["params"]["mode"] == "surface"
        assert meta["params"]["b"] == pytest.approx(math.sqrt(2.0))


class TestShapes:
    def test_alignment_outputs(self, tmp_path):
        lm = write_digit_landmarks(tmp_path / "digits.csv")
        out = tmp_path / "out"
        assert run("shapes", str(lm), "--out", str(out)) == 0
        points, meta = read_dataset_csv(out / "preshapes.csv")
        assert meta["kind"] == "preshape"
        assert meta["k"] == DIGIT3_BASE.shape[0]
        assert meta["n"] == 12 and len(points) == 12
        assert len(meta["specimen_ids"]) == 12
        mean = np.array(meta["mean"])
        assert abs(np.linalg.norm(mean) - 1.0) <= 1e-9

    def test_single_specimen_fails(self, tmp_path, capsys):
        lm = write_digit_landmarks(tmp_path / "one.csv", n=1)
        code = run("shapes", str(lm), "--out", str(tmp_path / "out"))
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert run("shapes", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path)) == 2


@pytest.fixture()
def s_curve_csv(tmp_path):
    out = tmp_path / "data"
    assert run("generate", "--family", "s_curve", "--n", "60", "--seed", "7",
               "--quiet", "--out", str(out)) == 0
    return out / "s_curve.csv"


@pytest.fixture()
def preshapes_csv(tmp_path):
    lm = write_digit_landmarks(tmp_path / "digits.csv")
    out = tmp_path / "pre"
    assert run("shapes", str(lm), "--quiet", "--out", str(out)) == 0
    return out / "preshapes.csv"


class TestFit:
    def test_three_export_files(self, tmp_path, s_curve_csv):
        out = tmp_path / "run"
        code = run("fit", str(s_curve_csv), "--directions", "8",
                   "--out", str(out))
        assert code == 0
        assert (out / "submanifold.csv").is_file()
        assert (out / "projected.csv").is_file()
        assert (out / "summary.json").is_file()
        assert not (out / "shapes.json").exists()

    def test_summary_contents(self, tmp_path, s_curve_csv):
        out = tmp_path / "run"
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--bandwidth", "inf", "--kernel", "gaussian",
                   "--out", str(out)) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["command"] == "fit"
        assert summary["input"] == "s_curve.csv"
        assert summary["n_points"] == 60
        assert summary["start_kind"] == "mean"
        assert len(summary["start"]) == 4
        cfg = summary["config"]
        assert cfg["epsilon"] == 0.02 and cfg["delta"] == 0.2
        assert cfg["num_directions"] == 8 and cfg["dim"] == 2
        assert cfg["kernel"] == {"kind": "gaussian", "bandwidth": "inf"}
        assert sorted(summary["stop_reasons"]) == [str(i) for i in range(1, 9)]
        assert summary["variation_score"]["total"] >= 0
        assert len(summary["variation_score"]["per_net"]) == 8

    def test_submanifold_rows_match_summary(self, tmp_path, s_curve_csv):
        out = tmp_path / "run"
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--out", str(out)) == 0
        header, rows = read_csv_rows(out / "submanifold.csv")
        assert header[:2] == ["net_index", "level"]
        mat = np.array([[float(v) for v in r[2:]] for r in rows])
        np.testing.assert_allclose(np.linalg.norm(mat, axis=1), 1.0,
                                   rtol=0.0, atol=1e-12)
        indices = {int(r[0]) for r in rows}
        assert indices == set(range(1, 9))

    def test_flow_fit(self, tmp_path, s_curve_csv):
        out = tmp_path / "run"
        assert run("fit", str(s_curve_csv), "--k", "1", "--out", str(out)) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["dim"] == 1
        assert sorted(summary["stop_reasons"]) == ["1", "2"]
        assert "flow" in summary["note"]

    def test_custom_start(self, tmp_path, s_curve_csv):
        points, _ = read_dataset_csv(s_curve_csv)
        coords = ",".join(repr(float(v)) for v in points[10].coords)
        out = tmp_path / "run"
        # the = form keeps argparse from reading a leading minus as a flag
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--start", "custom", f"--coords={coords}",
                   "--out", str(out)) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["start_kind"] == "custom"
        np.testing.assert_allclose(summary["start"], points[10].coords,
                                   rtol=0.0, atol=1e-12)

    def test_custom_start_needs_coords(self, tmp_path, s_curve_csv):
        assert run("fit", str(s_curve_csv), "--start", "custom",
                   "--out", str(tmp_path / "x")) == 2

    def test_custom_start_must_be_unit(self, tmp_path, s_curve_csv):
        assert run("fit", str(s_curve_csv), "--start", "custom",
                   "--coords", "2,0,0,0", "--out", str(tmp_path / "x")) == 2

    def test_bad_epsilon_delta_pair(self, tmp_path, s_curve_csv):
        assert run("fit", str(s_curve_csv), "--epsilon", "0.3",
                   "--delta", "0.2", "--out", str(tmp_path / "x")) == 2

    def test_missing_input_file(self, tmp_path):
        assert run("fit", str(tmp_path / "ghost.csv"),
                   "--out", str(tmp_path)) == 2

    def test_shape_grid_written_for_preshape_input(self, tmp_path, preshapes_csv):
        out = tmp_path / "run"
        assert run("fit", str(preshapes_csv), "--directions", "8",
                   "--grid-samples", "5", "--out", str(out)) == 0
        payload = json.loads((out / "shapes.json").read_text())
        assert payload["k"] == DIGIT3_BASE.shape[0]
        assert payload["samples_per_direction"] == 5
        assert payload["start_kind"] == "mean"
        grid = payload["grid"]
        assert len(grid) == 5
        assert grid[2][2] is not None

    def test_even_grid_samples_is_usage_error(self, tmp_path, preshapes_csv):
        out = tmp_path / "run"
        code = run("fit", str(preshapes_csv), "--directions", "8",
                   "--grid-samples", "4", "--out", str(out))
        assert code == 2
        assert not out.exists() or not any(out.iterdir())

    def test_rerun_is_byte_identical(self, tmp_path, s_curve_csv):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("fit", str(s_curve_csv), "--directions", "8",
                       "--quiet", "--out", str(out)) == 0
        for name in ("submanifold.csv", "projected.csv", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_flat_chart_dataset(self, tmp_path):
        # ambient 3 so the top-3 eigen projection has a full basis
        rng = np.random.default_rng(120)
        xs = np.stack([rng.uniform(-1, 1, 50),
                       0.02 * rng.standard_normal(50),
                       0.01 * rng.standard_normal(50)], axis=1)
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        lines = ["point_index,c0,c1,c2"]
        lines += [f"{i}," + ",".join(repr(float(v)) for v in row)
                  for i, row in enumerate(xs)]
        (data_dir / "cloud.csv").write_text("\n".join(lines) + "\n")
        (data_dir / "cloud.meta.json").write_text(
            json.dumps({"chart": "flat"}) + "\n")
        out = tmp_path / "run"
        code = run("fit", str(data_dir / "cloud.csv"), "--k", "1",
                   "--bandwidth", "inf", "--out", str(out))
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["start"]) == 3

    def test_rank_deficient_data_fails_cleanly(self, tmp_path):
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        lines = ["point_index,c0,c1"]
        lines += [f"{i},{float(i) / 10!r},0.0" for i in range(20)]
        (data_dir / "line.csv").write_text("\n".join(lines) + "\n")
        (data_dir / "line.meta.json").write_text(json.dumps({"chart": "flat"}))
        out = tmp_path / "run"
        code = run("fit", str(data_dir / "line.csv"), "--k", "2",
                   "--bandwidth", "inf", "--out", str(out))
        assert code == 1
        assert not (out / "summary.json").exists()


class TestCompareGeodesic:
    def test_geodesic_rows_added(self, tmp_path, s_curve_csv):
        out = tmp_path / "run"
        code = run("compare-geodesic", str(s_curve_csv), "--directions", "8",
                   "--out", str(out))
        assert code == 0
        header, rows = read_csv_rows(out / "projected.csv")
        kinds = {r[0] for r in rows}
        assert "geodesic" in kinds
        geo_indices = {r[1] for r in rows if r[0] == "geodesic"}
        assert geo_indices == {"1", "2"}
        summary = json.loads((out / "summary.json").read_text())
        assert summary["command"] == "compare-geodesic"
        assert set(summary["geodesic_levels"]) == {"1", "2"}

    def test_geodesic_levels_match_polylines(self, tmp_path, s_curve_csv):
        out = tmp_path / "run"
        assert run("compare-geodesic", str(s_curve_csv), "--directions", "8",
                   "--out", str(out)) == 0
        header, rows = read_csv_rows(out / "projected.csv")
        summary = json.loads((out / "summary.json").read_text())
        for key in ("1", "2"):
            count = sum(1 for r in rows if r[0] == "geodesic" and r[1] == key)
            assert count == summary["geodesic_levels"][key]


class TestConfigFile:
    def test_file_sets_values(self, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("family = sea_wave\nn = 25\nseed = 4\n", encoding="utf-8")
        out = tmp_path / "out"
        assert run("generate", "--config", str(cfg), "--out", str(out)) == 0
        meta = json.loads((out / "sea_wave.meta.json").read_text())
        assert meta["n"] == 25 and meta["seed"] == 4

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("family = sea_wave\nn = 25\n", encoding="utf-8")
        out = tmp_path / "out"
        assert run("generate", "--config", str(cfg), "--n", "40",
                   "--out", str(out)) == 0
        meta = json.loads((out / "sea_wave.meta.json").read_text())
        assert meta["n"] == 40

    def test_comments_and_dashes(self, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("# my run\nfamily = sea_wave  # family\n"
                       "noise-level = 0.1\n\nn = 30\n", encoding="utf-8")
        out = tmp_path / "out"
        assert run("generate", "--config", str(cfg), "--out", str(out)) == 0
        meta = json.loads((out / "sea_wave.meta.json").read_text())
        assert meta["params"]["noise_level"] == 0.1

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.conf"
        cfg.write_text("family = sea_wave\nbogus = 1\n", encoding="utf-8")
        assert run("generate", "--config", str(cfg),
                   "--out", str(tmp_path / "out")) == 2
        assert "bogus" in capsys.readouterr().err

    def test_other_commands_keys_skipped(self, tmp_path):
        # a shared config may carry fit keys; generate ignores them
        cfg = tmp_path / "run.conf"
        cfg.write_text("family = sea_wave\nn = 20\nepsilon = 0.05\n",
                       encoding="utf-8")
        assert run("generate", "--config", str(cfg),
                   "--out", str(tmp_path / "out")) == 0

    def test_missing_config_file(self, tmp_path):
        assert run("generate", "--config", str(tmp_path / "none.conf"),
                   "--family", "s_curve", "--out", str(tmp_path)) == 2

    def test_malformed_line(self, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("family sea_wave\n", encoding="utf-8")
        assert run("generate", "--config", str(cfg),
                   "--out", str(tmp_path / "out")) == 2

    def test_bad_value_type(self, tmp_path, capsys):
        cfg = tmp_path / "run.conf"
        cfg.write_text("family = sea_wave\nn = lots\n", encoding="utf-8")
        assert run("generate", "--config", str(cfg),
                   "--out", str(tmp_path / "out")) == 2
        assert "n" in capsys.readouterr().err


class TestThreadCap:
    def test_invalid_thread_cap(self, tmp_path, s_curve_csv, monkeypatch):
        monkeypatch.setenv("PSM_THREADS", "many")
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--out", str(tmp_path / "x")) == 2
        monkeypatch.setenv("PSM_THREADS", "0")
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--out", str(tmp_path / "y")) == 2

    def test_single_thread_matches_default(self, tmp_path, s_curve_csv,
                                           monkeypatch):
        out_multi = tmp_path / "multi"
        monkeypatch.delenv("PSM_THREADS", raising=False)
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--quiet", "--out", str(out_multi)) == 0
        monkeypatch.setenv("PSM_THREADS", "1")
        out_single = tmp_path / "single"
        assert run("fit", str(s_curve_csv), "--directions", "8",
                   "--quiet", "--out", str(out_single)) == 0
        assert (out_multi / "submanifold.csv").read_bytes() == \
               (out_single / "submanifold.csv").read_bytes()


class TestTopLevel:
    def test_help_exits_zero(self, capsys):
        assert run("--help") == 0
        assert "psm" in capsys.readouterr().out

    def test_no_command_is_usage_error(self):
        assert run() == 2

    def test_unknown_command(self):
        assert run("transmogrify") == 2
