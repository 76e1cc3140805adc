import json

import pytest

from propdoa.cli import load_run_config, main, parse_run_config

BENCHMARK_CONFIG = {
    "sensors": 18,
    "spacing_ratio": 0.5,
    "sources": {"angles_deg": [10.0, 21.0, 45.0], "powers": [1.0, 1.0, 1.0]},
    "snr_db": 5.0,
    "snapshots": 200,
    "trials": 2,
    "seed": 20240901,
    "grid": {"start": -90.0, "stop": 90.0, "step": 0.1},
}


def write_config(tmp_path, name="run.json", **overrides):
    document = json.loads(json.dumps(BENCHMARK_CONFIG))
    document.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return path


class TestCount:
    def test_large_array_total(self, capsys):
        assert main(["count", "--sensors", "500", "--sources", "5"]) == 0
        out = capsys.readouterr().out
        assert "total operators: 5049" in out

    def test_benchmark_geometry(self, capsys):
        assert main(["count", "--sensors", "18", "--sources", "3"]) == 0
        out = capsys.readouterr().out
        assert "total operators: 20" in out
        assert "2 <= n <= 6" in out
        assert "psi:6:6" in out

    def test_applicability_verdict(self, capsys):
        assert main(["count", "--sensors", "10", "--sources", "6"]) == 0
        out = capsys.readouterr().out
        assert "no extended propagator" in out
        assert "standard propagator available" in out

    def test_json_output(self, capsys):
        assert main(["count", "--sensors", "18", "--sources", "3", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["total"] == 20
        assert payload["operators"][0] == "psi:2:1"
        assert payload["reason"] is None

    def test_rejects_non_positive(self, capsys):
        assert main(["count", "--sensors", "0", "--sources", "3"]) == 2

    def test_usage_error_exit_code(self):
        assert main(["count", "--sensors", "18"]) == 2


class TestSpectrumCommand:
    def test_writes_csv_and_sidecar(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out = tmp_path / "spec.csv"
        code = main(["spectrum", "--config", str(config), "--method", "psi:3:1",
                     "--output", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "angle_deg,value"
        assert len(lines) == 1 + 1799
        sidecar = tmp_path / "spec.csv.json"
        meta = json.loads(sidecar.read_text())
        assert meta["method"] == "psi:3:1"
        assert meta["seed"] == 20240901
        assert meta["trials"] == 2
        assert meta["snr_db"] == 5.0

    def test_byte_identical_across_runs(self, tmp_path):
        config = write_config(tmp_path)
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (out_a, out_b):
            assert main(["spectrum", "--config", str(config), "--method", "psi:2:1",
                         "--output", str(out)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_order_above_bound_cites_range(self, tmp_path, capsys):
        config = write_config(tmp_path)
        code = main(["spectrum", "--config", str(config), "--method", "psi:9:1",
                     "--output", str(tmp_path / "x.csv")])
        assert code == 2
        assert "2 <= n <= 6" in capsys.readouterr().err

    def test_esprit_has_no_spectrum(self, tmp_path, capsys):
        config = write_config(tmp_path)
        code = main(["spectrum", "--config", str(config), "--method", "esprit",
                     "--output", str(tmp_path / "x.csv")])
        assert code == 2
        assert "no angular spectrum" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["spectrum", "--config", str(tmp_path / "absent.json"),
                     "--method", "music", "--output", str(tmp_path / "x.csv")])
        assert code == 2


class TestRmseCommand:
    def test_curve_file_layout(self, tmp_path):
        config = write_config(tmp_path, snapshots=64, sensors=8,
                              sources={"angles_deg": [-10.0, 25.0]},
                              grid={"start": -90.0, "stop": 90.0, "step": 0.5})
        out = tmp_path / "rmse.csv"
        code = main(["rmse", "--config", str(config), "--snr-start", "0",
                     "--snr-stop", "10", "--snr-step", "5",
                     "--methods", "psi:2:1,esprit", "--output", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "snr_db,psi:2:1,esprit"
        assert len(lines) == 4  # header + 3 SNR points
        assert lines[1].startswith("0,")

    def test_five_method_family_header(self, tmp_path):
        config = write_config(tmp_path, snapshots=64, sensors=8,
                              sources={"angles_deg": [-10.0, 25.0]},
                              grid={"start": -90.0, "stop": 90.0, "step": 0.5})
        out = tmp_path / "family.csv"
        methods = "psi:4:1,psi:4:2,psi:4:3,psi:4:4,esprit"
        code = main(["rmse", "--config", str(config), "--snr-start", "10",
                     "--snr-stop", "10", "--snr-step", "5",
                     "--methods", methods, "--output", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "snr_db," + methods
        assert len(lines) == 2

    def test_rejects_non_positive_step(self, tmp_path, capsys):
        config = write_config(tmp_path)
        code = main(["rmse", "--config", str(config), "--snr-start", "0",
                     "--snr-stop", "10", "--snr-step", "0",
                     "--methods", "esprit", "--output", str(tmp_path / "x.csv")])
        assert code == 2

    def test_rejects_empty_method_list(self, tmp_path, capsys):
        config = write_config(tmp_path)
        code = main(["rmse", "--config", str(config), "--snr-start", "0",
                     "--snr-stop", "10", "--snr-step", "5",
                     "--methods", " , ", "--output", str(tmp_path / "x.csv")])
        assert code == 2


class TestCorrelateCommand:
    def test_single_method_unit_matrix(self, tmp_path):
        config = write_config(tmp_path, snapshots=64, sensors=8,
                              sources={"angles_deg": [-10.0, 25.0]},
                              grid={"start": -90.0, "stop": 90.0, "step": 0.5})
        out = tmp_path / "corr.csv"
        code = main(["correlate", "--config", str(config), "--methods", "psi:2:1",
                     "--output", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "method,psi:2:1"
        assert lines[1] == "psi:2:1,1"

    def test_pair_matrix_structure(self, tmp_path):
        config = write_config(tmp_path, snapshots=64, sensors=8,
                              sources={"angles_deg": [-10.0, 25.0]},
                              grid={"start": -90.0, "stop": 90.0, "step": 0.5})
        out = tmp_path / "corr.csv"
        code = main(["correlate", "--config", str(config),
                     "--methods", "psi:2:1,psi:2:2", "--output", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "method,psi:2:1,psi:2:2"
        row1 = lines[1].split(",")
        row2 = lines[2].split(",")
        assert row1[1] == "1" and row2[2] == "1"
        assert row1[2] == row2[1]


class TestRunConfig:
    def test_unknown_top_level_key(self, tmp_path, capsys):
        config = write_config(tmp_path, bogus=1)
        assert main(["spectrum", "--config", str(config), "--method", "music",
                     "--output", str(tmp_path / "x.csv")]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path):
        config = write_config(tmp_path, sources={"angles_deg": [1.0], "extra": 2})
        with pytest.raises(ValueError, match="extra"):
            load_run_config(config)

    def test_missing_required_key(self, tmp_path):
        document = {k: v for k, v in BENCHMARK_CONFIG.items() if k != "snapshots"}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(document))
        with pytest.raises(ValueError, match="snapshots"):
            load_run_config(path)

    def test_defaults_applied(self):
        run = parse_run_config({
            "sensors": 6,
            "sources": {"angles_deg": [3.0, -20.0]},
            "snr_db": 0.0,
            "snapshots": 10,
            "seed": 5,
        })
        assert run.trials == 1
        assert run.config.spacing_ratio == 0.5
        assert run.scenario.source_powers == (1.0, 1.0)
        assert run.grid_step == 0.1

    def test_document_round_trip(self, tmp_path):
        run = load_run_config(write_config(tmp_path))
        again = parse_run_config(run.to_document())
        assert again == run

    def test_rejects_too_many_sources(self):
        with pytest.raises(ValueError):
            parse_run_config({
                "sensors": 3,
                "sources": {"angles_deg": [0.0, 10.0, 20.0]},
                "snr_db": 0.0,
                "snapshots": 10,
                "seed": 1,
            })
