import json

import numpy as np
import pytest

from noisecycle.cli import main
from noisecycle.harness import parse_csv


@pytest.fixture
def fig2_model_json(tmp_path):
    spec = {
        "m": 3,
        "mode": "explicit",
        "corr": [[1.0, float(np.sqrt(0.725)), 0.7],
                 [float(np.sqrt(0.725)), 1.0, float(np.sqrt(0.79))],
                 [0.7, float(np.sqrt(0.79)), 1.0]],
        "sigma2": 1.0,
        "power": [1.1, 1.0, 1.05],
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(spec))
    return str(path)


class TestOrderCommand:
    def test_optimal_order_printed(self, fig2_model_json, capsys):
        assert main(["order", fig2_model_json]) == 0
        out = capsys.readouterr().out
        assert "0->2" in out
        assert "2->1" in out and "2->3" in out
        assert "total_snr,,,10" in out
        assert "decode_order,,,2 1 3" in out

    def test_forced_lead(self, fig2_model_json, capsys):
        assert main(["order", fig2_model_json, "--forced-lead", "1"]) == 0
        out = capsys.readouterr().out
        assert "0->1" in out
        assert "0->2" not in out and "0->3" not in out


class TestRatesCommand:
    def test_csv_shape_and_values(self, capsys):
        assert main(["rates", "--m", "4", "--rho-grid", "0,0.5",
                     "--snr-grid", "1,3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "m,rho,snr,lead_rate,recycled_rate,average_rate"
        assert len(lines) == 5
        row = dict(zip(lines[0].split(","), lines[4].split(",")))
        assert float(row["rho"]) == 0.5
        assert float(row["snr"]) == 3.0
        assert float(row["lead_rate"]) == pytest.approx(1.0)


class TestBoundsCommand:
    def test_gap_columns_consistent(self, capsys):
        assert main(["bounds", "--rho-grid", "0,0.6", "--snr-grid", "1,4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("rho,snr,independent_sum")
        for line in lines[1:]:
            rho, snr, indep, ach, bound, joint = map(float, line.split(","))
            assert bound >= ach - 1e-9
            assert ach >= indep - 1e-9


class TestCapacityCommand:
    def test_waterfill_report(self, capsys):
        assert main(["capacity", "--m", "2", "--rho", "0.5", "--power", "1"]) == 0
        out = capsys.readouterr().out
        assert "water_level,2" in out
        assert "capacity_bits,1.20752" in out


class TestBlerCommand:
    def test_end_to_end(self, tmp_path, capsys):
        config = {
            "channel": {"m": 2, "mode": "gm", "rho": 0.6},
            "codes": [{"type": "rlc", "n": 32, "k": 26, "seed": 1},
                      {"type": "rlc", "n": 32, "k": 26, "seed": 2}],
            "decoders": [{"type": "orbgrand", "max_queries": 2000}] * 2,
            "pipeline": {"mode": "static"},
            "sweep": {"ebn0_db": [6.0], "min_trials": 200, "max_trials": 200,
                      "min_block_errors": 1000000},
        }
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps(config))
        out_path = tmp_path / "out.csv"
        assert main(["bler", str(cfg_path), "--output", str(out_path)]) == 0
        stdout_points = parse_csv(capsys.readouterr().out)
        file_points = parse_csv(out_path.read_text())
        assert stdout_points == file_points
        assert len(file_points) == 2
        assert all(p.trials == 200 for p in file_points)
        assert (tmp_path / "out.csv.meta.json").exists()

    def test_seed_override_changes_output(self, tmp_path, capsys):
        config = {
            "channel": {"m": 1, "mode": "gm", "rho": 0.0},
            "codes": [{"type": "rlc", "n": 32, "k": 26, "seed": 1}],
            "decoders": [{"type": "orbgrand", "max_queries": 2000}],
            "pipeline": {"mode": "independent"},
            "sweep": {"ebn0_db": [3.0], "min_trials": 300, "max_trials": 300,
                      "min_block_errors": 1000000},
            "base_seed": 5,
        }
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps(config))
        main(["bler", str(cfg_path)])
        first = capsys.readouterr().out
        main(["bler", str(cfg_path), "--seed", "6"])
        second = capsys.readouterr().out
        assert first != second
