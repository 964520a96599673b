import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from hypgraph.cli import CSV_COLUMNS, main, make_config
from hypgraph.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, **kw):
    p = tmp_path / "run.yaml"
    p.write_text(yaml.safe_dump(kw))
    return str(p)


class TestSigma0:
    def test_prints_value(self, capsys):
        assert main(["sigma0", "--quiet"]) == 0
        line = capsys.readouterr().out.strip().splitlines()[0]
        name, value = line.split()
        assert name == "sigma0" and 0.3703 < float(value) < 0.3704

    def test_writes_table(self, tmp_path):
        assert main(["sigma0", "--quiet", "--out", str(tmp_path)]) == 0
        table = json.loads((tmp_path / "sigma0.json").read_text())
        assert table["pass"] and len(table["rows"]) > 0
        assert (tmp_path / "metadata.json").exists()


class TestVerify:
    def test_reports_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, command="verify", samples=200)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["verify", "--config", cfg, "--seed", "7", "--out", str(a), "--quiet"]) == 0
        assert main(["verify", "--config", cfg, "--seed", "7", "--out", str(b), "--quiet"]) == 0
        assert (a / "verify_report.json").read_bytes() == (b / "verify_report.json").read_bytes()
        assert json.loads((a / "verify_report.json").read_text())["seed"] == 7


class TestSolve:
    def test_disk_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, command="solve", family="mean", sigma=0.6, eps=0.02, h=1 / 16)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        with open(out / "solution.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert all(float(r["w"]) <= 1 / 0.6 + 1e-6 for r in rows)
        assert all(float(r["nu3"]) == pytest.approx(1 / float(r["w"])) for r in rows)
        est = json.loads((out / "estimates.json").read_text())
        st = est["stages"][0]
        assert est["pass"] and st["gradient_bound"]["value"] <= 1 / 0.6
        rep = json.loads((out / "report.json").read_text())
        assert rep["runs"][0]["success"]

    def test_schedule_writes_stages(self, tmp_path):
        cfg = write_config(tmp_path, command="solve", sigma=0.7, eps_schedule=[0.04, 0.02], h=1 / 16)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        assert (out / "solution_0.csv").exists() and (out / "solution_1.csv").exists()
        est = json.loads((out / "estimates.json").read_text())
        assert [r["eps"] for r in est["M0_table"]] == [0.04, 0.02]
        assert est["M0_trend"]["asserted"]

    def test_deterministic_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, command="solve", sigma=0.6, eps=0.05, h=1 / 8)
        for d in ("a", "b"):
            assert main(["solve", "--config", cfg, "--out", str(tmp_path / d), "--quiet"]) == 0
        for name in ("solution.csv", "report.json", "estimates.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestOtherCommands:
    def test_radial(self, tmp_path):
        cfg = write_config(tmp_path, command="radial", family="H2", n=3, sigma=0.5, eps=0.02, mesh_size=256)
        out = tmp_path / "out"
        assert main(["radial", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["pass"] and doc["stages"][0]["converged"]
        assert (out / "profile.csv").read_text().splitlines()[1] == "r,u"

    def test_barriers(self, tmp_path, capsys):
        cfg = str(CONFIGS / "ellipse_h2.yaml")
        raw = yaml.safe_load(Path(cfg).read_text())
        raw["command"] = "barriers"
        p = write_config(tmp_path, **raw)
        assert main(["barriers", "--config", p]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["r1"] == pytest.approx(0.8**2 / 1.3)
        # convex domain: no exterior sphere, so the lower bound is zero
        assert doc["r2"] == "inf"
        assert doc["rows"][0]["angle_lower"] == 0 < doc["rows"][0]["angle_upper"]


class TestConfigErrors:
    @pytest.mark.parametrize(
        "raw",
        [
            {"sigma": 1.2},
            {"eps": -0.1},
            {"h": 0},
            {"eps_schedule": [0.01, 0.02]},
            {"bogus_key": 1},
            {"family": "H5"},
            {"command": "radial"},
        ],
    )
    def test_exit_code_two(self, tmp_path, raw, capsys):
        raw = {"command": "solve", **raw}
        assert main(["solve", "--config", write_config(tmp_path, **raw), "--quiet"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file(self):
        assert main(["solve", "--config", "/nonexistent/run.yaml"]) == 2

    def test_make_config_validates(self):
        with pytest.raises(ConfigError):
            make_config("solve", {"n": 1})

    def test_shipped_configs_parse(self):
        for p in sorted(CONFIGS.glob("*.yaml")):
            raw = yaml.safe_load(p.read_text())
            make_config(raw["command"], raw)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "hypgraph", "sigma0", "--quiet"], capture_output=True, text=True, timeout=60)
    assert r.returncode == 0
    assert r.stdout.startswith("sigma0 0.3703")
