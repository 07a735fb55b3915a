import csv
import re
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dualppln import cli, waveguide
from dualppln.config import example_config, validate


def small_doc():
    doc = example_config()
    doc["sweep"] = {
        "signal_um": {"range": [1.55, 1.75], "steps": 21},
        "second": {"range": [0.70, 0.77], "steps": 21},
        "eo_field_V_per_m": {"range": [0.0, 1.0e6], "steps": 11},
        "eo_length_cm": {"range": [1.0, 5.0], "steps": 3},
    }
    doc["spectrum"] = {"points": 801, "tau_points": 61}
    return doc


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(small_doc()))
    return p


def run(command, cfg_path, out, *extra):
    return cli.main([command, "--config", str(cfg_path), "--out", str(out), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_design_outputs(cfg_path, tmp_path):
    assert run("design", cfg_path, tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "periods.csv")
    assert rows[0][:5] == ["period1_um", "period2_um", "r1_rad_per_um", "r2_rad_per_um", "r3_rad_per_um"]
    values = dict(zip(rows[0], rows[1]))
    assert abs(float(values["period1_um"]) / 25.84 - 1) < 0.05
    assert abs(float(values["period2_um"]) / 154.96 - 1) < 0.10
    # fixed 9-significant-digit format
    assert all(re.fullmatch(r"-?\d\.\d{8}e[+-]\d{2}", v) for v in rows[1])
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    names = {a["name"] for a in man["artifacts"]}
    assert {"periods", "design"} <= names
    assert man["run"]["config_digest"] == validate(small_doc()).digest


def test_map_outputs_and_headers(cfg_path, tmp_path):
    assert run("map", cfg_path, tmp_path / "m") == 0
    assert read_csv(tmp_path / "m" / "map.csv")[0] == ["axis1", "axis2", "delta_rad_per_um", "valid"]
    assert read_csv(tmp_path / "m" / "locus.csv")[0] == ["axis1", "axis2"]
    assert len(read_csv(tmp_path / "m" / "map.csv")) == 1 + 21 * 21


def test_other_command_headers(cfg_path, tmp_path):
    assert run("spectrum", cfg_path, tmp_path / "s") == 0
    assert read_csv(tmp_path / "s" / "spectrum.csv")[0] == ["nu_rad_per_s", "amplitude_sq", "branch"]
    assert run("dip", cfg_path, tmp_path / "d") == 0
    assert read_csv(tmp_path / "d" / "dip_oe.csv")[0] == ["tau_s", "Rc"]
    assert run("eo", cfg_path, tmp_path / "e") == 0
    assert read_csv(tmp_path / "e" / "eo_sweep.csv")[0] == ["E_a_V_per_m", "L_cm", "eta"]
    assert read_csv(tmp_path / "e" / "eo_trace.csv")[0] == ["x_m", "P_o", "P_e"]


def test_validate_command(cfg_path, tmp_path, capsys):
    assert run("validate", cfg_path, tmp_path / "v") == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    rows = read_csv(tmp_path / "v" / "validate.csv")
    assert len(rows) > 20


def test_schema_errors_exit_2(tmp_path):
    doc = small_doc()
    del doc["waves"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert run("design", p, tmp_path / "x") == 2
    doc = small_doc()
    doc["sweep"]["second"]["range"] = [0.73, 0.73]
    p.write_text(json.dumps(doc))
    assert run("map", p, tmp_path / "x") == 2
    assert not (tmp_path / "x" / "map.csv").exists()


def test_io_error_exit_4(tmp_path):
    assert run("design", tmp_path / "missing.json", tmp_path / "x") == 4


def test_computation_error_exit_3(tmp_path):
    doc = small_doc()
    doc["geometry"]["dn_max"] = 0.0
    p = tmp_path / "flat.json"
    p.write_text(json.dumps(doc))
    assert run("design", p, tmp_path / "x", "--no-cache") == 3


def test_empty_locus_exit_3(tmp_path):
    doc = small_doc()
    doc["sweep"]["signal_um"] = {"range": [1.55, 1.56], "steps": 3}
    doc["sweep"]["second"] = {"range": [0.700, 0.701], "steps": 3}
    p = tmp_path / "far.json"
    p.write_text(json.dumps(doc))
    assert run("map", p, tmp_path / "x", "--no-cache") == 3


def test_determinism_and_cache_transparency(cfg_path, tmp_path):
    cache_dir = tmp_path / "cache"
    outs = []
    for name, extra in (("cold", ()), ("warm", ()), ("nocache", ("--no-cache",))):
        waveguide.clear_mode_cache()
        out = tmp_path / name
        for command in ("design", "spectrum", "eo"):
            manifest = cli.execute(command, validate(small_doc()), out / command, use_cache=not extra,
                                   cache_dir=cache_dir)
            assert manifest.verify()
        if name == "warm":
            assert waveguide.solve_count() == 0
        outs.append(out)
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.suffix in (".csv", ".json", ".txt")
                   and p.name != "manifest.json")
    assert files
    for rel in files:
        data = (outs[0] / rel).read_bytes()
        assert data == (outs[1] / rel).read_bytes() == (outs[2] / rel).read_bytes(), rel


def test_threads_do_not_change_map(cfg_path, tmp_path):
    assert run("map", cfg_path, tmp_path / "a", "--no-cache") == 0
    assert run("map", cfg_path, tmp_path / "b", "--no-cache", "--threads", "3") == 0
    assert (tmp_path / "a" / "map.csv").read_bytes() == (tmp_path / "b" / "map.csv").read_bytes()


def test_console_script_entry(cfg_path, tmp_path):
    r = subprocess.run([sys.executable, "-m", "dualppln.cli", "design", "--config", str(cfg_path),
                        "--out", str(tmp_path / "sub"), "--no-cache"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "sub" / "periods.csv").exists()
