import csv
import json
import math

import pytest

from hausdorff_lab import __version__
from hausdorff_lab.cli import NORM_COLUMNS, main, norm_rows
from hausdorff_lab.config import (THREADS_ENV, ConfigError, ExperimentConfig, load_config,
                                  parse_config, resolve_threads)


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0].startswith(f"# hausdorff-lab {__version__} generated ")
    return list(csv.DictReader(lines[1:]))


def body(path):
    raw = path.read_bytes()
    assert b"\r" not in raw
    return raw.split(b"\n", 1)[1]


# --- config ----------------------------------------------------------------


def test_defaults():
    cfg = parse_config({})
    assert cfg.kernel.name == "box" and cfg.grid == {"L": [512.0], "N": [65536]}
    assert cfg.p_list == (1.0, 1.5, 2.0, 3.0, math.inf)
    assert parse_config({"kernel": {"n": 2}}).grid == {"L": [64.0, 64.0], "N": [2048, 2048]}


def test_scalar_grid_broadcasts():
    cfg = parse_config({"kernel": {"n": 2}, "grid": {"L": 8, "N": 64}})
    assert cfg.grid_spec().N == (64, 64)


@pytest.mark.parametrize("doc", [
    {"eps_schedule": []},
    {"eps_schedule": [0.01, 0.1]},
    {"grid": {"L": [8.0], "N": [100]}},
    {"grid": {"L": [-1.0], "N": [64]}},
    {"grid": {"L": [8.0, 8.0], "N": [64, 64]}},
    {"unknown": 1},
    {"kernel": {"name": "gamma"}},
    {"kernel": {"name": "power_box", "params": [-1.0]}},
    {"p_list": [0.5]},
    {"p_list": ["big"]},
    {"delta": 1.0},
    {"tolerances": {"duality": 0}},
    {"tolerances": {"speed": 1}},
    {"seed": 1.5},
    [],
])
def test_schema_violations(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_to_dict_round_trip():
    cfg = parse_config({"kernel": {"name": "power_box", "params": [2], "n": 1},
                        "p_list": [2, "inf"], "seed": 7})
    again = parse_config(cfg.to_dict())
    assert again == cfg
    assert isinstance(ExperimentConfig().to_dict(), dict)


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(5) == 5
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_threads(None)
    with pytest.raises(ConfigError):
        resolve_threads(0)


# --- norms -----------------------------------------------------------------


def test_norm_rows_box():
    rows = {r[2]: r for r in norm_rows(parse_config({"p_list": [1, 2, "inf"]}))}
    assert float(rows["2"][3]) == pytest.approx(2.0, abs=1e-10)
    assert float(rows["2"][4]) == pytest.approx(2.0, abs=1e-10)
    assert rows["1"][3] == "1"
    assert rows["inf"][3] == "inf"  # order-1 moment of the box diverges


def test_norms_csv(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"name": "box", "n": 2}, "p_list": [2]})
    assert main(["norms", "--config", cfg, "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "norms.csv")
    assert list(row) == NORM_COLUMNS
    assert float(row["moment_1-1/p"]) == pytest.approx(4.0, abs=1e-10)
    assert row["converged_1-1/p"] == "true"


def test_norms_hardy_infinite_sentinel(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"name": "hardy"}, "p_list": [2]})
    assert main(["norms", "--config", cfg, "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "norms.csv")
    assert row["moment_0"] == "inf"
    assert float(row["moment_1-1/p"]) == pytest.approx(2.0, abs=1e-8)


def test_norms_twelve_significant_digits(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"name": "exp"}, "p_list": [2]})
    main(["norms", "--config", cfg, "--out", str(tmp_path)])
    (row,) = read_csv(tmp_path / "norms.csv")
    assert row["moment_1-1/p"] == f"{math.sqrt(math.pi):.12g}"


# --- exit codes ------------------------------------------------------------


@pytest.mark.parametrize("cmd", ["norms", "sweep", "check"])
def test_config_error_exit_2(tmp_path, cmd, capsys):
    cfg = write_cfg(tmp_path, {"eps_schedule": []})
    assert main([cmd, "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_threads_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, {"p_list": [2]})
    assert main(["norms", "--config", cfg, "--out", str(tmp_path), "--threads", "0"]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["norms", "--config", str(tmp_path / "nope.json")]) == 2


# --- sweep -----------------------------------------------------------------


def test_sweep_box_p2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"p_list": [2, "inf"], "h1_eps_schedule": None})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep_lp_p2.csv")
    assert [float(r["epsilon"]) for r in rows] == [0.1, 0.01, 0.001]
    (summary,) = read_csv(tmp_path / "sweep_summary.csv")
    assert float(summary["extrapolated"]) == pytest.approx(2.0, rel=0.01)
    assert summary["converged"] == "true"
    assert "PASS lp p=2" in capsys.readouterr().out


def test_sweep_deterministic_bodies(tmp_path):
    doc = {"p_list": [1.5, 2], "h1_eps_schedule": None}
    outs = []
    for tag in ("a", "b"):
        cfg = write_cfg(tmp_path, doc, f"{tag}.json")
        d = tmp_path / tag
        assert main(["sweep", "--config", cfg, "--out", str(d)]) == 0
        outs.append(d)
    for name in ("sweep_lp_p1.5.csv", "sweep_lp_p2.csv", "sweep_summary.csv"):
        assert body(outs[0] / name) == body(outs[1] / name)


def test_sweep_threads_env_same_output(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, {"p_list": [2], "h1_eps_schedule": None})
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "one")])
    monkeypatch.setenv(THREADS_ENV, "4")
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "four")])
    assert body(tmp_path / "one" / "sweep_lp_p2.csv") == body(tmp_path / "four" / "sweep_lp_p2.csv")


# --- check -----------------------------------------------------------------


def test_check_zero_kernel(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"kernel": {"name": "zero"}, "grid": {"L": [16.0], "N": [512]},
                               "p_list": [2]})
    assert main(["check", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "check_report.json").read_text())
    assert doc["passed"]
    assert all(c["residual"] == 0.0 for c in doc["checks"] if c["name"] != "scaling")
    assert "FAIL" not in capsys.readouterr().out


def test_check_coarse_grid_flags_failures(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"grid": {"L": [8.0], "N": [64]}, "p_list": [2],
                               "h1_eps_schedule": None})
    assert main(["check", "--config", cfg, "--out", str(tmp_path)]) == 1
    doc = json.loads((tmp_path / "check_report.json").read_text())
    failed = {c["name"] for c in doc["checks"] if not c["passed"]}
    assert "hilbert_commutation" in failed
    assert "FAIL hilbert_commutation" in capsys.readouterr().out


def test_check_lists_skipped(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"kernel": {"name": "hardy"}, "grid": {"L": [16.0], "N": [512]},
                               "p_list": [2]})
    main(["check", "--config", cfg, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "SKIP fourier_commutation" in out
