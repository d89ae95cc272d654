from __future__ import annotations

import json

import pytest

from ggbm import __version__
from ggbm.cli import ConfigError, main, parse_config, run
from ggbm.io import loads_json, read_csv
from ggbm.silt import SweepReport


def test_defaults_filled():
    cfg = parse_config(None, {"command": "silt"})
    assert cfg.params.beta == 0.5 and cfg.grid.n == 256
    assert cfg.eps_list == [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
    assert cfg.format == "json"


def test_yaml_and_dotted_overrides():
    cfg = parse_config("params:\n  beta: 0.7\n  d: 2\nseed: 5\n", {"command": "sample", "params.alpha": 1.4})
    assert (cfg.params.beta, cfg.params.alpha, cfg.params.d) == (0.7, 1.4, 2)
    assert cfg.seed == 5


def test_scientific_notation_reads_as_float(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("eps_list: [1e-1, 1e-3, 1E-6]\neps: 5e-2\n")
    cfg = parse_config(path.read_text(), {"command": "sweep"})
    assert cfg.eps_list == [0.1, 0.001, 1e-6] and cfg.eps == 0.05


def test_config_errors_are_all_reported():
    with pytest.raises(ConfigError) as exc:
        parse_config({"params": {"beta": 1.5}, "eps_list": [0.1, 0.2], "bogus": 1}, {"command": "sweep"})
    text = " ".join(exc.value.errors)
    assert "beta" in text
    assert "eps_list" in text and "decreasing" in text
    assert "bogus" in text
    assert len(exc.value.errors) >= 3


def test_supercritical_warning():
    cfg = parse_config({"params": {"alpha": 1.0, "d": 2}}, {"command": "silt"})
    assert any("alpha" in w for w in cfg.warnings)


def test_digest_ignores_output_directory():
    a = parse_config(None, {"command": "silt", "out": "x"})
    b = parse_config(None, {"command": "silt", "out": "y"})
    c = parse_config(None, {"command": "silt", "seed": 1})
    assert a.digest() == b.digest() != c.digest()


def test_exit_code_2_on_bad_config(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "sweep", "-p", "params.beta=0", "-p", "eps_list=[0.1,0.5]"])
    assert code == 2
    err = capsys.readouterr().err
    assert "beta" in err and "eps_list" in err
    assert main(["--config", str(tmp_path / "missing.yaml"), "silt"]) == 2
    assert main(["nonsense"]) == 2


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_specfun_csv(tmp_path):
    out = tmp_path / "sf"
    assert main(["--out", str(out), "--format", "csv", "specfun"]) == 0
    rows = read_csv(out / "specfun.csv", "specfun")
    assert len(rows) == 11
    assert rows[0]["x"] == "0.0" and rows[-1]["x"] == "-5.0"
    assert float(rows[2]["value"]) == pytest.approx(0.4275835761558070, abs=1e-13)
    manifest = loads_json((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["files"][0]["schema"] == "specfun/csv/v1"


def test_runtime_error_exits_1(tmp_path):
    code = main([
        "--out", str(tmp_path), "specfun", "-p", "specfun.beta=0.1", "-p", "specfun.negate=false",
        "-p", "specfun.x_start=49", "-p", "specfun.x_stop=49",
    ])
    assert code == 1
    manifest = loads_json((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "failed" and manifest["error"]


def test_failed_check_exits_1(tmp_path):
    # a tolerance below double precision cannot be met
    code = main([
        "--out", str(tmp_path), "kernel", "-p", "kernel.alphas=[0.4]", "-p", "kernel.times=[0.5,1.0]",
        "-p", "kernel.abs_tol=1e-30",
    ])
    assert code == 1


def test_sample_outputs_and_reproducibility(tmp_path):
    args = ["--seed", "3", "--format", "csv", "sample", "-p", "n_paths=4", "-p", "grid.n=9", "-p", "sample.binary=true"]
    assert main(["--out", str(tmp_path / "a")] + args) == 0
    assert main(["--out", str(tmp_path / "b"), "--threads", "2"] + args) == 0
    for name in ("paths.csv", "paths.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = loads_json((tmp_path / "a" / "manifest.json").read_text())
    mb = loads_json((tmp_path / "b" / "manifest.json").read_text())
    assert [f["sha256"] for f in ma["files"]] == [f["sha256"] for f in mb["files"]]
    assert ma["master_seed"] == 3
    assert {f["schema"] for f in ma["files"]} == {"paths/csv/v1", "paths/binary/GGBMPTH1"}


def test_silt_json_report(tmp_path):
    code = main(["--out", str(tmp_path), "silt", "-p", "n_paths=400", "-p", "grid.n=64", "-p", "eps=0.1"])
    assert code == 0
    rep = json.loads((tmp_path / "silt.json").read_text())
    assert set(rep) >= {"estimate", "oracle", "bias", "bound", "t_transform"}
    assert rep["bound"]["finite"] is True


def test_sweep_brownian_three_dimensions(tmp_path):
    code = main([
        "--out", str(tmp_path), "sweep", "-p", "params={beta: 1.0, alpha: 1.0, d: 3}",
        "-p", "n_paths=50", "-p", "grid.n=32",
    ])
    assert code == 0
    data = loads_json((tmp_path / "sweep.json").read_text())
    assert data["verdict"] == "diverging"
    assert data["slope"] == pytest.approx(-0.5, abs=0.05)
    assert SweepReport.from_dict(data).to_dict() == data


def test_verify_single_criterion(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "verify", "-p", "verify.criteria=[1]"])
    assert code == 0
    assert capsys.readouterr().out.startswith("PASS 1")
    checks = loads_json((tmp_path / "checks.json").read_text())
    assert checks[0]["passed"] is True


def test_run_returns_manifest(tmp_path):
    cfg = parse_config(None, {"command": "specfun", "out": str(tmp_path)})
    manifest, code = run(cfg)
    assert code == 0
    assert manifest["config_digest"] == cfg.digest()
    assert (tmp_path / "manifest.json").exists()
