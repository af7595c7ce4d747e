import json

import numpy as np
import pytest

from decompound.cli import main
from decompound.experiments import ExperimentConfig, run_bvm, run_identifiability


def test_verify_cli_passes(tmp_path, capsys):
    rc = main(["verify", "--out", str(tmp_path), "--seed", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "all identities hold" in out
    assert (tmp_path / "verify.csv").exists()
    assert (tmp_path / "verify.csv.schema.json").exists()
    summary = json.loads((tmp_path / "verify_summary.json").read_text())
    assert summary["results"]["passed"] is True
    assert summary["config"]["seed"] == 3


def test_verify_cli_corrupt_adjoint_fails(tmp_path, capsys):
    rc = main(["verify", "--out", str(tmp_path), "--corrupt-adjoint"])
    assert rc != 0
    assert "FAIL" in capsys.readouterr().out


def test_verify_cli_bit_exact(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["verify", "--out", str(a), "--seed", "11"])
    main(["verify", "--out", str(b), "--seed", "11"])
    assert (a / "verify.csv").read_bytes() == (b / "verify.csv").read_bytes()


def test_identifiability_cli(tmp_path, capsys):
    rc = main(["identifiability", "--out", str(tmp_path)])
    assert rc == 0
    text = (tmp_path / "identifiability.csv").read_text()
    assert "sine_pm" in text
    rep = run_identifiability(1024)
    assert "unsupported" in rep["note"] or "not representable" in rep["note"]


def test_rate_sweep_cli_empty(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfg = ExperimentConfig(replications=0, n_grid=(200,))
    cfgfile.write_text(json.dumps(cfg.to_dict()))
    rc = main(["rate-sweep", "--config", str(cfgfile), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "rate.csv").read_text().splitlines()
    assert len(lines) == 1  # header only


def test_bvm_requires_replications():
    cfg = ExperimentConfig(replications=0)
    with pytest.raises(ValueError, match="empty chain"):
        run_bvm(cfg)


def test_spectral_cli_schema_stable(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfg = ExperimentConfig(
        replications=2, n_grid=(120, 240), spectral_cutoff=16, mcmc_n_iter=50,
        mcmc_burn_in=10, mcmc_pilot_sweeps=0,
    )
    cfgfile.write_text(json.dumps(cfg.to_dict()))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["spectral", "--config", str(cfgfile), "--out", str(a), "--threads", "1"]) == 0
    assert main(["spectral", "--config", str(cfgfile), "--out", str(b), "--threads", "2"]) == 0
    assert (a / "spectral.csv").read_bytes() == (b / "spectral.csv").read_bytes()
    schema = json.loads((a / "spectral.csv.schema.json").read_text())
    header = (a / "spectral.csv").read_text().splitlines()[0].split(",")
    assert [c["name"] for c in schema["columns"]] == header


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(seed=99, n_grid=(10, 20), truth_family="spline_bump")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    back = ExperimentConfig.from_json(p)
    assert back.seed == 99
    assert back.n_grid == (10, 20)
    assert back.truth_family == "spline_bump"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 2}))
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(bad)
    unk = tmp_path / "unk.json"
    unk.write_text(json.dumps({"bogus_field": 1}))
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(unk)
