"""Command-line contract: exit codes, config precedence, determinism."""

import json

import numpy as np
import pytest

from signchain.cli import main
from signchain.kernels import two_point_kernel_k0


def _load(path):
    return json.loads(path.read_text())


def test_kernel_closed_form_to_stdout(capsys):
    code = main(["kernel", "--gamma", "2", "--n-steps", "3"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kind"] == "kernel"
    assert doc["config"]["gamma"] == 2.0
    assert "timestamp" in doc
    exact = two_point_kernel_k0(3, 2.0).entries
    got = np.array(doc["result"]["kernel"]["entries"]).reshape(4, 4,
                                                               order="F")
    assert np.max(np.abs(got - exact)) < 1e-15


def test_missing_gamma_is_usage_error(capsys):
    assert main(["curvature"]) == 2
    assert "gamma" in capsys.readouterr().err


def test_gamma_at_most_one_is_usage_error(capsys):
    assert main(["curvature", "--gamma", "1.0"]) == 2
    assert "greater than 1" in capsys.readouterr().err


def test_unknown_config_field_names_the_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"gamma": 2.0, "bogus": 1}')
    assert main(["curvature", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "bogus" in err and "unknown field" in err


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"gamma": 3.0, "n_steps": 2}')
    out = tmp_path / "r.json"
    code = main(["kernel", "--config", str(cfg), "--gamma", "1.5",
                 "--out", str(out)])
    assert code == 0
    doc = _load(out)
    assert doc["config"]["gamma"] == 1.5
    assert doc["config"]["n_steps"] == 2


def test_horizon_flags_are_mutually_exclusive(capsys):
    assert main(["kernel", "--gamma", "2", "--n-steps", "1",
                 "--t", "1.0"]) == 2
    assert "mutually exclusive" in capsys.readouterr().err


def test_csv_requires_out(capsys):
    assert main(["kernel", "--gamma", "2", "--n-steps", "1", "--csv"]) == 2
    assert "csv" in capsys.readouterr().err


def test_reports_identical_apart_from_timestamp(tmp_path):
    out = tmp_path / "r.json"
    args = ["gamma", "--gamma", "2", "--n-steps", "1", "--out", str(out)]
    assert main(args) == 0
    first = _load(out)
    assert main(args) == 0
    second = _load(out)
    t1, t2 = first.pop("timestamp"), second.pop("timestamp")
    assert first == second
    assert t1 and t2


def test_csv_written_next_to_json(tmp_path):
    out = tmp_path / "r.json"
    code = main(["kernel", "--gamma", "2", "--n-steps", "2",
                 "--out", str(out), "--csv"])
    assert code == 0
    csv_text = (tmp_path / "r.csv").read_text()
    assert csv_text.splitlines()[0] == "from_state,to_state,probability," \
                                       "stderr"
    assert len(csv_text.splitlines()) == 17


def test_rho_required_at_nonzero_coupling(capsys):
    code = main(["poincare", "--gamma", "2", "--coupling", "0.05",
                 "--t", "1", "--replicas", "1000"])
    assert code == 2
    assert "rho" in capsys.readouterr().err


def test_rho_table_parsing_errors(tmp_path, capsys):
    bad = tmp_path / "rho.json"
    bad.write_text('[[1.0, 0.2], [0.5, 0.2]]')
    code = main(["poincare", "--gamma", "2", "--coupling", "0.05",
                 "--t", "1", "--replicas", "1000",
                 "--rho-table", str(bad)])
    assert code == 2
    assert "increasing" in capsys.readouterr().err


def test_poincare_bound_holds_at_zero_coupling(tmp_path):
    out = tmp_path / "p.json"
    code = main(["poincare", "--gamma", "2", "--t", "1", "--f", "product",
                 "--replicas", "60000", "--seed", "5", "--out", str(out)])
    assert code == 0
    rep = _load(out)["result"]["reports"][0]
    assert rep["passed"]
    assert rep["lhs"] <= rep["rhs"]


def test_negative_control_fails_as_designed(tmp_path):
    # halving a bound that is tight within a factor of two must flip
    # the product check at short horizon to a failure
    out = tmp_path / "p.json"
    code = main(["poincare", "--gamma", "2", "--t", "1", "--f", "product",
                 "--replicas", "120000", "--seed", "5",
                 "--negative-control", "--out", str(out)])
    assert code == 1
    rep = _load(out)["result"]["reports"][0]
    assert not rep["passed"]
    assert rep["rhs_scale"] == 0.5


def test_probe_independent_of_worker_count(tmp_path, monkeypatch):
    args = ["probe", "--gamma", "2", "--t-grid", "0.5,1", "--f", "sum",
            "--replicas", "20000", "--seed", "3"]
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("SIGNCHAIN_WORKERS", "1")
    assert main(args + ["--out", str(out1)]) == 0
    monkeypatch.setenv("SIGNCHAIN_WORKERS", "3")
    assert main(args + ["--out", str(out2)]) == 0
    a, b = _load(out1), _load(out2)
    a.pop("timestamp"), b.pop("timestamp")
    a["config"].pop("out"), b["config"].pop("out")
    assert a == b


def test_correlation_runs_and_passes(tmp_path):
    out = tmp_path / "c.json"
    code = main(["correlation", "--gamma", "2", "--t", "1",
                 "--replicas", "40000", "--seed", "11", "--out", str(out)])
    assert code == 0
    rep = _load(out)["result"]
    assert rep["chain_passed"]
    assert rep["identity_residual"] < 1e-10


def test_verify_subset(tmp_path, capsys):
    out = tmp_path / "v.json"
    code = main(["verify", "--only", "3,5", "--out", str(out), "--csv"])
    assert code == 0
    text = capsys.readouterr().out
    assert "PASS" in text and "2/2" in text
    doc = _load(out)
    assert [c["number"] for c in doc["result"]["criteria"]] == [3, 5]
    assert (tmp_path / "v.csv").read_text().startswith("criterion,")


def test_verify_unknown_criterion(capsys):
    assert main(["verify", "--only", "42"]) == 2
    assert "42" in capsys.readouterr().err


def test_explicit_sites_require_ring_size(capsys):
    assert main(["poincare", "--gamma", "2", "--t", "1", "--x1", "3",
                 "--x2", "4", "--replicas", "1000"]) == 2
    assert "n_sites" in capsys.readouterr().err


def test_small_ring_rejected_when_cone_wraps(capsys):
    code = main(["poincare", "--gamma", "2", "--t", "4", "--x1", "2",
                 "--x2", "3", "--n-sites", "8", "--replicas", "1000"])
    assert code == 2
    assert "light cone" in capsys.readouterr().err
