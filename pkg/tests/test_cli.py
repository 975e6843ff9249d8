"""End-to-end command-line behavior: specs, exit codes, CSV contract."""

import csv
import math

import pytest
import yaml

from bptandem import cli


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _metric_rows(rows, name):
    return [r for r in rows if r["metric"] == name]


def test_spec_round_trip():
    spec = cli.ExperimentSpec(
        command="scan", lam=(0.2, 0.3), n_sites=(2, 4, 8), seeds=(3, 1),
        horizon=500.0, out="somewhere", workers=2)
    again = cli.spec_from_dict(cli.spec_to_dict(spec))
    assert again == spec

    inf_spec = cli.ExperimentSpec(command="simulate", lam=0.4, n_sites=math.inf)
    d = cli.spec_to_dict(inf_spec)
    assert d["N"] == "inf"
    assert cli.spec_from_dict(d) == inf_spec


def test_spec_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown spec fields"):
        cli.spec_from_dict({"command": "simulate", "lambda": 0.3, "gamma": 1})


def test_validate_collects_messages():
    bad = cli.ExperimentSpec(command="warp")
    assert any("command" in m for m in cli.validate(bad))

    sup = cli.ExperimentSpec(command="simulate", lam=1.2, n_sites=3)
    assert any("lambda < 1" in m for m in cli.validate(sup))

    dup = cli.ExperimentSpec(command="simulate", lam=0.3, n_sites=3,
                             seeds=(1, 1))
    assert any("duplicates" in m for m in cli.validate(dup))

    scan = cli.ExperimentSpec(command="scan", lam=0.3, n_sites=(4,))
    assert any("two ladder sizes" in m for m in cli.validate(scan))

    blow = cli.ExperimentSpec(command="exact", lam=0.3, n_sites=10, cap=30)
    assert any("exceeds" in m for m in cli.validate(blow))

    ring = cli.ExperimentSpec(command="tasep", mode="ring", rho=1.5,
                              ring_size=10)
    msgs = cli.validate(ring)
    assert any("strictly in (0, 1)" in m for m in msgs)

    ok = cli.ExperimentSpec(command="simulate", lam=0.3, n_sites=3,
                            sample_count=100)
    assert cli.validate(ok) == []


def test_exact_command_matches_closed_form(tmp_path):
    code = cli.main(["exact", "--lambda", "0.5", "--n", "1", "--cap", "40",
                     "--out", str(tmp_path)])
    assert code == 0
    rows = _read_rows(tmp_path / "results.csv")
    p0 = _metric_rows(rows, "p_site1_eq_0")[0]
    assert float(p0["value"]) == pytest.approx(0.5, abs=1e-8)
    assert p0["ci_lo"] == p0["value"] == p0["ci_hi"]
    assert p0["lambda"] == "0.5"
    assert p0["N"] == "1"
    mean = _metric_rows(rows, "mean_q1")[0]
    assert float(mean["value"]) == pytest.approx(1.0, abs=1e-8)
    summary = yaml.safe_load((tmp_path / "summary.yaml").read_text())
    assert summary["results"]["n_states"] == 41
    assert summary["provenance"]["code_version"]


def test_csv_header_and_byte_determinism(tmp_path):
    argv_tail = ["--lambda", "0.3", "--n", "2", "--horizon", "400",
                 "--sample-count", "40", "--seeds", "1,0"]
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli.main(["simulate", *argv_tail, "--out", str(out_a)]) == 0
    assert cli.main(["simulate", *argv_tail, "--out", str(out_b)]) == 0
    bytes_a = (out_a / "results.csv").read_bytes()
    assert bytes_a == (out_b / "results.csv").read_bytes()
    first_line = bytes_a.split(b"\n", 1)[0]
    assert first_line == b"lambda,N,seed,metric,value,ci_lo,ci_hi"
    rows = _read_rows(out_a / "results.csv")
    assert sorted({r["seed"] for r in rows}) == ["0", "1"]


def test_worker_count_does_not_change_results(tmp_path):
    argv_tail = ["--lambda", "0.3", "--n", "2", "--horizon", "400",
                 "--sample-count", "40", "--seeds", "0,1,2"]
    out_serial = tmp_path / "serial"
    out_pool = tmp_path / "pool"
    assert cli.main(["simulate", *argv_tail, "--out", str(out_serial)]) == 0
    assert cli.main(["simulate", *argv_tail, "--out", str(out_pool),
                     "--workers", "3"]) == 0
    assert (out_serial / "results.csv").read_bytes() == \
        (out_pool / "results.csv").read_bytes()


def test_backends_produce_identical_tables(tmp_path):
    argv_tail = ["--lambda", "0.3", "--n", "2", "--horizon", "300",
                 "--sample-count", "40", "--seed", "5"]
    out_c = tmp_path / "compiled"
    out_py = tmp_path / "python"
    assert cli.main(["simulate", *argv_tail, "--out", str(out_c),
                     "--backend", "compiled"]) == 0
    assert cli.main(["simulate", *argv_tail, "--out", str(out_py),
                     "--backend", "python"]) == 0
    assert (out_c / "results.csv").read_bytes() == \
        (out_py / "results.csv").read_bytes()


def test_validation_failure_exits_2(tmp_path, capsys):
    out = tmp_path / "never"
    code = cli.main(["simulate", "--lambda", "1.5", "--n", "2",
                     "--out", str(out)])
    assert code == 2
    assert "invalid spec" in capsys.readouterr().err
    assert not out.exists()


def test_runtime_failure_exits_3_without_outputs(tmp_path, capsys):
    # a near-empty queue cannot support a tail fit at this tiny budget
    code = cli.main(["fit-tail", "--lambda", "0.05", "--n", "1",
                     "--horizon", "400", "--sample-count", "40",
                     "--seed", "0", "--out", str(tmp_path)])
    assert code == 3
    assert "runtime failure" in capsys.readouterr().err
    assert not (tmp_path / "results.csv").exists()
    assert not (tmp_path / "summary.yaml").exists()


def test_scan_summary_has_exclusive_flags(tmp_path):
    code = cli.main(["scan", "--lambda", "0.15,0.35", "--n", "2,4",
                     "--horizon", "3000", "--sample-count", "200",
                     "--seeds", "0,1", "--out", str(tmp_path)])
    assert code == 0
    rows = _read_rows(tmp_path / "results.csv")
    assert len(_metric_rows(rows, "q1_mean")) == 8  # 4 grid points x 2 seeds
    summary = yaml.safe_load((tmp_path / "summary.yaml").read_text())
    scan = summary["results"]["scan"]
    for key in ("0.15", "0.35"):
        assert key in scan["saturation_flag"]
        assert not (scan["saturation_flag"][key] and scan["growth_flag"][key])
    assert len(scan["table"]) == 4


def test_config_file_with_flag_override(tmp_path):
    out_flag = tmp_path / "flag"
    config = {
        "lambda": 0.3, "N": 2, "horizon": 400.0, "sample_count": 40,
        "seeds": [0], "out": str(tmp_path / "config_out"),
    }
    cfg_path = tmp_path / "spec.yaml"
    cfg_path.write_text(yaml.safe_dump(config))
    code = cli.main(["simulate", "--config", str(cfg_path),
                     "--lambda", "0.4", "--out", str(out_flag)])
    assert code == 0
    assert not (tmp_path / "config_out").exists()
    rows = _read_rows(out_flag / "results.csv")
    assert rows[0]["lambda"] == "0.4"
    summary = yaml.safe_load((out_flag / "summary.yaml").read_text())
    assert summary["spec"]["lambda"] == 0.4
    assert summary["spec"]["horizon"] == 400.0


def test_missing_config_exits_2(tmp_path, capsys):
    code = cli.main(["simulate", "--config", str(tmp_path / "absent.yaml")])
    assert code == 2
    assert "invalid spec" in capsys.readouterr().err


def test_seed_shorthand_and_priority(tmp_path):
    args = cli.build_parser().parse_args(
        ["simulate", "--lambda", "0.3", "--n", "2", "--seed", "7"])
    assert cli.spec_from_args(args).seeds == (7,)
    args = cli.build_parser().parse_args(
        ["simulate", "--lambda", "0.3", "--n", "2", "--seed", "7",
         "--seeds", "1,2"])
    assert cli.spec_from_args(args).seeds == (1, 2)
    args = cli.build_parser().parse_args(
        ["simulate", "--lambda", "0.3", "--n", "2", "--seeds", "0-3,8"])
    assert cli.spec_from_args(args).seeds == (0, 1, 2, 3, 8)


def test_tasep_ring_rows_have_empty_grid_columns(tmp_path):
    code = cli.main(["tasep", "--mode", "ring", "--rho", "0.5", "--l", "10",
                     "--horizon", "200", "--sample-count", "50",
                     "--seed", "0", "--out", str(tmp_path)])
    assert code == 0
    rows = _read_rows(tmp_path / "results.csv")
    assert all(r["lambda"] == "" and r["N"] == "" for r in rows)
    exact = float(_metric_rows(rows, "flux_exact")[0]["value"])
    assert exact == pytest.approx(25 / 90)
    flux = float(_metric_rows(rows, "bond_flux")[0]["value"])
    assert flux == pytest.approx(exact, abs=0.1)


def test_couple_check_reports_zero_violations(tmp_path):
    code = cli.main(["couple-check", "--lambda", "0.3", "--horizon", "100",
                     "--seed", "0", "--out", str(tmp_path)])
    assert code == 0
    rows = _read_rows(tmp_path / "results.csv")
    assert _metric_rows(rows, "order_violations")[0]["value"] == "0"
    assert _metric_rows(rows, "obstruction_violations")[0]["value"] == "0"
    assert rows[0]["N"] == "inf"
    summary = yaml.safe_load((tmp_path / "summary.yaml").read_text())
    assert summary["results"]["total_violations"] == 0


def test_loynes_command_produces_integers(tmp_path):
    code = cli.main(["loynes", "--lambda", "0.2", "--rho", "0.5", "--l", "50",
                     "--horizon", "200", "--seeds", "0,1",
                     "--out", str(tmp_path)])
    assert code == 0
    rows = _metric_rows(_read_rows(tmp_path / "results.csv"),
                        "loynes_estimate")
    assert len(rows) == 2
    for r in rows:
        assert float(r["value"]) == int(float(r["value"])) >= 0
