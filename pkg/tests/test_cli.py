import json
import math

import pytest

from eprsim.cli import main


def run_cli(argv):
    return main(argv)


def read_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


def test_zoo_list(capsys):
    assert run_cli(["zoo", "list"]) == 0
    out = capsys.readouterr().out
    for name in ("bell_product_basic", "hp_time_correlated", "reference_cosine"):
        assert name in out


def test_simulate_happy_path(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli(
        ["simulate", "--model", "bell_product_basic", "--trials", "200",
         "--deterministic", "--out", str(out)]
    )
    assert code == 0
    assert (out / "trials.csv").exists()
    assert (out / "summary.json").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["model"] == "bell_product_basic"
    assert summary["pairs"][0]["trials"] == 200


def test_simulate_unknown_model_exits_2(tmp_path, capsys):
    code = run_cli(["simulate", "--model", "not_a_model", "--out", str(tmp_path)])
    assert code == 2
    assert "not_a_model" in capsys.readouterr().err


def test_simulate_is_byte_identical_under_deterministic(tmp_path):
    args = ["simulate", "--model", "cosine_threshold_lhv", "--trials", "300",
            "--policy", "cycle", "--seed", "5", "--deterministic",
            "--angles", "0,1.5707963267948966,0.7853981633974483,2.356194490192345"]
    assert run_cli(args + ["--out", str(tmp_path / "one")]) == 0
    assert run_cli(args + ["--out", str(tmp_path / "two")]) == 0
    assert read_bytes(tmp_path / "one") == read_bytes(tmp_path / "two")


def test_check_reports_both_modes(tmp_path, capsys):
    out = tmp_path / "chk"
    code = run_cli(["check", "--model", "hp_time_correlated", "--deterministic",
                    "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "given_lambda: FAIL" in text
    assert "given_lambda_and_m: pass" in text
    payload = json.loads((out / "check.json").read_text())
    assert payload["factorization"]["given_lambda"]["pass"] is False
    assert payload["factorization"]["given_lambda_and_m"]["pass"] is True
    assert (out / "joint_table.csv").exists()


def test_check_negative_tolerance_exits_2(tmp_path):
    assert run_cli(["check", "--model", "constant_plus", "--tol", "-1"]) == 2


def test_check_layer_doubled_model_reports_zero_conditionals(tmp_path, capsys):
    descriptor = tmp_path / "doubled.ini"
    descriptor.write_text("[model]\nzoo = cosine_threshold_lhv\n\n[transform]\nop.1 = double\n")
    assert run_cli(["check", "--model", str(descriptor)]) == 0
    out = capsys.readouterr().out
    for line in out.splitlines():
        if line.startswith("E[A|"):
            assert "= 0 " in line or line.endswith("= 0")


def test_transform_writes_descriptor_and_round_trips(tmp_path, capsys):
    out = tmp_path / "model.ini"
    code = run_cli(
        ["transform", "--model", "constant_plus", "--op", "rademacher mean=0 seed=7",
         "--op", "double", "--out", str(out)]
    )
    assert code == 0
    text = out.read_text()
    assert "op.1 = rademacher mean=0 seed=7" in text
    assert "op.2 = double" in text
    assert run_cli(["check", "--model", str(out)]) == 0


def test_transform_infeasible_mean_exits_3(tmp_path, capsys):
    descriptor = tmp_path / "odd.ini"
    descriptor.write_text(
        "[model]\nname = odd\n\n[source]\nstates = x\nprior = 1.0\n\n[grid]\nslots = 3\n\n"
        "[gen1]\nkind = constant\n\n[gen2]\nkind = constant\n\n"
        "[out1]\nkind = constant\nvalue = 1\n\n[out2]\nkind = constant\nvalue = 1\n"
    )
    code = run_cli(
        ["transform", "--model", str(descriptor), "--op", "rademacher mean=0",
         "--out", str(tmp_path / "out.ini")]
    )
    assert code == 3


def test_transform_without_ops_exits_2(tmp_path):
    assert run_cli(["transform", "--model", "constant_plus", "--out", str(tmp_path / "x.ini")]) == 2


def test_chsh_reference_prints_gap(tmp_path, capsys):
    out = tmp_path / "ref"
    code = run_cli(["chsh", "--model", "reference_cosine", "--deterministic", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "gap to reference = 0" in stdout
    assert "local deterministic bound = 2" in stdout
    payload = json.loads((out / "chsh.json").read_text())
    assert payload["chsh"]["s_value"] == pytest.approx(-2 * math.sqrt(2), abs=1e-9)
    assert payload["deterministic_bound"] == 2.0
    csv_text = (out / "chsh.csv").read_text().splitlines()
    assert csv_text[0] == "model,a,aprime,b,bprime,method,trials,seed,S,within_bound"
    assert csv_text[1].startswith("reference_cosine,")
    assert csv_text[1].endswith(",false")


def test_chsh_zoo_model_within_bound(tmp_path):
    out = tmp_path / "zoo"
    assert run_cli(["chsh", "--model", "bell_product_basic", "--deterministic",
                    "--out", str(out)]) == 0
    payload = json.loads((out / "chsh.json").read_text())
    assert payload["chsh"]["within_local_bound"] is True
    assert abs(payload["chsh"]["s_value"]) <= 2.0 + 1e-9


def test_chsh_deterministic_reruns_are_byte_identical(tmp_path):
    args = ["chsh", "--model", "hp_time_correlated", "--method", "monte_carlo",
            "--trials", "5000", "--seed", "3", "--deterministic"]
    assert run_cli(args + ["--out", str(tmp_path / "a")]) == 0
    assert run_cli(args + ["--out", str(tmp_path / "b")]) == 0
    assert read_bytes(tmp_path / "a") == read_bytes(tmp_path / "b")


def test_audit_command(tmp_path, capsys):
    out = tmp_path / "aud"
    code = run_cli(["audit", "--model", "bell_product_basic", "--trials", "100",
                    "--perturbations", "2", "--deterministic", "--out", str(out)])
    assert code == 0
    assert "locality audit: pass (0 mismatches" in capsys.readouterr().out
    payload = json.loads((out / "audit.json").read_text())
    assert payload["audit"]["pass"] is True


def test_bad_angles_exit_2():
    assert run_cli(["chsh", "--model", "constant_plus", "--angles", "1,2,3"]) == 2
    assert run_cli(["chsh", "--model", "constant_plus", "--angles", "a,b,c,d"]) == 2


def test_config_echo_is_embedded(tmp_path):
    out = tmp_path / "echo"
    run_cli(["simulate", "--model", "constant_plus", "--trials", "10",
             "--deterministic", "--out", str(out)])
    header = (out / "trials.csv").read_text().splitlines()[0]
    assert header.startswith("# config = ")
    embedded = json.loads(header.removeprefix("# config = "))
    assert embedded["model"] == "constant_plus"
    assert embedded["trials"] == 10
    summary = json.loads((out / "summary.json").read_text())
    assert "generated_at" not in summary
