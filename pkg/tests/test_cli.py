"""Tests for the command-line front end and its config format."""

import json
import os

import numpy as np
import pytest

from bscount.cli import (
    ConfigError,
    EXIT_CHECK_FAILED,
    EXIT_IO_ERROR,
    EXIT_OK,
    EXIT_PARSE_ERROR,
    main,
    parse_config_text,
    validate_config,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# config parser


def test_parse_scalar_types():
    values, _ = parse_config_text(
        'command = "verify"\n'
        "seed = 0xB5C0\n"
        "verify.bs_instances = 12\n")
    assert values["command"] == "verify"
    assert values["seed"] == 0xB5C0
    assert values["verify.bs_instances"] == 12


def test_parse_lists_and_comments():
    values, _ = parse_config_text(
        "# a comment line\n"
        "scan.epsilons = [0.1, 0.5, 1.0]  # trailing comment\n")
    assert values["scan.epsilons"] == [0.1, 0.5, 1.0]


def test_parse_reports_line_and_column():
    with pytest.raises(ConfigError) as info:
        parse_config_text("command = \"verify\"\nnot a key value line\n")
    assert info.value.line == 2


def test_parse_rejects_duplicate_keys():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("seed = 1\nseed = 2\n")


def test_validate_rejects_unknown_key_with_position():
    values, positions = parse_config_text(
        'command = "twobody"\npotential.kidn = "yukawa"\n')
    with pytest.raises(ConfigError) as info:
        validate_config(values, positions, None)
    assert "potential.kidn" in str(info.value)
    assert info.value.line == 2


def test_validate_rejects_bad_seed():
    values, positions = parse_config_text('command = "verify"\nseed = -3\n')
    with pytest.raises(ConfigError, match="seed"):
        validate_config(values, positions, None)


def test_validate_defaults_seed():
    cfg = validate_config({"command": "verify"}, {}, None)
    assert cfg["seed"] == 0xB5C0


def test_validate_command_mismatch():
    values, positions = parse_config_text('command = "verify"\n')
    with pytest.raises(ConfigError, match="does not match"):
        validate_config(values, positions, "efimov")


# ---------------------------------------------------------------------------
# end-to-end runs


def test_unknown_key_exits_2_without_outputs(tmp_path, capsys):
    cfg = write(tmp_path, "bad.conf", 'command = "twobody"\nbad.key = 1\n')
    out = tmp_path / "out"
    status = main(["twobody", "--config", cfg, "--out", str(out)])
    assert status == EXIT_PARSE_ERROR
    assert "line 2" in capsys.readouterr().err
    assert not out.exists() or not list(out.iterdir())


def test_verify_small_run_writes_reports(tmp_path):
    cfg = write(tmp_path, "v.conf",
                'command = "verify"\n'
                "verify.bs_instances = 40\n"
                "verify.iterbs_instances = 10\n"
                "verify.bound_instances = 10\n")
    status = main(["verify", "--config", cfg, "--out", str(tmp_path)])
    assert status == EXIT_OK
    csv_text = (tmp_path / "verify.csv").read_text()
    assert csv_text.startswith("# schema=1\n")
    summary = json.loads((tmp_path / "verify.summary.json").read_text())
    assert summary["status"] == 0
    assert summary["seed"] == 0xB5C0
    assert summary["checks"]["bs_equality"]["failures"] == 0
    assert "seconds" in summary["timing"]
    assert summary["version"]


def test_verify_deterministic_csv_bytes(tmp_path):
    cfg = write(tmp_path, "v.conf",
                'command = "verify"\n'
                "verify.bs_instances = 30\n"
                "verify.iterbs_instances = 5\n"
                "verify.bound_instances = 5\n")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--config", cfg, "--out", str(out1)]) == EXIT_OK
    assert main(["verify", "--config", cfg, "--out", str(out2)]) == EXIT_OK
    assert (out1 / "verify.csv").read_bytes() == (out2 / "verify.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = write(tmp_path, "v.conf",
                'command = "verify"\nseed = 7\n'
                "verify.bs_instances = 10\n"
                "verify.iterbs_instances = 2\n"
                "verify.bound_instances = 2\n")
    status = main(["verify", "--config", cfg, "--out", str(tmp_path),
                   "--seed", "0x123"])
    assert status == EXIT_OK
    summary = json.loads((tmp_path / "verify.summary.json").read_text())
    assert summary["seed"] == 0x123


def test_twobody_subcritical_counts_all_zero(tmp_path):
    cfg = write(tmp_path, "tb.conf",
                'command = "twobody"\n'
                'potential.kind = "square_well"\n'
                "potential.strength = 2.0\n"
                "grid.n = 600\n"
                "scan.epsilons = [0.05, 0.2, 0.5]\n")
    status = main(["twobody", "--config", cfg, "--out", str(tmp_path),
                   "--jobs", "2"])
    assert status == EXIT_OK
    lines = (tmp_path / "twobody.csv").read_text().strip().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == "epsilon,count_direct,count_bs,mu_max"
    for line in lines[2:]:
        cells = line.split(",")
        assert cells[1] == "0" and cells[2] == "0"


def test_twobody_table_potential(tmp_path):
    table = tmp_path / "pot.txt"
    r = np.linspace(0.01, 3.0, 80)
    np.savetxt(table, np.column_stack([r, np.exp(-r)]))
    cfg = write(tmp_path, "tb.conf",
                'command = "twobody"\n'
                f'potential.table = "{table}"\n'
                "potential.strength = 18.0\n"
                "grid.n = 600\n"
                "scan.epsilons = [0.1]\n")
    status = main(["twobody", "--config", cfg, "--out", str(tmp_path)])
    assert status == EXIT_OK
    lines = (tmp_path / "twobody.csv").read_text().strip().splitlines()
    cells = lines[2].split(",")
    assert cells[1] == cells[2]  # counts agree
    assert int(cells[1]) >= 1    # the deep table well binds


def test_iterbs_demo_columns_and_invariance(tmp_path):
    status = main(["iterbs-demo", "--out", str(tmp_path)])
    assert status == EXIT_OK
    lines = (tmp_path / "iterbs-demo.csv").read_text().strip().splitlines()
    assert lines[1] == "k,count,hs_norm_Mk,consistency_residual"
    counts = [row.split(",")[1] for row in lines[2:]]
    assert len(set(counts)) == 1  # invariant across stages
    residuals = [float(row.split(",")[3]) for row in lines[2:]]
    assert max(residuals) <= 1e-8


def test_kernelcheck_reports_bound_and_match(tmp_path):
    cfg = write(tmp_path, "k.conf",
                'command = "kernelcheck"\n'
                "kernel.gammas = [0.0, 0.2]\n"
                "kernel.epsilons = [0.5, 2.0]\n"
                "kernel.r_values = [0.5, 2.0]\n")
    status = main(["kernelcheck", "--config", cfg, "--out", str(tmp_path)])
    assert status == EXIT_OK
    summary = json.loads((tmp_path / "kernelcheck.summary.json").read_text())
    assert summary["checks"]["bound_holds"]["pass"]
    assert summary["checks"]["free_resolvent_match"]["pass"]


def test_efimov_detuned_run(tmp_path):
    cfg = write(tmp_path, "e.conf",
                'command = "efimov"\n'
                "model.coupling = 0.08\n"   # below unitarity ~ 0.1013
                "model.n_p = 128\n"
                "model.grid_c = 100.0\n"
                "efimov.e_floor = -1.0\n")
    status = main(["efimov", "--config", cfg, "--out", str(tmp_path)])
    assert status == EXIT_OK
    lines = (tmp_path / "efimov.csv").read_text().strip().splitlines()
    assert lines[1] == "n,E_n,ratio_to_next,cutoff_stable"
    summary = json.loads((tmp_path / "efimov.summary.json").read_text())
    assert summary["checks"]["scan_complete"]["pass"]


def test_io_error_exits_3(tmp_path, capsys):
    target = tmp_path / "blocked"
    target.write_text("a file, not a directory")
    status = main(["iterbs-demo", "--out", str(target)])
    assert status == EXIT_IO_ERROR


def test_missing_config_file_exits_3(tmp_path):
    status = main(["verify", "--config", str(tmp_path / "nope.conf")])
    assert status == EXIT_IO_ERROR


def test_numbers_have_17_significant_digits(tmp_path):
    cfg = write(tmp_path, "tb.conf",
                'command = "twobody"\n'
                "grid.n = 600\n"
                "scan.epsilons = [0.2]\n")
    assert main(["twobody", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "twobody.csv").read_text().strip().splitlines()
    eps_cell = lines[2].split(",")[0]
    assert eps_cell == format(0.2, ".17g")


def test_bad_log_env_falls_back(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BSCOUNT_LOG", "chatty")
    status = main(["iterbs-demo", "--out", str(tmp_path)])
    assert status == EXIT_OK
    assert "BSCOUNT_LOG" in capsys.readouterr().err
