import json

import pytest

from mgrit_conslaw.cli import main, parse_args

FAST = ["--problem", "burgers", "--nx", "64", "--k", "1", "--flux", "llf", "--solver", "mgrit2"]


def _csv_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.glob("*.csv"))}


def test_repeat_runs_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(FAST + ["--out", str(tmp_path / name), "--timing", "off"]) == 0
    first, second = _csv_bytes(tmp_path / "a"), _csv_bytes(tmp_path / "b")
    assert set(first) == {"history.csv", "snapshots.csv", "errors.csv"}
    assert first == second


def test_history_and_manifest_contents(tmp_path):
    assert main(FAST + ["--out", str(tmp_path), "--seed", "7"]) == 0
    lines = (tmp_path / "history.csv").read_text().splitlines()
    assert lines[0] == "iter,rel_residual_2norm,wall_ms"
    assert float(lines[-1].split(",")[1]) <= 1e-10
    assert len(lines) - 1 <= 16
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["config"]["nx"] == 64
    assert "git_revision" in manifest
    snapshot_header = (tmp_path / "snapshots.csv").read_text().splitlines()[0]
    assert snapshot_header == "t,x_center,u"


def test_floats_carry_seventeen_significant_digits(tmp_path):
    main(FAST + ["--out", str(tmp_path)])
    value = (tmp_path / "history.csv").read_text().splitlines()[2].split(",")[1]
    assert len(value.replace(".", "").split("e")[0].lstrip("0")) >= 15


def test_config_file_and_flag_override(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("# linear testbed\nlinear = true\nalpha = cos2\nnx = 64\nmax-cycles = 3\n")
    args = parse_args(["--config", str(config), "--nx", "128"])
    assert args.linear and args.alpha == "cos2" and args.nx == 128 and args.max_cycles == 3


def test_unknown_config_key_is_a_usage_error(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("problem = burgers\nresolution = 64\n")
    with pytest.raises(SystemExit) as info:
        parse_args(["--config", str(config)])
    assert info.value.code == 2
    assert "resolution" in capsys.readouterr().err


def test_linear_run(tmp_path):
    assert main(["--linear", "--alpha", "const", "--p", "1", "--nx", "64", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["runs"][0]["termination"] == "converged"


def test_suite_writes_summary(tmp_path):
    assert main(["--suite", "fig3", "--nx-max", "128", "--out", str(tmp_path), "--threads", "1"]) == 0
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert rows[0] == "nx,nt,iterations,termination,final_rel_residual"
    assert [row.split(",")[0] for row in rows[1:]] == ["64", "128"]
    assert (tmp_path / "nx128" / "history.csv").exists()


def test_invalid_combination_returns_error_code(tmp_path, capsys):
    code = main(["--problem", "burgers", "--nx", "100", "--out", str(tmp_path)])
    assert code == 2
    assert "n_x=100" in capsys.readouterr().err
