import json
import sys

import numpy as np
import pytest

from surropt.cli import (
    build_parser,
    format_history,
    history_columns,
    main,
    parse_args,
    read_history,
    write_history,
)
from surropt.design import DESIGN_TAGS
from surropt.exceptions import ConfigError
from surropt.problem import EvaluationRecord
from surropt.sampling import SAMPLING_TAGS
from surropt.surrogate import SURROGATE_TAGS

ALL_TAGS = {
    "design": DESIGN_TAGS,
    "surrogate": SURROGATE_TAGS,
    "sampling": SAMPLING_TAGS,
}


@pytest.fixture
def branin_file(tmp_path):
    path = tmp_path / "branin.yaml"
    path.write_text("dim: 2\nlower: [-5, 0]\nupper: [10, 15]\nobjective: branin\n")
    return path


def test_defaults(branin_file):
    cfg = parse_args(["--problem", str(branin_file)])
    assert (cfg.surrogate, cfg.sampling, cfg.design, cfg.batch) == ("MIX_RcM", "CANDglob", "SLHD", 1)
    assert cfg.max_evals == 200 and cfg.design_size is None and cfg.format == "csv"


def test_tags_set(branin_file):
    cfg = parse_args(["--problem", str(branin_file), "--surrogate", "RBFcub", "--sampling", "SurfMin"])
    assert (cfg.surrogate, cfg.sampling) == ("RBFcub", "SurfMin")


@pytest.mark.parametrize("flag, tag", [(f, t) for f, tags in ALL_TAGS.items() for t in tags])
def test_every_tag_accepted(branin_file, flag, tag):
    cfg = parse_args(["--problem", str(branin_file), f"--{flag}", tag])
    assert getattr(cfg, flag) == tag


def test_table_vocabulary_is_complete():
    assert set(DESIGN_TAGS) == {"CORNER", "SLHD", "lhd"}
    assert set(SAMPLING_TAGS) == {"CANDloc", "CANDglob", "SurfMin"}
    assert set(SURROGATE_TAGS) == {
        "RBFcub", "RBFtps", "RBFlin", "MARS", "POLYlin", "POLYquad", "POLYquadr", "POLYcub",
        "POLYcubr", "MIX_RcM", "MIX_RcPc", "MIX_RcPcr", "MIX_RcPq", "MIX_RcPqr", "MIX_RcPcM",
    }


def test_help_lists_tags():
    text = build_parser().format_help()
    for tags in ALL_TAGS.values():
        for t in tags:
            assert t in text


def test_invalid_tag_lists_vocabulary(branin_file):
    with pytest.raises(ConfigError, match="RBFcub"):
        parse_args(["--problem", str(branin_file), "--surrogate", "RBFfancy"])


@pytest.mark.parametrize("argv", [["--max-evals", "many"], ["--max-evals", "0"], ["--batch", "x"]])
def test_bad_numbers(branin_file, argv):
    with pytest.raises(ConfigError):
        parse_args(["--problem", str(branin_file)] + argv)


def test_missing_problem_file_exit_2(tmp_path, capsys):
    assert main(["--problem", str(tmp_path / "nope.yaml")]) == 2
    assert "not found" in capsys.readouterr().err


def test_invalid_tag_exit_2(branin_file, capsys):
    assert main(["--problem", str(branin_file), "--sampling", "CANDx"]) == 2
    assert "CANDglob" in capsys.readouterr().err


def test_seed_from_environment(branin_file, monkeypatch):
    monkeypatch.setenv("SURROPT_SEED", "17")
    assert parse_args(["--problem", str(branin_file)]).seed == 17
    assert parse_args(["--problem", str(branin_file), "--seed", "3"]).seed == 3
    monkeypatch.setenv("SURROPT_SEED", "abc")
    with pytest.raises(ConfigError):
        parse_args(["--problem", str(branin_file)])


def run_cli(problem, out, *extra):
    argv = ["--problem", str(problem), "--max-evals", "50", "--surrogate", "RBFcub",
            "--seed", "4", "--output", str(out), *extra]
    return main(argv)


def test_branin_history_50_rows(branin_file, tmp_path, capsys):
    out = tmp_path / "h.csv"
    assert run_cli(branin_file, out) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == history_columns(2)
    assert len(lines) == 51
    rows = read_history(out)
    values = np.array([r["value"] for r in rows])
    best = np.array([r["best_so_far"] for r in rows])
    np.testing.assert_array_equal(best, np.minimum.accumulate(values))
    assert np.all(np.diff(best) <= 0)
    assert "evaluations: 50" in capsys.readouterr().out


def test_reruns_byte_identical(branin_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(branin_file, a) == 0
    assert run_cli(branin_file, b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_output_round_trip(branin_file, tmp_path):
    out = tmp_path / "h.json"
    assert run_cli(branin_file, out, "--format", "json") == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 50
    assert rows[0]["eval_index"] == 1 and len(rows[0]["point"]) == 2


def record(i=1, value=0.1, point=(1.0 / 3.0, 2.0)):
    return EvaluationRecord(np.array(point), value, i, 0, 0.0, value, 0.75, 0.5)


def test_csv_single_record_two_lines(tmp_path):
    path = tmp_path / "one.csv"
    write_history([record()], "csv", path)
    assert len(path.read_text().splitlines()) == 2


def test_csv_precision_and_round_trip(tmp_path):
    recs = [record(1, 1.0 / 7.0), record(2, 2.0 / 3.0, (np.pi, -1e-9))]
    path = tmp_path / "h.csv"
    write_history(recs, "csv", path)
    back = read_history(path)
    for r, b in zip(recs, back):
        assert b["value"] == r.value
        assert b["point"] == r.point.tolist()
        assert b["w_R"] == 0.75 and b["sigma"] == 0.5
    row = path.read_text().splitlines()[1].split(",")
    assert len(row[2].replace(".", "").lstrip("0")) >= 12


def test_json_round_trip(tmp_path):
    recs = [record(1, 1.0 / 7.0), record(2, 2.0 / 3.0)]
    path = tmp_path / "h.json"
    write_history(recs, "json", path)
    back = read_history(path)
    assert [b["value"] for b in back] == [r.value for r in recs]


def test_empty_history_rejected():
    with pytest.raises(ValueError):
        format_history([], "csv")


def test_unwritable_path(tmp_path):
    with pytest.raises(ConfigError):
        write_history([record()], "csv", tmp_path / "missing" / "h.csv")


def test_objective_failure_exit_3(tmp_path, capsys):
    path = tmp_path / "p.yaml"
    path.write_text(
        "dim: 1\nlower: [0]\nupper: [1]\nobjective:\n  kind: command\n"
        f"  cmd: '{sys.executable} -c \"import sys; sys.exit(1)\"'\n"
    )
    assert main(["--problem", str(path), "--surrogate", "RBFcub", "--max-evals", "5"]) == 3
    assert "exited" in capsys.readouterr().err


def test_command_objective_end_to_end(tmp_path):
    path = tmp_path / "p.yaml"
    script = "import sys; x = [float(t) for t in sys.stdin.read().split()]; print(sum(v * v for v in x))"
    path.write_text(
        "dim: 2\nlower: [-1, -3]\nupper: [1, 3]\ninteger_idx: [2]\nobjective:\n  kind: command\n"
        f"  cmd: '{sys.executable} -c \"{script}\"'\n"
    )
    out = tmp_path / "h.csv"
    assert main(["--problem", str(path), "--surrogate", "RBFcub", "--max-evals", "12",
                 "--seed", "1", "--output", str(out)]) == 0
    rows = read_history(out)
    assert len(rows) == 12
    assert all(r["point"][1] in range(-3, 4) for r in rows)


def test_start_points_flag(branin_file, tmp_path):
    start = tmp_path / "s.txt"
    start.write_text("3.14159265 2.275\n")
    out = tmp_path / "h.csv"
    assert run_cli(branin_file, out, "--start-points", str(start)) == 0
    rows = read_history(out)
    assert any(r["point"] == [3.14159265, 2.275] for r in rows)


def test_numerical_failure_exit_4(branin_file, monkeypatch, capsys):
    from surropt import cli
    from surropt.exceptions import NumericalError

    def fail(spec, opts):
        raise NumericalError("singular system")

    monkeypatch.setattr(cli, "optimize", fail)
    assert main(["--problem", str(branin_file)]) == 4
    assert "singular" in capsys.readouterr().err
