import csv
import io
import json

import pytest

from mucheck import cli
from mucheck.games import import_pgsolver
from mucheck.model import parse_model


@pytest.fixture
def files(tmp_path):
    model = tmp_path / "m.model"
    model.write_text(json.dumps({
        "functor": "powerset", "states": ["a", "b", "c"], "valuation": {"p": ["c"]},
        "transitions": {"a": ["b"], "b": ["c"], "c": []}}))
    top = tmp_path / "top.mu"
    top.write_text("true\n")
    reach = tmp_path / "reach.mu"
    reach.write_text("mu X. p | <> X\n")
    box = tmp_path / "box.mu"
    box.write_text("<> <> <> p\n")
    return tmp_path, model, top, reach, box


@pytest.mark.parametrize("engine", cli.ENGINES)
def test_check_exit_codes(files, engine, capsys):
    _, model, top, reach, box = files
    assert cli.main(["check", str(model), str(top), "--engine", engine]) == 0
    assert cli.main(["check", str(model), str(reach), "--state", "b", "--engine", engine]) == 0
    assert cli.main(["check", str(model), str(box), "--engine", engine]) == 1
    out = capsys.readouterr().out
    assert "verdict: holds" in out and "verdict: fails" in out


def test_check_reports_statistics(files, capsys):
    _, model, _, reach, _ = files
    cli.main(["check", str(model), str(reach), "--engine", "game"])
    assert "game_positions:" in capsys.readouterr().out
    cli.main(["check", str(model), str(reach), "--engine", "lazy"])
    out = capsys.readouterr().out
    assert "explored:" in out and "quotient:" in out


def test_check_errors(files, capsys):
    tmp, model, top, _, _ = files
    assert cli.main(["check", str(tmp / "missing"), str(top)]) == 2
    bad = tmp / "bad.mu"
    bad.write_text("mu X. &")
    assert cli.main(["check", str(model), str(bad)]) == 2
    graded = tmp / "graded.mu"
    graded.write_text("<g 1> p")
    assert cli.main(["check", str(model), str(graded)]) == 2
    assert cli.main(["check", str(model), str(top), "--state", "zz"]) == 2
    err = capsys.readouterr().err
    assert err.count("error:") == 4


def test_check_state_by_index(files):
    _, model, _, reach, _ = files
    assert cli.main(["check", str(model), str(reach), "--state", "2"]) == 0


def test_gen_lazy_hanoi(tmp_path, capsys):
    assert cli.main(["gen", "hanoi", "--size", "1", "--lazy", "--out", str(tmp_path)]) == 0
    manifest = json.loads(capsys.readouterr().out)
    assert manifest["worlds"] == 5 and manifest["positions"] == 5
    assert sorted(manifest["files"]) == ["lazyhanoi-none-1.gm", "lazyhanoi-none-1.model",
                                         "lazyhanoi-none-1.mu"]
    assert len(parse_model((tmp_path / "lazyhanoi-none-1.model").read_text()).states) == 5
    import_pgsolver((tmp_path / "lazyhanoi-none-1.gm").read_text())


def test_gen_reports_world_counts_and_multiplicity(tmp_path, capsys):
    cli.main(["gen", "clique", "--size", "3", "--out", str(tmp_path)])
    assert json.loads(capsys.readouterr().out)["worlds"] == 3
    cli.main(["gen", "ladder", "--size", "2", "--lift", "graded", "--out", str(tmp_path)])
    assert json.loads(capsys.readouterr().out)["min_total_multiplicity"] >= 10


def test_gen_multi_formula_family(tmp_path, capsys):
    cli.main(["gen", "castle", "--size", "1", "--out", str(tmp_path)])
    files = json.loads(capsys.readouterr().out)["files"]
    assert "castle-none-1-safe_1.mu" in files and "castle-none-1-win_2.mu" in files


def test_gen_then_check_with_every_engine(tmp_path, capsys):
    cli.main(["gen", "hanoi", "--size", "2", "--lazy", "--out", str(tmp_path)])
    capsys.readouterr()
    model, formula = tmp_path / "lazyhanoi-none-2.model", tmp_path / "lazyhanoi-none-2.mu"
    for engine in cli.ENGINES:
        assert cli.main(["check", str(model), str(formula), "--engine", engine]) == 0
    out = capsys.readouterr().out
    quotient = [line for line in out.splitlines() if line.startswith("quotient")]
    assert float(quotient[-1].split()[1]) < 1


def test_gen_invalid_size(tmp_path):
    assert cli.main(["gen", "hanoi", "--size", "0", "--out", str(tmp_path)]) == 2


def test_bench_single_cell(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["bench", "--family", "ladder", "--sizes", "2", "--engine", "game",
                     "--reps", "2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert out.read_text().splitlines()[0] == ",".join(cli.CSV_FIELDS)
    assert len(rows) == 1
    row = rows[0]
    assert row["runs"] == "2" and row["timeout"] == "False" and float(row["mean"]) >= 0
    assert row["game_positions"] and not row["quotient"]


def test_bench_matrix_and_defaults(tmp_path):
    out = tmp_path / "r.csv"
    cli.main(["bench", "--family", "clique", "--sizes", "1-2", "--lift", "none,graded",
              "--engine", "local,lazy", "--reps", "1", "--jobs", "2", "--out", str(out)])
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 8
    assert {r["verdict"] for r in rows} <= {"holds", "fails"}
    assert cli.build_parser().parse_args(["bench", "--family", "clique", "--sizes", "1"]).reps == 5


def test_bench_marks_timeouts(tmp_path):
    row = cli.bench_cell("jurdzinski", "monotone", 4, "local", reps=3, timeout=0.0)
    assert row["timeout"] is True and row["runs"] == 0 and row["mean"] == ""


def test_bench_records_cell_errors():
    row = cli.bench_cell("modulo", "graded", 2, "local", reps=1)
    assert row["verdict"].startswith("error")


def test_bench_rejects_unknown_engine(tmp_path):
    assert cli.main(["bench", "--family", "clique", "--sizes", "1", "--engine", "fast"]) == 2


def test_export_and_import(files, capsys):
    tmp, model, _, reach, _ = files
    out = tmp / "g.gm"
    assert cli.main(["export-pg", str(model), str(reach), "--state", "a", "--out", str(out)]) == 0
    assert cli.main(["import-pg", str(out)]) == 0
    text = capsys.readouterr().out
    assert "won by exists" in text
    assert cli.main(["export-pg", str(model), str(reach)]) == 0
    assert capsys.readouterr().out.startswith("parity ")


def test_import_losing_game(tmp_path, capsys):
    path = tmp_path / "g.gm"
    path.write_text('parity 0;\n0 1 0 0 "n0";\n')
    assert cli.main(["import-pg", str(path)]) == 1
    path.write_text('parity 0;\n0 1 2 0 "n0";\n')
    assert cli.main(["import-pg", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_repeated_checks_are_identical(files, capsys):
    _, model, _, reach, _ = files
    cli.main(["check", str(model), str(reach), "--engine", "lazy"])
    first = capsys.readouterr().out
    cli.main(["check", str(model), str(reach), "--engine", "lazy"])
    assert capsys.readouterr().out == first
