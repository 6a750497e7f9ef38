import json
import os
from importlib import resources
from pathlib import Path

import pytest

from prfteam.cli import main

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("PRFTEAM_UPDATE_GOLDEN") == "1"


@pytest.fixture
def lib_file(tmp_path):
    p = tmp_path / "lib.prf"
    p.write_text((resources.files("prfteam") / "data" / "library.prf").read_text())
    return str(p)


def check_golden(name, text):
    path = GOLDEN / name
    if UPDATE or not path.exists():
        path.write_text(text)
    assert text == path.read_text()


def test_run_add(lib_file, capsys):
    assert main(["run", lib_file, "add", "2", "3"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("value=5 ")


def test_run_zero(tmp_path, capsys):
    f = tmp_path / "zero.prf"
    f.write_text("# nothing but the built-in\nz = zero\n")
    assert main(["run", str(f), "zero", "9"]) == 0
    assert capsys.readouterr().out.startswith("value=0 ")


def test_run_arity_error(lib_file, capsys):
    assert main(["run", lib_file, "add", "2"]) != 0
    err = capsys.readouterr().err
    assert "expected 2" in err and "found 1" in err


def test_run_unknown_name(lib_file, capsys):
    assert main(["run", lib_file, "nope", "1"]) != 0
    assert "nope" in capsys.readouterr().err


def test_run_missing_file(capsys):
    assert main(["run", "/nonexistent.prf", "add", "1", "2"]) != 0


def test_run_expression_literal_with_oracle(lib_file, capsys):
    assert main(["run", lib_file, "compose(add, [succ, proj(1,1)])", "2", "--oracle"]) == 0
    out = capsys.readouterr().out
    assert "value=5" in out and "oracle=5" in out and "match" in out


def test_run_budget_exhausted_is_nonzero(lib_file, capsys):
    assert main(["run", lib_file, "succ", "30", "--max-rounds", "5"]) != 0
    assert "status=round_budget_exceeded" in capsys.readouterr().out


def test_run_writes_trace_and_plot(lib_file, tmp_path, capsys):
    trace, fig = tmp_path / "t.jsonl", tmp_path / "t.png"
    assert main(["run", lib_file, "succ", "2", "--trace", str(trace), "--plot", str(fig)]) == 0
    lines = trace.read_text().splitlines()
    assert json.loads(lines[0]) == {"agent_id": "A", "moved": "left", "node": 2, "round": 0, "state_label": "(init,A)#0"}
    assert json.loads(lines[-1])["value"] == 3
    assert fig.stat().st_size > 0


@pytest.mark.parametrize(
    "name, agents, groups", [("succ", 2, 1), ("zero", 1, 1), ("add", 20, 2)]
)
def test_inspect(lib_file, capsys, name, agents, groups):
    assert main(["inspect", lib_file, name]) == 0
    out = capsys.readouterr().out
    assert f"agents: {agents}  groups: {groups}" in out
    if name == "add":
        for aid in ("conductor", "counter", "q1", "q2"):
            assert f"  {aid} " in out
        assert "program conductor:" in out


def test_compile_plan_golden(lib_file, capsys):
    assert main(["compile", lib_file, "succ", "--emit", "plan"]) == 0
    check_golden("succ_plan.json", capsys.readouterr().out)


def test_compile_plan_to_file(lib_file, tmp_path):
    out = tmp_path / "plan.json"
    assert main(["compile", lib_file, "add", "--emit", "plan", "-o", str(out), "--no-programs"]) == 0
    d = json.loads(out.read_text())
    assert len(d["agents"]) == 20 and "programs" not in d


ROUND_POINTS = [
    ("zero", [7]), ("succ", [6]), ("proj(3,2)", [4, 7, 2]), ("z3", [4, 9, 1]), ("succ_last", [5, 2, 9]),
    ("plus_two", [0]), ("add", [2, 3]), ("add", [4, 0]), ("pred", [10]), ("mult", [3, 2]), ("const3", [4]),
]


def test_round_counts_golden(lib_file, capsys):
    lines = []
    for name, args in ROUND_POINTS:
        assert main(["run", lib_file, name, *map(str, args)]) == 0
        lines.append(f"{name} {' '.join(map(str, args))}: {capsys.readouterr().out.strip()}")
    check_golden("rounds.txt", "\n".join(lines) + "\n")


CORPUS = """
entries:
  - name: succ
    grid: [[0, 8]]
  - name: p31
    expr: proj(3,1)
    grid: [[0, 3], [0, 3], [0, 3]]
  - name: p32
    expr: proj(3,2)
    grid: [[0, 3], [0, 3], [0, 3]]
  - name: p33
    expr: proj(3,3)
    grid: [[0, 3], [0, 3], [0, 3]]
  - name: add
    expr: primrec(proj(1,1), compose(succ, [proj(3,3)]))
    grid: [[0, 6], [0, 6]]
"""


def test_corpus_command(tmp_path, capsys):
    corpus = tmp_path / "c.yaml"
    corpus.write_text(CORPUS)
    report = tmp_path / "out" / "report.jsonl"
    report.parent.mkdir()
    assert main(["corpus", str(corpus), "--jobs", "2", "--report", str(report)]) == 0
    out = capsys.readouterr().out
    rows = {line.split()[0]: line.split()[1:3] for line in out.splitlines() if line and not line.startswith("figure")}
    assert rows["succ"] == ["9", "9"]
    assert rows["add"] == ["49", "49"]
    assert rows["TOTAL"] == ["250", "250"]
    assert (tmp_path / "out" / "report_rounds.png").exists()
    assert json.loads(report.read_text().splitlines()[-1])["passed"] == 250


def test_corpus_failure_exit_and_trace_pointer(tmp_path, capsys):
    corpus = tmp_path / "c.yaml"
    corpus.write_text("entries:\n  - name: succ\n    grid: [[3, 3]]\n    max_rounds: 2\n")
    report = tmp_path / "r.jsonl"
    assert main(["corpus", str(corpus), "--report", str(report), "--no-figures"]) == 1
    out = capsys.readouterr().out
    assert "FAIL succ(3,)" in out and "trace=failure_succ_3.jsonl" in out
    assert (tmp_path / "failure_succ_3.jsonl").exists()
    rec = json.loads(report.read_text().splitlines()[0])
    assert rec["trace_file"] == "failure_succ_3.jsonl"


def test_corpus_malformed(tmp_path, capsys):
    corpus = tmp_path / "c.yaml"
    corpus.write_text("entries:\n  - name: succ\n")
    assert main(["corpus", str(corpus)]) == 2
