"""Corpus runs: compile, simulate over argument grids, compare with the oracle."""

from __future__ import annotations

import datetime as _dt
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from . import halfline, prf, synthesis

log = logging.getLogger(__name__)

MAX_TRACE_RECORDS = 2000


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    expr_text: str
    grid: tuple[tuple[int, int], ...]
    max_rounds: int | None = None

    def points(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(lo, hi + 1) for lo, hi in self.grid))

    @property
    def size(self) -> int:
        n = 1
        for lo, hi in self.grid:
            n *= hi - lo + 1
        return n


@dataclass
class CorpusSpec:
    entries: list[CorpusEntry]
    prelude: str = ""

    def expr(self, entry: CorpusEntry) -> prf.PrfExpr:
        return _parse(self.prelude, entry.expr_text)


@lru_cache(maxsize=None)
def _parse(prelude: str, text: str) -> prf.PrfExpr:
    env, _ = prf.parse_program(prelude)
    return prf.parse_prf(text, env)


@lru_cache(maxsize=None)
def _plan(prelude: str, text: str) -> synthesis.SynthPlan:
    return synthesis.compile(_parse(prelude, text))


def default_max_rounds(expr: prf.PrfExpr) -> int:
    if _has_primrec(expr):
        return halfline.PRIMREC_MAX_ROUNDS
    return halfline.DEFAULT_MAX_ROUNDS


def _has_primrec(expr) -> bool:
    if isinstance(expr, prf.PrimRec):
        return True
    if isinstance(expr, prf.Compose):
        return _has_primrec(expr.g) or any(_has_primrec(h) for h in expr.hs)
    return False


def load_corpus(path: str | Path) -> CorpusSpec:
    path = Path(path)
    return parse_corpus(path.read_text(), base=path.parent)


def parse_corpus(text: str, base: Path | None = None) -> CorpusSpec:
    """Read a YAML corpus description.

    Top-level keys: ``prelude`` (definition text) or ``prelude_file``
    (path relative to the corpus file), and ``entries``: a list of
    mappings with ``name``, ``expr`` (defaults to ``name``), ``grid``
    (one ``[lo, hi]`` inclusive range per argument) and optional
    ``max_rounds``.
    """
    data = yaml.safe_load(text) or {}
    prelude = data.get("prelude", "") or ""
    if "prelude_file" in data:
        p = Path(data["prelude_file"])
        if base is not None and not p.is_absolute():
            p = base / p
        prelude = p.read_text() + "\n" + prelude
    entries = []
    for raw in data.get("entries", []):
        try:
            name = str(raw["name"])
            grid = tuple((int(lo), int(hi)) for lo, hi in raw["grid"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"malformed corpus entry {raw!r}") from exc
        if any(lo < 0 or hi < lo for lo, hi in grid):
            raise CorpusError(f"{name}: grid ranges must satisfy 0 <= lo <= hi")
        entry = CorpusEntry(name, str(raw.get("expr", name)), grid, raw.get("max_rounds"))
        expr = _parse(prelude, entry.expr_text)
        if expr.arity != len(grid):
            raise CorpusError(f"{name}: expression takes {expr.arity} arguments, grid has {len(grid)}")
        entries.append(entry)
    return CorpusSpec(entries, prelude)


def default_corpus_path() -> Path:
    return Path(str(resources.files("prfteam") / "data" / "corpus.yaml"))


# --- evaluation ------------------------------------------------------------


@dataclass
class PointResult:
    entry: str
    args: tuple[int, ...]
    oracle: int | None
    value: int | None
    status: str
    rounds: int
    sync_round: int | None
    passed: bool
    fault: str | None = None
    trace_file: str | None = None

    def record(self) -> dict:
        d = asdict(self)
        d["args"] = list(self.args)
        d["type"] = "point"
        return d


@dataclass
class Report:
    points: list[PointResult] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(p.passed for p in self.points)

    @property
    def failed(self) -> int:
        return len(self.points) - self.passed

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def by_entry(self) -> dict[str, list[PointResult]]:
        out: dict[str, list[PointResult]] = {}
        for p in self.points:
            out.setdefault(p.entry, []).append(p)
        return out

    def summary_record(self, timestamp: str | None = None) -> dict:
        return {
            "type": "summary",
            "points": len(self.points),
            "passed": self.passed,
            "failed": self.failed,
            "entries": {
                name: {"points": len(ps), "passed": sum(p.passed for p in ps)}
                for name, ps in self.by_entry().items()
            },
            "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }

    def write_jsonl(self, path: str | Path, timestamp: str | None = None) -> None:
        with open(path, "w") as fh:
            for p in self.points:
                fh.write(json.dumps(p.record(), sort_keys=True) + "\n")
            fh.write(json.dumps(self.summary_record(timestamp), sort_keys=True) + "\n")

    def table(self) -> str:
        rows = [("entry", "points", "passed", "max rounds")]
        for name, ps in self.by_entry().items():
            rows.append((name, str(len(ps)), str(sum(p.passed for p in ps)), str(max(p.rounds for p in ps))))
        rows.append(("TOTAL", str(len(self.points)), str(self.passed), ""))
        widths = [max(len(r[c]) for r in rows) for c in range(4)]
        return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)) for r in rows)


def evaluate_point(prelude: str, entry: CorpusEntry, args: Sequence[int]) -> PointResult:
    expr = _parse(prelude, entry.expr_text)
    plan = _plan(prelude, entry.expr_text)
    max_rounds = entry.max_rounds or default_max_rounds(expr)
    try:
        want = prf.eval_oracle(expr, args)
    except prf.BudgetExhausted:
        want = None
    res = halfline.run(plan.team, args, max_rounds)
    ok = res.completed and want is not None and res.value == want and res.sync_round is not None
    return PointResult(
        entry.name, tuple(args), want, res.value, res.status.value, res.rounds, res.sync_round, ok, res.fault
    )


def _evaluate_task(task):
    prelude, entry, args = task
    return evaluate_point(prelude, entry, args)


def run_corpus(corpus: CorpusSpec, jobs: int = 1) -> Report:
    tasks = [(corpus.prelude, e, pt) for e in corpus.entries for pt in e.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_evaluate_task, tasks, chunksize=max(1, len(tasks) // (jobs * 8))))
    else:
        points = [_evaluate_task(t) for t in tasks]
    return Report(points)


def dump_failure_traces(corpus: CorpusSpec, report: Report, directory: str | Path) -> list[Path]:
    """Re-run failing points with a downsampled trace and write each next to the report."""
    directory = Path(directory)
    entries = {e.name: e for e in corpus.entries}
    written = []
    for p in report.points:
        if p.passed:
            continue
        entry = entries[p.entry]
        plan = _plan(corpus.prelude, entry.expr_text)
        every = max(1, p.rounds * len(plan.team) // MAX_TRACE_RECORDS)
        res = halfline.run(
            plan.team, p.args, entry.max_rounds or default_max_rounds(plan.expr), record_trace=True, trace_every=every
        )
        out = directory / f"failure_{p.entry}_{'_'.join(map(str, p.args))}.jsonl"
        with open(out, "w") as fh:
            halfline.write_trace(res, fh)
        p.trace_file = out.name
        written.append(out)
        log.warning("failing point %s%s: trace written to %s", p.entry, p.args, out)
    return written
