"""prfteam command line: run, corpus, inspect, compile."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import halfline, harness, prf, synthesis
from .machine import EnumerationCapExceeded, TeamError

EXIT_FAIL = 1
EXIT_USAGE = 2


def _load(file: str, name: str) -> prf.PrfExpr:
    """Resolve ``name`` in the definitions of ``file``; an expression literal also works."""
    env, _ = prf.parse_program(Path(file).read_text())
    if name in env:
        return env[name]
    return prf.parse_prf(name, env)


def _compile(expr: prf.PrfExpr) -> synthesis.SynthPlan:
    return synthesis.compile(expr)


# --- subcommands -----------------------------------------------------------


def cmd_run(ns) -> int:
    expr = _load(ns.file, ns.name)
    if len(ns.args) != expr.arity:
        raise prf.ArityError(
            f"{ns.name} takes {expr.arity} argument(s), got {len(ns.args)}", expected=expr.arity, found=len(ns.args)
        )
    plan = _compile(expr)
    max_rounds = ns.max_rounds or harness.default_max_rounds(expr)
    want_trace = ns.trace is not None or ns.plot is not None
    res = halfline.run(plan.team, ns.args, max_rounds, record_trace=want_trace, trace_every=ns.trace_every)
    fields = [
        f"value={res.value}",
        f"rounds={res.rounds}",
        f"sync_round={res.sync_round}",
        f"status={res.status.value}",
        f"agents={len(plan.team)}",
    ]
    ok = res.completed
    if ns.oracle:
        want = prf.eval_oracle(expr, ns.args)
        fields.append(f"oracle={want}")
        fields.append("match" if res.value == want else "MISMATCH")
        ok = ok and res.value == want
    print(" ".join(fields))
    if res.fault:
        print(f"fault: {res.fault}", file=sys.stderr)
    if ns.trace:
        with open(ns.trace, "w") as fh:
            halfline.write_trace(res, fh)
    if ns.plot and res.trace:
        from . import plotting

        plotting.spacetime(plan.team, res.trace, ns.plot, title=f"{ns.name}{tuple(ns.args)}")
    return 0 if ok else EXIT_FAIL


def cmd_corpus(ns) -> int:
    path = ns.file or harness.default_corpus_path()
    corpus = harness.load_corpus(path)
    if ns.max_rounds:
        corpus.entries = [
            harness.CorpusEntry(e.name, e.expr_text, e.grid, e.max_rounds or ns.max_rounds) for e in corpus.entries
        ]
    report = harness.run_corpus(corpus, jobs=ns.jobs)
    out_dir = Path(ns.report).parent if ns.report else Path.cwd()
    if not report.ok:
        harness.dump_failure_traces(corpus, report, out_dir)
    if ns.report:
        report.write_jsonl(ns.report)
        if not ns.no_figures:
            from . import plotting

            fig = plotting.corpus_rounds(report, Path(ns.report).with_name(Path(ns.report).stem + "_rounds.png"))
            print(f"figure: {fig}")
    print(report.table())
    for p in report.points:
        if not p.passed:
            print(
                f"FAIL {p.entry}{p.args}: status={p.status} value={p.value} oracle={p.oracle} "
                f"sync_round={p.sync_round} trace={p.trace_file}"
            )
    return 0 if report.ok else EXIT_FAIL


def cmd_inspect(ns) -> int:
    plan = _compile(_load(ns.file, ns.name))
    team = plan.team
    counts = team.state_counts()
    print(f"expression: {prf.to_text(plan.expr)}")
    print(f"agents: {len(team)}  groups: {team.arity}  total states: {sum(counts.values())}")
    print("roster:")
    width = max(len(a.agent_id) for a in team.agents)
    for a in team.agents:
        role = team.roles.get(a.agent_id, a.kind)
        print(f"  {a.agent_id:<{width}}  group {team.group_of[a.agent_id] + 1}  states {counts[a.agent_id]:>6}  {role}")
    for gi, g in enumerate(team.groups, start=1):
        print(f"group {gi}: {len(g)} agent(s), synchronizer {team.synchronizers[gi - 1]}")
    if not ns.brief:
        for a in team.agents:
            lines = a.listing()
            if lines:
                print(f"program {a.agent_id}:")
                for line in lines:
                    print(f"  {line}")
    return 0


def cmd_compile(ns) -> int:
    plan = _compile(_load(ns.file, ns.name))
    text = json.dumps(plan.to_dict(programs=not ns.no_programs), indent=2, sort_keys=True) + "\n"
    if ns.output:
        Path(ns.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# --- entry point -----------------------------------------------------------


def _natural(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("arguments are natural numbers")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prfteam", description="Compile primitive recursive functions into agent teams.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="compile and simulate one function on one input")
    r.add_argument("file")
    r.add_argument("name", help="a name bound in FILE, or an expression using those names")
    r.add_argument("args", nargs="*", type=_natural)
    r.add_argument("--trace", metavar="PATH", help="write the per-round trace as JSON lines")
    r.add_argument("--trace-every", type=int, default=1, metavar="N", help="keep every N-th round in the trace")
    r.add_argument("--plot", metavar="PATH", help="render a space-time figure of the run")
    r.add_argument("--max-rounds", type=int, metavar="N")
    r.add_argument("--oracle", action="store_true", help="also print the reference value")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("corpus", help="run every grid point of a corpus against the oracle")
    c.add_argument("file", nargs="?", help="corpus YAML (default: the bundled corpus)")
    c.add_argument("--jobs", type=int, default=1, metavar="N")
    c.add_argument("--report", metavar="PATH", help="JSON-lines report; figures are written next to it")
    c.add_argument("--max-rounds", type=int, metavar="N", help="budget for entries without their own")
    c.add_argument("--no-figures", action="store_true")
    c.set_defaults(func=cmd_corpus)

    i = sub.add_parser("inspect", help="print roster, groups, synchronizers and programs")
    i.add_argument("file")
    i.add_argument("name")
    i.add_argument("--brief", action="store_true", help="omit per-agent programs")
    i.set_defaults(func=cmd_inspect)

    k = sub.add_parser("compile", help="serialize the compiled plan")
    k.add_argument("file")
    k.add_argument("name")
    k.add_argument("--emit", choices=["plan"], default="plan")
    k.add_argument("-o", "--output", metavar="PATH")
    k.add_argument("--no-programs", action="store_true")
    k.set_defaults(func=cmd_compile)
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except prf.ArityError as exc:
        print(f"arity error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except prf.PrfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (harness.CorpusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TeamError, EnumerationCapExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
