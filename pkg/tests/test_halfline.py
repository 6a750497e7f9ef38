import io
import json

import pytest

from prfteam import halfline
from prfteam.halfline import Configuration, SafetyMonitor, Status, TagEntries
from prfteam.machine import STOP, Move, Team, named
from prfteam.procedures import GoToRoot, ProgramController, Push, Stop
from prfteam.synthesis import compile_proj, compile_succ, compile_zero


def test_initial_configuration_places_groups():
    team = compile_proj(3, 2)
    c = halfline.init_configuration(team, [4, 7, 2])
    assert c.position("T1") == 4
    assert c.position("T2") == 7 and c.position("B") == 7
    assert c.position("T3") == 2
    assert c.round == 0


def test_zero_team_single_group():
    c = halfline.init_configuration(compile_zero(), [9])
    assert set(c.positions) == {9}


def test_argument_checks():
    with pytest.raises(ValueError):
        halfline.init_configuration(compile_succ(), [1, 2])
    with pytest.raises(ValueError):
        halfline.init_configuration(compile_succ(), [-1])


def test_zero_agent_steps_left():
    team = compile_zero()
    c = halfline.step(team, halfline.init_configuration(team, [1]))
    assert c.position("Z") == 0 and c.round == 1


def test_succ_agents_diverge_in_round_one():
    team = compile_succ()
    c = halfline.step(team, halfline.init_configuration(team, [3]))
    assert c.position("A") == 2
    assert c.position("B") == 4


def test_stop_absorbs():
    team = compile_zero()
    c = Configuration(5, ("Z",), (3,), (STOP,))
    assert halfline.step(team, c) == Configuration(6, ("Z",), (3,), (STOP,))


@pytest.mark.parametrize(
    "team, args, value",
    [(compile_zero(), [5], 0), (compile_succ(), [3], 4), (compile_succ(), [0], 1), (compile_proj(4, 4), [1, 2, 3, 9], 9)],
)
def test_run_values(team, args, value):
    res = halfline.run(team, args)
    assert res.status is Status.COMPLETED
    assert res.value == value
    assert res.sync_round is not None


def test_zero_at_root_finishes_in_one_round():
    res = halfline.run(compile_zero(), [0])
    assert (res.value, res.rounds, res.sync_round) == (0, 1, 0)


def test_budget_exceeded():
    res = halfline.run(compile_zero(), [50], max_rounds=10)
    assert res.status is Status.ROUND_BUDGET_EXCEEDED
    assert res.value is None and res.rounds == 10


def test_left_at_root_is_a_fault():
    class Stubborn(ProgramController):
        def _react(self, state, degree, zall):
            return state, Move.LEFT

    a = Stubborn("a", [Stop()])
    res = halfline.run(Team([a], [["a"]], ["a"]), [1])
    assert res.status is Status.FAULT
    assert "root" in res.fault


def test_scattered_stop_is_a_fault():
    a = ProgramController("a", [Stop()])
    b = ProgramController("b", [Stop()])
    res = halfline.run(Team([a, b], [["a"], ["b"]], ["a", "b"]), [1, 3])
    assert res.status is Status.FAULT
    assert "non-gathered" in res.fault


def test_trace_records_and_summary():
    res = halfline.run(compile_succ(), [1], record_trace=True)
    out = io.StringIO()
    halfline.write_trace(res, out)
    lines = [json.loads(x) for x in out.getvalue().splitlines()]
    assert lines[-1]["type"] == "summary" and lines[-1]["value"] == 2
    first = [r for r in lines[:-1] if r["round"] == 0]
    assert {r["agent_id"] for r in first} == {"A", "B"}
    assert {r["agent_id"]: r["moved"] for r in first} == {"A": "left", "B": "right"}
    assert set(lines[0]) == {"round", "agent_id", "node", "state_label", "moved"}


def test_downsampled_trace_keeps_final_round():
    res = halfline.run(compile_succ(), [6], record_trace=True, trace_every=4)
    rounds = [c.round for c in res.trace]
    assert rounds[-1] == res.rounds
    assert all(r % 4 == 0 for r in rounds[:-1])


def test_trace_hash_is_deterministic():
    team = compile_proj(3, 1)
    h1 = halfline.run(team, [2, 5, 1], hash_trace=True).trace_hash
    h2 = halfline.run(compile_proj(3, 1), [2, 5, 1], hash_trace=True).trace_hash
    h3 = halfline.run(team, [2, 5, 2], hash_trace=True).trace_hash
    assert h1 == h2 != h3


def test_safety_monitor_accepts_real_runs():
    mon = SafetyMonitor()
    halfline.run(compile_proj(2, 2), [3, 6], observers=[mon])
    assert mon.ok and mon.rounds_seen > 1


def test_safety_monitor_flags_violations():
    s = named("a", "init", 0)
    mon = SafetyMonitor()
    mon(None, Configuration(0, ("a",), (0,), (s,)))
    mon(Configuration(0, ("a",), (0,), (s,)), Configuration(1, ("a",), (2,), (s,)))
    mon(Configuration(1, ("a",), (2,), (STOP,)), Configuration(2, ("a",), (3,), (STOP,)))
    mon(Configuration(2, ("a",), (0,), (s,)), Configuration(3, ("a",), (-1,), (s,)))
    text = " ".join(mon.violations)
    assert "jumped" in text and "left STOP" in text and "negative" in text and "root" in text


def test_tag_entries_counts_switches():
    a = ProgramController("a", [Push(), GoToRoot(), Stop()])
    team = Team([a], [["a"]], ["a"])
    counter = TagEntries(team, "a", "init")
    halfline.run(team, [2], observers=[counter])
    assert counter.count == 1


def test_visited_states_collected():
    res = halfline.run(compile_succ(), [2], collect_states=True)
    assert STOP in res.visited["A"] and STOP in res.visited["B"]
