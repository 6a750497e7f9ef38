import pickle

import pytest

from prfteam.machine import (
    STOP,
    AnyOf,
    Move,
    Observation,
    Sees,
    Team,
    TeamError,
    named,
    observe,
    pair_g,
    pair_h,
    slices_disjoint,
    start_states_distinct,
    tag_index,
)
from prfteam.procedures import ProgramController, Stop, Transit
from prfteam.synthesis import compile_succ


def test_states_are_interned():
    assert named("q1", "wait", 3) is named("q1", "wait", 3)
    assert named("q1", "wait", 3) is not named("q1", "wait", 4)
    inner = named("A", "init", 0)
    assert pair_h(inner, "B") is pair_h(inner, "B")
    assert pair_h(inner, "B") is not pair_g(inner, "B")


def test_owners_of_product_states():
    inner = named("A", "init", 0)
    assert pair_h(inner, "B").owner == "<A|B>"
    assert pair_g(inner, "B").owner == "<B|A>"
    with pytest.raises(ValueError):
        pair_h(STOP, "B")


def test_labels():
    assert STOP.label == "STOP"
    assert named("q1", "wait", 2).label == "(wait,q1)#2"
    assert pair_g(named("A", "x", 1), "T").label == "G[(x,A)#1;T]"


def test_pickle_keeps_identity():
    s = pair_h(named("A", "x", 1), "T")
    assert pickle.loads(pickle.dumps(s)) is s
    assert pickle.loads(pickle.dumps(STOP)) is STOP


def test_move_encoding():
    assert Move.RIGHT.symbol == "0" and Move.LEFT.symbol == "1" and Move.STAY.symbol == "*"


def test_observe_lone_agent_at_root():
    me = named("Z", "init", 0)
    assert observe(me, 1, [me]) == Observation(1, frozenset())


def test_observe_keeps_others_and_stop():
    me = named("a", "init", 0)
    w = named("q1", "wait", 2)
    assert observe(me, 2, [me, w]) == Observation(2, frozenset([w]))
    c = named("counter", "count", 5)
    assert observe(me, 2, [STOP, c]).colocated == frozenset([STOP, c])


def test_observation_degree_checked():
    with pytest.raises(ValueError):
        Observation(3, frozenset())


def test_sees_and_anyof():
    z = frozenset([named("q1", "wait", 2), named("c", "count", 1), STOP])
    idx = tag_index(z)
    assert Sees.of(("q1", "wait")).holds(idx)
    assert not Sees.of(("q1", "begin")).holds(idx)
    assert Sees.of(("c", None), ("q1", ["wait", "begin"])).holds(idx)
    assert not Sees.of(("q1", "wait"), ("q2", "wait")).holds(idx)
    assert AnyOf((Sees.of(("q2", "wait")), Sees.of(("c", "count")))).holds(idx)
    assert Sees.all_in(["q1"], "wait").describe() == "{(wait,q1)}"


def test_controller_is_deterministic_and_stop_absorbs():
    a = ProgramController("x", [Transit("t"), Stop()])
    z = frozenset([a.start])
    assert a.react(a.start, 2, z) == a.react(a.start, 2, z)
    assert a.react(STOP, 2, frozenset([STOP])) == (STOP, Move.STAY)
    obs = Observation(2, frozenset())
    assert a.output(STOP, obs) is Move.STAY


def _lonely(aid):
    return ProgramController(aid, [Stop()])


def test_team_validation():
    a, b = _lonely("a"), _lonely("b")
    Team([a, b], [["a"], ["b"]], ["a", "b"])
    with pytest.raises(TeamError):
        Team([a, b], [["a"]], ["a"])
    with pytest.raises(TeamError):
        Team([a, b], [["a", "b"], []], ["a", "b"])
    with pytest.raises(TeamError):
        Team([a, b], [["a"], ["b"]], ["b", "a"])
    with pytest.raises(TeamError):
        Team([a, _lonely("a")], [["a", "a"]], ["a"])


def test_succ_team_slices_disjoint():
    team = compile_succ()
    assert slices_disjoint(team)
    assert start_states_distinct(team.agents)


def test_shared_start_state_is_detected():
    a = ProgramController("a", [Stop()])
    twin = ProgramController("a2", [Stop()])
    twin.start = a.start  # forged: two agents sharing a non-STOP state
    team = Team([a, twin], [["a", "a2"]], ["a"])
    assert not start_states_distinct(team.agents)
    assert not slices_disjoint(team)


def test_team_dict():
    d = compile_succ().to_dict()
    assert d["arity"] == 1
    assert [x["id"] for x in d["agents"]] == ["A", "B"]
    assert d["synchronizers"] == ["A"]
