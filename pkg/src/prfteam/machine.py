"""Agents as deterministic Mealy controllers, and teams of them.

An agent reads the degree of its node together with the set of states of
the other agents at that node, and answers with a next state and a move.
States are structural labels; every non-STOP label knows which agent owns
it, so slice disjointness can be checked by enumeration.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

ENUMERATION_CAP = 10**6


class Move(enum.IntEnum):
    STAY = 0
    RIGHT = 1
    LEFT = -1

    @property
    def symbol(self) -> str:
        return {Move.STAY: "*", Move.RIGHT: "0", Move.LEFT: "1"}[self]

    @property
    def word(self) -> str:
        return self.name.lower()


class EnumerationCapExceeded(RuntimeError):
    pass


class TeamError(ValueError):
    pass


# --- states ----------------------------------------------------------------
#
# States are interned: structurally equal labels are the same object, so the
# simulator can hash and compare them cheaply.  Nesting is arbitrary.


class State:
    __slots__ = ("kind", "owner", "tag", "pc", "inner", "partner", "_hash", "_label", "__weakref__")

    _table: dict[tuple, "State"] = {}

    kind: str
    owner: str | None
    tag: str | None
    pc: int | None
    inner: "State | None"
    partner: str | None

    def __new__(cls, *a, **kw):
        raise TypeError("use named(), pair_h(), pair_g() or STOP")

    @classmethod
    def _make(cls, key: tuple, kind: str, owner, tag=None, pc=None, inner=None, partner=None) -> "State":
        obj = cls._table.get(key)
        if obj is not None:
            return obj
        obj = object.__new__(cls)
        obj.kind = kind
        obj.owner = owner
        obj.tag = tag
        obj.pc = pc
        obj.inner = inner
        obj.partner = partner
        obj._hash = hash(key)
        obj._label = None
        cls._table[key] = obj
        return obj

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __reduce__(self):
        if self.kind == "stop":
            return (_stop, ())
        if self.kind == "named":
            return (named, (self.owner, self.tag, self.pc))
        if self.kind == "h":
            return (pair_h, (self.inner, self.partner))
        return (pair_g, (self.inner, self.partner))

    @property
    def is_stop(self) -> bool:
        return self.kind == "stop"

    @property
    def label(self) -> str:
        """Canonical string form."""
        if self._label is None:
            if self.kind == "stop":
                s = "STOP"
            elif self.kind == "named":
                s = f"({self.tag},{self.owner})#{self.pc}"
            elif self.kind == "h":
                s = f"H[{self.inner.label};{self.partner}]"
            else:
                s = f"G[{self.inner.label};{self.partner}]"
            self._label = s
        return self._label

    def __repr__(self) -> str:
        return self.label


def composite_id(a: str, b: str) -> str:
    """Id of the product agent built from ``a`` (first role) and ``b`` (second role)."""
    return f"<{a}|{b}>"


def named(agent: str, tag: str, pc: int) -> State:
    return State._make(("n", agent, tag, pc), "named", agent, tag=tag, pc=pc)


def pair_h(inner: State, partner: str) -> State:
    """State of a product agent while it replays its first-role agent."""
    if inner.is_stop:
        raise ValueError("STOP cannot be wrapped")
    return State._make(("h", inner, partner), "h", composite_id(inner.owner, partner), inner=inner, partner=partner)


def pair_g(inner: State, partner: str) -> State:
    """State of a product agent while it replays its second-role agent."""
    if inner.is_stop:
        raise ValueError("STOP cannot be wrapped")
    return State._make(("g", inner, partner), "g", composite_id(partner, inner.owner), inner=inner, partner=partner)


STOP = State._make(("stop",), "stop", None)


def unwrap(state: State) -> State:
    """The innermost state inside any product wrappers."""
    while state.kind in ("h", "g"):
        state = state.inner
    return state


def _stop() -> State:
    return STOP


# --- observations and conditions ------------------------------------------


@dataclass(frozen=True)
class Observation:
    degree: int
    colocated: frozenset

    def __post_init__(self):
        if self.degree not in (1, 2):
            raise ValueError("degree is 1 at the root and 2 elsewhere")


def observe(state_of_self: State, node_degree: int, colocated_states: Iterable[State]) -> Observation:
    """Package an agent's input; ``state_of_self`` is removed if present."""
    z = frozenset(colocated_states)
    if not state_of_self.is_stop:
        z = z - {state_of_self}
    return Observation(node_degree, z)


_INDEX_CACHE: dict[frozenset, dict[str, frozenset]] = {}


def tag_index(zall: frozenset) -> dict[str, frozenset]:
    """owner -> tags of the named states in ``zall``."""
    idx = _INDEX_CACHE.get(zall)
    if idx is None:
        tmp: dict[str, set] = {}
        for s in zall:
            if s.kind == "named":
                tmp.setdefault(s.owner, set()).add(s.tag)
        idx = {k: frozenset(v) for k, v in tmp.items()}
        if len(_INDEX_CACHE) > 200_000:
            _INDEX_CACHE.clear()
        _INDEX_CACHE[zall] = idx
    return idx


@dataclass(frozen=True)
class Sees:
    """Holds when, for every requirement, the named agent is present in one of the tags.

    ``tags=None`` accepts any named state of the agent.
    """

    reqs: tuple[tuple[str, frozenset | None], ...]

    @classmethod
    def of(cls, *pairs: tuple[str, str | Iterable[str] | None]) -> "Sees":
        reqs = []
        for agent, tags in pairs:
            if tags is None:
                reqs.append((agent, None))
            elif isinstance(tags, str):
                reqs.append((agent, frozenset([tags])))
            else:
                reqs.append((agent, frozenset(tags)))
        return cls(tuple(reqs))

    @classmethod
    def all_in(cls, agents: Iterable[str], tag: str) -> "Sees":
        return cls.of(*((a, tag) for a in agents))

    def holds(self, idx: Mapping[str, frozenset]) -> bool:
        for agent, tags in self.reqs:
            present = idx.get(agent)
            if present is None:
                return False
            if tags is not None and not (present & tags):
                return False
        return True

    def describe(self) -> str:
        parts = []
        for agent, tags in self.reqs:
            if tags is None:
                parts.append(f"({agent})")
            else:
                parts.append("|".join(f"({t},{agent})" for t in sorted(tags)))
        return "{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class AnyOf:
    conds: tuple

    def holds(self, idx) -> bool:
        return any(c.holds(idx) for c in self.conds)

    def describe(self) -> str:
        return " or ".join(c.describe() for c in self.conds)


# --- controllers -----------------------------------------------------------


class Controller:
    """A deterministic agent controller.

    Subclasses implement :meth:`_react`, which receives the full set of
    states at the node (own state included) and must ignore its own state.
    """

    agent_id: str
    start: State
    kind = "agent"

    def __init__(self, agent_id: str, start: State):
        self.agent_id = agent_id
        self.start = start
        self._memo: dict = {}
        self._states: frozenset | None = None

    def react(self, state: State, degree: int, zall: frozenset) -> tuple[State, Move]:
        if state.is_stop:
            return STOP, Move.STAY
        key = (state, degree, zall)
        out = self._memo.get(key)
        if out is None:
            out = self._react(state, degree, zall)
            if len(self._memo) > 500_000:
                self._memo.clear()
            self._memo[key] = out
        return out

    def _react(self, state: State, degree: int, zall: frozenset) -> tuple[State, Move]:
        raise NotImplementedError

    def transition(self, state: State, obs: Observation) -> State:
        return self.react(state, obs.degree, obs.colocated | {state} if not state.is_stop else obs.colocated)[0]

    def output(self, state: State, obs: Observation) -> Move:
        return self.react(state, obs.degree, obs.colocated | {state} if not state.is_stop else obs.colocated)[1]

    def states(self, cap: int = ENUMERATION_CAP) -> frozenset:
        """Every state the controller can ever be in, STOP included."""
        if self._states is None:
            found = set(self._enumerate(cap))
            found.add(self.start)
            found.add(STOP)
            if len(found) > cap:
                raise EnumerationCapExceeded(f"{self.agent_id}: more than {cap} states")
            self._states = frozenset(found)
        return self._states

    def _enumerate(self, cap: int) -> Iterable[State]:
        raise NotImplementedError

    def listing(self) -> list[str]:
        return []


# --- teams -----------------------------------------------------------------


@dataclass
class Team:
    agents: list[Controller]
    groups: list[list[str]]
    synchronizers: list[str]
    roles: dict[str, str] = field(default_factory=dict)
    arity: int = field(init=False)

    def __post_init__(self):
        self.arity = len(self.groups)
        ids = [a.agent_id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise TeamError("agent ids must be unique")
        covered = [aid for g in self.groups for aid in g]
        if any(not g for g in self.groups):
            raise TeamError("groups must be non-empty")
        if sorted(covered) != sorted(ids):
            raise TeamError("groups must partition the agents")
        if len(self.synchronizers) != len(self.groups):
            raise TeamError("need one synchronizer per group")
        for m, g in zip(self.synchronizers, self.groups):
            if m not in g:
                raise TeamError(f"synchronizer {m} is not in its group")
        self.by_id = {a.agent_id: a for a in self.agents}
        self.group_of = {aid: gi for gi, g in enumerate(self.groups) for aid in g}

    def __len__(self) -> int:
        return len(self.agents)

    def __getitem__(self, agent_id: str) -> Controller:
        return self.by_id[agent_id]

    def state_counts(self, cap: int = ENUMERATION_CAP) -> dict[str, int]:
        return {a.agent_id: len(a.states(cap)) for a in self.agents}

    def to_dict(self, cap: int = ENUMERATION_CAP) -> dict:
        return {
            "arity": self.arity,
            "agents": [
                {
                    "id": a.agent_id,
                    "kind": a.kind,
                    "start": a.start.label,
                    "group": self.group_of[a.agent_id] + 1,
                    "states": len(a.states(cap)),
                    "role": self.roles.get(a.agent_id, ""),
                }
                for a in self.agents
            ],
            "groups": [list(g) for g in self.groups],
            "synchronizers": list(self.synchronizers),
        }

    def to_json(self, cap: int = ENUMERATION_CAP) -> str:
        return json.dumps(self.to_dict(cap), indent=2, sort_keys=True)


def slices_disjoint(team: Team, cap: int = ENUMERATION_CAP) -> bool:
    """True iff distinct agents share no state other than STOP.

    Also false when some agent can be in a non-STOP state owned by someone else.
    """
    seen: dict[State, str] = {}
    for a in team.agents:
        for s in a.states(cap):
            if s.is_stop:
                continue
            if s.owner != a.agent_id:
                return False
            if s in seen and seen[s] != a.agent_id:
                return False
            seen[s] = a.agent_id
    return True


def start_states_distinct(agents: Sequence[Controller]) -> bool:
    starts = [a.start for a in agents]
    return len(set(starts)) == len(starts)
