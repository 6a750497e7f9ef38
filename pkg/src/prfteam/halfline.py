"""Synchronous round-based simulation of a team on the discrete half-line.

Node ``j`` is the integer ``j``; node 0 (the root) has degree 1 and every
other node degree 2.  In each round every agent reads the configuration as
it stood at the start of the round, then all agents change state and move
together.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence, TextIO

from .machine import STOP, Move, State, Team, unwrap

DEFAULT_MAX_ROUNDS = 10**6
PRIMREC_MAX_ROUNDS = 10**8


class Status(str, enum.Enum):
    COMPLETED = "completed"
    ROUND_BUDGET_EXCEEDED = "round_budget_exceeded"
    FAULT = "fault"


class SimulationFault(RuntimeError):
    pass


@dataclass(frozen=True)
class Configuration:
    round: int
    agent_ids: tuple[str, ...]
    positions: tuple[int, ...]
    states: tuple[State, ...]

    def position(self, agent_id: str) -> int:
        return self.positions[self.agent_ids.index(agent_id)]

    def state(self, agent_id: str) -> State:
        return self.states[self.agent_ids.index(agent_id)]

    def as_dict(self) -> dict[str, tuple[int, State]]:
        return {a: (p, s) for a, p, s in zip(self.agent_ids, self.positions, self.states)}

    @property
    def all_stopped(self) -> bool:
        return all(s is STOP for s in self.states)


@dataclass
class RunResult:
    status: Status
    value: int | None
    rounds: int
    sync_round: int | None
    fault: str | None = None
    trace: list[Configuration] | None = None
    trace_hash: str | None = None
    visited: dict[str, set] | None = field(default=None, repr=False)

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "value": self.value,
            "rounds": self.rounds,
            "sync_round": self.sync_round,
            "fault": self.fault,
        }


def init_configuration(team: Team, args: Sequence[int]) -> Configuration:
    if len(args) != team.arity:
        raise ValueError(f"team takes {team.arity} argument(s) but {len(args)} given")
    if any(int(x) < 0 for x in args):
        raise ValueError("arguments must be natural numbers")
    ids = tuple(a.agent_id for a in team.agents)
    positions = tuple(int(args[team.group_of[aid]]) for aid in ids)
    states = tuple(a.start for a in team.agents)
    return Configuration(0, ids, positions, states)


def _advance(ctrls, positions, states):
    """One synchronous round; returns new positions and states."""
    at: dict[int, list[int]] = {}
    for i, p in enumerate(positions):
        at.setdefault(p, []).append(i)
    new_pos = list(positions)
    new_st = list(states)
    for node, idxs in at.items():
        zall = frozenset([states[i] for i in idxs])
        deg = 1 if node == 0 else 2
        for i in idxs:
            s = states[i]
            if s is STOP:
                continue
            ctrl = ctrls[i]
            ns, mv = ctrl.react(s, deg, zall)
            if ns is not STOP and ns.owner != ctrl.agent_id:
                raise SimulationFault(f"{ctrl.agent_id} moved to foreign state {ns.label}")
            if mv:
                if mv == Move.LEFT and node == 0:
                    raise SimulationFault(f"{ctrl.agent_id} tried to go left at the root in state {s.label}")
                new_pos[i] = node + mv
            new_st[i] = ns
    return tuple(new_pos), tuple(new_st)


def step(team: Team, config: Configuration) -> Configuration:
    """Advance ``config`` by one round.  Raises :class:`SimulationFault`."""
    pos, st = _advance(team.agents, config.positions, config.states)
    return Configuration(config.round + 1, config.agent_ids, pos, st)


def simulate(team: Team, args: Sequence[int], max_rounds: int = DEFAULT_MAX_ROUNDS) -> Iterator[Configuration]:
    """Yield the configuration of every round, starting at round 0.

    Stops after the first all-STOP configuration or after ``max_rounds``
    rounds; faults propagate as :class:`SimulationFault`.
    """
    config = init_configuration(team, args)
    yield config
    ctrls = team.agents
    ids = config.agent_ids
    pos, st = config.positions, config.states
    r = 0
    while r < max_rounds and not all(s is STOP for s in st):
        pos, st = _advance(ctrls, pos, st)
        r += 1
        yield Configuration(r, ids, pos, st)


Observer = Callable[[Configuration | None, Configuration], None]


def run(
    team: Team,
    args: Sequence[int],
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    record_trace: bool = False,
    trace_every: int = 1,
    hash_trace: bool = False,
    collect_states: bool = False,
    observers: Iterable[Observer] = (),
) -> RunResult:
    """Run ``team`` on ``args`` until every agent is in STOP.

    ``observers`` are called with each (previous, current) configuration
    pair; round 0 is delivered with ``previous=None``.
    """
    observers = list(observers)
    sync_idx = [team.agents.index(team[m]) for m in team.synchronizers]
    sync_round = None
    trace: list[Configuration] | None = [] if record_trace else None
    hasher = hashlib.sha256() if hash_trace else None
    visited: dict[str, set] | None = {a.agent_id: set() for a in team.agents} if collect_states else None
    prev = None
    last = None
    try:
        for config in simulate(team, args, max_rounds):
            last = config
            if sync_round is None and all(config.positions[i] == 0 for i in sync_idx):
                sync_round = config.round
            if trace is not None and (config.round % trace_every == 0 or config.all_stopped):
                trace.append(config)
            if hasher is not None:
                hasher.update(_config_bytes(config))
            if visited is not None:
                for aid, s in zip(config.agent_ids, config.states):
                    visited[aid].add(s)
            for obs in observers:
                obs(prev, config)
            prev = config
    except SimulationFault as exc:
        return RunResult(
            Status.FAULT, None, (last.round + 1) if last else 0, sync_round, str(exc),
            trace, hasher.hexdigest() if hasher else None, visited,
        )
    digest = hasher.hexdigest() if hasher else None
    if not last.all_stopped:
        return RunResult(Status.ROUND_BUDGET_EXCEEDED, None, last.round, sync_round, None, trace, digest, visited)
    nodes = set(last.positions)
    if len(nodes) != 1:
        return RunResult(
            Status.FAULT, None, last.round, sync_round,
            f"non-gathered termination at nodes {sorted(nodes)}", trace, digest, visited,
        )
    return RunResult(Status.COMPLETED, nodes.pop(), last.round, sync_round, None, trace, digest, visited)


def _config_bytes(config: Configuration) -> bytes:
    parts = [str(config.round)]
    for p, s in zip(config.positions, config.states):
        parts.append(f"{p}:{s.label}")
    return ("|".join(parts) + "\n").encode()


# --- trace export ----------------------------------------------------------


def _moved(a: int, b: int) -> str:
    return "stay" if a == b else ("right" if b > a else "left")


def trace_records(configs: Sequence[Configuration]) -> Iterator[dict]:
    """One record per (round, agent); ``moved`` is the move taken at the end of that round."""
    for k, c in enumerate(configs):
        nxt = configs[k + 1] if k + 1 < len(configs) else None
        contiguous = nxt is not None and nxt.round == c.round + 1
        for j, aid in enumerate(c.agent_ids):
            moved = _moved(c.positions[j], nxt.positions[j]) if contiguous else "stay"
            yield {
                "round": c.round,
                "agent_id": aid,
                "node": c.positions[j],
                "state_label": c.states[j].label,
                "moved": moved,
            }


def write_trace(result: RunResult, out: TextIO) -> None:
    if result.trace is not None:
        for rec in trace_records(result.trace):
            out.write(json.dumps(rec, sort_keys=True) + "\n")
    out.write(json.dumps({"type": "summary", **result.summary()}, sort_keys=True) + "\n")


# --- online invariant checks ----------------------------------------------


class SafetyMonitor:
    """Checks movement legality and STOP permanence between consecutive rounds."""

    def __init__(self):
        self.violations: list[str] = []
        self.rounds_seen = 0

    def __call__(self, prev: Configuration | None, cur: Configuration) -> None:
        self.rounds_seen += 1
        if any(p < 0 for p in cur.positions):
            self.violations.append(f"round {cur.round}: negative position")
        if prev is None:
            return
        for j, aid in enumerate(cur.agent_ids):
            d = cur.positions[j] - prev.positions[j]
            if abs(d) > 1:
                self.violations.append(f"round {cur.round}: {aid} jumped {d}")
            if d < 0 and prev.positions[j] == 0:
                self.violations.append(f"round {cur.round}: {aid} left the root leftwards")
            if prev.states[j] is STOP and (cur.states[j] is not STOP or d != 0):
                self.violations.append(f"round {cur.round}: {aid} left STOP")

    @property
    def ok(self) -> bool:
        return not self.violations


class TagEntries:
    """Counts the rounds in which ``agent_id`` switches into a named state tagged ``tag``.

    With ``inner`` the tag is read from the state of that agent as replayed
    inside ``agent_id``'s product wrappers.
    """

    def __init__(self, team: Team, agent_id: str, tag: str, inner: str | None = None):
        self.index = [a.agent_id for a in team.agents].index(agent_id)
        self.tag = tag
        self.owner = inner or agent_id
        self.count = 0

    def _tagged(self, state: State) -> bool:
        s = unwrap(state)
        return s.kind == "named" and s.owner == self.owner and s.tag == self.tag

    def __call__(self, prev: Configuration | None, cur: Configuration) -> None:
        if self._tagged(cur.states[self.index]):
            if prev is None or not self._tagged(prev.states[self.index]):
                self.count += 1
