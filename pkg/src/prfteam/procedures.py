"""Movement procedures and the interpreter that runs them as a finite controller.

A procedure program is a short structured listing (push, go-to-root,
conditional moves and waits, label changes, loops, branches).  It is
flattened to a list of ops; the controller state is the pair
(program counter, current tag), so the control is finite no matter how far
the agent walks.

Round accounting: a move, a failed wait, a tag change (transit) and Stop
each end the round; jumps, branches and satisfied conditions are free.
A transit therefore keeps the new tag visible for at least one round before
anything else happens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .machine import STOP, AnyOf, Controller, Move, Sees, State, named, tag_index

INIT_TAG = "init"


# --- structured instructions ----------------------------------------------


@dataclass(frozen=True)
class Push:
    def __str__(self):
        return "push"


@dataclass(frozen=True)
class GoToRoot:
    def __str__(self):
        return "go-to-root"


@dataclass(frozen=True)
class CondRight:
    cond: Sees | AnyOf

    def __str__(self):
        return f"conditional-right({self.cond.describe()})"


@dataclass(frozen=True)
class CondWait:
    cond: Sees | AnyOf

    def __str__(self):
        return f"conditional-wait({self.cond.describe()})"


@dataclass(frozen=True)
class Transit:
    tag: str

    def __str__(self):
        return f"transit {self.tag}"


@dataclass(frozen=True)
class MoveLeftOnce:
    def __str__(self):
        return "move-left-once"


@dataclass(frozen=True)
class Stop:
    def __str__(self):
        return "stop"


@dataclass(frozen=True)
class RepeatUntil:
    """Run ``body`` until ``cond`` holds.

    With ``test_first`` the condition is checked before each pass (a while
    loop on the negated condition); otherwise after each pass.
    """

    cond: Sees | AnyOf
    body: tuple
    test_first: bool = False


@dataclass(frozen=True)
class IfSees:
    cond: Sees | AnyOf
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class BranchOnDegree:
    """``then`` runs when the current node is the root."""

    then: tuple
    orelse: tuple


@dataclass(frozen=True)
class Enter:
    """Start replaying the first-role ('h') or second-role ('g') agent."""

    role: str

    def __str__(self):
        return f"compute-{self.role}"


def for_range(lo: int, hi: int, body: Callable[[int], Sequence]) -> tuple:
    """Unrolled ``for i in lo..hi`` (inclusive); the bound is fixed at build time."""
    out: list = []
    for i in range(lo, hi + 1):
        out.extend(body(i))
    return tuple(out)


# --- flattening ------------------------------------------------------------
#
# Flat ops are tuples:
#   ("push",) ("left",) ("root",) ("right", c) ("wait", c) ("transit", tag)
#   ("stop",) ("jump", t) ("jumpif", c, t) ("deg1", t) ("enter", role)


def flatten(instrs: Iterable) -> list[tuple]:
    code: list[list] = []

    def emit(op: list) -> int:
        code.append(op)
        return len(code) - 1

    def walk(seq):
        for ins in seq:
            if isinstance(ins, Push):
                emit(["push"])
            elif isinstance(ins, GoToRoot):
                emit(["root"])
            elif isinstance(ins, CondRight):
                emit(["right", ins.cond])
            elif isinstance(ins, CondWait):
                emit(["wait", ins.cond])
            elif isinstance(ins, Transit):
                emit(["transit", ins.tag])
            elif isinstance(ins, MoveLeftOnce):
                emit(["left"])
            elif isinstance(ins, Stop):
                emit(["stop"])
            elif isinstance(ins, Enter):
                emit(["enter", ins.role])
            elif isinstance(ins, IfSees):
                br = emit(["jumpif", ins.cond, None])
                walk(ins.orelse)
                j = emit(["jump", None])
                code[br][2] = len(code)
                walk(ins.then)
                code[j][1] = len(code)
            elif isinstance(ins, BranchOnDegree):
                br = emit(["deg1", None])
                walk(ins.orelse)
                j = emit(["jump", None])
                code[br][1] = len(code)
                walk(ins.then)
                code[j][1] = len(code)
            elif isinstance(ins, RepeatUntil):
                top = len(code)
                if ins.test_first:
                    ex = emit(["jumpif", ins.cond, None])
                    walk(ins.body)
                    emit(["jump", top])
                    code[ex][2] = len(code)
                else:
                    walk(ins.body)
                    ex = emit(["jumpif", ins.cond, None])
                    emit(["jump", top])
                    code[ex][2] = len(code)
            elif isinstance(ins, (list, tuple)):
                walk(ins)
            else:
                raise TypeError(f"unknown instruction {ins!r}")

    walk(instrs)
    return [tuple(op) for op in code]


def render_op(op: tuple) -> str:
    kind = op[0]
    if kind == "push":
        return "push"
    if kind == "left":
        return "move-left-once"
    if kind == "root":
        return "go-to-root"
    if kind == "right":
        return f"conditional-right {op[1].describe()}"
    if kind == "wait":
        return f"conditional-wait {op[1].describe()}"
    if kind == "transit":
        return f"transit {op[1]}"
    if kind == "stop":
        return "stop"
    if kind == "jump":
        return f"goto {op[1]}"
    if kind == "jumpif":
        return f"if sees {op[1].describe()} goto {op[2]}"
    if kind == "deg1":
        return f"if at root goto {op[1]}"
    if kind == "enter":
        return f"compute-{op[1]}"
    raise ValueError(op)


class ProgramError(RuntimeError):
    pass


class ProgramController(Controller):
    """Runs a flattened procedure program.

    ``subs`` maps a role ('h'/'g') to a hook object providing ``start``,
    ``step(state, degree, zall)`` and ``states()``; used by the
    primitive-recursion product agents.
    """

    kind = "program"

    def __init__(self, agent_id: str, program: Sequence, subs: dict | None = None, kind: str | None = None):
        self.code = flatten(program)
        self.subs = subs or {}
        if kind:
            self.kind = kind
        super().__init__(agent_id, named(agent_id, INIT_TAG, 0))
        self._enter_pc = {op[1]: pc for pc, op in enumerate(self.code) if op[0] == "enter"}
        for op in self.code:
            for c in _conds(op):
                for req in _reqs(c):
                    if req[0] == agent_id:
                        raise ProgramError(f"{agent_id}: a condition refers to the agent itself")
        for role in self._enter_pc:
            if role not in self.subs:
                raise ProgramError(f"{agent_id}: compute-{role} without a sub-agent")

    # one round of execution
    def _react(self, state: State, degree: int, zall: frozenset) -> tuple[State, Move]:
        if state.kind in ("h", "g"):
            sub = self.subs[state.kind]
            nxt, move = sub.step(state, degree, zall)
            if nxt.is_stop:
                return named(self.agent_id, "computed", self._enter_pc[state.kind] + 1), move
            return nxt, move

        pc, tag = state.pc, state.tag
        idx = None
        code = self.code
        for _ in range(len(code) + 1):
            if pc >= len(code):
                raise ProgramError(f"{self.agent_id}: ran past the end of its program")
            op = code[pc]
            kind = op[0]
            if kind == "push":
                return named(self.agent_id, tag, pc + 1), Move.RIGHT
            if kind == "left":
                if degree == 1:
                    raise ProgramError(f"{self.agent_id}: move-left-once at the root")
                return named(self.agent_id, tag, pc + 1), Move.LEFT
            if kind == "root":
                if degree == 1:
                    pc += 1
                    continue
                if pc != state.pc:
                    state = named(self.agent_id, tag, pc)
                return state, Move.LEFT
            if kind in ("right", "wait", "jumpif"):
                if idx is None:
                    idx = tag_index(zall)
                ok = op[1].holds(idx)
                if kind == "jumpif":
                    pc = op[2] if ok else pc + 1
                    continue
                if ok:
                    pc += 1
                    continue
                if pc != state.pc:
                    state = named(self.agent_id, tag, pc)
                return state, (Move.RIGHT if kind == "right" else Move.STAY)
            if kind == "transit":
                return named(self.agent_id, op[1], pc + 1), Move.STAY
            if kind == "stop":
                return STOP, Move.STAY
            if kind == "jump":
                pc = op[1]
                continue
            if kind == "deg1":
                pc = op[1] if degree == 1 else pc + 1
                continue
            if kind == "enter":
                return self.subs[op[1]].start, Move.STAY
            raise ProgramError(f"bad op {op!r}")
        raise ProgramError(f"{self.agent_id}: no round-ending instruction reached")

    def _rest_states(self) -> set[tuple[int, str]]:
        """(pc, tag) pairs at which a round can begin."""
        rest = {(0, INIT_TAG)}
        todo = [(0, INIT_TAG)]
        code = self.code

        def ends(pc: int, tag: str, out: set):
            seen = set()
            stack = [pc]
            while stack:
                p = stack.pop()
                if p in seen:
                    continue
                seen.add(p)
                if p >= len(code):
                    raise ProgramError(f"{self.agent_id}: control can run past the program end")
                op = code[p]
                k = op[0]
                if k in ("push", "left"):
                    out.add((p + 1, tag))
                elif k in ("root", "right", "wait"):
                    out.add((p, tag))
                    stack.append(p + 1)
                elif k == "transit":
                    out.add((p + 1, op[1]))
                elif k == "stop":
                    pass
                elif k == "jump":
                    stack.append(op[1])
                elif k == "jumpif":
                    stack.extend([op[2], p + 1])
                elif k == "deg1":
                    stack.extend([op[1], p + 1])
                elif k == "enter":
                    out.add((p + 1, "computed"))
            return out

        while todo:
            pc, tag = todo.pop()
            for nxt in ends(pc, tag, set()):
                if nxt not in rest:
                    rest.add(nxt)
                    todo.append(nxt)
        return rest

    def _enumerate(self, cap: int):
        out = [named(self.agent_id, tag, pc) for pc, tag in sorted(self._rest_states())]
        for role in sorted(self._enter_pc):
            out.extend(self.subs[role].states(cap))
            if len(out) > cap:
                break
        return out

    def listing(self) -> list[str]:
        return [f"{pc:3d}  {render_op(op)}" for pc, op in enumerate(self.code)]


def _conds(op: tuple):
    if op[0] in ("right", "wait", "jumpif"):
        yield op[1]


def _reqs(cond):
    if isinstance(cond, AnyOf):
        for c in cond.conds:
            yield from _reqs(c)
    else:
        yield from cond.reqs
