"""Compiling expressions into teams of automata.

Basic functions get small hand-written procedure teams.  Composition and
primitive recursion build product agents out of the ingredient teams: a
product agent first replays one agent of an inner team and then one agent
of the outer team, seeing only those colocated states whose copies are
present for every partner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import prf
from .machine import (
    ENUMERATION_CAP,
    STOP,
    AnyOf,
    Controller,
    Move,
    Sees,
    State,
    Team,
    TeamError,
    composite_id,
    pair_g,
    pair_h,
    slices_disjoint,
)
from .procedures import (
    BranchOnDegree,
    CondRight,
    CondWait,
    Enter,
    GoToRoot,
    IfSees,
    MoveLeftOnce,
    ProgramController,
    Push,
    RepeatUntil,
    Stop,
    Transit,
    for_range,
)


class SynthesisError(ValueError):
    pass


# --- basic teams -----------------------------------------------------------


def compile_zero(prefix: str = "") -> Team:
    z = f"{prefix}Z"
    agent = ProgramController(z, [GoToRoot(), Stop()])
    return Team([agent], [[z]], [z], roles={z: "zero agent"})


def compile_succ(prefix: str = "") -> Team:
    a_id, b_id = f"{prefix}A", f"{prefix}B"
    at_root = (Push(), Stop())
    a = ProgramController(
        a_id,
        [
            BranchOnDegree(
                then=at_root,
                orelse=(
                    GoToRoot(),
                    CondRight(Sees.of((b_id, "wait"))),
                    Transit("reached"),
                    Stop(),
                ),
            )
        ],
    )
    b = ProgramController(
        b_id,
        [
            BranchOnDegree(
                then=at_root,
                orelse=(
                    Push(),
                    Transit("wait"),
                    CondWait(Sees.of((a_id, "reached"))),
                    Stop(),
                ),
            )
        ],
    )
    return Team([a, b], [[a_id, b_id]], [a_id], roles={a_id: "succ A", b_id: "succ B"})


def compile_proj(k: int, i: int, prefix: str = "") -> Team:
    if k < 1 or not 1 <= i <= k:
        raise SynthesisError(f"invalid projection proj({k},{i})")
    t_ids = [f"{prefix}T{j}" for j in range(1, k + 1)]
    b_id = f"{prefix}B"
    reached = Sees.all_in(t_ids, "reached")
    agents: list[Controller] = []
    for t in t_ids:
        others = Sees.all_in([o for o in t_ids if o != t], "wait")
        agents.append(
            ProgramController(
                t,
                [
                    GoToRoot(),
                    Transit("wait"),
                    CondWait(others),
                    CondRight(Sees.of((b_id, "wait"))),
                    Transit("reached"),
                    Stop(),
                ],
            )
        )
    agents.append(ProgramController(b_id, [Transit("wait"), CondWait(reached), Stop()]))
    groups = [[t] for t in t_ids]
    groups[i - 1].append(b_id)
    roles = {t: f"proj T{j}" for j, t in enumerate(t_ids, start=1)}
    roles[b_id] = "proj B"
    return Team(agents, groups, list(t_ids), roles=roles)


# --- product agents --------------------------------------------------------


class Projection:
    """Recovers the inner-team view from the states at a node.

    ``required`` maps each inner agent to the partners it is paired with.
    An inner state is visible iff a wrapped copy is present for every
    partner.  Results are cached per node snapshot.
    """

    def __init__(self, wrap: str, required: dict[str, frozenset]):
        self.wrap = wrap
        self.required = required
        self._cache: dict[frozenset, frozenset] = {}

    def project(self, zall: frozenset) -> frozenset:
        out = self._cache.get(zall)
        if out is not None:
            return out
        seen: dict[State, set] = {}
        wrap, required = self.wrap, self.required
        for s in zall:
            if s.kind == wrap:
                inner = s.inner
                if inner.owner in required:
                    seen.setdefault(inner, set()).add(s.partner)
        out = frozenset(s for s, ps in seen.items() if ps >= required[s.owner])
        if len(self._cache) > 200_000:
            self._cache.clear()
        self._cache[zall] = out
        return out


class ProductController(Controller):
    """Composite agent c(a, b): replays ``first`` until it would stop, then ``second``."""

    kind = "composite"

    def __init__(self, first: Controller, second: Controller, proj_h: Projection, proj_g: Projection):
        self.first = first
        self.second = second
        self.proj_h = proj_h
        self.proj_g = proj_g
        super().__init__(composite_id(first.agent_id, second.agent_id), pair_h(first.start, second.agent_id))

    def _react(self, state: State, degree: int, zall: frozenset) -> tuple[State, Move]:
        if state.kind == "h":
            ns, mv = self.first.react(state.inner, degree, self.proj_h.project(zall))
            if ns is STOP:
                return pair_g(self.second.start, self.first.agent_id), mv
            return pair_h(ns, self.second.agent_id), mv
        ns, mv = self.second.react(state.inner, degree, self.proj_g.project(zall))
        if ns is STOP:
            return STOP, mv
        return pair_g(ns, self.first.agent_id), mv

    def _enumerate(self, cap: int):
        out = [pair_h(s, self.second.agent_id) for s in self.first.states(cap) if not s.is_stop]
        out += [pair_g(s, self.first.agent_id) for s in self.second.states(cap) if not s.is_stop]
        return out

    def listing(self) -> list[str]:
        return [
            f"replay {self.first.agent_id} until it stops",
            f"then replay {self.second.agent_id}",
        ]


class Replay:
    """Sub-agent hook for a procedure program (compute-h / compute-g)."""

    def __init__(self, agent: Controller, partner: str, wrap: str, projection: Projection):
        self.agent = agent
        self.partner = partner
        self.wrap = pair_h if wrap == "h" else pair_g
        self.projection = projection
        self.start = self.wrap(agent.start, partner)

    def step(self, state: State, degree: int, zall: frozenset) -> tuple[State, Move]:
        ns, mv = self.agent.react(state.inner, degree, self.projection.project(zall))
        if ns is STOP:
            return STOP, mv
        return self.wrap(ns, self.partner), mv

    def states(self, cap: int = ENUMERATION_CAP):
        return [self.wrap(s, self.partner) for s in self.agent.states(cap) if not s.is_stop]


# --- composition -----------------------------------------------------------


def _check_synchronized(team: Team, what: str):
    if not team.synchronizers or len(team.synchronizers) != team.arity:
        raise SynthesisError(f"{what} team lacks synchronizers")


def compile_compose(g_team: Team, h_teams: Sequence[Team], g_expr=None, h_exprs=None) -> Team:
    """Team for g(h_1(x), ..., h_l(x)).

    Agent c(a, b) pairs a in h_j's team with b in group j of g's team, so it
    starts g's role exactly where h_j's value was left.
    """
    l = len(h_teams)
    if l == 0:
        raise SynthesisError("composition needs at least one inner team")
    if g_team.arity != l:
        raise SynthesisError(f"outer team takes {g_team.arity} arguments but {l} inner teams given")
    k = h_teams[0].arity
    if any(t.arity != k for t in h_teams):
        raise SynthesisError("inner teams must share one arity")
    _check_synchronized(g_team, "outer")
    for t in h_teams:
        _check_synchronized(t, "inner")

    req_h: dict[str, frozenset] = {}
    req_g: dict[str, frozenset] = {}
    for j, ht in enumerate(h_teams):
        partners = frozenset(g_team.groups[j])
        for a in ht.agents:
            if a.agent_id in req_h:
                raise SynthesisError(f"agent id {a.agent_id} occurs in two inner teams")
            req_h[a.agent_id] = partners
        inner_ids = frozenset(a.agent_id for a in ht.agents)
        for b in g_team.groups[j]:
            req_g[b] = inner_ids
    proj_h = Projection("h", req_h)
    proj_g = Projection("g", req_g)

    agents: list[Controller] = []
    groups: list[list[str]] = [[] for _ in range(k)]
    roles: dict[str, str] = {}
    for j, ht in enumerate(h_teams):
        for a in ht.agents:
            for b in g_team.groups[j]:
                c = ProductController(a, g_team[b], proj_h, proj_g)
                agents.append(c)
                groups[ht.group_of[a.agent_id]].append(c.agent_id)
                roles[c.agent_id] = f"c({a.agent_id},{b})"
    fixed_b = g_team.synchronizers[0]
    syncs = [composite_id(m, fixed_b) for m in h_teams[0].synchronizers]
    return Team(agents, groups, syncs, roles=roles)


# --- primitive recursion ---------------------------------------------------


def compile_primrec(h_team: Team, g_team: Team, h_expr=None, g_expr=None, prefix: str = "") -> Team:
    """Team for f(x, 0) = h(x), f(x, y+1) = g(x, y, f(x, y))."""
    k = h_team.arity
    if g_team.arity != k + 2:
        raise SynthesisError(f"step team must take {k + 2} arguments, takes {g_team.arity}")
    _check_synchronized(h_team, "base")
    _check_synchronized(g_team, "step")

    holders = [f"{prefix}q{i}" for i in range(1, k + 2)]
    counter = f"{prefix}counter"
    conductor = f"{prefix}conductor"

    h_ids = frozenset(a.agent_id for a in h_team.agents)
    g_ids = frozenset(b.agent_id for b in g_team.agents)
    proj_h = Projection("h", {a: g_ids for a in h_ids})
    proj_g = Projection("g", {b: h_ids for b in g_ids})

    # (a, b, category) for every composite d(a, b)
    pairs = []
    for a in h_team.agents:
        for b in g_team.agents:
            j = g_team.group_of[b.agent_id]
            cat = "B" if j < k else ("C" if j == k else "D")
            pairs.append((a, b, cat))
    cid = {(a.agent_id, b.agent_id): composite_id(a.agent_id, b.agent_id) for a, b, _ in pairs}
    all_d = [cid[a.agent_id, b.agent_id] for a, b, _ in pairs]
    d_ids = [cid[a.agent_id, b.agent_id] for a, b, c in pairs if c == "D"]
    bc_ids = [cid[a.agent_id, b.agent_id] for a, b, c in pairs if c != "D"]

    at_result = Sees.all_in(d_ids, "endPhase")
    bc_home = Sees.all_in(bc_ids, "endPhase")
    everyone_begun = Sees.of(*((d, "begin") for d in all_d), (counter, None))

    def conductor_in(tag: str) -> Sees:
        return Sees.of((conductor, tag))

    def holder_waiting(i: int) -> Sees:
        return Sees.of((holders[i - 1], "wait"))

    sees_counter = Sees.of((counter, None))
    last_phase = Sees.of((counter, "lastPhase"))
    last_holder = holder_waiting(k + 1)
    start, coord, step, gather = (conductor_in(t) for t in ("start", "coord", "step", "gather"))
    end = conductor_in("endComputation")

    agents: list[Controller] = []
    roles: dict[str, str] = {}

    for i in range(1, k + 2):
        prog = [Transit("wait"), CondWait(conductor_in(f"finish_{i}")), GoToRoot()]
        if i == k + 1:
            prog.append(CondWait(gather))
        prog += [CondRight(at_result), CondWait(end), Stop()]
        agents.append(ProgramController(holders[i - 1], prog, kind="holder"))
        roles[holders[i - 1]] = f"argument holder q_{i}"

    agents.append(
        ProgramController(
            counter,
            [
                GoToRoot(),
                CondWait(start),
                IfSees(
                    last_holder,
                    then=(),
                    orelse=(
                        Push(),
                        RepeatUntil(
                            last_holder,
                            (Transit("count"), CondWait(conductor_in("increase")), Push()),
                            test_first=True,
                        ),
                    ),
                ),
                Transit("lastPhase"),
                CondWait(conductor_in(f"finish_{k + 1}")),
                GoToRoot(),
                CondWait(gather),
                CondRight(at_result),
                CondWait(end),
                Stop(),
            ],
            kind="counter",
        )
    )
    roles[counter] = "counter"

    agents.append(
        ProgramController(
            conductor,
            [
                GoToRoot(),
                CondWait(everyone_begun),
                Transit("start"),
                CondWait(bc_home),
                RepeatUntil(
                    last_phase,
                    (
                        Transit("coord"),
                        CondRight(at_result),
                        Transit("step"),
                        Transit("stepped"),
                        GoToRoot(),
                        CondRight(sees_counter),
                        IfSees(
                            last_phase,
                            then=(),
                            orelse=(Transit("increase"), GoToRoot(), CondWait(bc_home)),
                        ),
                    ),
                    test_first=True,
                ),
                Transit(f"finish_{k + 1}"),
                GoToRoot(),
                CondWait(bc_home),
                Transit("gather"),
                for_range(
                    1,
                    k,
                    lambda i: (
                        Transit(f"visit_{i}"),
                        CondRight(holder_waiting(i)),
                        Transit(f"finish_{i}"),
                        GoToRoot(),
                    ),
                ),
                Transit("finish"),
                CondRight(at_result),
                Transit("endComputation"),
                Stop(),
            ],
            kind="conductor",
        )
    )
    roles[conductor] = "conductor"

    comp_groups: list[list[str]] = [[] for _ in range(k)]
    for a, b, cat in pairs:
        me = cid[a.agent_id, b.agent_id]
        i = h_team.group_of[a.agent_id] + 1
        j = g_team.group_of[b.agent_id] + 1
        subs = {
            "h": Replay(a, b.agent_id, "h", proj_h),
            "g": Replay(b, a.agent_id, "g", proj_g),
        }
        phase0 = [GoToRoot(), Transit("begin"), CondWait(start), CondRight(holder_waiting(i)), Enter("h")]
        if cat == "D":
            wake = AnyOf((step, end))
            prog = phase0 + [
                Transit("endPhase"),
                CondWait(wake),
                RepeatUntil(end, (Enter("g"), Transit("endPhase"), CondWait(wake)), test_first=True),
                Stop(),
            ]
        else:
            seat = (CondRight(holder_waiting(j)),) if cat == "B" else (CondRight(sees_counter), MoveLeftOnce())
            wake = AnyOf((coord, gather))
            prog = phase0 + [
                GoToRoot(),
                Transit("endPhase"),
                CondWait(wake),
                RepeatUntil(
                    gather,
                    seat + (Enter("g"), GoToRoot(), Transit("endPhase"), CondWait(wake)),
                    test_first=True,
                ),
                CondRight(at_result),
                CondWait(end),
                Stop(),
            ]
        agents.append(ProgramController(me, prog, subs=subs, kind=f"composite-{cat}"))
        roles[me] = f"d({a.agent_id},{b.agent_id}) in {cat}"
        comp_groups[i - 1].append(me)

    groups = [[holders[i]] + comp_groups[i] for i in range(k)]
    groups.append([holders[k], counter, conductor])
    syncs = [g[1] for g in groups[:k]] + [conductor]
    return Team(agents, groups, syncs, roles=roles)


# --- whole expressions -----------------------------------------------------


@dataclass
class SynthPlan:
    expr: prf.PrfExpr
    team: Team
    provenance: dict[str, str] = field(default_factory=dict)

    def listing(self, agent_id: str) -> list[str]:
        return self.team[agent_id].listing()

    def to_dict(self, cap: int = ENUMERATION_CAP, programs: bool = True) -> dict:
        d = self.team.to_dict(cap)
        d["expr"] = prf.to_text(self.expr)
        d["provenance"] = dict(sorted(self.provenance.items()))
        if programs:
            d["programs"] = {a.agent_id: a.listing() for a in self.team.agents}
        return d


def _build(expr: prf.PrfExpr, path: str) -> Team:
    if isinstance(expr, prf.Zero):
        return compile_zero(path)
    if isinstance(expr, prf.Succ):
        return compile_succ(path)
    if isinstance(expr, prf.Proj):
        return compile_proj(expr.k, expr.i, path)
    if isinstance(expr, prf.Compose):
        g = _build(expr.g, path + "g.")
        hs = [_build(h, f"{path}h{j}.") for j, h in enumerate(expr.hs, start=1)]
        return compile_compose(g, hs, expr.g, expr.hs)
    if isinstance(expr, prf.PrimRec):
        h = _build(expr.h, path + "h.")
        g = _build(expr.g, path + "g.")
        return compile_primrec(h, g, expr.h, expr.g, prefix=path)
    raise TypeError(f"not an expression: {expr!r}")


def compile(expr: prf.PrfExpr, cap: int = ENUMERATION_CAP, check: bool = True) -> SynthPlan:
    """Compile ``expr`` into a team; with ``check`` the slices are verified disjoint."""
    team = _build(expr, "")
    if check and not slices_disjoint(team, cap):
        raise TeamError("compiled team has overlapping state slices")
    return SynthPlan(expr, team, dict(team.roles))
