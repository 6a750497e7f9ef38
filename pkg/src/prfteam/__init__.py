"""Compile primitive recursive functions into teams of finite agents on the half-line."""

from .halfline import RunResult, Status, run
from .machine import Move, Team, slices_disjoint
from .prf import Compose, PrimRec, Proj, Succ, Zero, eval_oracle, parse_prf, parse_program, to_text
from .synthesis import SynthPlan, compile

__all__ = [
    "Compose", "Move", "PrimRec", "Proj", "RunResult", "Status", "Succ", "SynthPlan", "Team", "Zero",
    "compile", "eval_oracle", "parse_prf", "parse_program", "run", "slices_disjoint", "to_text",
]
