"""Figures: space-time diagrams of a run and round counts over a corpus."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .halfline import Configuration  # noqa: E402
from .machine import Team  # noqa: E402


def spacetime(team: Team, trace: Sequence[Configuration], path: str | Path, title: str = "") -> Path:
    """Node of every agent against round; coloured by group, or by agent for one-group teams."""
    path = Path(path)
    rounds = [c.round for c in trace]
    per_agent = team.arity == 1
    cmap = plt.get_cmap("tab20" if per_agent else "tab10")
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for j, aid in enumerate(trace[0].agent_ids):
        colour = cmap(j % 20) if per_agent else cmap(team.group_of[aid] % 10)
        ax.plot(rounds, [c.positions[j] for c in trace], color=colour, lw=0.8, alpha=0.6, drawstyle="steps-post")
    if not per_agent:
        for g in range(team.arity):
            ax.plot([], [], color=cmap(g % 10), label=f"group {g + 1}")
        ax.legend(loc="upper right", fontsize="small")
    ax.set_xlabel("round")
    ax.set_ylabel("node")
    ax.set_ylim(bottom=-0.5)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def corpus_rounds(report, path: str | Path) -> Path:
    """Rounds to completion for each grid point, one column per corpus entry."""
    path = Path(path)
    groups = report.by_entry()
    fig, ax = plt.subplots(figsize=(10, 4.5))
    names = list(groups)
    for x, name in enumerate(names):
        pts = groups[name]
        ys = [max(p.rounds, 1) for p in pts]
        colors = ["tab:blue" if p.passed else "tab:red" for p in pts]
        ax.scatter([x] * len(ys), ys, s=8, c=colors, alpha=0.6)
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=70, fontsize="small")
    ax.set_ylabel("rounds to completion")
    ax.set_title(f"{report.passed}/{len(report.points)} points pass")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
