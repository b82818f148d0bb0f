"""Report figures rendered to files next to the delimited output.

All plots go through the Agg backend with a pinned style, so runs on
headless machines produce the same figures without a display server.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "svg.hashsalt": "motlab",
}


def _finish(fig, out_path: str | Path) -> Path:
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out


def stability_figure(rows: Sequence[dict[str, Any]], out_path: str | Path) -> Path:
    """Price escape against perturbation radius, one line per seed."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        seeds = sorted({r["seed"] for r in rows})
        for seed in seeds:
            pts = sorted(((r["radius"], r["eps"]) for r in rows
                          if r["seed"] == seed), reverse=True)
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", label=f"seed {seed}")
        ax.set_xlabel("perturbation radius")
        ax.set_ylabel("price escape")
        ax.set_title("stability of the price interval")
        ax.legend(loc="best")
        return _finish(fig, out_path)


def decay_figure(rows: Sequence[dict[str, Any]], out_path: str | Path) -> Path:
    """Lattice value gap against the resolution level, log scale."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        gaps = [max(abs(r["gap"]), 1e-16) for r in rows]
        ax.semilogy(ns, gaps, marker="s")
        ax.set_xlabel("resolution level n")
        ax.set_ylabel("|lattice value - reference|")
        ax.set_title("discretization gap decay")
        return _finish(fig, out_path)


def penalty_figure(rows: Sequence[dict[str, Any]], out_path: str | Path) -> Path:
    """Penalized value and expected drift against the coefficient."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        cs = [r["n"] for r in rows]
        ax.plot(cs, [r["value"] for r in rows], marker="o", label="value")
        ax.plot(cs, [r["expected_drift"] for r in rows], marker="^",
                label="expected drift")
        ax.set_xlabel("penalty coefficient")
        ax.set_title("drift-penalized relaxation")
        ax.legend(loc="best")
        return _finish(fig, out_path)


def plan_figure(plan: Any, out_path: str | Path, coordinate: int = 0) -> Path:
    """Support paths of a plan, line width scaled by weight."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        wmax = max(float(w) for w in plan.weights)
        for p, w in zip(plan.paths, plan.weights):
            ts, vs = [0.0], [float(p.x0[coordinate])]
            for t, v in zip(p.jump_times, p.jump_values):
                ts.extend([float(t), float(t)])
                vs.extend([vs[-1], float(v[coordinate])])
            ts.append(float(p.horizon))
            vs.append(vs[-1])
            ax.plot(ts, vs, lw=0.6 + 2.4 * float(w) / wmax, alpha=0.8)
        ax.set_xlabel("time")
        ax.set_ylabel(f"coordinate {coordinate}")
        ax.set_title("optimal plan support")
        return _finish(fig, out_path)
