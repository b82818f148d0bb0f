"""Drift-penalized relaxation of the martingale constraint on finite trees.

Instead of forcing every conditional increment mean to zero, the penalized
problem at level ``n`` maximizes expected payoff minus ``n`` times the
expected absolute conditional drift (l1 norm across coordinates).  On a
finite tree this is again an LP: the drift of node ``v`` in coordinate
``c`` is a linear expression in the leaf probabilities, and its absolute
value enters through one auxiliary variable squeezed between the
expression and its negation.

Values are nonincreasing in ``n``, never drop below the
martingale-constrained optimum, and reach it at a finite level (the exact
penalty property of LPs), which :func:`dn_convergence_experiment` makes
observable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from . import lp as lpmod
from .pathspace import StepPath, step_path
from .transport import TransportError, TransportPlan, tree_superhedge_dp

Number = Any


@dataclass(frozen=True)
class SimpleTree:
    """Hand-built rooted tree satisfying the tree protocol used here and by
    the envelope DP: ``values`` per node, ``parent`` with -1 at the root."""

    values: tuple[tuple[Number, ...], ...]
    parent: tuple[int, ...]
    times: tuple[Number, ...] | None = None

    def __post_init__(self) -> None:
        if self.parent[0] != -1:
            raise TransportError("node 0 must be the root")
        for i, p in enumerate(self.parent[1:], start=1):
            if not 0 <= p < i:
                raise TransportError("parents must precede their children")

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def depth(self) -> list[int]:
        out = [0] * self.n_nodes
        for i, p in enumerate(self.parent[1:], start=1):
            out[i] = out[p] + 1
        return out

    @property
    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, p in enumerate(self.parent[1:], start=1):
            out[p].append(i)
        return out

    @property
    def leaves(self) -> list[int]:
        kids = self.children
        return [i for i in range(self.n_nodes) if not kids[i]]

    def path_to_leaf(self, leaf: int) -> list[int]:
        seq = [leaf]
        while self.parent[seq[-1]] >= 0:
            seq.append(self.parent[seq[-1]])
        return list(reversed(seq))

    def leaf_step_path(self, leaf: int) -> StepPath:
        """Step path along the leaf's node values; times default to an
        equispaced grid on [0, 1] by depth."""
        ids = self.path_to_leaf(leaf)
        depths = self.depth
        last = max(depths)
        ts = self.times if self.times is not None else \
            tuple(Fraction(k, last) for k in range(last + 1))
        x0 = self.values[ids[0]]
        jumps = [(ts[depths[i]], self.values[i]) for i in ids[1:]]
        return step_path(x0, jumps, horizon=ts[-1], dim=len(x0))


def _drift_rows(tree: Any) -> dict[tuple[int, int], dict[int, Number]]:
    """Leaf-probability coefficients of each internal node's increment mean
    (one row per node and coordinate, skipping identically zero rows)."""
    leaves = tree.leaves
    dim = len(tree.values[0])
    rows: dict[tuple[int, int], dict[int, Number]] = {}
    for k, leaf in enumerate(leaves):
        ids = tree.path_to_leaf(leaf)
        for a, b in zip(ids, ids[1:]):
            for c in range(dim):
                diff = tree.values[b][c] - tree.values[a][c]
                if diff != 0:
                    rows.setdefault((a, c), {})[k] = diff
    return rows


def plan_drift(tree: Any, leaf_probs: Sequence[Number]) -> Number:
    """Expected absolute conditional drift of a leaf law, computed directly:
    sum over internal nodes of |sum of mass-weighted child increments|."""
    total = 0
    for coeffs in _drift_rows(tree).values():
        total = total + abs(sum(leaf_probs[k] * d for k, d in coeffs.items()))
    return total


@dataclass(frozen=True)
class PenalizedSolution:
    """Optimum of the level-``n`` penalized problem: the leaf law, its
    per-node drift magnitudes, and the total expected drift."""

    status: str
    n: Number
    value: Number | None
    leaf_probs: list[Number] | None
    node_drifts: dict[int, Number] | None
    expected_drift: Number | None
    plan: TransportPlan | None
    lp_solution: lpmod.LpSolution


def leaf_payoff_values(tree: Any, zeta: Any) -> list[Number]:
    """Evaluate a payoff (or pass through a per-leaf value sequence)."""
    leaves = tree.leaves
    if callable(zeta):
        return [zeta(tree.leaf_step_path(leaf)) for leaf in leaves]
    vals = list(zeta)
    if len(vals) != len(leaves):
        raise TransportError("one payoff value per leaf required")
    return vals


def node_drift_magnitudes(tree: Any,
                          leaf_probs: Sequence[Number]) -> dict[int, Number]:
    """l1 magnitude of the mass-weighted conditional increment per node."""
    out: dict[int, Number] = {}
    for (a, _c), coeffs in _drift_rows(tree).items():
        mag = abs(sum(leaf_probs[k] * d for k, d in coeffs.items()))
        out[a] = out.get(a, 0) + mag
    return out


def solve_penalized(tree: Any, zeta: Any, n: Number,
                    arithmetic: str = "float") -> PenalizedSolution:
    """Maximize E[payoff] - n * E[|conditional drift|] over all leaf laws
    of the tree (mass one, no martingale rows)."""
    leaves = tree.leaves
    leaf_values = leaf_payoff_values(tree, zeta)
    coefficient = n
    if coefficient < 0:
        raise TransportError("penalty level must be nonnegative")

    prog = lpmod.LinearProgram("max")
    pvars = [prog.add_var(f"p{k}") for k in range(len(leaves))]
    objective: dict[int, Number] = {pvars[k]: leaf_values[k]
                                    for k in range(len(leaves))}
    prog.add_constraint({v: 1 for v in pvars}, "==", 1, name="mass")
    for (a, c), coeffs in sorted(_drift_rows(tree).items()):
        z = prog.add_var(f"z{a}_{c}")
        objective[z] = -coefficient
        row = {pvars[k]: d for k, d in coeffs.items()}
        prog.add_constraint({**row, z: -1}, "<=", 0, name=f"d+{a}")
        prog.add_constraint({**{v: -d for v, d in row.items()}, z: -1},
                            "<=", 0, name=f"d-{a}")
    prog.set_objective(objective)
    sol = lpmod.solve(prog, arithmetic)
    if sol.status != "optimal":
        return PenalizedSolution(sol.status, coefficient, None, None, None,
                                 None, None, sol)

    probs = [sol.x[v] for v in pvars]
    drift = plan_drift(tree, probs)
    keep = [k for k in range(len(leaves)) if float(probs[k]) > 1e-12]
    plan = None
    if keep and hasattr(tree, "leaf_step_path"):
        if hasattr(tree, "params"):
            times = tuple(float(t) for t in tree.params.times)
        elif getattr(tree, "times", None) is not None:
            times = tuple(tree.times)
        else:
            last = max(tree.depth)
            times = tuple(Fraction(k, last) for k in range(last + 1))
        total = sum(probs[k] for k in keep)
        plan = TransportPlan(times,
                             tuple(tree.leaf_step_path(leaves[k]) for k in keep),
                             tuple(probs[k] / total for k in keep))
    return PenalizedSolution("optimal", coefficient, sol.objective, probs,
                             node_drift_magnitudes(tree, probs), drift, plan,
                             sol)


@dataclass(frozen=True)
class CompensatorReport:
    node_increments: dict[int, tuple[Number, ...]]
    leaf_compensators: dict[int, tuple[Number, ...]]
    mean_abs_terminal: Number
    worst_martingale_residual: Number


def compensator(tree: Any, leaf_probs: Sequence[Number]) -> CompensatorReport:
    """Predictable compensator of the tree process under a leaf law.

    Each internal node with positive mass gets the increment
    ``a(v) = x_v - E[x_next | prefix]``; summing these along root-to-leaf
    paths gives the compensator ``A`` at the horizon, and ``M = X + A`` has
    conditional increments of mean zero (the worst residual is reported,
    and is zero up to arithmetic for every law).  Zero-mass prefixes are
    skipped and excluded from the terminal expectation.
    """
    leaves = tree.leaves
    dim = len(tree.values[0])
    node_mass: dict[int, Number] = {}
    for k, leaf in enumerate(leaves):
        for v in tree.path_to_leaf(leaf):
            node_mass[v] = node_mass.get(v, 0) + leaf_probs[k]

    child_on_path: dict[int, dict[int, Number]] = {}
    for k, leaf in enumerate(leaves):
        ids = tree.path_to_leaf(leaf)
        for a, b in zip(ids, ids[1:]):
            child_on_path.setdefault(a, {})
            child_on_path[a][b] = child_on_path[a].get(b, 0) + leaf_probs[k]

    node_inc: dict[int, tuple[Number, ...]] = {}
    worst = 0
    for v, kids in child_on_path.items():
        mv = node_mass.get(v, 0)
        if float(mv) <= 0:
            continue
        a_v = []
        for c in range(dim):
            num = sum(w * (tree.values[b][c] - tree.values[v][c])
                      for b, w in kids.items())
            a_v.append(-num / mv)
        node_inc[v] = tuple(a_v)
        # M = X + A must have zero conditional increment mean at v
        for c in range(dim):
            res = sum(w * (tree.values[b][c] - tree.values[v][c] + a_v[c])
                      for b, w in kids.items()) / mv
            worst = max(worst, abs(res))

    leaf_comp: dict[int, tuple[Number, ...]] = {}
    mean_abs = 0
    for k, leaf in enumerate(leaves):
        acc = [0] * dim
        ids = tree.path_to_leaf(leaf)
        for v in ids[:-1]:
            if v in node_inc:
                for c in range(dim):
                    acc[c] = acc[c] + node_inc[v][c]
        leaf_comp[leaf] = tuple(acc)
        mean_abs = mean_abs + leaf_probs[k] * sum(abs(x) for x in acc)
    return CompensatorReport(node_inc, leaf_comp, mean_abs, worst)


def dn_convergence_experiment(tree: Any, zeta: Any,
                              n_list: Sequence[Number],
                              arithmetic: str = "float") -> dict[str, Any]:
    """Penalized values over a ladder of levels against the constrained
    optimum V0 on the same tree; rows are ready for delimited output."""
    leaf_values = leaf_payoff_values(tree, zeta)
    base = tree_superhedge_dp(tree, leaf_values, arithmetic)["value"]
    rows = []
    n_star = None
    for lvl in n_list:
        res = solve_penalized(tree, leaf_values, lvl, arithmetic)
        if res.status != "optimal":
            raise TransportError(f"penalized solve failed at {lvl}: {res.status}")
        gap = float(res.value) - float(base)
        if n_star is None and abs(gap) <= 1e-8:
            n_star = float(lvl)
        rows.append({"n": float(lvl), "value": float(res.value),
                     "expected_drift": float(res.expected_drift),
                     "gap_to_V0": gap})
    return {"v0": base, "rows": rows, "n_star": n_star}
