"""Finite-marginal martingale transport built on the simplex core.

The primal problem maximizes (or minimizes) the expected payoff over
martingale laws of grid-indexed step paths whose time-``t_i`` marginals are
pinned; its LP dual is read back as a static-plus-dynamic hedge: one static
position per quoted marginal atom plus a self-financing trading strategy
whose holding may depend on the whole observed prefix.  The same machinery
runs on enumerated lattice trees, either with exact (projected) marginal
rows or with marginal penalties priced through transport couplings.

Everything here keeps the arithmetic of its inputs: float models solve in
floating point, Fraction models solve exactly.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import lp as lpmod
from .lattice import LatticeTree, grid_project
from .measures import (DiscreteMeasure, Peacock, coupling_lp, measure,
                       perturb_peacock, w1_distance)
from .pathspace import (ShiftVector, StepPath, apply_time_change, forward_shift,
                    step_path, vec_norm)

Number = Any

PRICE_TOL = 1e-8
HEDGE_TOL = 1e-7


class TransportError(ValueError):
    pass


def _ell1(a: Sequence[Number], b: Sequence[Number]) -> Number:
    return sum(abs(x - y) for x, y in zip(a, b))


def _pair_dist(a: Sequence[Number], b: Sequence[Number]) -> Number:
    if len(a) == 1:
        return abs(a[0] - b[0])
    return vec_norm([x - y for x, y in zip(a, b)])


# ---------- plans ----------


@dataclass(frozen=True)
class TransportPlan:
    """Finitely supported law on step paths with its marginal grid."""

    times: tuple[Number, ...]
    paths: tuple[StepPath, ...]
    weights: tuple[Number, ...]

    def __post_init__(self) -> None:
        if len(self.paths) != len(self.weights) or not self.paths:
            raise TransportError("paths and weights must be non-empty, equal length")
        if any(float(w) <= 0 for w in self.weights):
            raise TransportError("plan weights must be positive")
        if abs(float(sum(self.weights)) - 1.0) > 1e-9:
            raise TransportError("plan weights must sum to 1")

    @property
    def dim(self) -> int:
        return self.paths[0].dim

    def marginal_law(self, i: int) -> DiscreteMeasure:
        t = self.times[i]
        return measure([p.value(t) for p in self.paths], self.weights,
                       dim=self.dim)

    def expectation(self, f: Callable[[StepPath], Number]) -> Number:
        return sum(w * f(p) for p, w in zip(self.paths, self.weights))

    def martingale_defect(self, eval_times: Sequence[Number] | None = None) -> Number:
        """Total conditional drift sum_k E |E[X_{u_{k+1}} - X_{u_k} | prefix]|
        over the given skeleton (the marginal grid by default), conditioning
        on the path observed so far."""
        us = list(self.times) if eval_times is None else sorted(set(eval_times))
        total = 0
        for k in range(len(us) - 1):
            groups: dict[tuple, list[int]] = {}
            for j, p in enumerate(self.paths):
                key = tuple(tuple(p.value(u)) for u in us[: k + 1])
                groups.setdefault(key, []).append(j)
            for members in groups.values():
                for c in range(self.dim):
                    drift = sum(self.weights[j]
                                * (self.paths[j].value(us[k + 1])[c]
                                   - self.paths[j].value(us[k])[c])
                                for j in members)
                    total = total + abs(drift)
        return total


# ---------- strategies and pathwise integrals ----------


@dataclass(frozen=True)
class StepStrategy:
    """Left-continuous simple integrand: ``holdings[j]`` is held on the
    interval (knots[j], knots[j+1]], the last one up to the horizon."""

    dim: int
    knots: tuple[Number, ...]
    holdings: tuple[tuple[Number, ...], ...]

    def __post_init__(self) -> None:
        if not self.knots or self.knots[0] != 0:
            raise TransportError("strategy knots must start at 0")
        for a, b in zip(self.knots, self.knots[1:]):
            if not b > a:
                raise TransportError("strategy knots must increase")
        if len(self.holdings) != len(self.knots):
            raise TransportError("one holding vector per knot required")
        for h in self.holdings:
            if len(h) != self.dim:
                raise TransportError("holding dimension mismatch")


def stochastic_integral(strategy: StepStrategy, path: StepPath,
                        form: str = "riemann") -> Number:
    """Gain of trading ``strategy`` against ``path`` up to the horizon.

    ``form="riemann"`` sums holding times increment over the strategy's
    intervals; ``form="parts"`` uses summation by parts.  The two are the
    same telescoping sum rearranged, so they agree exactly, including for
    Fraction-valued inputs.
    """
    if strategy.dim != path.dim:
        raise TransportError("strategy and path dimension mismatch")
    ks = list(strategy.knots) + [path.horizon]
    if ks[-2] >= path.horizon:
        raise TransportError("strategy knots must stay inside the horizon")
    hs = strategy.holdings
    if form == "riemann":
        total = 0
        for j, h in enumerate(hs):
            a, b = path.value(ks[j]), path.value(ks[j + 1])
            for c in range(path.dim):
                total = total + h[c] * (b[c] - a[c])
        return total
    if form == "parts":
        total = 0
        x_end, x_start = path.value(path.horizon), path.value(0)
        for c in range(path.dim):
            total = total + hs[-1][c] * x_end[c] - hs[0][c] * x_start[c]
        for j in range(1, len(hs)):
            x = path.value(ks[j])
            for c in range(path.dim):
                total = total - (hs[j][c] - hs[j - 1][c]) * x[c]
        return total
    raise TransportError(f"unknown integral form {form!r}")


# ---------- dual certificates ----------


@dataclass(frozen=True)
class DualCertificate:
    """Static-plus-dynamic hedge read off the LP dual.

    ``lambdas[i]`` maps a quoted atom of the time-``t_i`` marginal to its
    static position; ``prefix_strategy`` maps the observed value sequence
    ``(x_0, .., x_i)`` to the holding over (t_i, t_{i+1}].  Unquoted atoms
    and unseen prefixes extend by zero.  ``side="super"`` means the hedge
    dominates the payoff pathwise; ``side="sub"`` means it is dominated.
    """

    side: str
    times: tuple[Number, ...]
    dim: int
    constant: Number
    lambdas: tuple[dict[tuple, Number], ...]
    prefix_strategy: dict[tuple, tuple[Number, ...]]

    def static_value(self, path: StepPath) -> Number:
        total = self.constant
        for i, t in enumerate(self.times):
            total = total + self.lambdas[i].get(tuple(path.value(t)), 0)
        return total

    def strategy_for(self, path: StepPath) -> StepStrategy:
        zero = tuple(0 for _ in range(self.dim))
        holdings = []
        for i in range(len(self.times) - 1):
            prefix = tuple(tuple(path.value(t)) for t in self.times[: i + 1])
            holdings.append(self.prefix_strategy.get(prefix, zero))
        return StepStrategy(self.dim, tuple(self.times[:-1]), tuple(holdings))

    def evaluate(self, path: StepPath) -> Number:
        return self.static_value(path) + stochastic_integral(
            self.strategy_for(path), path)


@dataclass(frozen=True)
class HedgeReport:
    ok: bool
    worst: float
    witness: int | None
    side: str


def verify_superhedge(certificate: Any, payoff: Callable[[StepPath], Number],
                      paths: Sequence[StepPath],
                      tol: float = HEDGE_TOL) -> HedgeReport:
    """Check the pathwise inequality of a certificate on the given paths.

    Residuals are hedge minus payoff for a super certificate and payoff
    minus hedge for a sub one, so a valid certificate keeps every residual
    above ``-tol``.  Works for any object with ``side`` and ``evaluate``.
    """
    side = certificate.side
    worst, witness = math.inf, None
    for j, p in enumerate(paths):
        r = certificate.evaluate(p) - payoff(p)
        if side == "sub":
            r = -r
        if float(r) < worst:
            worst, witness = float(r), j
    return HedgeReport(worst >= -tol, worst, witness, side)


# ---------- primal over pinned marginals ----------


@dataclass(frozen=True)
class MarginalResult:
    status: str
    sense: str
    value: Number | None
    plan: TransportPlan | None
    certificate: DualCertificate | None
    lp_solution: lpmod.LpSolution
    constrained: tuple[int, ...]


def solve_primal_marginal(peacock: Peacock, payoff: Callable[[StepPath], Number],
                          sense: str = "max",
                          constrained: Sequence[int] | None = None,
                          arithmetic: str = "float") -> MarginalResult:
    """Optimal transport value over martingale laws of grid-jump paths.

    One variable per path through the product of the marginal supports, the
    martingale constraint conditioned on every full prefix, and marginal
    rows for the time indices in ``constrained`` (all of them by default;
    passing a subset prices the relaxation that forgets the other quotes).
    """
    times = peacock.times
    m = len(times)
    constrained = tuple(range(m)) if constrained is None else tuple(sorted(constrained))
    supports = [law.points for law in peacock.laws]
    combos = list(itertools.product(*supports))

    prog = lpmod.LinearProgram("max" if sense == "max" else "min")
    pvars = [prog.add_var(f"p{j}") for j in range(len(combos))]
    spaths = [step_path(vals[0], [(times[i], vals[i]) for i in range(1, m)],
                        horizon=times[-1], dim=peacock.dim)
              for vals in combos]
    prog.set_objective({pvars[j]: payoff(spaths[j]) for j in range(len(combos))})

    meta: list[tuple] = []
    prog.add_constraint({v: 1 for v in pvars}, "==", 1, name="mass")
    meta.append(("mass",))
    for i in constrained:
        law = peacock.laws[i]
        for atom, w in zip(law.points, law.weights):
            coeffs = {pvars[j]: 1 for j, vals in enumerate(combos)
                      if vals[i] == atom}
            prog.add_constraint(coeffs, "==", w, name=f"marg_{i}")
            meta.append(("marg", i, atom))
    for i in range(m - 1):
        for prefix in itertools.product(*supports[: i + 1]):
            members = [j for j, vals in enumerate(combos)
                       if vals[: i + 1] == prefix]
            for c in range(peacock.dim):
                coeffs = {}
                for j in members:
                    diff = combos[j][i + 1][c] - combos[j][i][c]
                    if diff != 0:
                        coeffs[pvars[j]] = diff
                if coeffs:
                    prog.add_constraint(coeffs, "==", 0, name=f"mart_{i}")
                    meta.append(("mart", i, prefix, c))

    sol = lpmod.solve(prog, arithmetic)
    if sol.status != "optimal":
        return MarginalResult(sol.status, sense, None, None, None, sol, constrained)

    keep = [j for j in range(len(combos)) if float(sol.x[pvars[j]]) > 1e-12]
    plan = TransportPlan(tuple(times), tuple(spaths[j] for j in keep),
                         tuple(sol.x[pvars[j]] for j in keep))
    lambdas: list[dict[tuple, Number]] = [dict() for _ in range(m)]
    strategy: dict[tuple, list[Number]] = {}
    constant = 0
    dim = peacock.dim
    for row, y in zip(meta, sol.duals):
        if row[0] == "mass":
            constant = y
        elif row[0] == "marg":
            lambdas[row[1]][row[2]] = y
        else:
            _, _i, prefix, c = row
            strategy.setdefault(prefix, [0] * dim)[c] = y
    cert = DualCertificate("super" if sense == "max" else "sub", tuple(times),
                           dim, constant, tuple(lambdas),
                           {k: tuple(v) for k, v in strategy.items()})
    return MarginalResult("optimal", sense, sol.objective, plan, cert, sol,
                          constrained)


def extract_dual_d1(result: MarginalResult) -> DualCertificate:
    """Dual certificate read off an optimal marginal solve.

    The constant is the mass-row multiplier, the static tables are the
    marginal-row multipliers on each constrained support, and the prefix
    strategy collects the martingale-row multipliers.  Its static cost
    equals the primal value and its residual is nonnegative (super side)
    on every product path, both up to solver tolerance.
    """
    if result.status != "optimal" or result.certificate is None:
        raise TransportError(
            f"no certificate on a {result.status!r} solve")
    return result.certificate


@dataclass(frozen=True)
class PriceInterval:
    lower: Number
    upper: Number
    lower_result: MarginalResult
    upper_result: MarginalResult


def price_interval(peacock: Peacock, payoff: Callable[[StepPath], Number],
                   arithmetic: str = "float",
                   constrained: Sequence[int] | None = None) -> PriceInterval:
    up = solve_primal_marginal(peacock, payoff, "max", constrained, arithmetic)
    lo = solve_primal_marginal(peacock, payoff, "min", constrained, arithmetic)
    if up.status != "optimal" or lo.status != "optimal":
        raise TransportError(
            f"pricing failed: upper {up.status}, lower {lo.status}")
    return PriceInterval(lo.value, up.value, lo, up)


# ---------- tree envelope ----------


def tree_superhedge_dp(tree: Any, zeta: Any,
                       arithmetic: str = "float") -> dict[str, Any]:
    """Backward induction for the unconstrained martingale optimum on a tree.

    At each internal node the value is the concave envelope of the child
    values at the node's own point, computed by a small barycenter LP; at a
    node with a single same-valued child it is just passed through.  A node
    whose point lies outside the convex hull of its surviving children is
    pruned (no martingale measure can charge it); pruning the root is an
    error.  The root value equals the big-LP optimum over leaf laws (tested
    against it).  ``zeta`` is a payoff applied to leaf paths or a sequence
    with one value per leaf.
    """
    leaves = tree.leaves
    if callable(zeta):
        leaf_values = [zeta(tree.leaf_step_path(leaf)) for leaf in leaves]
    else:
        leaf_values = list(zeta)
    if len(leaf_values) != len(leaves):
        raise TransportError("one payoff value per leaf required")
    vals: dict[int, Number | None] = {l: leaf_values[k]
                                      for k, l in enumerate(leaves)}
    order = sorted(range(tree.n_nodes), key=lambda i: tree.depth[i], reverse=True)
    for v in order:
        kids = [c for c in tree.children[v] if vals.get(c) is not None]
        if not tree.children[v]:
            continue
        if not kids:
            vals[v] = None
            continue
        if len(kids) == 1 and tree.values[kids[0]] == tree.values[v]:
            vals[v] = vals[kids[0]]
            continue
        prog = lpmod.LinearProgram("max")
        qs = [prog.add_var(f"q{k}") for k in range(len(kids))]
        prog.set_objective({qs[k]: vals[c] for k, c in enumerate(kids)})
        prog.add_constraint({q: 1 for q in qs}, "==", 1, name="mass")
        xv = tree.values[v]
        for c in range(len(xv)):
            coeffs = {}
            for k, ch in enumerate(kids):
                diff = tree.values[ch][c] - xv[c]
                if diff != 0:
                    coeffs[qs[k]] = diff
            if coeffs:
                prog.add_constraint(coeffs, "==", 0, name=f"bary{c}")
        sol = lpmod.solve(prog, arithmetic)
        vals[v] = sol.objective if sol.status == "optimal" else None
    if vals[0] is None:
        raise TransportError("no martingale measure on tree")
    return {"value": vals[0], "node_values": vals}


tree_superhedge_value = tree_superhedge_dp


# ---------- primal on lattice trees ----------


@dataclass(frozen=True)
class LatticeResult:
    status: str
    value: Number | None
    plan: TransportPlan | None
    lp_solution: lpmod.LpSolution
    diagnosis: dict[str, Any] | None


def project_law(law: DiscreteMeasure, level: int,
                cap: Number | None = None) -> DiscreteMeasure:
    """Push a law onto the level-``level`` value grid (atoms merge)."""
    return measure([grid_project(p, level, cap) for p in law.points],
                   law.weights, dim=law.dim)


def _lattice_rows(tree: LatticeTree, prog: lpmod.LinearProgram,
                  pvars: list[int]) -> None:
    """Mass row and full-prefix martingale rows for leaf probabilities."""
    prog.add_constraint({v: 1 for v in pvars}, "==", 1, name="mass")
    leaves = tree.leaves
    rows: dict[tuple[int, int], dict[int, Number]] = {}
    for k, leaf in enumerate(leaves):
        ids = tree.path_to_leaf(leaf)
        for a, b in zip(ids, ids[1:]):
            for c in range(tree.params.dim):
                diff = tree.values[b][c] - tree.values[a][c]
                if diff != 0:
                    rows.setdefault((a, c), {})[pvars[k]] = diff
    for (a, c), coeffs in sorted(rows.items()):
        prog.add_constraint(coeffs, "==", 0, name=f"node{a}_c{c}")


def solve_primal_lattice(tree: LatticeTree, leaf_values: Sequence[Number],
                         laws: Peacock | None = None,
                         penalty: Number | None = None,
                         sense: str = "max",
                         arithmetic: str = "float") -> LatticeResult:
    """Martingale optimum over leaf laws of an enumerated tree.

    Without ``laws`` this is the unconstrained problem (the envelope DP's
    big-LP twin).  With ``laws`` and no ``penalty`` the marginals at each
    grid time are pinned to the law projected onto the coarse value grid;
    with ``penalty=c`` the marginals float and the objective pays ``c``
    times the transport cost between the realized time-``t_i`` law and the
    quoted one.  On infeasible pinned models the result carries a minimal
    marginal-relaxation diagnosis instead of a plan.
    """
    leaves = tree.leaves
    if len(leaf_values) != len(leaves):
        raise TransportError("one payoff value per leaf required")
    if laws is not None and tuple(laws.times) != tuple(
            float(t) for t in tree.params.times) \
            and tuple(laws.times) != tuple(tree.params.times):
        raise TransportError("law grid must match the tree's marginal grid")

    prog = lpmod.LinearProgram("max" if sense == "max" else "min")
    pvars = [prog.add_var(f"p{k}") for k in range(len(leaves))]
    objective = {pvars[k]: leaf_values[k] for k in range(len(leaves))}
    _lattice_rows(tree, prog, pvars)
    n_struct_rows = prog.n_constraints

    depth_value_members: list[dict[tuple, list[int]]] = []
    if laws is not None:
        for i, depth in enumerate(tree.marginal_depths):
            members: dict[tuple, list[int]] = {}
            for k, leaf in enumerate(leaves):
                ids = tree.path_to_leaf(leaf)
                members.setdefault(tree.values[ids[depth]], []).append(k)
            depth_value_members.append(members)

    marg_meta: list[tuple] = []
    if laws is not None and penalty is None:
        for i in range(1, len(tree.marginal_depths)):
            target = project_law(laws.laws[i], tree.params.n, tree.params.cap)
            members = depth_value_members[i]
            for atom, w in zip(target.points, target.weights):
                coeffs = {pvars[k]: 1 for k in members.get(atom, [])}
                prog.add_constraint(coeffs, "==", w, name=f"law{i}")
                marg_meta.append((i, atom, w))
    elif laws is not None:
        sign = -1 if sense == "max" else 1
        for i in range(1, len(tree.marginal_depths)):
            raw = laws.laws[i]
            members = depth_value_members[i]
            tree_atoms = sorted(members)
            gvars = {}
            for s in tree_atoms:
                for b, t_atom in enumerate(raw.points):
                    g = prog.add_var(f"g{i}")
                    gvars[s, b] = g
                    objective[g] = sign * penalty * _pair_dist(s, t_atom)
                coeffs = {gvars[s, b]: 1 for b in range(len(raw.points))}
                for k in members[s]:
                    coeffs[pvars[k]] = coeffs.get(pvars[k], 0) - 1
                prog.add_constraint(coeffs, "==", 0, name=f"split{i}")
            for b, w in enumerate(raw.weights):
                prog.add_constraint({gvars[s, b]: 1 for s in tree_atoms},
                                    "==", w, name=f"quote{i}")

    prog.set_objective(objective)
    sol = lpmod.solve(prog, arithmetic)
    if sol.status != "optimal":
        diagnosis = None
        if laws is not None and penalty is None:
            diagnosis = _diagnose_lattice(tree, leaf_values, marg_meta,
                                          depth_value_members, arithmetic)
        return LatticeResult(sol.status, None, None, sol, diagnosis)

    keep = [k for k in range(len(leaves)) if float(sol.x[pvars[k]]) > 1e-12]
    plan = TransportPlan(tuple(float(t) for t in tree.params.times),
                         tuple(tree.leaf_step_path(leaves[k]) for k in keep),
                         tuple(sol.x[pvars[k]] for k in keep)) if keep else None
    return LatticeResult("optimal", sol.objective, plan, sol, None)


def _diagnose_lattice(tree: LatticeTree, leaf_values: Sequence[Number],
                      marg_meta: list[tuple],
                      depth_value_members: list[dict[tuple, list[int]]],
                      arithmetic: str) -> dict[str, Any]:
    """Minimal L1 relaxation of the pinned marginal rows."""
    leaves = tree.leaves
    prog = lpmod.LinearProgram("min")
    pvars = [prog.add_var(f"p{k}") for k in range(len(leaves))]
    _lattice_rows(tree, prog, pvars)
    objective: dict[int, Number] = {}
    slack_meta: list[tuple[int, tuple, int, int]] = []
    for (i, atom, w) in marg_meta:
        up = prog.add_var("s_up")
        dn = prog.add_var("s_dn")
        objective[up] = 1
        objective[dn] = 1
        coeffs = {pvars[k]: 1 for k in depth_value_members[i].get(atom, [])}
        coeffs[up] = 1
        coeffs[dn] = -1
        prog.add_constraint(coeffs, "==", w, name=f"relax{i}")
        slack_meta.append((i, atom, up, dn))
    prog.set_objective(objective)
    sol = lpmod.solve(prog, arithmetic)
    if sol.status != "optimal":
        return {"relaxation": None, "detail": f"diagnosis LP {sol.status}"}
    shifts = []
    for (i, atom, up, dn) in slack_meta:
        move = sol.x[up] - sol.x[dn]
        if abs(float(move)) > 1e-9:
            shifts.append({"time_index": i, "atom": tuple(float(c) for c in atom),
                           "mass_shift": float(move)})
    return {"relaxation": float(sol.objective), "shifts": shifts}


# ---------- tail hedge ----------


@dataclass(frozen=True)
class ScalarTailHedge:
    """Pathwise superhedge of the event that one coordinate's running max
    reaches ``radius``.

    A static call payout ``(x_1 - strike)^+ / (radius - strike)`` at the
    horizon plus ``1 / (radius - strike)`` units of the coordinate sold
    forward at the first time its running max reaches ``radius``.  On a
    triggered path the two legs together pay at least 1; both are
    nonnegative on every nonnegative path, so the hedge dominates the
    indicator with only rational arithmetic.
    """

    radius: Number
    strike: Number
    coordinate: int = 0
    side: str = "super"

    def __post_init__(self) -> None:
        if not 0 < self.strike < self.radius:
            raise TransportError(
                f"strike {self.strike} must lie in (0, {self.radius})")

    def hit_value(self, path: StepPath) -> Number | None:
        """Coordinate value on the first segment at or above the radius."""
        for _s, _e, v in path.segments():
            if v[self.coordinate] >= self.radius:
                return v[self.coordinate]
        return None

    def cost(self, terminal_law: DiscreteMeasure) -> Number:
        return terminal_law.call_value(self.strike, self.coordinate) / (
            self.radius - self.strike)

    def indicator(self, path: StepPath) -> int:
        return 0 if self.hit_value(path) is None else 1

    def evaluate(self, path: StepPath) -> Number:
        unit = 1 / Fraction(self.radius - self.strike) if isinstance(
            self.radius, (int, Fraction)) else 1.0 / (self.radius - self.strike)
        x1 = path.value(path.horizon)[self.coordinate]
        leg = unit * max(x1 - self.strike, 0)
        hit = self.hit_value(path)
        if hit is not None:
            leg = leg + unit * (hit - x1)
        return leg

    def residual(self, path: StepPath) -> Number:
        return self.evaluate(path) - self.indicator(path)


def bhr_tail_hedge(radius: Number, strike: Number,
                   coordinate: int = 0) -> ScalarTailHedge:
    """Static-call-plus-forward superhedge of a one-coordinate tail event."""
    return ScalarTailHedge(radius, strike, coordinate)


@dataclass(frozen=True)
class TailHedge:
    """Pathwise superhedge of the event that the grid running Euclidean norm
    reaches ``radius``.

    One scalar leg per coordinate at trigger ``T = radius / dim`` and
    strike ``T / 2``: if the Euclidean norm reaches ``radius`` at a grid
    time, some coordinate reaches ``radius / sqrt(dim) >= T`` and that leg
    alone pays at least 1; every leg is nonnegative, so the sum dominates
    the indicator with only rational arithmetic.
    """

    radius: Number
    times: tuple[Number, ...]
    dim: int
    side: str = "super"

    @property
    def trigger(self) -> Number:
        return Fraction(self.radius, self.dim) if isinstance(
            self.radius, (int, Fraction)) else self.radius / self.dim

    @property
    def strike(self) -> Number:
        t = self.trigger
        return t / 2

    def _legs(self) -> list[ScalarTailHedge]:
        return [ScalarTailHedge(self.trigger, self.strike, c)
                for c in range(self.dim)]

    def cost(self, terminal_law: DiscreteMeasure) -> Number:
        return sum(leg.cost(terminal_law) for leg in self._legs())

    def indicator(self, path: StepPath) -> int:
        r_sq = self.radius * self.radius
        for t in self.times:
            v = path.value(t)
            if sum(c * c for c in v) >= r_sq:
                return 1
        return 0

    def evaluate(self, path: StepPath) -> Number:
        return sum(leg.evaluate(path) for leg in self._legs())

    def residual(self, path: StepPath) -> Number:
        return self.evaluate(path) - self.indicator(path)


# ---------- explicit feasible plans ----------


def construct_plan(peacock: Peacock, arithmetic: str = "float") -> TransportPlan:
    """Chain one-step martingale couplings into an explicit feasible plan.

    Each consecutive pair of laws is coupled by the transport LP (least
    movement cost among martingale couplings); composing the resulting
    kernels gives a martingale law with exactly the quoted marginals.
    """
    kernels = []
    for i in range(len(peacock.times) - 1):
        mu, nu = peacock.laws[i], peacock.laws[i + 1]
        sol = coupling_lp(mu, nu, minimize_cost=True, arithmetic=arithmetic)
        if sol.status != "optimal":
            raise TransportError(
                f"no martingale coupling between marginals {i} and {i + 1}")
        plan = sol._std["coupling"]
        kern: dict[tuple, list[tuple[tuple, Number]]] = {}
        mass = {p: w for p, w in zip(mu.points, mu.weights)}
        for (x, y), w in plan.items():
            kern.setdefault(x, []).append((y, w / mass[x]))
        kernels.append(kern)

    prefixes: list[tuple[list[tuple], Number]] = [
        ([p], w) for p, w in zip(peacock.laws[0].points, peacock.laws[0].weights)]
    for kern in kernels:
        nxt = []
        for vals, w in prefixes:
            for y, q in kern[vals[-1]]:
                nxt.append((vals + [y], w * q))
        prefixes = nxt

    times = peacock.times
    paths, weights = [], []
    for vals, w in prefixes:
        if float(w) <= 1e-15:
            continue
        paths.append(step_path(vals[0],
                               [(times[i], vals[i]) for i in range(1, len(vals))],
                               horizon=times[-1], dim=peacock.dim))
        weights.append(w)
    return TransportPlan(tuple(times), tuple(paths), tuple(weights))


# ---------- stability sweep ----------


def stability_sweep(peacock: Peacock, payoff: Callable[[StepPath], Number],
                    radii: Sequence[float], seeds: Sequence[int],
                    arithmetic: str = "float", threads: int = 1) -> dict[str, Any]:
    """Reprice under seeded marginal perturbations of shrinking radius.

    Rows (one per radius/seed pair, radius descending) carry both prices,
    the escape ``eps`` (largest price move against the unperturbed base),
    the realized marginal shift, and the perturbation status.  Radius 0
    reuses the base prices, so its eps is exactly 0.  Cells fan out over
    ``threads`` workers; rows always come back in sweep order.
    """
    base = price_interval(peacock, payoff, arithmetic)

    def cell(radius: float, seed: int) -> dict[str, Any]:
        if radius == 0.0:
            return {"radius": 0.0, "seed": seed,
                    "lower": float(base.lower), "upper": float(base.upper),
                    "eps": 0.0, "w1_shift": 0.0, "status": "unchanged"}
        pert, status = perturb_peacock(peacock, radius, seed)
        pi = price_interval(pert, payoff, arithmetic)
        eps = max(abs(float(pi.upper) - float(base.upper)),
                  abs(float(pi.lower) - float(base.lower)))
        shift = max(w1_distance(a, b)
                    for a, b in zip(peacock.laws, pert.laws))
        return {"radius": radius, "seed": seed,
                "lower": float(pi.lower), "upper": float(pi.upper),
                "eps": eps, "w1_shift": float(shift), "status": status}

    jobs = [(radius, seed)
            for radius in sorted({float(r) for r in radii}, reverse=True)
            for seed in sorted(int(s) for s in seeds)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda rs: cell(*rs), jobs))
    else:
        rows = [cell(*rs) for rs in jobs]
    by_radius: dict[float, list[float]] = {}
    for row in rows:
        by_radius.setdefault(row["radius"], []).append(row["eps"])
    medians = {r: sorted(v)[len(v) // 2] for r, v in by_radius.items()}
    seq = [medians[r] for r in sorted(medians, reverse=True)]
    monotone = all(b <= a + 1e-6 for a, b in zip(seq, seq[1:]))
    return {"base_lower": float(base.lower), "base_upper": float(base.upper),
            "rows": rows, "median_eps": medians, "monotone": monotone}


# ---------- freeze pushforward ----------


def freeze_pushforward(plan: TransportPlan, eps: Number) -> tuple[TransportPlan, dict]:
    """Push a plan forward through the freeze-and-catch-up time shift.

    The shift fixes every marginal grid time, so the grid marginals of the
    image plan agree with the originals atom for atom; the report carries
    that check, the conditional drift over the refined jump skeleton, and
    the modulus-style bound the drift is measured against.
    """
    times_f = tuple(float(t) for t in plan.times)
    if isinstance(eps, (int, float, Fraction)):
        eps_vec = tuple(float(abs(eps)) for _ in times_f[1:])
    else:
        eps_vec = tuple(float(e) for e in eps)
    shift = ShiftVector(eps_vec, times_f)
    g = forward_shift(shift)
    new_paths = tuple(apply_time_change(p, g) for p in plan.paths)
    out = TransportPlan(plan.times, new_paths, plan.weights)

    exact = True
    for i in range(len(plan.times)):
        a, b = plan.marginal_law(i), out.marginal_law(i)
        if a.points != b.points or a.weights != b.weights:
            exact = False
    skeleton = set(float(t) for t in plan.times)
    for p in new_paths:
        skeleton.update(float(t) for t in p.jump_times)
    drift = out.martingale_defect(sorted(skeleton))
    gaps = [b - a for a, b in zip(times_f, times_f[1:])]
    alpha = shift.norm() / min(gaps)
    terminal = plan.marginal_law(len(plan.times) - 1)
    bound = alpha * (1 + (len(plan.times) + 2) * float(terminal.abs_moment()))
    return out, {"eps": shift.norm(), "marginals_exact": exact,
                 "drift_stat": float(drift), "drift_bound": bound}
