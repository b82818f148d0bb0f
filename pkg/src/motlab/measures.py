"""Finitely supported measures, convex order, and marginal families.

Measures are atom lists in R^d.  Coordinates and weights may be floats or
:class:`fractions.Fraction`; all routines do arithmetic in whatever number
type they are handed, so exact inputs give exact answers.

Two independent routes decide convex order: in one dimension the
call-function test at the union of support points (exact for discrete
measures, whose potential functions are piecewise linear with kinks only at
support points), and in any dimension a feasibility LP for a martingale
coupling (a coupling whose conditional barycenters are the identity).  The
routes are kept separate on purpose and cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import lp as lpmod

Number = Any

WEIGHT_TOL = 1e-12
MEAN_TOL = 1e-10
ORDER_TOL = 1e-10


class MeasureError(ValueError):
    """Invalid measure, family, or quote data; carries a witness payload."""

    def __init__(self, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.witness = witness


def _as_point(p: Sequence[Number] | Number) -> tuple[Number, ...]:
    if isinstance(p, (int, float, Fraction)):
        return (p,)
    return tuple(p)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure with finitely many atoms in R^d."""

    dim: int
    points: tuple[tuple[Number, ...], ...]
    weights: tuple[Number, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.weights) or not self.points:
            raise MeasureError("points and weights must be non-empty and equal length")
        for p in self.points:
            if len(p) != self.dim:
                raise MeasureError(f"point {p} does not have dim {self.dim}")
        total = sum(self.weights)
        if abs(float(total) - 1.0) > WEIGHT_TOL:
            raise MeasureError(f"weights sum to {float(total)!r}, not 1", float(total))
        for w in self.weights:
            if float(w) <= 0:
                raise MeasureError(f"non-positive weight {w}", w)
        if len(set(self.points)) != len(self.points):
            raise MeasureError("atoms must be pairwise distinct")

    # ---------- basic functionals ----------

    @property
    def n_atoms(self) -> int:
        return len(self.points)

    def mean(self) -> tuple[Number, ...]:
        acc = [0] * self.dim
        for p, w in zip(self.points, self.weights):
            for k in range(self.dim):
                acc[k] = acc[k] + w * p[k]
        return tuple(acc)

    def expect(self, f: Callable[[tuple[Number, ...]], Number]) -> Number:
        return sum(w * f(p) for p, w in zip(self.points, self.weights))

    def call_value(self, strike: Number, coordinate: int = 0) -> Number:
        """E (x_c - K)^+ ; the basic convex test functional."""
        acc = 0
        for p, w in zip(self.points, self.weights):
            gain = p[coordinate] - strike
            if gain > 0:
                acc = acc + w * gain
        return acc

    def abs_moment(self) -> Number:
        """E |x| with the Euclidean norm (exact for dim 1 rational input)."""
        if self.dim == 1:
            return sum(w * abs(p[0]) for p, w in zip(self.points, self.weights))
        return sum(w * float(np.hypot.reduce([float(c) for c in p]))
                   for p, w in zip(self.points, self.weights))

    def support_1d(self) -> list[Number]:
        if self.dim != 1:
            raise MeasureError("support_1d needs dim 1")
        return sorted(p[0] for p in self.points)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([[float(c) for c in p] for p in self.points]),
                np.array([float(w) for w in self.weights]))


def measure(points: Iterable[Sequence[Number] | Number],
            weights: Iterable[Number], dim: int | None = None) -> DiscreteMeasure:
    """Canonical constructor: sorts atoms, merges duplicates, drops zeros."""
    pts = [_as_point(p) for p in points]
    ws = list(weights)
    if dim is None:
        dim = len(pts[0]) if pts else 1
    merged: dict[tuple[Number, ...], Number] = {}
    for p, w in zip(pts, ws):
        if w == 0:
            continue
        merged[p] = merged.get(p, 0) + w
    items = sorted(merged.items())
    return DiscreteMeasure(dim, tuple(p for p, _ in items), tuple(w for _, w in items))


def dirac(point: Sequence[Number] | Number) -> DiscreteMeasure:
    p = _as_point(point)
    return DiscreteMeasure(len(p), (p,), (1,))


# ---------- convex order ----------


@dataclass(frozen=True)
class ConvexOrderResult:
    holds: bool
    method: str                      # "calls" | "coupling_lp"
    witness: Any = None              # None, ("mean", gap), ("strike", K, gap),
                                     # or ("farkas", payload)
    coupling: dict | None = None     # martingale coupling when the LP route ran

    def __bool__(self) -> bool:
        return self.holds


def _means_close(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float) -> float:
    gaps = [abs(float(a) - float(b)) for a, b in zip(mu.mean(), nu.mean())]
    return max(gaps)


def coupling_lp(mu: DiscreteMeasure, nu: DiscreteMeasure,
                minimize_cost: bool = False,
                arithmetic: str = "float") -> lpmod.LpSolution:
    """Feasibility/selection LP for a martingale coupling of mu into nu.

    Variables pi(x, y) >= 0 over the product of supports; constraints fix
    both marginals and force the conditional barycenter at every x to be x
    itself.  With ``minimize_cost`` the objective picks, among feasible
    couplings, one minimizing sum pi |y - x|_1 (a deterministic
    representative); otherwise the objective is zero.
    """
    if mu.dim != nu.dim:
        raise MeasureError("dimension mismatch")
    prog = lpmod.LinearProgram("min")
    nx, ny = mu.n_atoms, nu.n_atoms
    idx = {}
    cost: dict[int, Number] = {}
    for a in range(nx):
        for b in range(ny):
            v = prog.add_var(f"pi_{a}_{b}")
            idx[a, b] = v
            if minimize_cost:
                cost[v] = sum(abs(nu.points[b][k] - mu.points[a][k])
                              for k in range(mu.dim))
    for a in range(nx):
        prog.add_constraint([(idx[a, b], 1) for b in range(ny)],
                            "==", mu.weights[a], name=f"row_{a}")
    for b in range(ny):
        prog.add_constraint([(idx[a, b], 1) for a in range(nx)],
                            "==", nu.weights[b], name=f"col_{b}")
    for a in range(nx):
        for k in range(mu.dim):
            prog.add_constraint(
                [(idx[a, b], nu.points[b][k] - mu.points[a][k]) for b in range(ny)],
                "==", 0, name=f"bary_{a}_{k}")
    if minimize_cost:
        prog.set_objective(cost)
    sol = lpmod.solve(prog, arithmetic)
    if sol.status == "optimal":
        plan = {}
        for (a, b), v in idx.items():
            w = sol.x[v]
            if float(w) > 1e-14:
                plan[mu.points[a], nu.points[b]] = w
        sol._std["coupling"] = plan
    return sol


def check_convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure,
                       tol: float = ORDER_TOL,
                       method: str = "auto") -> ConvexOrderResult:
    """Decide whether mu <= nu in convex order.

    ``method="calls"`` (dim 1 only): equal means plus dominated call values
    at every union support point.  ``method="coupling_lp"``: martingale
    coupling feasibility in any dimension.  ``"auto"`` picks calls for dim 1
    and the LP otherwise.
    """
    if mu.dim != nu.dim:
        raise MeasureError("dimension mismatch")
    if method == "auto":
        method = "calls" if mu.dim == 1 else "coupling_lp"
    mean_gap = _means_close(mu, nu, tol)
    if mean_gap > tol:
        return ConvexOrderResult(False, method, ("mean", mean_gap))

    if method == "calls":
        if mu.dim != 1:
            raise MeasureError("call-function test needs dim 1")
        strikes = sorted({p[0] for p in mu.points} | {p[0] for p in nu.points})
        worst_k, worst = None, 0.0
        for K in strikes:
            gap = float(mu.call_value(K)) - float(nu.call_value(K))
            if gap > worst:
                worst, worst_k = gap, K
        if worst > tol:
            return ConvexOrderResult(False, "calls", ("strike", worst_k, worst))
        return ConvexOrderResult(True, "calls")

    if method != "coupling_lp":
        raise MeasureError(f"unknown method {method!r}")
    sol = coupling_lp(mu, nu)
    if sol.status == "optimal":
        return ConvexOrderResult(True, "coupling_lp",
                                 coupling=sol._std.get("coupling"))
    return ConvexOrderResult(False, "coupling_lp", ("farkas", sol.farkas))


# ---------- Wasserstein-1 ----------


def w1_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """W1 distance; exact CDF-difference integral in dim 1, transport LP above."""
    if mu.dim != nu.dim:
        raise MeasureError("dimension mismatch")
    if mu.dim == 1:
        events = sorted({p[0] for p in mu.points} | {p[0] for p in nu.points})
        cdf_mu = cdf_nu = 0.0
        wmu = {p[0]: float(w) for p, w in zip(mu.points, mu.weights)}
        wnu = {p[0]: float(w) for p, w in zip(nu.points, nu.weights)}
        total = 0.0
        for z, z_next in zip(events, events[1:]):
            cdf_mu += wmu.get(z, 0.0)
            cdf_nu += wnu.get(z, 0.0)
            total += abs(cdf_mu - cdf_nu) * (float(z_next) - float(z))
        return total
    prog = lpmod.LinearProgram("min")
    idx = {}
    cost = {}
    for a in range(mu.n_atoms):
        for b in range(nu.n_atoms):
            v = prog.add_var()
            idx[a, b] = v
            diff = np.array([float(c) for c in nu.points[b]]) - \
                np.array([float(c) for c in mu.points[a]])
            cost[v] = float(np.linalg.norm(diff))
    for a in range(mu.n_atoms):
        prog.add_constraint([(idx[a, b], 1) for b in range(nu.n_atoms)],
                            "==", mu.weights[a])
    for b in range(nu.n_atoms):
        prog.add_constraint([(idx[a, b], 1) for a in range(mu.n_atoms)],
                            "==", nu.weights[b])
    prog.set_objective(cost)
    sol = lpmod.solve(prog)
    if sol.status != "optimal":  # marginals always couple
        raise MeasureError(f"transport LP unexpectedly {sol.status}")
    return float(sol.objective)


# ---------- call-quote calibration ----------


@dataclass(frozen=True)
class CallQuoteCurve:
    """Undiscounted call quotes at one maturity: strictly increasing strikes."""

    maturity: float
    strikes: tuple[float, ...]
    prices: tuple[float, ...]
    spot: float

    def __post_init__(self) -> None:
        if len(self.strikes) != len(self.prices) or not self.strikes:
            raise MeasureError("strikes and prices must be non-empty, equal length")
        for a, b in zip(self.strikes, self.strikes[1:]):
            if not b > a:
                raise MeasureError(f"strikes not strictly increasing at {a}, {b}",
                                   ("strikes", a, b))
        if self.strikes[0] < 0:
            raise MeasureError("strikes must be >= 0", ("strikes", self.strikes[0]))
        if self.spot <= 0:
            raise MeasureError("spot must be positive", ("spot", self.spot))


def marginals_from_calls(curve: CallQuoteCurve, tol: float = 1e-9) -> DiscreteMeasure:
    """Recover the unique piecewise-linear-consistent measure from call quotes.

    Atoms sit at the interior strikes with weights given by the second
    differences of the linearly interpolated call curve; one synthetic atom
    beyond the last strike carries the residual mass and is placed so that
    the measure's mean equals the spot.  The result reprices every quote
    within ``tol``; violations of static no-arbitrage (convexity, slope
    bounds, monotonicity) raise :class:`MeasureError` naming the offending
    strike triple.
    """
    ks = [float(k) for k in curve.strikes]
    cs = [float(c) for c in curve.prices]
    spot = float(curve.spot)
    for i, c in enumerate(cs):
        if c < -tol:
            raise MeasureError(f"negative call price at strike {ks[i]}",
                               ("negative_price", ks[i], c))
    if ks[0] == 0.0:
        if abs(cs[0] - spot) > max(tol, 1e-9 * (1 + abs(spot))):
            raise MeasureError(
                f"price at strike 0 is {cs[0]}, spot is {spot}",
                ("spot_mismatch", cs[0], spot))
    else:
        # virtual quote at strike 0: a call struck at zero is worth the spot
        ks = [0.0] + ks
        cs = [spot] + cs

    slopes = [(c1 - c0) / (k1 - k0)
              for (k0, c0), (k1, c1) in zip(zip(ks, cs), zip(ks[1:], cs[1:]))]
    if slopes and slopes[0] < -1 - tol:
        raise MeasureError(f"initial slope {slopes[0]} below -1",
                           ("slope", ks[0], ks[1], slopes[0]))
    for i in range(1, len(slopes)):
        if slopes[i] < slopes[i - 1] - tol:
            raise MeasureError(
                f"convexity violated on strikes "
                f"({ks[i - 1]}, {ks[i]}, {ks[i + 1]})",
                ("convexity", ks[i - 1], ks[i], ks[i + 1]))
    if slopes and slopes[-1] > tol:
        raise MeasureError(f"call prices increase near strike {ks[-1]}",
                           ("increasing", ks[-2], ks[-1]))

    # mass at each kink is the jump of the call-curve slope there; the curve
    # enters strike 0 with slope -1 because the support is nonnegative
    atoms: list[tuple[float, float]] = []
    prev = -1.0
    for i in range(len(slopes) - 1):
        w = slopes[i] - prev
        prev = slopes[i]
        if w > 1e-15:
            atoms.append((ks[i], w))
    # after the last interior kink the curve keeps slope slopes[-1]; the
    # remaining mass -slopes[-1] rides in the tail atom
    if slopes:
        w_last_kink = slopes[-1] - prev
        if w_last_kink > 1e-15:
            atoms.append((ks[-2], w_last_kink))
        w_tail = -slopes[-1]
    else:
        w_tail = 1.0
    c_last = cs[-1]
    if w_tail <= tol:
        if c_last > tol:
            raise MeasureError(
                f"flat call curve with positive price {c_last} at the last strike",
                ("tail", ks[-1], c_last))
        w_tail = 0.0
    if w_tail > 0.0:
        x_tail = ks[-1] + c_last / w_tail
        atoms.append((x_tail, w_tail))

    total = sum(w for _, w in atoms)
    m = measure([x for x, _ in atoms], [w / total for _, w in atoms], dim=1)

    mean_gap = abs(float(m.mean()[0]) - spot)
    if mean_gap > max(1e-9, tol) * (1 + abs(spot)):
        raise MeasureError(f"calibrated mean off spot by {mean_gap}",
                           ("mean", mean_gap))
    for k, c in zip(curve.strikes, curve.prices):
        model = float(m.call_value(float(k)))
        if abs(model - float(c)) > 1e-9 * (1 + abs(float(c))):
            raise MeasureError(
                f"repricing failed at strike {k}: model {model}, quote {c}",
                ("repricing", float(k), model, float(c)))
    return m


# ---------- peacocks ----------


@dataclass(frozen=True)
class Peacock:
    """Family of measures increasing in convex order on a time grid ending at 1."""

    times: tuple[float, ...]
    laws: tuple[DiscreteMeasure, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.laws) or len(self.times) < 2:
            raise MeasureError("need at least two (time, law) pairs")
        for a, b in zip(self.times, self.times[1:]):
            if not float(b) > float(a):
                raise MeasureError(f"times not strictly increasing at {a}, {b}")
        if float(self.times[0]) != 0.0 or float(self.times[-1]) != 1.0:
            raise MeasureError("time grid must start at 0 and end at 1")
        d = self.laws[0].dim
        for law in self.laws:
            if law.dim != d:
                raise MeasureError("all laws must share one dimension")
        base = self.laws[0].mean()
        for t, law in zip(self.times[1:], self.laws[1:]):
            gap = max(abs(float(a) - float(b)) for a, b in zip(base, law.mean()))
            if gap > MEAN_TOL:
                raise MeasureError(f"barycenter drifts by {gap} at time {t}",
                                   ("mean", t, gap))
        for i in range(len(self.laws) - 1):
            res = check_convex_order(self.laws[i], self.laws[i + 1])
            if not res.holds:
                raise MeasureError(
                    f"convex order fails between times {self.times[i]} "
                    f"and {self.times[i + 1]}", ("order", i, res.witness))

    @property
    def dim(self) -> int:
        return self.laws[0].dim

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def law_at(self, t: float) -> DiscreteMeasure:
        for s, law in zip(self.times, self.laws):
            if float(s) >= float(t) - 1e-15:
                return law
        raise MeasureError(f"time {t} beyond the terminal time 1")


def close_peacock(p: Peacock, query_times: Sequence[float]) -> Peacock:
    """Right-continuous extension of the family onto a finer grid."""
    qs = sorted({float(t) for t in query_times} | {float(t) for t in p.times})
    laws = []
    for q in qs:
        if q > 1.0 + 1e-15:
            raise MeasureError(f"query time {q} beyond the terminal time 1")
        laws.append(p.law_at(q))
    return Peacock(tuple(qs), tuple(laws))


# ---------- perturbations ----------


def symmetric_split(m: DiscreteMeasure, delta: Number,
                    coordinate: int = 0) -> DiscreteMeasure:
    """Split every atom into x +- delta e_c with half the weight each.

    Mean preserving; the W1 displacement is exactly ``delta`` (each unit of
    mass moves by delta along one coordinate).
    """
    if delta == 0:
        return m
    pts: list[tuple[Number, ...]] = []
    ws: list[Number] = []
    for p, w in zip(m.points, m.weights):
        up = list(p)
        dn = list(p)
        up[coordinate] = up[coordinate] + delta
        dn[coordinate] = dn[coordinate] - delta
        half = w * Fraction(1, 2) if isinstance(w, Fraction) else w / 2
        pts.extend([tuple(up), tuple(dn)])
        ws.extend([half, half])
    return measure(pts, ws, dim=m.dim)


def perturb_in_w1(m: DiscreteMeasure, radius: float, seed: int) -> DiscreteMeasure:
    """Mean-preserving random perturbation with W1(m, out) <= radius.

    A single atom gets the full symmetric split of width ``radius``;
    otherwise each atom is split by its own random width in
    ``[radius/2, radius]`` so the transport budget stays below ``radius``.
    Deterministic in ``seed``.
    """
    if radius < 0:
        raise MeasureError("radius must be >= 0")
    if radius == 0:
        return m
    if m.n_atoms == 1:
        return symmetric_split(m, radius)
    rng = np.random.default_rng(seed)
    pts: list[tuple[Number, ...]] = []
    ws: list[Number] = []
    for p, w in zip(m.points, m.weights):
        delta = radius * float(rng.uniform(0.5, 1.0))
        up, dn = list(p), list(p)
        up[0] = float(up[0]) + delta
        dn[0] = float(dn[0]) - delta
        pts.extend([tuple(up), tuple(dn)])
        ws.extend([w / 2, w / 2])
    return measure(pts, ws, dim=m.dim)


def perturb_peacock(p: Peacock, radius: float, seed: int) -> tuple[Peacock, str]:
    """Perturb a peacock inside a W1 ball, repairing convex order if needed.

    First tries to perturb every law after time 0; if the perturbed family
    violates convex order it falls back to splitting only the terminal law,
    which always preserves the order chain.  Returns the new family and a
    status flag: "unchanged", "perturbed", or "repaired".
    """
    if radius == 0:
        return p, "unchanged"
    laws = [p.laws[0]]
    for i, law in enumerate(p.laws[1:], start=1):
        laws.append(perturb_in_w1(law, radius, seed * 1000003 + i))
    try:
        return Peacock(p.times, tuple(laws)), "perturbed"
    except MeasureError:
        pass
    laws = list(p.laws)
    laws[-1] = symmetric_split(p.laws[-1], radius)
    return Peacock(p.times, tuple(laws)), "repaired"


# ---------- seeded generators (used by sweeps and the test corpus) ----------


def _dyadic(rng: np.random.Generator, lo: int, hi: int, den: int) -> Fraction:
    return Fraction(int(rng.integers(lo, hi + 1)), den)


def split_measure(m: DiscreteMeasure, rng: np.random.Generator,
                  max_support: int = 6, rational: bool = True) -> DiscreteMeasure:
    """One martingale-splitting step: children of each atom preserve its mean.

    The output dominates the input in convex order by construction.  With
    ``rational`` the offsets and weights stay dyadic so exact-arithmetic
    solvers see exact data.
    """
    pts: list[tuple[Number, ...]] = []
    ws: list[Number] = []
    budget = max_support - m.n_atoms
    for p, w in zip(m.points, m.weights):
        do_split = budget > 0 and rng.random() < 0.8
        if do_split:
            budget -= 1
            delta = _dyadic(rng, 1, 8, 8) if rational else float(rng.uniform(0.1, 1.0))
            up, dn = list(p), list(p)
            up[0] = up[0] + delta
            dn[0] = dn[0] - delta
            half = w * Fraction(1, 2) if rational else w / 2
            pts.extend([tuple(up), tuple(dn)])
            ws.extend([half, half])
        else:
            pts.append(p)
            ws.append(w)
    return measure(pts, ws, dim=m.dim)


def random_peacock(seed: int, n_steps: int = 2, start: Number = 1,
                   max_support: int = 6, rational: bool = True,
                   times: Sequence[float] | None = None) -> Peacock:
    """Deterministic random peacock built by iterated martingale splitting."""
    rng = np.random.default_rng(seed)
    law = dirac(Fraction(start) if rational else float(start))
    laws = [law]
    for _ in range(n_steps):
        law = split_measure(law, rng, max_support=max_support, rational=rational)
        laws.append(law)
    if times is None:
        ts = tuple(i / n_steps for i in range(n_steps + 1))
    else:
        ts = tuple(float(t) for t in times)
    return Peacock(ts, tuple(laws))


def random_measure(seed: int, n_atoms: int = 3, dim: int = 1,
                   span: float = 2.0) -> DiscreteMeasure:
    """Generic random measure (no order structure), deterministic in seed."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n_atoms):
        pts.append(tuple(float(c) for c in rng.uniform(-span, span, size=dim)))
    raw = rng.uniform(0.2, 1.0, size=n_atoms)
    ws = [float(w) for w in raw / raw.sum()]
    # renormalize exactly against float round-off
    ws[-1] = 1.0 - sum(ws[:-1])
    return measure(pts, ws, dim=dim)
