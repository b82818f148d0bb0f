"""Self-contained dense simplex solver with an exact-rational mode.

The solver is deliberately small and deterministic: Bland's smallest-index
entering rule, leaving row chosen by minimum ratio with ties broken on the
smallest basis index.  The same model always produces the same pivot
sequence, hence the same solution bits.  No randomization, no presolve
beyond inert handling of redundant rows.

Model shape: max or min of a linear objective subject to linear rows
(``<=``, ``==``, ``>=``) and per-variable bounds.  Internally everything is
reduced to standard equality form ``min c.x, A x = b, x >= 0`` using shifts,
free-variable splits, slack/surplus columns and a two-phase method with
artificial variables.

Outcomes carry checkable evidence:

* ``optimal``    -- primal solution, dual multipliers per row, residual report
  (primal/dual feasibility, complementarity, duality gap);
* ``infeasible`` -- Farkas multipliers ``y`` with ``y.A <= 0`` and
  ``y.b > 0`` for the standard-form system;
* ``unbounded``  -- an improving ray in the original variable space.

Arithmetic is chosen per solve: ``"float"`` runs on numpy float64 with
tolerances, ``"rational"`` runs on :class:`fractions.Fraction` with zero
tolerance.  The rational mode is intended for small instances (a few
hundred variables); its pivot logic mirrors the float mode exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

Number = Any  # int | float | Fraction

EPS = 1e-9          # float-mode eligibility / feasibility tolerance
PIVOT_EPS = 1e-10   # float-mode minimum admissible pivot magnitude
MAX_ITER_BASE = 5000


class LpError(Exception):
    """Base class for solver errors."""


class LpModelError(LpError):
    """Malformed model (bad indices, bounds, relations)."""


class LpNumericalError(LpError):
    """Numerical breakdown; the solve cannot be certified."""


@dataclass(frozen=True)
class Variable:
    name: str
    lb: Number | None = 0      # None means -inf
    ub: Number | None = None   # None means +inf


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, Number], ...]
    relation: str              # "<=", "==", ">="
    rhs: Number
    name: str = ""


_RELATIONS = ("<=", "==", ">=")


class LinearProgram:
    """Mutable LP builder; rows and columns keep their insertion order."""

    def __init__(self, sense: str = "min") -> None:
        if sense not in ("min", "max"):
            raise LpModelError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, Number] = {}

    # ---------- model building ----------

    def add_var(self, name: str | None = None, lb: Number | None = 0,
                ub: Number | None = None) -> int:
        idx = len(self.variables)
        if name is None:
            name = f"x{idx}"
        if lb is not None and ub is not None and ub < lb:
            raise LpModelError(f"variable {name}: ub {ub} < lb {lb}")
        self.variables.append(Variable(name, lb, ub))
        return idx

    def add_constraint(self, coeffs: Iterable[tuple[int, Number]] | dict[int, Number],
                       relation: str, rhs: Number, name: str = "") -> int:
        if relation == "=":
            relation = "=="
        if relation not in _RELATIONS:
            raise LpModelError(f"unknown relation {relation!r}")
        if isinstance(coeffs, dict):
            items = sorted(coeffs.items())
        else:
            items = sorted(coeffs)
        n = len(self.variables)
        merged: dict[int, Number] = {}
        for j, a in items:
            if not 0 <= j < n:
                raise LpModelError(f"constraint {name!r}: bad variable index {j}")
            merged[j] = merged.get(j, 0) + a
        self.constraints.append(
            Constraint(tuple(sorted(merged.items())), relation, rhs, name))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: dict[int, Number]) -> None:
        n = len(self.variables)
        for j in coeffs:
            if not 0 <= j < n:
                raise LpModelError(f"objective: bad variable index {j}")
        self.objective = dict(sorted(coeffs.items()))

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


@dataclass
class LpSolution:
    status: str                       # "optimal" | "infeasible" | "unbounded"
    objective: Number | None
    x: list[Number] | None
    duals: list[Number] | None        # one multiplier per user constraint
    bound_duals: dict[int, Number] | None
    residuals: dict[str, float]
    farkas: dict[str, Any] | None
    ray: list[Number] | None
    trace: list[Number]
    pivots: int
    arithmetic: str
    dual_objective: Number | None = None
    # standard-form snapshot used by strong_duality_check
    _std: dict[str, Any] = field(default_factory=dict, repr=False)


# ---------- standard form ----------


@dataclass
class _Std:
    conv: Callable[[Number], Number]
    sense_sign: int
    n_struct: int
    var_cols: list[list[tuple[int, int]]]    # user var -> [(std col, sign)]
    var_shift: list[Number]
    fixed: dict[int, Number]
    c_std: list[Number]
    const_min: Number
    rows: list[dict[int, Number]]            # structural part only
    rhs: list[Number]
    kind: list[str]                          # "user" | "bound"
    origin: list[int]
    flip: list[int]
    relation: list[str]


def _build_standard(lp: LinearProgram, conv: Callable[[Number], Number]) -> _Std:
    zero = conv(0)
    sense_sign = 1 if lp.sense == "min" else -1

    var_cols: list[list[tuple[int, int]]] = []
    var_shift: list[Number] = []
    fixed: dict[int, Number] = {}
    ncol = 0
    for j, v in enumerate(lp.variables):
        lb = None if v.lb is None else conv(v.lb)
        ub = None if v.ub is None else conv(v.ub)
        if lb is not None and ub is not None and lb == ub:
            fixed[j] = lb
            var_cols.append([])
            var_shift.append(zero)
        elif lb is None:
            var_cols.append([(ncol, 1), (ncol + 1, -1)])
            var_shift.append(zero)
            ncol += 2
        else:
            var_cols.append([(ncol, 1)])
            var_shift.append(lb)
            ncol += 1

    c_std = [zero] * ncol
    const_min = zero
    for j, cj in lp.objective.items():
        c = conv(cj) * sense_sign
        if j in fixed:
            const_min = const_min + c * fixed[j]
            continue
        const_min = const_min + c * var_shift[j]
        for col, sgn in var_cols[j]:
            c_std[col] = c_std[col] + c * sgn

    rows: list[dict[int, Number]] = []
    rhs: list[Number] = []
    kind: list[str] = []
    origin: list[int] = []
    flip: list[int] = []
    relation: list[str] = []

    def push(row: dict[int, Number], b: Number, rel: str, knd: str, org: int) -> None:
        f = 1
        if b < zero:
            f = -1
            row = {c: -a for c, a in row.items()}
            b = -b
            rel = {"<=": ">=", ">=": "<=", "==": "=="}[rel]
        rows.append(row)
        rhs.append(b)
        kind.append(knd)
        origin.append(org)
        flip.append(f)
        relation.append(rel)

    for i, con in enumerate(lp.constraints):
        row: dict[int, Number] = {}
        b = conv(con.rhs)
        for j, a in con.coeffs:
            a = conv(a)
            if j in fixed:
                b = b - a * fixed[j]
                continue
            b = b - a * var_shift[j]
            for col, sgn in var_cols[j]:
                row[col] = row.get(col, zero) + a * sgn
        row = {c: a for c, a in row.items() if a != zero}
        push(row, b, con.relation, "user", i)

    for j, v in enumerate(lp.variables):
        if j in fixed or v.ub is None or v.lb is None:
            continue  # free vars with ub are rare; not needed here
        col = var_cols[j][0][0]
        push({col: conv(1)}, conv(v.ub) - conv(v.lb), "<=", "bound", j)

    for j, v in enumerate(lp.variables):
        if v.ub is not None and v.lb is None:
            # free variable with an upper bound: x+ - x- <= ub
            colp, coln = var_cols[j][0][0], var_cols[j][1][0]
            push({colp: conv(1), coln: conv(-1)}, conv(v.ub), "<=", "bound", j)

    return _Std(conv, sense_sign, ncol, var_cols, var_shift, fixed,
                c_std, const_min, rows, rhs, kind, origin, flip, relation)


# ---------- float core (numpy tableau) ----------


def _solve_float(std: _Std) -> dict[str, Any]:
    m = len(std.rows)
    n_struct = std.n_struct

    # column layout: structural | per-row slack/surplus | per-row artificial
    aux_col: list[int | None] = [None] * m
    aux_sign: list[int] = [0] * m
    art_col: list[int | None] = [None] * m
    ncols = n_struct
    for i, rel in enumerate(std.relation):
        if rel == "<=":
            aux_col[i] = ncols
            aux_sign[i] = 1
            ncols += 1
        elif rel == ">=":
            aux_col[i] = ncols
            aux_sign[i] = -1
            ncols += 1
    for i, rel in enumerate(std.relation):
        if rel != "<=":
            art_col[i] = ncols
            ncols += 1

    id_col = [art_col[i] if art_col[i] is not None else aux_col[i] for i in range(m)]

    T = np.zeros((m + 2, ncols + 1))
    for i, row in enumerate(std.rows):
        for c, a in row.items():
            T[i, c] = float(a)
        if aux_col[i] is not None:
            T[i, aux_col[i]] = float(aux_sign[i])
        if art_col[i] is not None:
            T[i, art_col[i]] = 1.0
        T[i, -1] = float(std.rhs[i])

    basis = [art_col[i] if art_col[i] is not None else aux_col[i] for i in range(m)]

    # cost rows: index m = phase 2 (objective), m+1 = phase 1 (sum of artificials)
    for c in range(n_struct):
        T[m, c] = float(std.c_std[c])
    for i in range(m):
        if art_col[i] is not None:
            T[m + 1] -= T[i]
    for i in range(m):
        if art_col[i] is not None:
            T[m + 1, art_col[i]] = 0.0

    legal = np.ones(ncols, dtype=bool)
    for i in range(m):
        if art_col[i] is not None:
            legal[art_col[i]] = False

    scale_b = 1.0 + max((abs(float(b)) for b in std.rhs), default=0.0)
    max_iter = MAX_ITER_BASE + 20 * (m + ncols)
    pivots = 0
    trace: list[float] = []

    def pivot(r: int, c: int) -> None:
        piv = T[r, c]
        if abs(piv) < PIVOT_EPS:
            raise LpNumericalError(f"pivot magnitude {piv:.3e} below threshold")
        T[r] /= piv
        colv = T[:, c].copy()
        colv[r] = 0.0
        T[:, :] -= np.outer(colv, T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0

    def iterate(cost_row: int, tracing: bool) -> tuple[str, int | None]:
        nonlocal pivots
        while True:
            r = T[cost_row, :ncols]
            elig = np.flatnonzero(legal & (r < -EPS))
            if elig.size == 0:
                return "optimal", None
            col = int(elig[0])  # Bland: smallest index
            colvec = T[:m, col]
            pos = colvec > EPS
            if not pos.any():
                return "unbounded", col
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / colvec[pos]
            rmin = ratios.min()
            cand = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))
            row = int(min(cand, key=lambda i: basis[i]))
            pivot(row, col)
            basis[row] = col
            pivots += 1
            if tracing:
                trace.append(-T[m, -1])
            if pivots > max_iter:
                raise LpNumericalError(f"iteration limit {max_iter} exceeded")

    status1, _ = iterate(m + 1, tracing=False)
    if status1 != "optimal":  # pragma: no cover - phase 1 is always bounded
        raise LpNumericalError("phase 1 terminated without optimum")
    obj1 = -T[m + 1, -1]
    if obj1 > EPS * scale_b:
        y1 = np.empty(m)
        for i in range(m):
            c = id_col[i]
            r1 = T[m + 1, c]
            y1[i] = (1.0 - r1) if art_col[i] is not None and c == art_col[i] else -r1
        return {"status": "infeasible", "farkas_y": y1, "phase1_obj": obj1,
                "pivots": pivots, "aux_col": aux_col, "aux_sign": aux_sign,
                "ncols": ncols, "n_struct": n_struct}

    # drive basic artificials out (rows that stay are inert/redundant)
    for i in range(m):
        if art_col[i] is not None and basis[i] == art_col[i]:
            row_entries = np.abs(T[i, :ncols])
            cand = np.flatnonzero(legal & (row_entries > EPS))
            if cand.size:
                pivot(i, int(cand[0]))
                basis[i] = int(cand[0])
                pivots += 1

    status2, ray_col = iterate(m, tracing=True)
    if status2 == "unbounded":
        d = np.zeros(ncols)
        d[ray_col] = 1.0
        for i in range(m):
            d[basis[i]] -= T[i, ray_col] if basis[i] != ray_col else 0.0
        return {"status": "unbounded", "ray_std": d, "pivots": pivots,
                "aux_col": aux_col, "aux_sign": aux_sign,
                "ncols": ncols, "n_struct": n_struct, "trace": trace}

    x_std = np.zeros(ncols)
    for i in range(m):
        x_std[basis[i]] = T[i, -1]
    y = np.empty(m)
    for i in range(m):
        y[i] = -T[m, id_col[i]]
    return {"status": "optimal", "x_std": x_std, "y": y, "pivots": pivots,
            "aux_col": aux_col, "aux_sign": aux_sign,
            "ncols": ncols, "n_struct": n_struct, "trace": trace}


# ---------- exact core (Fraction tableau) ----------


def _solve_exact(std: _Std) -> dict[str, Any]:
    m = len(std.rows)
    n_struct = std.n_struct
    F0, F1 = Fraction(0), Fraction(1)

    aux_col: list[int | None] = [None] * m
    aux_sign: list[int] = [0] * m
    art_col: list[int | None] = [None] * m
    ncols = n_struct
    for i, rel in enumerate(std.relation):
        if rel in ("<=", ">="):
            aux_col[i] = ncols
            aux_sign[i] = 1 if rel == "<=" else -1
            ncols += 1
    for i, rel in enumerate(std.relation):
        if rel != "<=":
            art_col[i] = ncols
            ncols += 1
    id_col = [art_col[i] if art_col[i] is not None else aux_col[i] for i in range(m)]

    T = [[F0] * (ncols + 1) for _ in range(m + 2)]
    for i, row in enumerate(std.rows):
        for c, a in row.items():
            T[i][c] = Fraction(a)
        if aux_col[i] is not None:
            T[i][aux_col[i]] = Fraction(aux_sign[i])
        if art_col[i] is not None:
            T[i][art_col[i]] = F1
        T[i][-1] = Fraction(std.rhs[i])

    basis = [art_col[i] if art_col[i] is not None else aux_col[i] for i in range(m)]

    for c in range(n_struct):
        T[m][c] = Fraction(std.c_std[c])
    for i in range(m):
        if art_col[i] is not None:
            T[m + 1] = [a - b for a, b in zip(T[m + 1], T[i])]
    for i in range(m):
        if art_col[i] is not None:
            T[m + 1][art_col[i]] = F0

    legal = [True] * ncols
    for i in range(m):
        if art_col[i] is not None:
            legal[art_col[i]] = False

    max_iter = MAX_ITER_BASE + 20 * (m + ncols)
    pivots = 0
    trace: list[Fraction] = []

    def pivot(r: int, c: int) -> None:
        piv = T[r][c]
        inv = F1 / piv
        T[r] = [a * inv for a in T[r]]
        rowr = T[r]
        for k in range(m + 2):
            if k == r:
                continue
            f = T[k][c]
            if f != F0:
                rowk = T[k]
                T[k] = [a - f * b for a, b in zip(rowk, rowr)]
        for k in range(m + 2):
            T[k][c] = F0
        T[r][c] = F1

    def iterate(cost_row: int, tracing: bool) -> tuple[str, int | None]:
        nonlocal pivots
        while True:
            col = -1
            crow = T[cost_row]
            for c in range(ncols):
                if legal[c] and crow[c] < F0:
                    col = c
                    break
            if col < 0:
                return "optimal", None
            row = -1
            best: Fraction | None = None
            for i in range(m):
                a = T[i][col]
                if a > F0:
                    ratio = T[i][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[row]):
                        best = ratio
                        row = i
            if row < 0:
                return "unbounded", col
            pivot(row, col)
            basis[row] = col
            pivots += 1
            if tracing:
                trace.append(-T[m][-1])
            if pivots > max_iter:
                raise LpNumericalError(f"iteration limit {max_iter} exceeded")

    status1, _ = iterate(m + 1, tracing=False)
    if status1 != "optimal":  # pragma: no cover
        raise LpNumericalError("phase 1 terminated without optimum")
    obj1 = -T[m + 1][-1]
    if obj1 > F0:
        y1 = [F0] * m
        for i in range(m):
            c = id_col[i]
            r1 = T[m + 1][c]
            y1[i] = (F1 - r1) if art_col[i] is not None and c == art_col[i] else -r1
        return {"status": "infeasible", "farkas_y": y1, "phase1_obj": obj1,
                "pivots": pivots, "aux_col": aux_col, "aux_sign": aux_sign,
                "ncols": ncols, "n_struct": n_struct}

    for i in range(m):
        if art_col[i] is not None and basis[i] == art_col[i]:
            for c in range(ncols):
                if legal[c] and T[i][c] != F0:
                    pivot(i, c)
                    basis[i] = c
                    pivots += 1
                    break

    status2, ray_col = iterate(m, tracing=True)
    if status2 == "unbounded":
        d = [F0] * ncols
        d[ray_col] = F1
        for i in range(m):
            if basis[i] != ray_col:
                d[basis[i]] = d[basis[i]] - T[i][ray_col]
        return {"status": "unbounded", "ray_std": d, "pivots": pivots,
                "aux_col": aux_col, "aux_sign": aux_sign,
                "ncols": ncols, "n_struct": n_struct, "trace": trace}

    x_std = [F0] * ncols
    for i in range(m):
        x_std[basis[i]] = T[i][-1]
    y = [F0] * m
    for i in range(m):
        y[i] = -T[m][id_col[i]]
    return {"status": "optimal", "x_std": x_std, "y": y, "pivots": pivots,
            "aux_col": aux_col, "aux_sign": aux_sign,
            "ncols": ncols, "n_struct": n_struct, "trace": trace}


# ---------- extraction and certification ----------


def _residuals(std: _Std, res: dict[str, Any], exact: bool) -> dict[str, float]:
    """Recompute feasibility/optimality residuals from raw standard data."""
    m = len(std.rows)
    x = res["x_std"]
    y = res["y"]
    aux_col, aux_sign = res["aux_col"], res["aux_sign"]
    zero = Fraction(0) if exact else 0.0

    primal = zero
    dual = zero
    comp = zero
    c_full: dict[int, Number] = {c: std.c_std[c] for c in range(std.n_struct)}

    # dual residual needs y^T A per column; accumulate column sums
    ya: dict[int, Number] = {}
    for i, row in enumerate(std.rows):
        ax = zero
        for c, a in row.items():
            ax = ax + a * x[c]
            ya[c] = ya.get(c, zero) + y[i] * a
        if aux_col[i] is not None:
            ax = ax + aux_sign[i] * x[aux_col[i]]
            ya[aux_col[i]] = ya.get(aux_col[i], zero) + y[i] * aux_sign[i]
        viol = abs(ax - std.rhs[i])
        if viol > primal:
            primal = viol
    for c in range(res["ncols"]):
        cc = c_full.get(c, zero)
        r = cc - ya.get(c, zero)
        if -r > dual:
            dual = -r
        p = abs(x[c] * r)
        if p > comp:
            comp = p
    # exclude artificial columns from the dual check: they are not part of
    # the standard system; membership test above includes them with c=0 and
    # ya=0 so r=0, harmless.
    neg = zero
    for c in range(res["ncols"]):
        if x[c] < zero and -x[c] > neg:
            neg = -x[c]
    if neg > primal:
        primal = neg

    cx = zero
    for c in range(std.n_struct):
        cx = cx + std.c_std[c] * x[c]
    yb = zero
    for i in range(m):
        yb = yb + y[i] * std.rhs[i]
    gap = abs(cx - yb)
    return {"primal_infeasibility": float(primal),
            "dual_infeasibility": float(dual),
            "complementarity": float(comp),
            "duality_gap": float(gap)}


def solve(lp: LinearProgram, arithmetic: str = "float") -> LpSolution:
    """Solve the program; see the module docstring for the contract."""
    if arithmetic not in ("float", "rational"):
        raise LpModelError(f"arithmetic must be 'float' or 'rational', got {arithmetic!r}")
    exact = arithmetic == "rational"
    conv: Callable[[Number], Number] = Fraction if exact else float
    std = _build_standard(lp, conv)
    res = _solve_exact(std) if exact else _solve_float(std)
    zero = Fraction(0) if exact else 0.0

    def out(v: Number) -> Number:
        return v if exact else float(v)

    if res["status"] == "infeasible":
        y1 = res["farkas_y"]
        user_mult = [zero] * lp.n_constraints
        bound_mult: dict[int, Number] = {}
        for i in range(len(std.rows)):
            val = out(y1[i] * std.flip[i])
            if std.kind[i] == "user":
                user_mult[std.origin[i]] = val
            else:
                bound_mult[std.origin[i]] = val
        farkas = {"constraint_multipliers": user_mult,
                  "bound_multipliers": bound_mult,
                  "phase1_objective": res["phase1_obj"]}
        return LpSolution("infeasible", None, None, None, None,
                          {}, farkas, None, [], res["pivots"], arithmetic)

    if res["status"] == "unbounded":
        d = res["ray_std"]
        ray = [zero] * lp.n_vars
        for j in range(lp.n_vars):
            for col, sgn in std.var_cols[j]:
                ray[j] = ray[j] + sgn * d[col]
        return LpSolution("unbounded", None, None, None, None,
                          {}, None, [out(v) for v in ray],
                          [out(t) for t in res["trace"]], res["pivots"], arithmetic)

    x_std, y = res["x_std"], res["y"]
    x_user = [zero] * lp.n_vars
    for j in range(lp.n_vars):
        if j in std.fixed:
            x_user[j] = std.fixed[j]
            continue
        v = std.var_shift[j]
        for col, sgn in std.var_cols[j]:
            v = v + sgn * x_std[col]
        x_user[j] = out(v)

    obj_min = std.const_min
    for c in range(std.n_struct):
        obj_min = obj_min + std.c_std[c] * x_std[c]
    obj_user = obj_min * std.sense_sign

    yb = zero
    for i in range(len(std.rows)):
        yb = yb + y[i] * std.rhs[i]
    dual_obj_user = (yb + std.const_min) * std.sense_sign

    duals = [zero] * lp.n_constraints
    bound_duals: dict[int, Number] = {}
    for i in range(len(std.rows)):
        val = out(y[i] * std.flip[i] * std.sense_sign)
        if std.kind[i] == "user":
            duals[std.origin[i]] = val
        else:
            bound_duals[std.origin[i]] = val

    residuals = _residuals(std, res, exact)
    trace_user = [out(t * std.sense_sign + std.const_min * std.sense_sign)
                  for t in res["trace"]]
    sol = LpSolution("optimal", out(obj_user), x_user, duals, bound_duals,
                     residuals, None, None, trace_user, res["pivots"], arithmetic,
                     dual_objective=out(dual_obj_user))
    sol._std = {"sense_sign": std.sense_sign, "const_min": std.const_min,
                "yb": yb}
    return sol


def strong_duality_check(lp: LinearProgram, sol: LpSolution) -> dict[str, float]:
    """Recompute both objective values and report the certification gaps.

    The primal objective is rebuilt from ``sol.x`` against the model's own
    coefficients; the dual objective was assembled from the multipliers at
    solve time.  Returns absolute violations; callers compare against their
    own scaled tolerances.
    """
    if sol.status != "optimal":
        raise LpError(f"strong_duality_check needs an optimal solution, got {sol.status}")
    primal = 0
    for j, c in lp.objective.items():
        primal = primal + c * sol.x[j]
    gap = abs(primal - sol.dual_objective)
    out = dict(sol.residuals)
    out["objective_recomputed_gap"] = float(abs(primal - sol.objective))
    out["duality_gap_user"] = float(gap)
    return out


# ---------- text export ----------


def lp_format(lp: LinearProgram) -> str:
    """Render the model in CPLEX LP text form (documented in the README)."""

    def term(c: Number, name: str, first: bool) -> str:
        cf = float(c)
        sign = "-" if cf < 0 else ("" if first else "+")
        mag = abs(cf)
        return f"{sign} {mag:.17g} {name} ".replace("  ", " ")

    lines = ["Maximize" if lp.sense == "max" else "Minimize"]
    obj = " obj:"
    first = True
    for j, c in lp.objective.items():
        obj += " " + term(c, lp.variables[j].name, first).strip()
        first = False
    if first:
        obj += " 0 " + (lp.variables[0].name if lp.variables else "x0")
    lines.append(obj)
    lines.append("Subject To")
    for i, con in enumerate(lp.constraints):
        name = con.name or f"c{i}"
        body = ""
        first = True
        for j, a in con.coeffs:
            body += " " + term(a, lp.variables[j].name, first).strip()
            first = False
        if first:
            body = " 0 " + (lp.variables[0].name if lp.variables else "x0")
        rel = {"<=": "<=", ">=": ">=", "==": "="}[con.relation]
        lines.append(f" {name}:{body} {rel} {float(con.rhs):.17g}")
    lines.append("Bounds")
    for v in lp.variables:
        if v.lb is None and v.ub is None:
            lines.append(f" {v.name} free")
        elif v.lb is None:
            lines.append(f" -inf <= {v.name} <= {float(v.ub):.17g}")
        elif v.ub is None:
            if float(v.lb) != 0.0:
                lines.append(f" {float(v.lb):.17g} <= {v.name}")
        else:
            lines.append(f" {float(v.lb):.17g} <= {v.name} <= {float(v.ub):.17g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
