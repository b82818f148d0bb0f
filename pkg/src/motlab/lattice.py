"""Countable lattice of step paths and exact discretization machinery.

Path values live on dyadic grids ``A(l) = { q 2^-l : q in N^d }`` whose
resolution refines with every jump inside a marginal-grid block; time gaps
between consecutive jumps live on the companion grid
``B(l) = { i sqrt(d) 2^-l } union { sqrt(d) 2^-l / j }``.  Because of the
``sqrt(d)`` factor all time arithmetic happens in the quadratic field
Q[sqrt(d)] with exact rational coefficients, so membership checks are exact
decisions, not tolerance tests.

Main entry points: :func:`grid_project` (value rounding with a sup-norm
guard), :func:`discretize_times` (adapted coarse-graining of a path into
stopping times), :func:`lift` (projection of an arbitrary nonnegative step
path into the lattice), :func:`check_membership`, and
:func:`enumerate_tree` (finite tree of lattice paths under a value cap and
a per-block jump budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .pathspace import StepPath, step_path, vec_norm

Number = Any


class LatticeError(ValueError):
    pass


# ---------- exact times in Q[sqrt(d)] ----------


@dataclass(frozen=True)
class ExactTime:
    """Number a + b sqrt(d) with rational a, b; d = 1 folds into a."""

    a: Fraction
    b: Fraction
    d: int

    @staticmethod
    def make(a: Number, b: Number, d: int) -> "ExactTime":
        a, b = Fraction(a), Fraction(b)
        if d == 1:
            return ExactTime(a + b, Fraction(0), 1)
        root = math.isqrt(d)
        if root * root == d:
            return ExactTime(a + b * root, Fraction(0), d)
        return ExactTime(a, b, d)

    @staticmethod
    def rational(a: Number, d: int) -> "ExactTime":
        return ExactTime.make(a, 0, d)

    @staticmethod
    def root_multiple(b: Number, d: int) -> "ExactTime":
        return ExactTime.make(0, b, d)

    def __add__(self, other: "ExactTime") -> "ExactTime":
        return ExactTime.make(self.a + other.a, self.b + other.b, self.d)

    def __sub__(self, other: "ExactTime") -> "ExactTime":
        return ExactTime.make(self.a - other.a, self.b - other.b, self.d)

    def __mul__(self, other: "ExactTime") -> "ExactTime":
        a = self.a * other.a + self.b * other.b * self.d
        b = self.a * other.b + self.b * other.a
        return ExactTime.make(a, b, self.d)

    def scale(self, r: Number) -> "ExactTime":
        r = Fraction(r)
        return ExactTime.make(self.a * r, self.b * r, self.d)

    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        lhs, rhs = a * a, b * b * self.d
        if a > 0:  # b < 0
            return 1 if lhs > rhs else (-1 if lhs < rhs else 0)
        return 1 if rhs > lhs else (-1 if rhs < lhs else 0)

    def __lt__(self, other: "ExactTime") -> bool:
        return (self - other).sign() < 0

    def __le__(self, other: "ExactTime") -> bool:
        return (self - other).sign() <= 0

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.d)


def _root_coef(t: ExactTime) -> tuple[Fraction, Fraction]:
    """(coefficient of sqrt(d), leftover rational part) for grid tests."""
    if t.d == 1 or math.isqrt(t.d) ** 2 == t.d:
        root = math.isqrt(t.d) if t.d > 1 else 1
        # the root folded into a at construction; undo for the grid test
        return t.a / root, Fraction(0)
    return t.b, t.a


def in_gap_grid(t: ExactTime, level: int) -> bool:
    """Membership of a positive time increment in B(level)."""
    if t.sign() <= 0:
        return False
    coef, rest = _root_coef(t)
    if rest != 0:
        return False
    x = coef * (1 << level)
    return x > 0 and (x.denominator == 1 or x.numerator == 1)


def gap_grid_element(kind: str, k: int, level: int, d: int) -> ExactTime:
    """Element of B(level): kind "mult" gives k sqrt(d) 2^-level, kind
    "frac" gives sqrt(d) 2^-level / k."""
    unit = Fraction(1, 1 << level)
    if kind == "mult":
        return ExactTime.root_multiple(unit * k, d)
    if kind == "frac":
        return ExactTime.root_multiple(unit / k, d)
    raise LatticeError(f"unknown gap grid element kind {kind!r}")


def largest_gap_below(level: int, bound: ExactTime, strict: bool,
                      j_cap: int, d: int) -> ExactTime | None:
    """Largest element of B(level) below ``bound`` (strictly if asked),
    with the fraction family capped at denominator ``j_cap``."""
    if bound.sign() <= 0:
        return None
    unit = gap_grid_element("mult", 1, level, d)

    def ok(x: ExactTime) -> bool:
        s = (x - bound).sign()
        return s < 0 if strict else s <= 0

    fb = float(bound) / float(unit)
    i = max(int(fb), 0)
    while ok(unit.scale(i + 1)):
        i += 1
    while i >= 1 and not ok(unit.scale(i)):
        i -= 1
    best = unit.scale(i) if i >= 1 else None

    # fraction family: largest is unit / j for the smallest admissible j
    j = max(int(1.0 / fb) if fb > 0 else j_cap, 1)
    while j > 1 and ok(unit.scale(Fraction(1, j - 1))):
        j -= 1
    while j <= j_cap and not ok(unit.scale(Fraction(1, j))):
        j += 1
    if j <= j_cap:
        cand = unit.scale(Fraction(1, j))
        if best is None or (best - cand).sign() < 0:
            best = cand
    return best


# ---------- value grid ----------


def in_value_grid(v: Sequence[Fraction], level: int) -> bool:
    for c in v:
        if c < 0:
            return False
        x = Fraction(c) * (1 << level)
        if x.denominator != 1:
            return False
    return True


def grid_project(x: Sequence[Number], level: int,
                 cap_norm: Number | None = None) -> tuple[Fraction, ...]:
    """Componentwise nearest point of A(level), ties toward zero, clipped
    at zero.

    With ``cap_norm`` the rounding never increases the Euclidean norm past
    the cap: if nearest rounding overshoots, every coordinate that was
    rounded up is rounded down instead, which lands at or below the input
    norm.
    """
    scale = 1 << level
    scaled = [Fraction(c) * scale for c in x]
    qs = []
    for s in scaled:
        q = (s + Fraction(1, 2)).__floor__()
        if Fraction(q) - s == Fraction(1, 2):
            q -= 1  # exact tie: round toward zero
        qs.append(max(q, 0))
    if cap_norm is not None:
        cap_sq = Fraction(cap_norm) ** 2
        norm_sq = sum((Fraction(q, scale)) ** 2 for q in qs)
        if norm_sq > cap_sq:
            qs = [min(q, s.__floor__()) if Fraction(q) > s else q
                  for q, s in zip(qs, scaled)]
            qs = [max(q, 0) for q in qs]
    return tuple(Fraction(q, scale) for q in qs)


# ---------- adapted coarse-graining of stopping times ----------


def discretize_times(w: StepPath, n: int, times: Sequence[Number],
                     step_budget: int = 1_000_000) -> tuple[list[float], list[int]]:
    """Stopping times (as floats) scanning the path's segment structure.

    Within each marginal-grid block the next stopping time is the earliest
    of: the block end, the previous time plus the previous gap (gaps start
    at ``sqrt(d) 2^-n`` and never grow inside a block), and the first jump
    that moves the path ``2^-n`` or more away from its value at the last
    stopping time.  Returns the time list and the indices of the block
    boundaries inside it.
    """
    grid = [float(t) for t in times]
    if grid[0] != 0.0 or grid[-1] != 1.0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise LatticeError("marginal grid must increase from 0 to 1")
    theta = 2.0 ** (-n)
    unit = math.sqrt(w.dim) * theta
    jt = [float(t) for t in w.jump_times]
    taus = [0.0]
    K = [0]
    steps = 0
    for t_lo, t_hi in zip(grid, grid[1:]):
        gap = unit
        while taus[-1] < t_hi:
            cur = taus[-1]
            x_cur = w.value(cur)
            move = None
            for u, v in zip(jt, w.jump_values):
                if u <= cur:
                    continue
                if u >= t_hi:
                    break
                if float(vec_norm([vi - xi for vi, xi in zip(v, x_cur)])) >= theta:
                    move = u
                    break
            nxt = min(t_hi, cur + gap)
            # snap within float dust so capped steps that land a hair short
            # of a jump or the block end do not spawn microscopic gaps
            if move is not None and move < nxt + 1e-9:
                nxt = move
            elif t_hi - nxt < 1e-9:
                nxt = t_hi
            gap = nxt - cur
            taus.append(nxt)
            steps += 1
            if steps > step_budget:
                raise LatticeError(
                    f"stopping-time budget {step_budget} exhausted at t={cur}")
        K.append(len(taus) - 1)
    return taus, K


# ---------- lattice paths ----------


@dataclass(frozen=True)
class LatticePath:
    """Member of the lattice path space with its structural certificate.

    ``times`` are exact; ``marginal_index[i]`` locates grid time i inside
    ``times``.  Between marginal indices, position j in a block carries
    value-grid level ``n + j`` and its incoming gap must lie in
    ``B(n + j)``; the final position of a block repeats the value taken at
    the next marginal time (paths are continuous at marginal times).
    """

    n: int
    dim: int
    grid_times: tuple[Fraction, ...]
    times: tuple[ExactTime, ...]
    values: tuple[tuple[Fraction, ...], ...]
    marginal_index: tuple[int, ...]

    def as_step_path(self) -> StepPath:
        t0 = self.values[0]
        jumps = []
        cur = t0
        for t, v in zip(self.times[1:], self.values[1:]):
            if v != cur:
                jumps.append((float(t), v))
                cur = v
        return step_path(t0, jumps, horizon=1, dim=self.dim)

    def marginal_values(self) -> list[tuple[Fraction, ...]]:
        return [self.values[i] for i in self.marginal_index]


def check_membership(path: LatticePath) -> tuple[bool, str]:
    """Exact structural membership test; returns (ok, first failing reason)."""
    n, d = path.n, path.dim
    ts, vs, mi = path.times, path.values, path.marginal_index
    if len(ts) != len(vs):
        return False, "times and values length mismatch"
    if len(mi) != len(path.grid_times):
        return False, "marginal index length mismatch"
    if not ts[0].is_zero():
        return False, "first time is not 0"
    for k in range(1, len(ts)):
        if not (ts[k - 1] < ts[k]):
            return False, f"times not strictly increasing at position {k}"
    for i, t in zip(mi, path.grid_times):
        if (ts[i] - ExactTime.rational(t, d)).sign() != 0:
            return False, f"marginal time {t} missing at its index"
    if mi[0] != 0 or mi[-1] != len(ts) - 1:
        return False, "marginal times must bracket the sequence"
    if vs[0] != tuple(Fraction(1) for _ in range(d)):
        return False, "path must start at the all-ones point"
    for v in vs:
        if len(v) != d:
            return False, "value dimension mismatch"
        if any(c < 0 for c in v):
            return False, "negative value coordinate"
    for i in mi:
        if not in_value_grid(vs[i], n):
            return False, f"marginal value {vs[i]} not on the level-{n} grid"
    for blk in range(len(mi) - 1):
        lo, hi = mi[blk], mi[blk + 1]
        J = hi - lo - 1  # positions strictly inside the block
        if J == 0:
            if vs[hi] != vs[lo]:
                return False, (f"block {blk} has no interior positions but "
                               "changes value")
            continue
        for j in range(1, J + 1):
            pos = lo + j
            inc = ts[pos] - ts[pos - 1]
            if not in_gap_grid(inc, n + j):
                return False, (f"gap into position {pos} not on the "
                               f"level-{n + j} gap grid")
            if not in_value_grid(vs[pos], n + j):
                return False, (f"value at position {pos} not on the "
                               f"level-{n + j} value grid")
        if vs[hi - 1] != vs[hi]:
            return False, (f"block {blk} must hold its terminal value on the "
                           "final stretch")
    return True, "ok"


def interpret_step_path(w: StepPath, n: int,
                        times: Sequence[Number]) -> LatticePath:
    """Read a raw step path as a lattice-path candidate for the validator.

    Positions are reconstructed at every marginal grid time and every jump
    time (values held between them), so constant stretches need no explicit
    jump.  Times must convert to exact rationals; the result carries no
    membership guarantee, pass it to :func:`check_membership`.
    """
    d = w.dim
    grid = tuple(Fraction(t) for t in times)
    if float(w.horizon) != 1.0:
        raise LatticeError(f"lattice paths live on [0, 1], got horizon "
                           f"{w.horizon}")
    seq = sorted({Fraction(0), *grid, *(Fraction(t) for t in w.jump_times)})
    vals = tuple(tuple(Fraction(c) for c in w.value(float(t))) for t in seq)
    mi = tuple(seq.index(g) for g in grid)
    return LatticePath(n, d, grid,
                       tuple(ExactTime.rational(t, d) for t in seq),
                       vals, mi)


def lift(w: StepPath, n: int, times: Sequence[Number],
         j_cap: int | None = None) -> LatticePath:
    """Project a nonnegative step path started anywhere into the lattice.

    Follows the adapted stopping times of :func:`discretize_times`; values
    are grid projections at refining levels under the path's own sup-norm
    cap, and the stopping times are transported onto gap-grid elements,
    shrunk just enough that every block fits strictly inside its marginal
    interval.
    """
    d = w.dim
    if j_cap is None:
        j_cap = 1 << (n + 6)
    for v in (w.x0,) + w.jump_values:
        if any(float(c) < 0 for c in v):
            raise LatticeError("lift needs nonnegative paths")
    grid_times = [Fraction(t) for t in times]
    taus, K = discretize_times(w, n, times)
    sup = w.sup_norm()
    unit = ExactTime.root_multiple(Fraction(1, 1 << n), d)

    out_times: list[ExactTime] = [ExactTime.rational(0, d)]
    out_values: list[tuple[Fraction, ...]] = [grid_project(w.value(0.0), n, sup)]
    marginal_index = [0]

    for blk in range(len(grid_times) - 1):
        t_lo, t_hi = grid_times[blk], grid_times[blk + 1]
        end_exact = ExactTime.rational(t_hi, d)
        lo, hi = K[blk], K[blk + 1]
        J = hi - lo                      # hatted in-block positions
        block_len = Fraction(t_hi - t_lo)
        shrink = ExactTime.make(1, 0, d) - ExactTime.root_multiple(
            Fraction(1, 1 << n) / block_len, d)
        v_next_marginal = grid_project(w.value(float(t_hi)), n, sup)

        cur = ExactTime.rational(t_lo, d)
        placed = 0
        for j in range(1, J + 1):
            level = n + j
            if j == 1:
                inc = unit  # = 2 * sqrt(d) 2^-(n+1), on the level-(n+1) grid
            else:
                raw_gap = taus[lo + j - 1] - taus[lo + j - 2]
                g = largest_gap_below(level, ExactTime.rational(Fraction(raw_gap), d),
                                      strict=True, j_cap=j_cap, d=d)
                if g is None:
                    g = gap_grid_element("frac", j_cap, level, d)
                target = shrink * g
                inc = largest_gap_below(level, target, strict=False,
                                        j_cap=j_cap, d=d)
                if inc is None:
                    inc = gap_grid_element("frac", j_cap, level, d)
            if not (cur + inc < end_exact):
                break  # no room: truncate the block here
            cur = cur + inc
            placed += 1
            if j == J:
                out_values.append(v_next_marginal)
            else:
                out_values.append(grid_project(w.value(taus[lo + j]), level, sup))
            out_times.append(cur)
        if placed < J:
            # truncated block: the shrink factor rules this out unless the
            # gap grid ran out of small elements under j_cap; repair so the
            # result is still a lattice member
            if placed + 1 <= J and cur + unit < end_exact:
                cur = cur + unit
                placed += 1
                out_times.append(cur)
                out_values.append(v_next_marginal)
            elif placed == 0:
                v_next_marginal = out_values[-1]
            else:
                out_values[-1] = v_next_marginal
        out_times.append(end_exact)
        out_values.append(v_next_marginal)
        marginal_index.append(len(out_times) - 1)

    return LatticePath(n, d, tuple(grid_times), tuple(out_times),
                       tuple(out_values), tuple(marginal_index))


# ---------- finite tree enumeration ----------


@dataclass(frozen=True)
class LatticeParams:
    n: int
    dim: int
    times: tuple[Fraction, ...]
    cap: Fraction                 # value coordinates stay in [0, cap]
    j_max: int                    # jump positions per block
    node_budget: int = 200_000

    def __post_init__(self) -> None:
        ts = self.times
        if len(ts) < 2 or ts[0] != 0 or ts[-1] != 1:
            raise LatticeError("marginal grid must run from 0 to 1")
        for a, b in zip(ts, ts[1:]):
            if not b > a:
                raise LatticeError("marginal grid must increase")
        if self.cap < 1:
            raise LatticeError("cap must be >= 1 so the start point fits")
        if self.j_max < 0:
            raise LatticeError("j_max must be >= 0")
        min_step = min(b - a for a, b in zip(ts, ts[1:]))
        span = ExactTime.root_multiple(Fraction(self.j_max, 1 << self.n), self.dim)
        if not (span < ExactTime.rational(min_step, self.dim)):
            raise LatticeError(
                f"j_max {self.j_max} jumps of size sqrt(d) 2^-{self.n} do not "
                f"fit inside the smallest marginal interval {min_step}")


def value_grid_points(level: int, cap: Fraction, dim: int) -> list[tuple[Fraction, ...]]:
    """All points of A(level) inside [0, cap]^dim, lexicographically sorted."""
    scale = 1 << level
    top = (Fraction(cap) * scale).__floor__()
    axis = [Fraction(q, scale) for q in range(top + 1)]
    pts: list[tuple[Fraction, ...]] = [()]
    for _ in range(dim):
        pts = [p + (a,) for p in pts for a in axis]
    return pts


@dataclass
class LatticeTree:
    """Complete tree of lattice paths under (cap, j_max), breadth-first ids.

    Depth levels follow the canonical block partition: marginal time t_i,
    then ``j_max`` interior positions at gaps ``sqrt(d) 2^-n``, then the
    next marginal time (whose node repeats the final interior value, since
    lattice paths are continuous at marginal times).
    """

    params: LatticeParams
    depth_times: list[ExactTime]
    depth_kind: list[str]                  # "marginal" | "interior"
    depth_level: list[int]                 # value-grid level at that depth
    marginal_depths: list[int]
    parent: list[int]
    depth: list[int]
    values: list[tuple[Fraction, ...]]
    children: list[list[int]]

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def leaves(self) -> list[int]:
        last = len(self.depth_times) - 1
        return [i for i in range(self.n_nodes) if self.depth[i] == last]

    def path_to_leaf(self, leaf: int) -> list[int]:
        seq = [leaf]
        while self.parent[seq[-1]] >= 0:
            seq.append(self.parent[seq[-1]])
        return list(reversed(seq))

    def leaf_step_path(self, leaf: int) -> StepPath:
        ids = self.path_to_leaf(leaf)
        x0 = self.values[ids[0]]
        jumps = []
        cur = x0
        for i in ids[1:]:
            v = self.values[i]
            if v != cur:
                jumps.append((float(self.depth_times[self.depth[i]]), v))
                cur = v
        return step_path(x0, jumps, horizon=1, dim=self.params.dim)

    def leaf_lattice_path(self, leaf: int) -> LatticePath:
        ids = self.path_to_leaf(leaf)
        times = [self.depth_times[self.depth[i]] for i in ids]
        values = [self.values[i] for i in ids]
        mi = tuple(pos for pos, i in enumerate(ids)
                   if self.depth[i] in self.marginal_depths)
        return LatticePath(self.params.n, self.params.dim, self.params.times,
                           tuple(times), tuple(values), mi)

    def dump_rows(self) -> list[dict[str, Any]]:
        """Flat node list for the tree dump file format."""
        rows = []
        for i in range(self.n_nodes):
            t = self.depth_times[self.depth[i]]
            coef, rest = _root_coef(t) if t.d > 1 else (Fraction(0), t.a)
            level = self.depth_level[self.depth[i]]
            scale = 1 << level
            row = {
                "id": i,
                "parent": self.parent[i],
                "time_num": rest.numerator if t.d > 1 else t.a.numerator,
                "time_den": rest.denominator if t.d > 1 else t.a.denominator,
                "value_q": [int(c * scale) for c in self.values[i]],
                "value_den": scale,
                "level": self.depth[i],
            }
            if t.d > 1:
                row["time_root_num"] = coef.numerator
                row["time_root_den"] = coef.denominator
            rows.append(row)
        return rows


def enumerate_tree(params: LatticeParams) -> LatticeTree:
    """Build the complete tree; raises on exceeding the node budget."""
    d = params.dim
    unit = ExactTime.root_multiple(Fraction(1, 1 << params.n), d)

    depth_times: list[ExactTime] = [ExactTime.rational(0, d)]
    depth_kind = ["marginal"]
    depth_level = [params.n]
    marginal_depths = [0]
    for blk in range(len(params.times) - 1):
        anchor = ExactTime.rational(params.times[blk], d)
        for j in range(1, params.j_max + 1):
            depth_times.append(anchor + unit.scale(j))
            depth_kind.append("interior")
            depth_level.append(params.n + j)
        depth_times.append(ExactTime.rational(params.times[blk + 1], d))
        depth_kind.append("marginal")
        depth_level.append(params.n)
        marginal_depths.append(len(depth_times) - 1)

    choice_sets: list[list[tuple[Fraction, ...]] | None] = [None]
    for blk in range(len(params.times) - 1):
        for j in range(1, params.j_max + 1):
            if j == params.j_max:
                # final interior value must equal the next marginal value,
                # which lives on the coarse level-n grid
                choice_sets.append(value_grid_points(params.n, params.cap, d))
            else:
                choice_sets.append(value_grid_points(params.n + j, params.cap, d))
        choice_sets.append(None)  # marginal node repeats the value

    one = tuple(Fraction(1) for _ in range(d))
    parent = [-1]
    depth = [0]
    values: list[tuple[Fraction, ...]] = [one]
    children: list[list[int]] = [[]]
    frontier = [0]
    for lvl in range(1, len(depth_times)):
        choices = choice_sets[lvl]
        nxt: list[int] = []
        for node in frontier:
            opts = [values[node]] if choices is None else choices
            for v in opts:
                nid = len(parent)
                if nid >= params.node_budget:
                    raise LatticeError(
                        f"node budget {params.node_budget} exceeded at depth {lvl}")
                parent.append(node)
                depth.append(lvl)
                values.append(v)
                children.append([])
                children[node].append(nid)
                nxt.append(nid)
        frontier = nxt
    return LatticeTree(params, depth_times, depth_kind, depth_level,
                       marginal_depths, parent, depth, values, children)
