"""Cadlag step paths, payoff functionals, and time-change machinery.

Paths are piecewise constant and right continuous on ``[0, horizon]`` with
finitely many jumps; all functionals here (sup norm, integrals, payoff
evaluation, the grid Skorokhod distance) are computed exactly on the
segment structure rather than on a sampling mesh.  Arithmetic follows the
input types, so paths built from :class:`fractions.Fraction` coordinates
are evaluated exactly.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

Number = Any


class PathError(ValueError):
    pass


def _as_vec(x: Sequence[Number] | Number, dim: int | None = None) -> tuple[Number, ...]:
    if isinstance(x, (int, float, Fraction)):
        v = (x,)
    else:
        v = tuple(x)
    if dim is not None and len(v) != dim:
        raise PathError(f"expected dim {dim}, got {v}")
    return v


def vec_norm(x: Sequence[Number]) -> Number:
    """Euclidean norm; stays exact (abs) in one dimension."""
    if len(x) == 1:
        return abs(x[0])
    return math.sqrt(sum(float(c) * float(c) for c in x))


@dataclass(frozen=True)
class StepPath:
    """Right-continuous step path t -> value in R^d on [0, horizon]."""

    dim: int
    x0: tuple[Number, ...]
    jump_times: tuple[Number, ...]
    jump_values: tuple[tuple[Number, ...], ...]
    horizon: Number = 1

    def __post_init__(self) -> None:
        if len(self.x0) != self.dim:
            raise PathError(f"x0 {self.x0} does not have dim {self.dim}")
        if len(self.jump_times) != len(self.jump_values):
            raise PathError("jump times and values must have equal length")
        prev = 0
        for t in self.jump_times:
            if not (prev < t <= self.horizon):
                raise PathError(f"jump time {t} out of order or out of range")
            prev = t
        for v in self.jump_values:
            if len(v) != self.dim:
                raise PathError(f"jump value {v} does not have dim {self.dim}")

    # ---------- evaluation ----------

    def value(self, t: Number) -> tuple[Number, ...]:
        if t < 0 or t > self.horizon:
            raise PathError(f"time {t} outside [0, {self.horizon}]")
        i = bisect.bisect_right(self._float_times(), float(t))
        return self.x0 if i == 0 else self.jump_values[i - 1]

    def _float_times(self) -> list[float]:
        return [float(t) for t in self.jump_times]

    def values_at(self, times: Sequence[Number]) -> list[tuple[Number, ...]]:
        return [self.value(t) for t in times]

    def segments(self) -> list[tuple[Number, Number, tuple[Number, ...]]]:
        """List of (start, end, value) covering [0, horizon]."""
        starts = [0] + list(self.jump_times)
        ends = list(self.jump_times) + [self.horizon]
        vals = [self.x0] + list(self.jump_values)
        return list(zip(starts, ends, vals))

    def sup_norm(self) -> Number:
        return max(vec_norm(v) for v in (self.x0,) + self.jump_values)

    def integral(self) -> tuple[Number, ...]:
        """Exact integral of the path over [0, horizon], componentwise."""
        acc = [0] * self.dim
        for s, e, v in self.segments():
            dt = e - s
            for k in range(self.dim):
                acc[k] = acc[k] + v[k] * dt
        return tuple(acc)

    def coordinate_running_max(self, coordinate: int) -> Number:
        return max(v[coordinate] for v in (self.x0,) + self.jump_values)

    def first_hit(self, coordinate: int, level: Number) -> Number | None:
        """First time the given coordinate reaches ``level`` (None if never)."""
        if self.x0[coordinate] >= level:
            return 0
        for t, v in zip(self.jump_times, self.jump_values):
            if v[coordinate] >= level:
                return t
        return None


def step_path(x0: Sequence[Number] | Number,
              jumps: Iterable[tuple[Number, Sequence[Number] | Number]] = (),
              horizon: Number = 1, dim: int | None = None) -> StepPath:
    """Canonical constructor: sorts jumps, keeps the last value per time,
    drops jumps that do not change the value."""
    x0v = _as_vec(x0, dim)
    d = len(x0v)
    by_time: dict[float, tuple[Number, tuple[Number, ...]]] = {}
    for t, v in jumps:
        by_time[float(t)] = (t, _as_vec(v, d))
    times: list[Number] = []
    values: list[tuple[Number, ...]] = []
    cur = x0v
    for _, (t, v) in sorted(by_time.items()):
        if v != cur:
            times.append(t)
            values.append(v)
            cur = v
    return StepPath(d, x0v, tuple(times), tuple(values), horizon)


# ---------- payoffs ----------


@dataclass(frozen=True)
class Payoff:
    """Path functional with its marginal-time grid and shift modulus.

    ``modulus_scale`` encodes the declared modulus alpha(u) = scale * u
    controlling the payoff drift under the forward/backward time shifts;
    ``certified`` records whether that bound is analytic, only empirical,
    or absent.
    """

    kind: str
    times: tuple[float, ...]
    fn: Callable[[StepPath], Number]
    params: dict[str, Any] = field(default_factory=dict)
    modulus_scale: float | None = None
    certified: str | None = None     # "analytic" | "empirical" | None

    def __call__(self, w: StepPath) -> Number:
        return self.fn(w)

    def modulus(self, u: float) -> float:
        if self.modulus_scale is None:
            raise PathError(f"payoff kind {self.kind!r} has no declared modulus")
        return self.modulus_scale * u


def _check_grid(times: Sequence[Number]) -> tuple[float, ...]:
    ts = tuple(float(t) for t in times)
    if len(ts) < 2 or ts[0] != 0.0 or ts[-1] != 1.0:
        raise PathError("marginal grid must run from 0 to 1")
    for a, b in zip(ts, ts[1:]):
        if not b > a:
            raise PathError("marginal grid must be strictly increasing")
    return ts


def asian_payoff(times: Sequence[Number], coordinate: int | None = None) -> Payoff:
    """Average of |path| (or of one coordinate) over [0, 1]."""
    ts = _check_grid(times)
    min_step = min(b - a for a, b in zip(ts, ts[1:]))

    def fn(w: StepPath) -> Number:
        acc = 0
        for s, e, v in w.segments():
            body = abs(v[coordinate]) if coordinate is not None else vec_norm(v)
            acc = acc + body * (e - s)
        return acc

    return Payoff("asian", ts, fn, {"coordinate": coordinate},
                  modulus_scale=1.0 / min_step, certified="analytic")


def lookback_max_payoff(times: Sequence[Number], coordinate: int = 0) -> Payoff:
    """Running maximum of one coordinate; not Lipschitz under time shifts,
    so its shift behavior is certified only empirically."""
    ts = _check_grid(times)

    def fn(w: StepPath) -> Number:
        return w.coordinate_running_max(coordinate)

    return Payoff("lookback_max", ts, fn, {"coordinate": coordinate},
                  modulus_scale=None, certified="empirical")


def basket_call_payoff(times: Sequence[Number], weights: Sequence[Number],
                       strike: Number) -> Payoff:
    """(a . w_1 - K)^+ ; depends on the terminal value only, which every
    admissible time shift fixes, so the drift modulus is zero."""
    ts = _check_grid(times)
    a = tuple(weights)

    def fn(w: StepPath) -> Number:
        v = w.value(w.horizon)
        gain = sum(ai * vi for ai, vi in zip(a, v)) - strike
        return gain if gain > 0 else 0

    return Payoff("basket_call_at_1", ts, fn, {"weights": a, "strike": strike},
                  modulus_scale=0.0, certified="analytic")


def marginal_grid_payoff(times: Sequence[Number],
                         table: dict[tuple, Number]) -> Payoff:
    """Table lookup on the tuple of values at the marginal times.

    Keys are tuples of value tuples; lookups fall back to the nearest key
    within 1e-9 per coordinate so float round trips stay safe.
    """
    ts = _check_grid(times)
    canon: dict[tuple, Number] = {}
    for key, val in table.items():
        canon[tuple(_as_vec(v) for v in key)] = val
    keys = sorted(canon, key=lambda k: tuple(tuple(float(c) for c in v) for v in k))

    def fn(w: StepPath) -> Number:
        key = tuple(w.value(t) for t in ts)
        if key in canon:
            return canon[key]
        kf = tuple(tuple(float(c) for c in v) for v in key)
        for cand in keys:
            cf = tuple(tuple(float(c) for c in v) for v in cand)
            if all(abs(a - b) <= 1e-9 for va, vb in zip(kf, cf)
                   for a, b in zip(va, vb)):
                return canon[cand]
        raise PathError(f"marginal values {kf} not present in the payoff table")

    return Payoff("marginal_grid", ts, fn, {"table": canon},
                  modulus_scale=0.0, certified="analytic")


def custom_payoff(times: Sequence[Number], fn: Callable[[StepPath], Number],
                  modulus_scale: float | None = None,
                  certified: str | None = None, kind: str = "custom") -> Payoff:
    return Payoff(kind, _check_grid(times), fn, {},
                  modulus_scale=modulus_scale, certified=certified)


def payoff_bounds(p: Payoff, cap_norm: float) -> tuple[float, float]:
    """Conservative payoff range over paths with sup norm <= cap_norm."""
    if p.kind.endswith("|truncated"):
        lo, hi = payoff_bounds(p.params["base"], cap_norm)
        return min(lo, 0.0), max(hi, 0.0)
    if p.kind == "asian":
        return 0.0, cap_norm
    if p.kind == "lookback_max":
        return 0.0, cap_norm
    if p.kind == "basket_call_at_1":
        gross = sum(abs(float(a)) for a in p.params["weights"]) * cap_norm
        return 0.0, max(gross - float(p.params["strike"]), 0.0)
    if p.kind == "marginal_grid":
        vals = [float(v) for v in p.params["table"].values()]
        return min(vals), max(vals)
    raise PathError(f"no bound rule for payoff kind {p.kind!r}")


@dataclass(frozen=True)
class NormalizationRecord:
    lo: float
    hi: float

    @property
    def scale(self) -> float:
        return self.hi - self.lo

    def restore(self, value: float) -> float:
        return self.lo + self.scale * value


def normalize_payoff(p: Payoff, lo: float, hi: float) -> tuple[Payoff, NormalizationRecord]:
    """Affine map of the payoff onto [0, 1]; the record undoes it."""
    if not hi > lo:
        raise PathError(f"need hi > lo, got [{lo}, {hi}]")
    scale = hi - lo

    def fn(w: StepPath) -> Number:
        return (p.fn(w) - lo) / scale

    ms = None if p.modulus_scale is None else p.modulus_scale / scale
    q = Payoff(p.kind + "|normalized", p.times, fn,
               {"base": p, "lo": lo, "hi": hi}, ms, p.certified)
    return q, NormalizationRecord(lo, hi)


def ramp_cutoff(x: Number, radius: Number) -> Number:
    """1 on [0, R], linear down to 0 on (R, R+1], 0 beyond."""
    if x <= radius:
        return 1
    if x >= radius + 1:
        return 0
    return radius + 1 - x


def truncate_payoff(p: Payoff, radius: Number) -> Payoff:
    """Multiply the payoff by the sup-norm ramp cutoff at ``radius``.

    Time shifts permute segment values without changing the sup norm, so
    the truncated payoff inherits the declared modulus unchanged.
    """

    def fn(w: StepPath) -> Number:
        c = ramp_cutoff(w.sup_norm(), radius)
        return 0 if c == 0 else p.fn(w) * c

    return Payoff(p.kind + "|truncated", p.times, fn,
                  {"base": p, "radius": radius}, p.modulus_scale, p.certified)


# ---------- time changes ----------


@dataclass(frozen=True)
class TimeChange:
    """Continuous piecewise-linear nondecreasing map of [0, 1] given by knots."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        ks = self.knots
        if len(ks) < 2 or ks[0][0] != 0.0 or ks[-1][0] != 1.0:
            raise PathError("time change must cover [0, 1]")
        for (u0, v0), (u1, v1) in zip(ks, ks[1:]):
            if not u1 > u0:
                raise PathError("knot abscissae must strictly increase")
            if v1 < v0:
                raise PathError("time change must be nondecreasing")

    def __call__(self, t: float) -> float:
        t = float(t)
        ks = self.knots
        if t <= ks[0][0]:
            return ks[0][1]
        for (u0, v0), (u1, v1) in zip(ks, ks[1:]):
            if t <= u1:
                if v1 == v0:
                    return v0
                return v0 + (t - u0) * (v1 - v0) / (u1 - u0)
        return ks[-1][1]


@dataclass(frozen=True)
class ShiftVector:
    """Per-interval shift magnitudes for a marginal grid; |eps| < min step."""

    eps: tuple[float, ...]
    times: tuple[float, ...]

    def __post_init__(self) -> None:
        ts = _check_grid(self.times)
        if len(self.eps) != len(ts) - 1:
            raise PathError("need one shift per grid interval")
        for e in self.eps:
            if e < 0:
                raise PathError("shifts must be nonnegative")
        steps = [b - a for a, b in zip(ts, ts[1:])]
        if self.norm() >= min(steps):
            raise PathError(
                f"|eps| = {self.norm()} must stay below the smallest grid step")

    def norm(self) -> float:
        return math.sqrt(sum(float(e) ** 2 for e in self.eps))


def forward_shift(shift: ShiftVector) -> TimeChange:
    """Freeze each interval start: flat at t_{i-1} for eps_i, then catch up
    linearly so every grid time stays fixed."""
    ts = shift.times
    knots: list[tuple[float, float]] = [(0.0, 0.0)]
    for i, e in enumerate(shift.eps):
        a, b = ts[i], ts[i + 1]
        if e > 0:
            knots.append((a + e, a))
        knots.append((b, b))
    return TimeChange(tuple(knots))


def backward_shift(shift: ShiftVector) -> TimeChange:
    """Rush each interval: reach t_i early by eps_i, then stay flat there."""
    ts = shift.times
    knots: list[tuple[float, float]] = [(0.0, 0.0)]
    for i, e in enumerate(shift.eps):
        a, b = ts[i], ts[i + 1]
        if e > 0:
            knots.append((b - e, b))
        knots.append((b, b))
    return TimeChange(tuple(knots))


def apply_time_change(w: StepPath, g: TimeChange) -> StepPath:
    """Exact composition w o g as a step path on [0, 1].

    Jump times of the output are the preimages of the input's jump times
    under the strictly increasing pieces of ``g``; flat pieces freeze the
    value, so no sampling mesh is involved.
    """
    if float(w.horizon) < g.knots[-1][1] - 1e-15:
        raise PathError("time change exits the path's horizon")
    jt = w._float_times()
    jumps: list[tuple[float, tuple[Number, ...]]] = []
    for (u0, v0), (u1, v1) in zip(g.knots, g.knots[1:]):
        if v1 <= v0:
            continue
        lo = bisect.bisect_right(jt, v0)
        hi = bisect.bisect_right(jt, v1)
        for k in range(lo, hi):
            s = jt[k]
            # Snap piece endpoints exactly: knots sit on the sampling grid,
            # so a jump at a knot must stay at that knot to the last bit.
            if s == v1:
                u = u1
            else:
                u = u0 + (s - v0) * (u1 - u0) / (v1 - v0)
            jumps.append((u, w.jump_values[k]))
    return step_path(w.value(g(0.0)), jumps, horizon=1, dim=w.dim)


# ---------- grid Skorokhod distance ----------


def _j1_interval(a0: tuple, a_jumps: list[tuple[float, tuple]],
                 b0: tuple, b_jumps: list[tuple[float, tuple]]) -> float:
    """J1 distance between two step functions on one closed interval.

    Dynamic program over monotone alignments of the two jump sequences:
    matching a pair of jumps costs their time gap, every visited state pays
    the value gap between the current segment values, and the optimum is
    the min over alignments of the max cost.  For step functions the
    optimal time change is piecewise linear through the matched jump pairs,
    so this is exact.
    """
    xs = [a0] + [v for _, v in a_jumps]
    ys = [b0] + [v for _, v in b_jumps]
    ta = [t for t, _ in a_jumps]
    tb = [t for t, _ in b_jumps]
    p, q = len(ta), len(tb)

    gap = [[float(vec_norm([xi - yi for xi, yi in zip(x, y)]))
            for y in ys] for x in xs]
    INF = float("inf")
    dp = [[INF] * (q + 1) for _ in range(p + 1)]
    dp[0][0] = gap[0][0]
    for i in range(p + 1):
        for j in range(q + 1):
            if i == 0 and j == 0:
                continue
            best = INF
            if i > 0:
                best = min(best, dp[i - 1][j])
            if j > 0:
                best = min(best, dp[i][j - 1])
            if i > 0 and j > 0:
                best = min(best, max(dp[i - 1][j - 1], abs(ta[i - 1] - tb[j - 1])))
            dp[i][j] = max(gap[i][j], best)
    return dp[p][q]


def skorokhod_grid_distance(w1: StepPath, w2: StepPath,
                            times: Sequence[Number]) -> float:
    """Sum of per-interval J1 distances over the marginal grid plus the
    norm of the integral difference.

    Dominates the value discrepancy at every grid time: the final alignment
    state of each interval pays the endpoint value gap.
    """
    ts = _check_grid(times)
    if w1.dim != w2.dim:
        raise PathError("dimension mismatch")
    total = 0.0
    for a, b in zip(ts, ts[1:]):
        ja = [(float(t), v) for t, v in zip(w1.jump_times, w1.jump_values)
              if a < float(t) <= b]
        jb = [(float(t), v) for t, v in zip(w2.jump_times, w2.jump_values)
              if a < float(t) <= b]
        total += _j1_interval(w1.value(a), ja, w2.value(a), jb)
    i1 = w1.integral()
    i2 = w2.integral()
    total += float(vec_norm([float(x) - float(y) for x, y in zip(i1, i2)]))
    return total


rho_T = skorokhod_grid_distance


def eval_payoff(xi: Payoff, w: StepPath) -> Number:
    """Apply a payoff functional to a path."""
    return xi(w)


# ---------- dilation ----------


def dilate(w: StepPath, delta: float) -> StepPath:
    """Compress a path on [0, 1 + delta] onto [0, 1] by scaling the clock."""
    if delta < 0:
        raise PathError("delta must be >= 0")
    if abs(float(w.horizon) - (1.0 + delta)) > 1e-12:
        raise PathError(f"path horizon {w.horizon} is not 1 + delta")
    k = 1.0 + delta
    times = tuple(float(t) / k for t in w.jump_times)
    return StepPath(w.dim, w.x0, times, w.jump_values, 1)


# ---------- fixtures and corpora ----------


def three_level_switch(n: int) -> list[tuple[StepPath, float]]:
    """Weighted paths holding three martingale levels with switch times
    (1/2 - 1/n, 1/2 + 1/n); as n grows the switches merge but every path
    still moves twice with positive probability."""
    if n < 3:
        raise PathError("need n >= 3 so both switch times lie inside (0, 1)")
    t1, t2 = 0.5 - 1.0 / n, 0.5 + 1.0 / n
    fam = []
    for (m1, m2), wgt in (((0, 0), 0.5), ((2, 1), 0.25), ((2, 3), 0.25)):
        fam.append((step_path(1, [(t1, m1), (t2, m2)]), wgt))
    return fam


def late_jump(n: int) -> list[tuple[StepPath, float]]:
    """Paths jumping from 0 to +-1 at time 1/n in (0, 1] with equal weight;
    the limit family jumps at time 0, which no single path can imitate."""
    if n < 1:
        raise PathError("need n >= 1")
    t = 1.0 / n
    return [(step_path(0, [(t, 1)]), 0.5), (step_path(0, [(t, -1)]), 0.5)]


_FIXTURES = {"sko_stopo": three_level_switch,
             "three_level_switch": three_level_switch,
             "closeness": late_jump,
             "late_jump": late_jump}


def example_fixture(name: str, n: int) -> list[tuple[StepPath, float]]:
    try:
        return _FIXTURES[name](n)
    except KeyError:
        raise PathError(f"unknown fixture {name!r}; available: "
                        + ", ".join(sorted(_FIXTURES))) from None


def random_step_path(seed: int, dim: int = 1, max_jumps: int = 6,
                     start: Number = 1, cap: float = 4.0,
                     rational: bool = False, horizon: Number = 1) -> StepPath:
    """Seeded nonnegative step path started at ``start`` (vector of ones by
    default); jump times sit on a grid of 64ths of the horizon so downstream
    stopping-time scans stay short, values follow a clipped random walk.
    With ``rational`` both values and jump times are exact fractions."""
    rng = np.random.default_rng(seed)
    n_jumps = int(rng.integers(0, max_jumps + 1))
    slots = sorted(int(k) + 1 for k in rng.choice(63, size=min(n_jumps, 63),
                                                  replace=False))
    if rational:
        times = [Fraction(k, 64) * Fraction(horizon) for k in slots]
    else:
        times = [k * float(horizon) / 64.0 for k in slots]
    x0 = tuple(Fraction(start) if rational else float(start) for _ in range(dim))
    jumps = []
    cur = list(x0)
    for t in times:
        nxt = []
        for c in cur:
            if rational:
                stepv = Fraction(int(rng.integers(-8, 9)), 8)
                v = c + stepv
                v = max(Fraction(0), min(Fraction(cap), v))
            else:
                v = float(c) + float(rng.normal(0.0, 0.6))
                v = max(0.0, min(cap, v))
            nxt.append(v)
        cur = nxt
        jumps.append((t, tuple(cur)))
    return step_path(x0, jumps, horizon=horizon, dim=dim)
