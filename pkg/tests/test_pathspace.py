"""Step paths, payoffs, time changes, and the grid Skorokhod distance."""

import math
from fractions import Fraction as F

import pytest

from motlab.pathspace import (NormalizationRecord, PathError, ShiftVector,
                              StepPath, TimeChange, apply_time_change,
                              asian_payoff, backward_shift, basket_call_payoff,
                              custom_payoff, dilate, eval_payoff,
                              example_fixture, forward_shift, late_jump,
                              lookback_max_payoff, marginal_grid_payoff,
                              normalize_payoff, payoff_bounds, ramp_cutoff,
                              random_step_path, rho_T, skorokhod_grid_distance,
                              step_path, three_level_switch, truncate_payoff)

GRID2 = (F(0), F(1, 2), F(1))


# ---------- step paths ----------


def test_step_path_sorts_and_evaluates():
    w = step_path((1,), [(F(3, 4), (3,)), (F(1, 4), (2,))])
    assert w.jump_times == (F(1, 4), F(3, 4))
    assert w.value(0) == (1,)
    assert w.value(F(1, 4)) == (2,)       # right continuous at the jump
    assert w.value(0.7) == (2,)
    assert w.value(1) == (3,)
    assert w.values_at([0, F(1, 4), 1]) == [(1,), (2,), (3,)]


def test_step_path_exact_integral_and_norm():
    w = step_path((1,), [(F(1, 4), (2,)), (F(3, 4), (F(-1, 2),))])
    assert w.integral() == (F(1, 4) * 1 + F(1, 2) * 2 + F(1, 4) * F(-1, 2),)
    assert w.sup_norm() == 2
    assert w.coordinate_running_max(0) == 2


def test_step_path_validation():
    with pytest.raises(PathError):
        step_path((1,), [(F(5, 4), (2,))])            # jump past horizon
    with pytest.raises(PathError):
        step_path((1,), [(F(1, 2), (2, 3))])          # dim mismatch
    with pytest.raises(PathError):
        step_path((1,), [(0, (2,))])                  # jump at time zero


def test_first_hit():
    w = step_path((1,), [(F(1, 4), (3,)), (F(1, 2), (5,))])
    assert w.first_hit(0, 3) == F(1, 4)
    assert w.first_hit(0, 4) == F(1, 2)
    assert w.first_hit(0, 1) == 0
    assert w.first_hit(0, 6) is None


def test_random_step_path_deterministic_and_capped():
    a = random_step_path(17, rational=True)
    b = random_step_path(17, rational=True)
    assert a.x0 == b.x0 and a.jump_times == b.jump_times
    assert a.jump_values == b.jump_values
    assert float(a.sup_norm()) <= 4.0
    for v in a.jump_values:
        assert all(isinstance(c, (F, int)) and c >= 0 for c in v)


# ---------- payoff library ----------


def test_asian_examples():
    xi = asian_payoff(GRID2)
    assert xi(step_path((1,), [])) == 1
    assert xi(step_path((-3,), [])) == 3
    # one third at level 1, two thirds at level 5/2
    w = step_path((1,), [(F(1, 3), (F(5, 2),))])
    assert xi(w) == 2


def test_lookback_example():
    lb = lookback_max_payoff(GRID2)
    w = step_path((1,), [(F(1, 4), (2,)), (F(3, 4), (F(1, 2),))])
    assert lb(w) == 2


def test_basket_call():
    xi = basket_call_payoff(GRID2, (1,), F(3, 2))
    assert xi(step_path((1,), [(F(1, 2), (F(5, 2),))])) == 1
    assert xi(step_path((1,), [])) == 0


def test_marginal_grid_payoff_table():
    table = {((0,), (0,)): F(1), ((0,), (2,)): F(3)}
    xi = marginal_grid_payoff((F(0), F(1)), table)
    assert xi(step_path((0,), [])) == 1
    assert xi(step_path((0,), [(F(1, 2), (2,))])) == 3
    with pytest.raises(PathError):
        xi(step_path((1,), []))               # key not tabulated


def test_eval_payoff_matches_direct_call():
    xi = asian_payoff(GRID2)
    w = random_step_path(3)
    assert eval_payoff(xi, w) == xi(w) == xi.fn(w)


def test_payoff_bounds_rules():
    assert payoff_bounds(asian_payoff(GRID2), 3.0) == (0.0, 3.0)
    assert payoff_bounds(lookback_max_payoff(GRID2), 3.0) == (0.0, 3.0)
    assert payoff_bounds(basket_call_payoff(GRID2, (1,), F(1)), 3.0) == (0.0, 2.0)
    with pytest.raises(PathError):
        payoff_bounds(custom_payoff(GRID2, lambda w: 0), 3.0)


def test_normalize_payoff_maps_to_unit_range():
    xi = asian_payoff(GRID2)
    hat, rec = normalize_payoff(xi, 0.0, 4.0)
    assert rec == NormalizationRecord(0.0, 4.0)
    w = step_path((3,), [])
    assert hat(w) == 0.75
    assert xi.modulus(1.0) == 4 * hat.modulus(1.0)    # modulus rescales too


# ---------- truncation ----------


def test_ramp_cutoff_profile():
    assert ramp_cutoff(F(2), 2) == 1
    assert ramp_cutoff(F(5, 2), 2) == F(1, 2)
    assert ramp_cutoff(3, 2) == 0
    assert ramp_cutoff(F(7, 2), 2) == 0


def test_truncation_pathwise_sandwich():
    xi = asian_payoff((F(0), F(1)))
    xiR = truncate_payoff(xi, 2)
    assert xiR.kind == "asian|truncated"
    assert xiR(step_path((F(3, 2),), [])) == F(3, 2)   # inside the ball: equal
    assert xiR(step_path((3,), [])) == 0               # past R+1: zero
    assert xiR(step_path((F(5, 2),), [])) == F(5, 4)   # halfway down the ramp
    # never above the original and never negative for nonnegative payoffs
    for seed in range(50):
        w = random_step_path(seed, rational=True)
        assert 0 <= xiR(w) <= xi(w)


# ---------- time changes and shifts ----------


def test_time_change_validation_and_eval():
    g = TimeChange(((0.0, 0.0), (0.5, 0.25), (1.0, 1.0)))
    assert g(0.0) == 0.0 and g(0.5) == 0.25 and g(1.0) == 1.0
    assert g(0.25) == 0.125
    with pytest.raises(PathError):
        TimeChange(((0.0, 0.5), (1.0, 0.25)))        # decreasing image
    with pytest.raises(PathError):
        TimeChange(((0.0, 0.0), (0.0, 1.0)))         # repeated abscissa


def test_shift_vector_validation():
    with pytest.raises(PathError):
        ShiftVector((0.5,), GRID2)                   # one eps per interval
    with pytest.raises(PathError):
        ShiftVector((-0.1, 0.1), GRID2)
    with pytest.raises(PathError):
        ShiftVector((0.4, 0.4), GRID2)               # norm >= min step
    assert ShiftVector((0.3, 0.2), GRID2).norm() == math.sqrt(0.13)


def test_forward_shift_single_interval_example():
    g = forward_shift(ShiftVector((0.5,), (F(0), F(1))))
    assert g(0.75) == 0.5
    assert g(0.5) == 0.0 and g(0.25) == 0.0          # frozen start
    assert g(1.0) == 1.0


def test_forward_shift_fixes_grid_times():
    sv = ShiftVector((0.2, 0.1), GRID2)
    g = forward_shift(sv)
    for t in GRID2:
        assert g(float(t)) == float(t)
    h = backward_shift(sv)
    for t in GRID2:
        assert h(float(t)) == float(t)
    assert h(0.3) == 0.5                             # rushed interval


def test_apply_time_change_frozen_start():
    g = forward_shift(ShiftVector((0.2, 0.2), GRID2))
    w = step_path((1,), [(F(3, 5), (3,))])
    out = apply_time_change(w, g)
    assert out.value(F(1, 2)) == (1,)
    assert out.value(0.55) == (1,)                   # still frozen
    assert out.value(1) == (3,)                      # terminal value kept


def test_apply_time_change_keeps_grid_jumps_exact():
    # jumps sitting exactly on non-dyadic grid times must not move by an ulp
    times = (0.0, 1 / 3, 2 / 3, 1.0)
    g = forward_shift(ShiftVector((0.05, 0.05, 0.05), times))
    w = step_path((1,), [(1 / 3, (2,)), (2 / 3, (F(1, 2),))])
    out = apply_time_change(w, g)
    for t in times:
        assert out.value(t) == w.value(t)
    assert 1 / 3 in out.jump_times and 2 / 3 in out.jump_times


def test_apply_time_change_horizon_guard():
    g = TimeChange(((0.0, 0.0), (1.0, 1.5)))
    with pytest.raises(PathError):
        apply_time_change(step_path((1,), []), g)


@pytest.mark.parametrize("seed", range(0, 2000, 97))
def test_shift_preserves_grid_values_and_norm(seed):
    w = random_step_path(seed)
    g = forward_shift(ShiftVector((0.2, 0.1), GRID2))
    out = apply_time_change(w, g)
    for t in GRID2:
        assert out.value(t) == w.value(t)
    assert float(out.sup_norm()) <= float(w.sup_norm()) + 1e-12


def test_payoff_modulus_inequality_bulk():
    # |xi(w) - xi(w o f)| <= alpha(|eps|) (1 + sum |w(t_i)| + int |w|)
    xi = asian_payoff(GRID2)
    checked = 0
    for seed in range(10_000):
        w = random_step_path(seed)
        s = 0.05 + 0.3 * ((seed % 7) / 7.0)
        sv = ShiftVector((s, s / 2), GRID2)
        out = apply_time_change(w, forward_shift(sv))
        lhs = abs(float(xi(w)) - float(xi(out)))
        budget = xi.modulus(sv.norm()) * (
            1 + sum(abs(float(w.value(t)[0])) for t in GRID2)
            + float(w.integral()[0]))
        assert lhs <= budget + 1e-12, seed
        checked += 1
    assert checked == 10_000


# ---------- dilation ----------


def test_dilate_rescales_jump_times():
    w = step_path((0,), [(F(55, 100), (1,))], horizon=F(11, 10))
    d = dilate(w, 0.1)
    assert d.horizon == 1
    assert d.jump_times == (0.5,)
    assert d.sup_norm() == w.sup_norm()
    # change of variables divides the integral by the clock factor
    assert d.integral() == (F(1, 2),)
    assert w.integral()[0] / F(11, 10) == F(1, 2)


def test_dilate_zero_is_identity():
    w = step_path((2,), [(F(1, 4), (3,))])
    d = dilate(w, 0)
    assert d.x0 == w.x0 and d.jump_times == w.jump_times
    with pytest.raises(PathError):
        dilate(w, 0.1)                               # horizon must be 1 + delta


# ---------- grid Skorokhod distance ----------


def test_rho_identical_paths():
    w = random_step_path(5)
    assert rho_T(w, w, GRID2) == 0.0
    assert skorokhod_grid_distance is rho_T or \
        skorokhod_grid_distance(w, w, GRID2) == 0.0


def test_rho_constaccording_parts():
    # sup part + integral part on the single-interval grid
    a, b = step_path((1,), []), step_path((F(7, 4),), [])
    assert rho_T(a, b, (F(0), F(1))) == 1.5


def test_rho_close_jump_times():
    a = step_path((1,), [(F(30, 100), (2,))])
    b = step_path((1,), [(F(31, 100), (2,))])
    # warping 0.01 beats paying the unit value gap; integral adds 0.01
    assert math.isclose(rho_T(a, b, (F(0), F(1))), 0.02, abs_tol=1e-12)


def test_rho_value_gap_when_warp_is_expensive():
    a = step_path((0,), [(F(1, 4), (1,))])
    b = step_path((0,), [])
    # no jump to align against: pay the full value gap, plus the area
    assert rho_T(a, b, (F(0), F(1))) == 1 + F(3, 4)


@pytest.mark.parametrize("seed", range(0, 3000, 233))
def test_rho_dominates_grid_value_gaps(seed):
    a = random_step_path(seed)
    b = random_step_path(seed + 5000)
    d = rho_T(a, b, GRID2)
    for t in GRID2:
        assert abs(float(a.value(t)[0]) - float(b.value(t)[0])) <= d + 1e-9


def test_rho_symmetry():
    a = random_step_path(8)
    b = random_step_path(9)
    assert math.isclose(rho_T(a, b, GRID2), rho_T(b, a, GRID2), abs_tol=1e-12)


# ---------- fixture families ----------


def test_sko_stopo_family():
    fam = example_fixture("sko_stopo", 4)
    assert [wt for _w, wt in fam] == [0.5, 0.25, 0.25]
    down, up_mid, up_top = (w for w, _wt in fam)
    assert down.jump_times == (0.25,) and down.jump_values == ((0,),)
    assert up_mid.jump_times == (0.25, 0.75)
    assert up_mid.jump_values == ((2,), (1,))
    assert up_top.jump_values == ((2,), (3,))


def test_three_level_switch_times_scale_with_n():
    fam = three_level_switch(5)
    down = fam[0][0]
    assert down.jump_times == (0.3,)                 # 1/2 - 1/5
    assert fam[1][0].jump_times == (0.3, 0.7)        # 1/2 +- 1/5
    total = sum(wt for _w, wt in fam)
    assert total == 1.0
    with pytest.raises(PathError):
        three_level_switch(2)


def test_closeness_and_late_jump():
    fam = example_fixture("closeness", 2)
    assert all(w.jump_times == (0.5,) for w, _wt in fam)
    assert {w.jump_values[0][0] for w, _wt in fam} == {1, -1}
    fam2 = late_jump(1)
    assert all(w.jump_times == (1.0,) for w, _wt in fam2)


def test_unknown_fixture_name():
    with pytest.raises(PathError):
        example_fixture("not_a_family", 4)
