"""Lattice skeleton: exact times, grids, projection, lift, enumeration."""

from fractions import Fraction as F

import pytest

from motlab.lattice import (ExactTime, LatticeError, LatticeParams,
                            check_membership, discretize_times, enumerate_tree,
                            gap_grid_element, grid_project, in_gap_grid,
                            in_value_grid, interpret_step_path,
                            largest_gap_below, lift, value_grid_points)
from motlab.pathspace import step_path, random_step_path

GRID2 = (F(0), F(1, 2), F(1))


# ---------- exact quadratic times ----------


def test_exact_time_algebra():
    t = ExactTime.make(F(1, 2), F(1, 4), 2)
    u = ExactTime.rational(F(1, 4), 2)
    assert (t + u - t).a == F(1, 4)
    assert t.scale(F(2)).b == F(1, 2)
    assert float(t) == 0.5 + 0.25 * 2 ** 0.5
    assert ExactTime.rational(F(0), 2).is_zero()


def test_exact_time_folds_perfect_squares():
    # b*sqrt(4) is rational: stored with b = 0
    t = ExactTime.make(F(1, 2), F(1, 4), 4)
    assert t.a == 1 and t.b == 0


def test_exact_time_ordering_is_exact():
    # 1/2 + sqrt(2)/4 vs 1/4 + sqrt(2)/2: cannot be decided by float fuzz
    t = ExactTime.make(F(1, 2), F(1, 4), 2)
    u = ExactTime.make(F(1, 4), F(1, 2), 2)
    assert t < u and t <= u and not u < t
    assert ExactTime.rational(F(3, 4), 2) == ExactTime.make(F(3, 4), F(0), 2)
    # rational vs irrational equality is impossible
    assert not ExactTime.rational(F(1), 2) == ExactTime.root_multiple(F(1, 2), 2)


# ---------- gap and value grids ----------


def test_gap_grid_membership():
    mult = gap_grid_element("mult", 3, 2, 2)       # 3 sqrt(2) / 4
    frac = gap_grid_element("frac", 3, 2, 2)       # sqrt(2) / 12
    assert mult.b == F(3, 4) and frac.b == F(1, 12)
    assert in_gap_grid(mult, 2) and in_gap_grid(frac, 2)
    # rational durations never land on the irrational gap grid
    assert not in_gap_grid(ExactTime.rational(F(3, 4), 2), 2)
    assert not in_gap_grid(ExactTime.root_multiple(F(1, 3), 2), 2)


def test_largest_gap_below():
    got = largest_gap_below(2, ExactTime.rational(F(1, 2), 2), True, 64, 2)
    assert got.b == F(1, 4)                        # sqrt(2)/4 ~ 0.3536
    # non-strict at an exact grid point returns the point itself
    same = largest_gap_below(2, gap_grid_element("mult", 1, 2, 2), False, 64, 2)
    assert same.b == F(1, 4)


def test_value_grid():
    assert in_value_grid((F(3, 4),), 2)
    assert not in_value_grid((F(1, 3),), 2)
    assert value_grid_points(1, F(1), 1) == [(F(0),), (F(1, 2),), (F(1),)]
    assert len(value_grid_points(2, F(2), 1)) == 9


# ---------- projection ----------


def test_grid_project_nearest():
    assert grid_project((F(77, 100),), 2) == (F(3, 4),)
    assert grid_project((F(3, 10),), 2) == (F(1, 4),)


def test_grid_project_ties_toward_zero():
    assert grid_project((F(7, 8),), 2) == (F(3, 4),)
    assert grid_project((F(1, 8),), 2) == (F(0),)


def test_grid_project_clips_negative_to_zero():
    assert grid_project((F(-7, 8),), 2) == (F(0),)


def test_grid_project_cap_demotes_up_rounded():
    # 0.70 rounds up to 0.75 which overshoots the cap; demote to 0.5
    assert grid_project((F(7, 10),), 2, cap_norm=F(7, 10)) == (F(1, 2),)
    # 0.77 rounded down already, cap leaves it alone
    assert grid_project((F(77, 100),), 2, cap_norm=F(7, 10)) == (F(3, 4),)


# ---------- adapted time mesh ----------


def test_discretize_times_postconditions():
    w = step_path((1,), [(F(1, 4), (2,)), (F(2, 3), (F(1, 2),))])
    mesh, idx = discretize_times(w, 3, GRID2)
    assert mesh[0] == 0.0 and mesh[-1] == 1.0
    assert all(b > a for a, b in zip(mesh, mesh[1:]))
    for i, t in zip(idx, GRID2):
        assert abs(mesh[i] - float(t)) <= 1e-9     # marginal times pinned
    assert max(b - a for a, b in zip(mesh, mesh[1:])) <= 2 ** -3 + 1e-9


def test_discretize_constant_path_mesh_is_deterministic():
    w = step_path((1,), [])
    m1, i1 = discretize_times(w, 4, GRID2)
    m2, i2 = discretize_times(w, 4, GRID2)
    assert m1 == m2 and i1 == i2


def test_discretize_budget_error():
    w = step_path((1,), [])
    with pytest.raises(LatticeError):
        discretize_times(w, 3, GRID2, step_budget=2)


# ---------- membership validator ----------


def test_membership_accepts_constant_start():
    cand = interpret_step_path(step_path((1,), []), 2, GRID2)
    assert check_membership(cand) == (True, "ok")


def test_membership_requires_all_ones_start():
    cand = interpret_step_path(step_path((F(1, 2),), []), 2, GRID2)
    ok, reason = check_membership(cand)
    assert not ok and "start" in reason


def test_membership_rejects_off_grid_gap():
    cand = interpret_step_path(
        step_path((1,), [(F(1, 3), (F(3, 2),))]), 2, GRID2)
    ok, reason = check_membership(cand)
    assert not ok and "gap grid" in reason


def test_membership_rejects_off_grid_value():
    cand = interpret_step_path(
        step_path((1,), [(F(1, 4), (F(1, 3),))]), 2, GRID2)
    ok, reason = check_membership(cand)
    assert not ok and "grid" in reason


# ---------- lift ----------


@pytest.mark.parametrize("seed", range(0, 40, 3))
def test_lift_lands_in_the_lattice(seed):
    w = random_step_path(seed, rational=True)
    lifted = lift(w, 4, GRID2)
    assert check_membership(lifted) == (True, "ok")
    sp = lifted.as_step_path()
    assert float(sp.sup_norm()) <= float(w.sup_norm()) + 1e-12


def test_lift_constant_path_is_constant():
    lifted = lift(step_path((1,), []), 3, GRID2)
    assert len(set(lifted.values)) == 1
    assert lifted.values[0] == (F(1),)


def test_lift_value_part_idempotent():
    w = random_step_path(23, rational=True)
    l1 = lift(w, 4, GRID2)
    l2 = lift(l1.as_step_path(), 4, GRID2)
    assert l1.values == l2.values
    assert l1.marginal_values() == l2.marginal_values()


def test_lift_marginal_index_brackets_path():
    w = random_step_path(7, rational=True)
    lifted = lift(w, 3, GRID2)
    i0, i1, i2 = lifted.marginal_index
    assert i0 == 0 and i2 == len(lifted.values) - 1
    assert lifted.grid_times == GRID2


# ---------- enumeration ----------


def test_enumerate_tree_eleven_node_regression():
    tree = enumerate_tree(LatticeParams(1, 1, (F(0), F(1)), F(2), 1))
    assert tree.n_nodes == 11
    assert len(tree.leaves) == 5
    terminals = sorted(tree.leaf_step_path(l).value(1)[0] for l in tree.leaves)
    assert terminals == [F(0), F(1, 2), F(1), F(3, 2), F(2)]
    row0 = tree.dump_rows()[0]
    assert row0["parent"] == -1 and row0["time_num"] == 0


def test_enumerate_tree_all_leaves_validate():
    tree = enumerate_tree(LatticeParams(2, 1, (F(0), F(1)), F(2), 2))
    assert tree.n_nodes == 324 and len(tree.leaves) == 153
    for leaf in tree.leaves:
        assert check_membership(tree.leaf_lattice_path(leaf)) == (True, "ok")


def test_enumerate_tree_jmax_zero_is_constant_only():
    tree = enumerate_tree(LatticeParams(2, 1, (F(0), F(1)), F(1), 0))
    assert len(tree.leaves) == 1
    leaf = tree.leaves[0]
    assert tree.leaf_step_path(leaf).jump_times == ()
    assert tree.leaf_step_path(leaf).value(1) == (1,)


def test_enumerate_tree_budget_guard():
    with pytest.raises(LatticeError):
        enumerate_tree(LatticeParams(3, 1, GRID2, F(4), 8, node_budget=50))


def test_params_fit_preconditions():
    with pytest.raises(LatticeError):
        # two sqrt(2)/4 jumps cannot fit in an interval of length 1/3
        LatticeParams(2, 1, (F(0), F(1, 3), F(1)), F(2), 2)
    with pytest.raises(LatticeError):
        LatticeParams(2, 1, GRID2, F(1, 3), 2)       # cap below start point
