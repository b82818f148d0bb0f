"""Drift-penalized relaxation on finite trees and its compensator algebra."""

from fractions import Fraction as F

import pytest

from motlab.penalized import (SimpleTree, compensator,
                              dn_convergence_experiment, leaf_payoff_values,
                              node_drift_magnitudes, plan_drift,
                              solve_penalized)
from motlab.transport import TransportError

SPLIT = SimpleTree(((1,), (0,), (2,)), (-1, 0, 0))


def test_simple_tree_structure():
    assert SPLIT.n_nodes == 3
    assert SPLIT.leaves == [1, 2]
    assert SPLIT.children[0] == [1, 2] and SPLIT.children[1] == []
    assert SPLIT.depth == [0, 1, 1]
    assert SPLIT.path_to_leaf(2) == [0, 2]
    w = SPLIT.leaf_step_path(1)
    assert w.values_at([0, 1]) == [(1,), (0,)]


def test_simple_tree_root_guard():
    with pytest.raises(TransportError):
        SimpleTree(((1,), (0,)), (0, -1))


def test_leaf_payoff_values_accepts_callable_or_list():
    assert leaf_payoff_values(SPLIT, [F(1, 4), F(3, 4)]) == [F(1, 4), F(3, 4)]
    assert leaf_payoff_values(SPLIT, lambda w: w.value(1)[0]) == [0, 2]


# ---------- penalized solves ----------


def test_constant_one_payoff():
    res = solve_penalized(SPLIT, [1, 1], F(3), arithmetic="rational")
    assert res.status == "optimal"
    assert res.value == 1
    assert res.expected_drift == 0             # balanced split costs nothing


def test_constant_zero_payoff():
    res = solve_penalized(SPLIT, [0, 0], F(3), arithmetic="rational")
    assert res.value == 0 and res.expected_drift == 0


def test_small_penalty_buys_drift():
    res = solve_penalized(SPLIT, [0, 1], F(1, 4), arithmetic="rational")
    assert res.value == F(3, 4)
    assert res.leaf_probs == [F(0), F(1)]      # all mass rides to the payoff
    assert res.node_drifts == {0: F(1)}
    assert res.expected_drift == 1


def test_objective_identity_exact():
    for n in (F(1, 4), F(1, 2), 1, 3):
        res = solve_penalized(SPLIT, [0, 1], n, arithmetic="rational")
        paid = sum(p * z for p, z in zip(res.leaf_probs, [0, 1]))
        assert res.value == paid - n * res.expected_drift
        assert res.expected_drift == plan_drift(SPLIT, res.leaf_probs)


def test_two_leaf_matches_brute_force_scan():
    # single free mass q: value(q) = q - n |2q - 1|
    for n in (F(1, 4), F(1, 2), 1, 2):
        res = solve_penalized(SPLIT, [0, 1], n, arithmetic="rational")
        brute = max(F(k, 10_000) - n * abs(2 * F(k, 10_000) - 1)
                    for k in range(10_001))
        assert abs(float(res.value) - float(brute)) <= 1e-4
        assert res.value == max(1 - n, F(1, 2))


def _random_tree(seed):
    import numpy as np
    rng = np.random.default_rng(seed)
    values = [(F(1),)]
    parent = [-1]
    frontier = [0]
    for _lvl in range(2):
        nxt = []
        for v in frontier:
            k = int(rng.integers(2, 4))
            offs = sorted(F(int(d), 4) for d in
                          rng.choice(range(-3, 4), size=k, replace=False))
            for o in offs:
                values.append((values[v][0] + o,))
                parent.append(v)
                nxt.append(len(values) - 1)
        frontier = nxt
    return SimpleTree(tuple(values), tuple(parent))


@pytest.mark.parametrize("seed", range(8))
def test_penalized_bounds_on_random_trees(seed):
    tree = _random_tree(seed)
    zeta = [min(1, abs(tree.values[leaf][0] - 1)) for leaf in tree.leaves]
    prev = None
    for n in (1, 2, 4):
        res = solve_penalized(tree, zeta, n, arithmetic="rational")
        assert res.status == "optimal"
        # every point-mass plan is feasible, so each leaf lower-bounds the value
        for j, leaf in enumerate(tree.leaves):
            point = [F(int(i == j)) for i in range(len(tree.leaves))]
            assert res.value >= zeta[j] - n * plan_drift(tree, point)
        # identity rearranged: drift bought never exceeds payoff headroom / n
        assert res.expected_drift <= F(1 - res.value, 1) / n
        if prev is not None:
            assert res.value <= prev          # larger penalty, smaller value
        prev = res.value
        rep = compensator(tree, res.leaf_probs)
        assert rep.mean_abs_terminal <= res.expected_drift  # triangle inequality


def test_solution_carries_a_plan():
    res = solve_penalized(SPLIT, [0, 1], F(1, 2), arithmetic="rational")
    assert res.plan is not None
    assert sum(res.plan.weights) == 1
    assert res.lp_solution.status == "optimal"


# ---------- compensators ----------


def test_compensator_forced_upward_move():
    tree = SimpleTree(((1,), (2,)), (-1, 0))
    rep = compensator(tree, [F(1)])
    assert rep.node_increments == {0: (F(-1),)}
    assert rep.leaf_compensators == {1: (F(-1),)}
    assert rep.mean_abs_terminal == 1
    assert rep.worst_martingale_residual == 0  # X + A is exactly a martingale


def test_compensator_vanishes_on_martingale_plan():
    rep = compensator(SPLIT, [F(1, 2), F(1, 2)])
    assert all(all(c == 0 for c in inc) for inc in rep.node_increments.values())
    assert rep.mean_abs_terminal == 0


def test_compensator_partial_drift():
    rep = compensator(SPLIT, [F(1, 4), F(3, 4)])
    assert rep.node_increments == {0: (F(-1, 2),)}
    assert rep.leaf_compensators[1] == (F(-1, 2),)
    assert rep.mean_abs_terminal == F(1, 2)


def test_compensator_skips_zero_mass_branches():
    rep = compensator(SPLIT, [F(0), F(1)])
    assert rep.mean_abs_terminal == 1
    assert rep.worst_martingale_residual == 0


def test_node_drift_magnitudes_match_plan_drift():
    probs = [F(1, 3), F(2, 3)]
    mags = node_drift_magnitudes(SPLIT, probs)
    assert plan_drift(SPLIT, probs) == sum(mags.values())


# ---------- penalty ladder ----------


def test_ladder_monotone_and_reports_n_star():
    tab = dn_convergence_experiment(SPLIT, [0, 1], [F(1, 4), F(1, 2), 1, 2],
                                    arithmetic="rational")
    assert tab["v0"] == F(1, 2)
    vals = [r["value"] for r in tab["rows"]]
    assert vals == [0.75, 0.5, 0.5, 0.5]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert all(v >= float(tab["v0"]) - 1e-12 for v in vals)
    assert tab["n_star"] == 0.5
    gaps = [r["gap_to_V0"] for r in tab["rows"]]
    assert gaps[0] > 0 and all(abs(g) <= 1e-12 for g in gaps[1:])


def test_ladder_n_star_none_when_gap_remains():
    tab = dn_convergence_experiment(SPLIT, [0, 1], [F(1, 8), F(1, 4)],
                                    arithmetic="rational")
    assert tab["n_star"] is None
