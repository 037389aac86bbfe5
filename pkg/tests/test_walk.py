import numpy as np
import pytest

from relaxwalk import linprog as lp
from relaxwalk.formulations import InputDomain, Objective, build_region_lp
from relaxwalk.network import random_network
from relaxwalk.walk import (
    ITER_CAP,
    LP_FAILURE,
    NO_IMPROVEMENT,
    STEP_STALL,
    WalkConfig,
    local_search,
    step_correct,
)


def box(lo, hi, n=1):
    return InputDomain(np.full(n, float(lo)), np.full(n, float(hi)))


# -------------------------------------------------------------- step_correct

def test_step_clamped_at_box_edge():
    dom = box(-1.0, 1.0)
    x0 = step_correct(np.array([1.0]), np.array([0.5]), 0.01, dom)
    assert x0[0] == 1.0


def test_step_partial_clamp_2d():
    dom = box(-1.0, 1.0, n=2)
    x0 = step_correct(np.array([0.5, 1.0]), np.array([1.0, 1.0]), 0.01, dom)
    assert np.allclose(x0, [0.51, 1.0])


def test_step_zero_direction():
    dom = box(-1.0, 1.0, n=2)
    x1 = np.array([0.3, -0.2])
    assert np.array_equal(step_correct(x1, np.zeros(2), 0.01, dom), x1)


def test_step_l1_bisection():
    # each single-coordinate move stays inside the ball, the combined one
    # does not, so the step must shrink
    dom = InputDomain(-np.ones(2) * 2, np.ones(2) * 2,
                      l1_anchor=np.zeros(2), l1_radius=1.0)
    x1 = np.array([0.45, 0.45])
    d = np.array([8.0, 8.0])
    x0 = step_correct(x1, d, 0.01, dom)
    assert dom.contains(x0)
    assert np.all(x0 >= x1)  # still a forward move (possibly zero)


# -------------------------------------------------------------- local search

def test_walk_net_abs_from_positive(net_abs):
    res = local_search(net_abs, box(-1.0, 1.0), Objective([1.0]),
                       np.array([0.5]))
    assert res.termination == NO_IMPROVEMENT
    assert res.best_x[0] == pytest.approx(1.0, abs=1e-9)
    assert res.best_value == pytest.approx(1.0, abs=1e-9)
    assert len(res.trace) == 2
    # the literal eps step leaves the box and is corrected back onto it
    assert res.trace[1][0][0] == pytest.approx(1.0, abs=1e-12)


def test_walk_net_abs_from_negative(net_abs):
    res = local_search(net_abs, box(-1.0, 1.0), Objective([1.0]),
                       np.array([-0.5]))
    assert res.best_x[0] == pytest.approx(-1.0, abs=1e-9)
    assert res.best_value == pytest.approx(1.0, abs=1e-9)


def test_walk_fixed_point_single_iteration(net_abs):
    res = local_search(net_abs, box(-1.0, 1.0), Objective([1.0]),
                       np.array([1.0]))
    assert res.termination == NO_IMPROVEMENT
    assert len(res.trace) == 1
    assert res.best_x[0] == 1.0


def test_walk_net_2d_reaches_two(net_2d):
    res = local_search(net_2d, box(-1.0, 1.0, n=2), Objective([1.0]),
                       np.array([0.2, 0.1]))
    assert res.best_value == pytest.approx(2.0, abs=1e-9)
    assert res.best_x[0] == pytest.approx(1.0, abs=1e-9)


def test_walk_step_stall_guard(net_abs):
    cfg = WalkConfig(min_step_norm=1.0)
    res = local_search(net_abs, box(-1.0, 1.0), Objective([1.0]),
                       np.array([0.5]), cfg)
    assert res.termination == STEP_STALL
    assert res.best_value == pytest.approx(1.0, abs=1e-9)


def test_walk_iter_cap(net_abs):
    cfg = WalkConfig(max_iters=1)
    res = local_search(net_abs, box(-1.0, 1.0), Objective([1.0]),
                       np.array([0.5]), cfg)
    assert res.termination == ITER_CAP
    assert res.best_value == pytest.approx(1.0, abs=1e-9)


def test_walk_lp_failure_keeps_best(net_2d):
    cfg = WalkConfig(lp_max_pivots=0)
    x0 = np.array([0.2, 0.1])
    res = local_search(net_2d, box(-1.0, 1.0, n=2), Objective([1.0]), x0, cfg)
    assert res.termination == LP_FAILURE
    assert np.array_equal(res.best_x, x0)


def test_walk_near_boundary_start_reaches_global(net_abs):
    for x0 in (-0.005, 0.005):
        res = local_search(net_abs, box(-1.0, 1.0), Objective([1.0]),
                           np.array([x0]), WalkConfig(eps=0.01))
        assert abs(res.best_x[0]) == pytest.approx(1.0, abs=1e-9)


def test_walk_invariants_on_random_nets():
    rng = np.random.default_rng(6)
    obj = Objective([1.0])
    for seed in range(10):
        net = random_network(2, 2, 4, seed=200 + seed)
        dom = box(-1.0, 1.0, n=2)
        for _ in range(20):
            res = local_search(net, dom, obj, rng.uniform(-1, 1, size=2))
            values = [v for _, _, v in res.trace]
            for a, b in zip(values, values[1:-1]):
                assert b > a + 1e-6  # strictly increasing until the last entry
            # stored best matches a fresh evaluation and stays in the domain
            fresh = obj.value(net, res.best_x)
            assert res.best_value == pytest.approx(fresh, rel=1e-7, abs=1e-12)
            assert dom.contains(res.best_x, tol=1e-7)
            if res.termination == NO_IMPROVEMENT:
                again = lp.solve_lp(
                    build_region_lp(net, res.best_pattern, dom, obj))
                assert again.objective <= res.best_value + 1e-6


def test_walk_config_validation():
    with pytest.raises(ValueError):
        WalkConfig(eps=0.0)
    with pytest.raises(ValueError):
        WalkConfig(improve_tol=0.0)
    with pytest.raises(ValueError):
        WalkConfig(max_iters=0)
