import numpy as np
import pytest

from relaxwalk import linprog as lp
from lp_oracle import brute_force_max, random_feasible_bounded_lp


def box_lp(c, lo, hi, rows=None, senses=None, rhs=None):
    n = len(c)
    return lp.LpModel(
        c=np.asarray(c, float),
        rows=np.zeros((0, n)) if rows is None else np.asarray(rows, float),
        senses=senses or [],
        rhs=np.zeros(0) if rhs is None else np.asarray(rhs, float),
        lo=np.asarray(lo, float),
        hi=np.asarray(hi, float),
    )


def test_box_optimum():
    out = lp.solve_lp(box_lp([1.0], [-1.0], [1.0]))
    assert out.status == lp.OPTIMAL
    assert out.x[0] == pytest.approx(1.0, abs=1e-9)
    assert out.objective == pytest.approx(1.0, abs=1e-9)


def test_simplex_face():
    model = lp.LpModel(
        c=[1.0, 1.0], rows=[[1.0, 1.0]], senses=[lp.LE], rhs=[1.0],
        lo=[0.0, 0.0], hi=[np.inf, np.inf])
    out = lp.solve_lp(model)
    assert out.status == lp.OPTIMAL
    assert out.objective == pytest.approx(1.0, abs=1e-9)
    # any point of the optimal face is acceptable
    assert out.x[0] + out.x[1] == pytest.approx(1.0, abs=1e-9)


def test_infeasible():
    model = lp.LpModel(
        c=[1.0], rows=[[1.0], [1.0]], senses=[lp.LE, lp.GE], rhs=[0.0, 1.0],
        lo=[-np.inf], hi=[np.inf])
    assert lp.solve_lp(model).status == lp.INFEASIBLE


def test_unbounded():
    model = box_lp([1.0], [0.0], [np.inf])
    assert lp.solve_lp(model).status == lp.UNBOUNDED


def test_iteration_limit_status():
    model = lp.LpModel(
        c=[1.0, 1.0], rows=[[1.0, 2.0], [2.0, 1.0]], senses=[lp.LE, lp.LE],
        rhs=[4.0, 4.0], lo=[0.0, 0.0], hi=[np.inf, np.inf])
    out = lp.solve_lp(model, max_pivots=0)
    assert out.status == lp.ITERATION_LIMIT
    assert out.x is None


def test_equality_rows():
    # max x + y s.t. x + y = 1, x - y <= 0.5, boxes
    model = lp.LpModel(
        c=[1.0, 1.0], rows=[[1.0, 1.0], [1.0, -1.0]], senses=[lp.EQ, lp.LE],
        rhs=[1.0, 0.5], lo=[0.0, 0.0], hi=[2.0, 2.0])
    out = lp.solve_lp(model)
    assert out.status == lp.OPTIMAL
    assert out.objective == pytest.approx(1.0, abs=1e-9)


def test_free_and_upper_only_variables():
    # free var pinned by equality; upper-bounded-only var pushed to its cap
    model = lp.LpModel(
        c=[1.0, 1.0], rows=[[1.0, 0.0]], senses=[lp.EQ], rhs=[-3.5],
        lo=[-np.inf, -np.inf], hi=[np.inf, 2.0])
    out = lp.solve_lp(model)
    assert out.status == lp.OPTIMAL
    assert out.x[0] == pytest.approx(-3.5, abs=1e-9)
    assert out.x[1] == pytest.approx(2.0, abs=1e-9)


def test_fixed_variable_substitution():
    model = box_lp([2.0, 1.0], [1.5, 0.0], [1.5, 1.0])
    out = lp.solve_lp(model)
    assert out.status == lp.OPTIMAL
    assert out.x[0] == 1.5
    assert out.objective == pytest.approx(4.0, abs=1e-9)


def test_crossed_bounds_infeasible():
    model = box_lp([1.0], [1.0], [0.0])
    assert lp.solve_lp(model).status == lp.INFEASIBLE


def test_objective_offset():
    model = box_lp([1.0], [-1.0], [1.0])
    model.objective_offset = 10.0
    out = lp.solve_lp(model)
    assert out.objective == pytest.approx(11.0, abs=1e-9)


def test_verify_solution_reports():
    model = lp.LpModel(c=[1.0], rows=[[1.0]], senses=[lp.LE], rhs=[1.0],
                       lo=[-np.inf], hi=[np.inf])
    ok = lp.verify_solution(model, np.array([1.0]))
    assert ok["feasible"] and ok["max_violation"] == 0.0
    assert ok["objective"] == pytest.approx(1.0)
    bad = lp.verify_solution(model, np.array([1.5]))
    assert not bad["feasible"]
    assert bad["max_violation"] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        lp.verify_solution(model, np.array([1.0, 2.0]))


def test_optimal_outcomes_pass_verify():
    rng = np.random.default_rng(3)
    for _ in range(40):
        model = random_feasible_bounded_lp(rng)
        out = lp.solve_lp(model)
        assert out.status == lp.OPTIMAL
        rep = lp.verify_solution(model, out.x)
        assert rep["feasible"], rep
        assert rep["objective"] == pytest.approx(out.objective, rel=1e-7, abs=1e-9)


def test_matches_vertex_enumeration_oracle():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(60):
        model = random_feasible_bounded_lp(rng)
        ref, _ = brute_force_max(model)
        if ref is None:
            continue
        out = lp.solve_lp(model)
        assert out.status == lp.OPTIMAL
        assert out.objective == pytest.approx(ref, rel=1e-7, abs=1e-7)
        checked += 1
    assert checked >= 50


def test_deterministic_bit_identical():
    rng = np.random.default_rng(5)
    model = random_feasible_bounded_lp(rng)
    a = lp.solve_lp(model)
    b = lp.solve_lp(model)
    assert a.status == b.status == lp.OPTIMAL
    assert a.x.tobytes() == b.x.tobytes()
    assert a.objective == b.objective


def test_model_validation():
    with pytest.raises(ValueError):
        lp.LpModel(c=[], rows=np.zeros((0, 0)), senses=[], rhs=[], lo=[], hi=[])
    with pytest.raises(ValueError):
        lp.LpModel(c=[1.0], rows=[[1.0]], senses=[lp.LE], rhs=[np.inf],
                   lo=[0.0], hi=[1.0])
    with pytest.raises(ValueError):
        lp.LpModel(c=[1.0], rows=[[1.0]], senses=["<"], rhs=[1.0],
                   lo=[0.0], hi=[1.0])


def test_mps_dump_sections():
    model = lp.LpModel(c=[1.0, 0.0], rows=[[1.0, 1.0]], senses=[lp.LE],
                       rhs=[1.0], lo=[0.0, -np.inf], hi=[1.0, np.inf])
    text = lp.format_mps(model, name="T")
    for section in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert section in text
    assert " L  R1" in text
