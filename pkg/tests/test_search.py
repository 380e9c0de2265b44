import pytest

from abscon.box import Box
from abscon.fjssp import FjsInstance, OBJECTIVE, build_model
from abscon.formula import Var, at, conj, disj, eq, ge, le
from abscon.lattice import INF, InfiniteLowerBound, Interval, concretize
from abscon.logic import LogicCompletion
from abscon.products import SharedProduct
from abscon.search import (
    OPTIMAL, SAT, TIMEOUT, UNSAT, Strategy, dms_branch, minimize, solve,
)
from abscon.selfcheck import D1

x, y = Var("x"), Var("y")


def test_solve_disjunction():
    e = LogicCompletion(Box({"x": Interval(0, 9)}))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    found, stats = solve(e)
    assert [f.project("x").lo for f in found] == [1, 2]
    assert stats.status == SAT and stats.solutions == 2


def test_solve_inconsistent_root():
    found, stats = solve(Box({"x": Interval(3, 1)}))
    assert found == [] and stats.status == UNSAT


def test_solve_c4_counts_twelve_points():
    e = SharedProduct(D1)
    e.interpret(at(conj(ge(x, 0), le(x, 9), ge(y, 0), le(y, 5)), "box"))
    e.interpret(at(disj(eq(x, 0), eq(x, 1)), "lbox"))
    e.interpret(at(le(x * y, 5), "ipc"))
    found, _ = solve(e)
    pts = {(p["x"], p["y"]) for f in found for p in concretize(f, ["x", "y"]) if f.contains(p)}
    brute = {(a, b) for a in range(10) for b in range(6) if a in (0, 1) and a * b <= 5}
    assert pts == brute and len(pts) == 12


def test_solve_respects_max_solutions():
    # a box in state True is one solution however wide; clauses make three
    assert len(solve(Box({"x": Interval(0, 5)}))[0]) == 1
    e = LogicCompletion(Box({"x": Interval(0, 9)}))
    e.interpret(disj(eq(x, 1), eq(x, 2), eq(x, 3)))
    found, stats = solve(e, max_solutions=2)
    assert len(found) == 2 and stats.status == TIMEOUT


def test_dms_phase_order():
    b = Box({"d": Interval(2, 4), "m": Interval(1, 2), "s": Interval(0, 9)})
    left, right = dms_branch(b, Strategy([["d"], ["m"], ["s"]]))
    assert left.project("d") == Interval(2, 2) and right.project("d") == Interval(3, 4)
    assert left.project("m") == Interval(1, 2)


def test_dms_smallest_width_first():
    b = Box({"x": Interval(1, 3), "y": Interval(0, 1)})
    left, _ = dms_branch(b, Strategy([["x", "y"]]))
    assert left.project("y") == Interval(0, 0)
    assert left.project("x") == Interval(1, 3)


def test_dms_delegates_when_fixed():
    e = LogicCompletion(Box({"x": Interval(1, 1), "y": Interval(0, 9)}))
    e.interpret(disj(eq(y, 2), eq(y, 5)))
    kids = dms_branch(e, Strategy([["x"]]))
    assert [k.project("y") for k in kids] == [Interval(2, 2), Interval(5, 5)]


def test_dms_needs_a_finite_lower_bound():
    with pytest.raises(InfiniteLowerBound):
        dms_branch(Box({"x": Interval(-INF, 3)}), Strategy([["x"]]))


def _opt(jobs, n_machines=2):
    inst = FjsInstance(len(jobs), n_machines, jobs)
    out = {}
    for kind in ("fjs1", "fjs2", "box-ipc"):
        m = build_model(kind, inst)
        stats, point = minimize(m.element(), OBJECTIVE, m.strategy, timeout=30)
        assert stats.status == OPTIMAL
        out[kind] = stats.best_objective
    return out


def test_minimize_chain():
    assert set(_opt([[[(1, 3)], [(1, 4)]]], 1).values()) == {7}


def test_minimize_sequencing():
    assert set(_opt([[[(1, 3)]], [[(1, 4)]]], 1).values()) == {7}


def test_minimize_best_alternative():
    assert set(_opt([[[(1, 5), (2, 2)]]]).values()) == {2}


def test_minimize_stats_track_improvements():
    inst = FjsInstance(3, 2, [[[(1, 3), (2, 4)], [(2, 2)]], [[(1, 2)], [(1, 3), (2, 1)]],
                              [[(2, 3)]]])
    m = build_model("fjs1", inst)
    stats, point = minimize(m.element(), OBJECTIVE, m.strategy, timeout=30)
    assert stats.trajectory == sorted(stats.trajectory, reverse=True)
    assert stats.trajectory[-1] == stats.best_objective == point[OBJECTIVE]
    assert stats.nodes_to_best <= stats.nodes


def test_minimize_node_limit_times_out():
    inst = FjsInstance(3, 1, [[[(1, 2)], [(1, 3)]], [[(1, 4)]], [[(1, 1)], [(1, 2)]]])
    m = build_model("fjs2", inst)
    stats, _ = minimize(m.element(), OBJECTIVE, m.strategy, node_limit=5)
    assert stats.status == TIMEOUT and stats.nodes == 5


def test_minimize_unsat_with_tight_horizon():
    inst = FjsInstance(1, 1, [[[(1, 3)], [(1, 4)]]])
    m = build_model("fjs1", inst, h=6)
    stats, point = minimize(m.element(), OBJECTIVE, m.strategy, timeout=30)
    assert stats.status == UNSAT and point is None


def test_minimize_is_deterministic():
    inst = FjsInstance(3, 2, [[[(1, 3), (2, 4)], [(2, 2)]], [[(1, 2)], [(1, 3), (2, 1)]],
                              [[(2, 3)]]])
    runs = []
    for _ in range(2):
        m = build_model("fjs2", inst)
        stats, point = minimize(m.element(), OBJECTIVE, m.strategy, timeout=30)
        runs.append((stats.nodes, stats.trajectory, stats.nodes_to_best, point))
    assert runs[0] == runs[1]
