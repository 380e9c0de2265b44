import itertools
import random

from hypothesis import given, settings, strategies as st

from abscon.box import Box
from abscon.formula import Imply, Or, Var, conj, disj, eq, gt, holds, le, lt, ne
from abscon.ipc import IPC
from abscon.lattice import FALSE, TRUE, UNKNOWN, Interval, concretize
from abscon.logic import LogicCompletion, lc_closure, lc_interpret
from abscon.oracles import as_keys, random_atom, random_clause, random_domains, solutions
from abscon.search import solve

x, y, z = Var("x"), Var("y"), Var("z")


def lbox(**doms):
    return LogicCompletion(Box({k: Interval(lo, hi) for k, (lo, hi) in doms.items()}))


def lipc(doms):
    return LogicCompletion(IPC(Box({k: Interval(lo, hi) for k, (lo, hi) in doms.items()})))


def test_implication_becomes_one_clause():
    e = lipc({v: (0, 9) for v in "xyz"})
    phi = Imply(conj(gt(x, 4), lt(x, 7)), le(y + z, 4))
    e.interpret(phi)
    assert len(e.clauses) == 1
    (c,) = e.clauses
    assert isinstance(c, Or)
    for p in itertools.product(range(0, 10, 3), repeat=3):
        env = dict(zip("xyz", p))
        assert holds(c, env) == holds(phi, env)


def test_disjunction_is_one_clause():
    e = lbox(x=(0, 9))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    assert len(e.clauses) == 1


def test_atomic_conjunct_goes_to_base():
    e = lbox(x=(0, 9))
    e.interpret(le(x, 3))
    assert e.clauses == ()
    assert e.project("x") == Interval(0, 3)


def test_eval3_examples():
    c = disj(eq(x, 1), eq(x, 2))
    assert lbox(x=(1, 2)).eval3(c) is UNKNOWN
    assert lbox(x=(1, 1)).eval3(c) is TRUE
    assert lbox(x=(5, 9)).eval3(c) is FALSE


def test_unit_propagation_forces_remaining_disjunct():
    e = lbox(x=(2, 9))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    e.closure()
    assert e.project("x") == Interval(2, 2)
    assert e.entailed == [True]
    # enumeration agrees: x = 2 is the only solution
    assert solutions(disj(eq(x, 1), eq(x, 2)), {"x": (2, 9)}) == [{"x": 2}]


def test_two_unknown_disjuncts_leave_base_alone():
    e = lbox(x=(0, 9), y=(0, 9))
    e.interpret(disj(eq(x, 1), eq(y, 2)))
    assert not e.closure()
    assert e.project("x") == Interval(0, 9)
    assert e.state() is UNKNOWN


def test_all_disjuncts_false_fails():
    e = lbox(x=(5, 9))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    e.closure()
    assert e.state() is FALSE


def test_state_examples():
    e = lbox(x=(1, 1))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    e.closure()
    assert e.state() is TRUE


def test_split_on_clause():
    e = lbox(x=(0, 9))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    kids = e.split()
    assert [k.project("x") for k in kids] == [Interval(1, 1), Interval(2, 2)]


def test_split_without_clauses_delegates():
    kids = lbox(x=(0, 3)).split()
    assert [k.project("x") for k in kids] == [Interval(0, 0), Interval(1, 3)]


def test_split_skips_disentailed_disjunct():
    e = lbox(x=(2, 9), y=(0, 9))
    e.interpret(disj(eq(x, 1), disj(eq(y, 3), eq(y, 4))))
    kids = e.split()
    assert len(kids) == 2
    assert all(k.project("x") == Interval(2, 9) for k in kids)


def test_ne_is_expanded_when_the_base_cannot_hold_it():
    e = lbox(x=(0, 4))
    e.interpret(ne(x, 2))
    found, _ = solve(e)
    pts = sorted(p["x"] for f in found for p in concretize(f, ["x"]))
    assert pts == [0, 1, 3, 4]


def test_functional_forms():
    e = lbox(x=(2, 9))
    f = lc_interpret(e, disj(eq(x, 1), eq(x, 2)))
    assert e.clauses == () and len(f.clauses) == 1
    g = lc_closure(f)
    assert f.project("x") == Interval(2, 9) and g.project("x") == Interval(2, 2)


def test_solve_enumerates_disjuncts_in_turn():
    e = lbox(x=(0, 9))
    e.interpret(disj(eq(x, 1), eq(x, 2)))
    found, stats = solve(e)
    assert [f.project("x") for f in found] == [Interval(1, 1), Interval(2, 2)]
    assert stats.status == "Sat"


# -- properties -------------------------------------------------------------

def _problem(seed):
    rng = random.Random(seed)
    names = ["x", "y", "z"][:rng.randint(1, 3)]
    doms = random_domains(rng, names, 0, 5)
    clauses = [random_clause(rng, names) for _ in range(rng.randint(1, 3))]
    return names, doms, clauses


@given(st.integers(0, 10 ** 6))
@settings(max_examples=100, deadline=None)
def test_split_covers_parent(seed):
    names, doms, clauses = _problem(seed)
    e = lipc(doms)
    for c in clauses:
        e.interpret(c)
    kids = e.split()
    if not kids:
        return
    phi = conj(*clauses)
    parent = as_keys(solutions(phi, doms), names)
    union = set()
    for k in kids:
        for p in concretize(k, names):
            if k.contains(p):
                union.add(tuple(p[v] for v in names))
    assert union == parent


@given(st.integers(0, 10 ** 6))
@settings(max_examples=100, deadline=None)
def test_closure_loses_no_solution(seed):
    names, doms, clauses = _problem(seed)
    rng = random.Random(seed + 1)
    extra = random_atom(rng, names, depth=1)
    e = lipc(doms)
    for c in clauses + [extra]:
        e.interpret(c)
    e.closure()
    for p in solutions(conj(*clauses, extra), doms):
        assert all(p[v] in e.project(v) for v in names)
