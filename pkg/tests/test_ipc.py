import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from abscon.box import Box
from abscon.formula import Var, at, conj, disj, eq, ge, gt, holds, le
from abscon.ipc import IPC, compile_propagator, embed, ipc_closure
from abscon.lattice import (
    FALSE, TRUE, UNKNOWN, Interval, NotSupported, UnregisteredVariable,
)
from abscon.octagon import Octagon
from abscon.oracles import random_atom, random_domains, solutions
from abscon.products import DirectProduct

x, y, z = Var("x"), Var("y"), Var("z")


def ipc(**doms):
    return IPC(Box({k: Interval(lo, hi) for k, (lo, hi) in doms.items()}))


def grid_hulls(phi, doms):
    pts = solutions(phi, doms)
    return {v: Interval(min(p[v] for p in pts), max(p[v] for p in pts)) for v in doms}


def test_interpret_adds_propagators():
    e = ipc(x=(0, 9), y=(0, 9), z=(0, 9))
    assert e.interpret(le(x + y + z, 5))
    assert e.interpret(le(x * y, 5))
    assert len(e.props) == 2
    # the same atom twice is one propagator
    assert not e.interpret(le(x * y, 5))


def test_disjunction_not_supported():
    e = ipc(x=(0, 9))
    assert not e.supports(disj(eq(x, 1), eq(x, 2)))
    with pytest.raises(NotSupported):
        e.interpret(disj(eq(x, 1), eq(x, 2)))


def test_unknown_variable_rejected():
    with pytest.raises(UnregisteredVariable):
        ipc(x=(0, 9)).interpret(le(x + y, 3))


def test_hc4_ge():
    e = ipc(x=(1, 2), y=(2, 3))
    e.interpret(ge(x, y))
    e.closure()
    assert e.project("x") == Interval(2, 2) and e.project("y") == Interval(2, 2)


def test_hc4_sum_matches_grid():
    e = ipc(x=(0, 10), y=(2, 8))
    e.interpret(le(x + y, 5))
    e.closure()
    want = grid_hulls(le(x + y, 5), {"x": (0, 10), "y": (2, 8)})
    assert e.project("x") == want["x"] == Interval(0, 3)
    assert e.project("y") == want["y"] == Interval(2, 5)


def test_hc4_product_with_zero_factor():
    e = ipc(x=(0, 1), y=(0, 100))
    e.interpret(le(x * y, 5))
    e.closure()
    assert e.project("y") == Interval(0, 100)
    assert {"x": 0, "y": 100} in solutions(le(x * y, 5), {"x": (0, 1), "y": (0, 100)})


def test_embed_examples():
    delta = Box({"x": Interval(1, 2)})
    b = Box({"x": Interval(0, 9), "y": Interval(0, 9)})
    assert embed(b, delta) and b.project("x") == Interval(1, 2)
    o = Octagon()
    o.interpret(le(y - z, 3))
    assert not embed(o, delta)
    assert "x" not in o.vars()
    prod = DirectProduct([Box({"x": Interval(0, 9)}), o])
    embed(prod, delta)
    assert prod.components[0].project("x") == Interval(1, 2)
    assert "x" not in o.vars()


def test_c3_over_box_and_octagon():
    doms = {v: (0, 10) for v in "xyz"}
    box = Box({v: Interval(0, 10) for v in "xyz"})
    oct_ = Octagon()
    e = IPC(DirectProduct([box, oct_]))
    e.interpret(at(gt(x, 1), 1))
    e.interpret(at(le(y - z, 3), 2))
    e.interpret(le(x + y + z, 5))
    e.closure()
    assert e.project("x") == Interval(2, 5)
    phi = conj(gt(x, 1), le(y - z, 3), le(x + y + z, 5))
    assert e.project("x") == grid_hulls(phi, doms)["x"]


def test_no_propagators_is_identity():
    e = ipc(x=(0, 4))
    assert not e.closure()
    assert e.project("x") == Interval(0, 4)


def test_contradictory_propagators_fail():
    e = ipc(x=(0, 10))
    e.interpret(le(x, 1))
    e.interpret(ge(x, 2))
    e.closure()
    assert e.state() is FALSE


def test_state_examples():
    e = ipc(x=(0, 1))
    e.interpret(le(x, 5))
    assert e.state() is TRUE
    e = ipc(x=(6, 9))
    e.interpret(le(x, 5))
    assert e.state() is FALSE
    e = ipc(x=(0, 3), y=(2, 5))
    e.interpret(le(x + y, 5))
    assert e.state() is UNKNOWN


def test_ground_false_atom_fails_without_variables():
    e = ipc(x=(0, 3))
    e.interpret(le(x, 5))
    e.add_propagator(compile_propagator(le(Var("x") * 0 + 3, 2)))
    e.closure()
    assert e.state() is FALSE


def test_split_keeps_propagators():
    e = ipc(x=(0, 3), y=(0, 3))
    e.interpret(le(x + y, 4))
    kids = e.split()
    assert len(kids) == 2
    assert all(k.props == e.props for k in kids)


def test_functional_closure_copies():
    e = ipc(x=(0, 10), y=(2, 8))
    e.interpret(le(x + y, 5))
    c = ipc_closure(e)
    assert e.project("x") == Interval(0, 10)
    assert c.project("x") == Interval(0, 3)


def test_closure_is_extensive_and_idempotent():
    e = ipc(x=(0, 10), y=(2, 8), z=(0, 5))
    e.interpret(le(x + y, 5))
    e.interpret(ge(z, x + 1))
    before = e.copy()
    e.closure()
    assert before.leq(e)
    snapshot = {v: e.project(v) for v in "xyz"}
    assert not e.closure()
    assert snapshot == {v: e.project(v) for v in "xyz"}


# -- soundness over random conjunctions --------------------------------------

def _random_case(seed):
    rng = random.Random(seed)
    names = ["a", "b", "c", "d"][:rng.randint(1, 4)]
    doms = random_domains(rng, names, 0, 8)
    atoms = [random_atom(rng, names) for _ in range(rng.randint(1, 4))]
    return names, doms, atoms


def _close(doms, atoms):
    e = IPC(Box({k: Interval(lo, hi) for k, (lo, hi) in doms.items()}))
    for a in atoms:
        e.interpret(a)
    e.closure()
    return e


def _survivors(e, names, doms):
    grid = itertools.product(*(range(lo, hi + 1) for lo, hi in (doms[v] for v in names)))
    return {p for p in grid if all(p[i] in e.project(v) for i, v in enumerate(names))}


@given(st.integers(0, 10 ** 6))
@settings(max_examples=150, deadline=None)
def test_no_solution_lost(seed):
    names, doms, atoms = _random_case(seed)
    e = _close(doms, atoms)
    for p in solutions(conj(*atoms), doms):
        assert all(p[v] in e.project(v) for v in names)
        if e.state() is TRUE:
            assert holds(conj(*atoms), p)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=100, deadline=None)
def test_propagator_order_does_not_change_survivors(seed):
    names, doms, atoms = _random_case(seed)
    fwd = _close(doms, atoms)
    rev = _close(doms, list(reversed(atoms)))
    phi = conj(*atoms)
    sols = {tuple(p[v] for v in names) for p in solutions(phi, doms)}
    # the closures may differ, but both keep exactly the same solutions: all of them
    assert sols <= _survivors(fwd, names, doms)
    assert sols <= _survivors(rev, names, doms)
