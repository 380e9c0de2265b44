import random

import pytest
from hypothesis import given, settings, strategies as st

from abscon.box import Box
from abscon.formula import Var, at, conj, disj, eq, ge, gt, le, lt
from abscon.ipc import IPC
from abscon.lattice import (
    FALSE, TRUE, UNKNOWN, AmbiguousTarget, Interval, NotSupported,
)
from abscon.octagon import Octagon
from abscon.oracles import solutions
from abscon.products import (
    BOX, OCT, ArityMismatch, DelayedProduct, DirectProduct, ForwardReference, IPCK,
    KindMismatch, L, MissingAnnotation, SharedDecl, SharedProduct, UnknownComponentName,
    UnknownDependency, delayed_closure, rho_reduce, shared_closure, shared_interpret,
)
from abscon.selfcheck import D1, d1_element, d1_inputs, same_information

x, y, z, s, s2 = Var("x"), Var("y"), Var("z"), Var("s"), Var("s2")


# -- direct product -----------------------------------------------------------

def test_direct_routing_by_index():
    box, o = Box(), Octagon()
    p = DirectProduct([box, o])
    p.interpret(at(conj(gt(x, 4), lt(x, 7)), 1))
    p.interpret(at(le(y + z, 4), 2))
    assert box.project("x") == Interval(5, 6)
    assert "x" not in o.vars() and o.vars() == {"y", "z"}


def test_direct_unannotated_ambiguous():
    p = DirectProduct([Box(), Octagon()])
    with pytest.raises(AmbiguousTarget):
        p.interpret(gt(x, 4))


def test_direct_unknown_label():
    p = DirectProduct([Box()], labels=["box"])
    with pytest.raises(UnknownComponentName):
        p.interpret(at(gt(x, 4), "nosuch"))
    with pytest.raises(UnknownComponentName):
        p.interpret(at(gt(x, 4), 3))


def test_direct_state_is_conjunction():
    b = Box({"x": Interval(0, 3)})
    e = IPC(Box({"y": Interval(0, 3)}))
    e.interpret(le(y, 5))
    assert DirectProduct([b, e]).state() is TRUE
    e.interpret(le(y * y, 4))
    assert DirectProduct([b, e]).state() is UNKNOWN


# -- delayed product -----------------------------------------------------------

def _dp(x_range, trace=None):
    box = Box({"x": Interval(*x_range), "y": Interval(0, 10), "z": Interval(0, 10)})
    o = Octagon()
    o.interpret(conj(ge(y, 0), le(y, 10), ge(z, 0), le(z, 10)))
    return DelayedProduct(IPC(DirectProduct([box, o])), o, trace=trace), o


def test_delayed_routing():
    dp, o = _dp((0, 10))
    dp.interpret(le(y - z, 3))
    assert dp.table == {}
    dp.interpret(le(x + y + z, 5))
    assert dp.pending() == [le(x + y + z, 5)]
    with pytest.raises(NotSupported):
        dp.interpret(disj(eq(x, 1), eq(x, 2)))


def test_transfer_once_fixed():
    dp, o = _dp((2, 2))
    dp.interpret(le(x + y + z, 5))
    dp.closure()
    assert dp.pending() == []
    # the octagon now holds y + z <= 3
    assert o.contains({"y": 1, "z": 2})
    assert not o.contains({"y": 2, "z": 2})


def test_relaxation_while_pending():
    trace = []
    dp, o = _dp((1, 4), trace)
    dp.interpret(le(x + y + z, 5))
    dp.closure()
    assert dp.pending() == [le(x + y + z, 5)]
    assert o.contains({"y": 2, "z": 2}) and not o.contains({"y": 3, "z": 2})
    assert trace and trace[0][1]["x"] == (1, 4)


def test_no_finite_bound_no_transfer():
    box = Box({v: Interval(0, 10) for v in "xyz"})
    o = Octagon()
    dp = DelayedProduct(IPC(box), o)
    dp.interpret(le(x + y + z, 5))
    dp.closure()
    assert o.vars() == set()
    assert dp.pending() == [le(x + y + z, 5)]


def test_delayed_state():
    dp, o = _dp((0, 0))
    assert dp.state() is TRUE
    o.interpret(conj(ge(y, 5), le(y, 4)))
    o.close()
    assert dp.state() is FALSE


def test_delayed_functional_closure():
    dp, o = _dp((2, 2))
    dp.interpret(le(x + y + z, 5))
    out = delayed_closure(dp)
    assert dp.pending() and not out.pending()


# -- shared product -------------------------------------------------------------

def test_d1_shares_the_box():
    e = SharedProduct(D1)
    assert list(e.components) == ["box", "lbox", "ipc"]
    assert e["lbox"].base is e["box"] and e["ipc"].base is e["box"]


def test_private_dependencies_do_not_share():
    d2 = [SharedDecl("box", BOX), SharedDecl("lbox", L(BOX)), SharedDecl("ipc", IPCK(BOX))]
    e = SharedProduct(d2)
    assert e["lbox"].base is not e["box"] and e["ipc"].base is not e["lbox"].base


def test_declaration_errors():
    with pytest.raises(ForwardReference):
        SharedProduct([SharedDecl("lbox", L(BOX), ("box",)), SharedDecl("box", BOX)])
    with pytest.raises(UnknownDependency):
        SharedProduct([SharedDecl("lbox", L(BOX), ("nope",))])
    with pytest.raises(ArityMismatch):
        SharedProduct([SharedDecl("box", BOX), SharedDecl("lbox", L(BOX), ("box", "box"))])
    with pytest.raises(KindMismatch):
        SharedProduct([SharedDecl("oct", OCT), SharedDecl("lbox", L(BOX), ("oct",))])
    with pytest.raises(ValueError):
        SharedProduct([SharedDecl("box", BOX)], mode="copy")


def test_shared_routing():
    e = SharedProduct([SharedDecl("box", BOX), SharedDecl("oct", OCT)])
    e.interpret(at(gt(x, 1), "box"))
    e.interpret(at(le(s + 3, s2), "oct"))
    assert e["box"].project("x").lo == 2
    assert e["oct"].vars() == {"s", "s2"}
    with pytest.raises(UnknownComponentName):
        e.interpret(at(gt(x, 1), "nosuch"))
    with pytest.raises(MissingAnnotation):
        e.interpret(gt(x, 1))
    assert shared_interpret(e, at(gt(x, 5), "box"))["box"].project("x").lo == 6
    assert e["box"].project("x").lo == 2


def test_rho_moves_narrowing_everywhere():
    e = SharedProduct(D1, mode="exchange")
    e.interpret(at(conj(ge(x, 0), le(x, 9)), "box"))
    e.rho()
    e["lbox"].base.embed("x", Interval(2, 4))
    out = rho_reduce(e)
    assert out["box"].project("x") == Interval(2, 4)
    assert out["ipc"].project("x") == Interval(2, 4)
    assert not rho_reduce(out).rho()


def test_c4_in_d1():
    for mode in ("alias", "exchange"):
        e = SharedProduct(D1, mode)
        e.interpret(at(conj(ge(x, 0), le(x, 9), ge(y, 0), le(y, 9)), "box"))
        e.rho()
        e.interpret(at(disj(eq(x, 0), eq(x, 1)), "lbox"))
        e.interpret(at(le(x * y, 5), "ipc"))
        c = shared_closure(e)
        want = solutions(conj(disj(eq(x, 0), eq(x, 1)), le(x * y, 5)), {"x": (0, 9), "y": (0, 9)})
        hull = Interval(min(p["x"] for p in want), max(p["x"] for p in want))
        assert hull == Interval(0, 1)
        for name in ("box", "lbox", "ipc"):
            assert c[name].project("x") == hull


def test_single_component_closure():
    e = SharedProduct([SharedDecl("ipc", IPCK(BOX))])
    e["ipc"].base.embed_new("x", Interval(0, 10))
    e["ipc"].base.embed_new("y", Interval(2, 8))
    e.interpret(at(le(x + y, 5), "ipc"))
    alone = e["ipc"].copy()
    alone.closure()
    e.closure()
    assert e["ipc"].project("x") == alone.project("x") == Interval(0, 3)


def test_inconsistent_component_fails_product():
    e = SharedProduct(D1)
    e.interpret(at(conj(ge(x, 0), le(x, 9)), "box"))
    e.interpret(at(conj(ge(x, 5), le(x, 1)), "ipc"))
    e.closure()
    assert e.state() is FALSE


@given(st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_alias_and_exchange_agree(seed):
    rng = random.Random(seed)
    _, bounds, cs = d1_inputs(rng)
    a = d1_element("alias", bounds, cs)
    b = d1_element("exchange", bounds, cs)
    a.closure()
    b.closure()
    for name in a.components:
        assert same_information(a[name], b[name])
