"""Interval propagators completion: any projecting domain plus HC4 propagators.

Each arithmetic atom compiles to a :class:`Propagator` running one HC4-revise
pass: forward interval evaluation of both sides over the underlying
projections, narrowing at the relation, then backward narrowing down to the
variables.  Narrowed hulls re-enter the underlying element through ``embed``,
so a component only receives bounds on variables it already knows.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache
from typing import Callable, Mapping, Optional

from .formula import (
    And, Annotated, Atom, Bin, Formula, IntConst, Neg, Op, Rel, Var, conjuncts,
    is_atomic, vars_of,
)
from .lattice import (
    EMPTY, FALSE, INF, MAX_BOUND, TRUE, UNKNOWN, AbstractDomain, Interval, Kleene,
    NotSupported, UnregisteredVariable, check_bound, interval_arith, interval_inv_narrow,
    flat_project, interval_join, kleene_and, leaf_stamp, neg_interval,
)

# tape opcodes
_CONST, _VAR, _NEG, _ADD, _SUB, _MUL = range(6)
_BINOPS = {Op.ADD: _ADD, Op.SUB: _SUB, Op.MUL: _MUL}
_OPS = {_ADD: Op.ADD, _SUB: Op.SUB, _MUL: Op.MUL}


def _compile_expr(e, tape: list) -> int:
    if isinstance(e, IntConst):
        tape.append((_CONST, e.value))
    elif isinstance(e, Var):
        tape.append((_VAR, e.name))
    elif isinstance(e, Neg):
        a = _compile_expr(e.sub, tape)
        tape.append((_NEG, a))
    elif isinstance(e, Bin):
        a = _compile_expr(e.left, tape)
        b = _compile_expr(e.right, tape)
        tape.append((_BINOPS[e.op], a, b))
    else:
        raise NotSupported(f"unsupported expression {e!r}")
    return len(tape) - 1


_new = tuple.__new__


def _sum(code, a, b):
    # inline ADD/SUB of two intervals; same result as interval_arith
    if a[0] > a[1] or b[0] > b[1]:
        return EMPTY
    if code == _ADD:
        lo, hi = a[0] + b[0], a[1] + b[1]
    else:
        lo, hi = a[0] - b[1], a[1] - b[0]
    if (lo < -MAX_BOUND and lo != -INF) or (hi > MAX_BOUND and hi != INF) \
            or lo > MAX_BOUND or hi < -MAX_BOUND:
        check_bound(lo)
        check_bound(hi)
    return _new(Interval, (lo, hi))


def _meet(a, b):
    lo = a[0] if a[0] >= b[0] else b[0]
    hi = a[1] if a[1] <= b[1] else b[1]
    if lo > hi or lo == INF or hi == -INF:
        return EMPTY
    return _new(Interval, (lo, hi))


def _forward(tape, hull: Callable) -> list:
    vals = []
    push = vals.append
    for node in tape:
        code = node[0]
        if code == _VAR:
            push(hull(node[1]))
        elif code == _ADD or code == _SUB:
            push(_sum(code, vals[node[1]], vals[node[2]]))
        elif code == _CONST:
            push(_new(Interval, (node[1], node[1])))
        elif code == _NEG:
            push(neg_interval(vals[node[1]]))
        else:
            push(interval_arith(Op.MUL, vals[node[1]], vals[node[2]]))
    return vals


def _backward(tape, vals: list, root: int, narrowed: dict) -> bool:
    """Propagate the narrowed root value down; False on an empty node."""
    for i in range(root, -1, -1):
        v = vals[i]
        if v is None:
            continue
        if v[0] > v[1]:
            return False
        node = tape[i]
        code = node[0]
        if code == _VAR:
            x = node[1]
            prev = narrowed.get(x)
            narrowed[x] = v if prev is None else _meet(prev, v)
        elif code == _ADD or code == _SUB:
            a, b = node[1], node[2]
            va, vb = vals[a], vals[b]
            if code == _ADD:
                na = _meet(va, _sum(_SUB, v, vb))
                if na[0] > na[1]:
                    return False
                nb = _meet(vb, _sum(_SUB, v, na))
            else:
                na = _meet(va, _sum(_ADD, v, vb))
                if na[0] > na[1]:
                    return False
                nb = _meet(vb, _sum(_SUB, na, v))
            vals[a], vals[b] = na, nb
        elif code == _NEG:
            a = node[1]
            vals[a] = interval_join(vals[a], neg_interval(v))
        elif code == _MUL:
            a, b = node[1], node[2]
            va, vb = vals[a], vals[b]
            na = interval_join(va, interval_inv_narrow(Op.MUL, v, vb, "left"))
            if na.lo > na.hi:
                return False
            nb = interval_join(vb, interval_inv_narrow(Op.MUL, v, na, "right"))
            vals[a], vals[b] = na, nb
        elif not (v[0] <= node[1] <= v[1]):
            return False
    return True


def _narrow_root(rel: Rel, l: Interval, r: Interval):
    if rel is Rel.LE:
        return interval_join(l, Interval(-INF, r.hi)), interval_join(r, Interval(l.lo, INF))
    if rel is Rel.LT:
        return (interval_join(l, Interval(-INF, r.hi - 1)),
                interval_join(r, Interval(l.lo + 1, INF)))
    if rel is Rel.GE:
        return interval_join(l, Interval(r.lo, INF)), interval_join(r, Interval(-INF, l.hi))
    if rel is Rel.GT:
        return (interval_join(l, Interval(r.lo + 1, INF)),
                interval_join(r, Interval(-INF, l.hi - 1)))
    if rel is Rel.EQ:
        both = interval_join(l, r)
        return both, both
    # !=: only a singleton on one side at the other's endpoint narrows
    if r.lo == r.hi:
        l = _punch(l, r.lo)
    if l.lo == l.hi:
        r = _punch(r, l.lo)
    return l, r


def _punch(itv: Interval, v) -> Interval:
    if itv.lo == v:
        itv = Interval(v + 1, itv.hi)
    elif itv.hi == v:
        itv = Interval(itv.lo, v - 1)
    return EMPTY if itv.lo > itv.hi else itv


def entailment(rel: Rel, l: Interval, r: Interval) -> Kleene:
    """Truth of ``l REL r`` over every pair of points of the two hulls."""
    if l.lo > l.hi or r.lo > r.hi:
        return FALSE
    if rel is Rel.LE:
        return TRUE if l.hi <= r.lo else FALSE if l.lo > r.hi else UNKNOWN
    if rel is Rel.LT:
        return TRUE if l.hi < r.lo else FALSE if l.lo >= r.hi else UNKNOWN
    if rel is Rel.GE:
        return TRUE if l.lo >= r.hi else FALSE if l.hi < r.lo else UNKNOWN
    if rel is Rel.GT:
        return TRUE if l.lo > r.hi else FALSE if l.hi <= r.lo else UNKNOWN
    disjoint = l.hi < r.lo or r.hi < l.lo
    same_point = l.lo == l.hi == r.lo == r.hi
    if rel is Rel.EQ:
        return TRUE if same_point else FALSE if disjoint else UNKNOWN
    return TRUE if disjoint else FALSE if same_point else UNKNOWN


class Propagator:
    """HC4 propagator of a single atom; immutable and shared between copies."""

    __slots__ = ("atom", "reacts_on", "_tape", "_lroot", "_rroot")

    def __init__(self, atom: Atom):
        self.atom = atom
        self.reacts_on = vars_of(atom)
        tape: list = []
        self._lroot = _compile_expr(atom.left, tape)
        self._rroot = _compile_expr(atom.right, tape)
        self._tape = tuple(tape)

    def __repr__(self):
        return f"Propagator({self.atom})"

    def __deepcopy__(self, memo):
        return self

    def evaluate(self, hull: Callable) -> tuple:
        vals = _forward(self._tape, hull)
        return vals[self._lroot], vals[self._rroot]

    def state_of(self, hull: Callable) -> Kleene:
        l, r = self.evaluate(hull)
        return entailment(self.atom.rel, l, r)

    def revise(self, hull: Callable, skip_entailed: bool = False):
        """One HC4-revise pass: ``{var: narrowed hull}``, or None if empty.

        With ``skip_entailed``, an atom already entailed by the hulls returns
        ``ENTAILED`` instead of running the backward pass.
        """
        vals = _forward(self._tape, hull)
        if skip_entailed and self.kleene(vals) is TRUE:
            return ENTAILED
        return self.narrow(vals)

    def forward(self, hull: Callable) -> list:
        """Interval value of every tape node."""
        return _forward(self._tape, hull)

    def kleene(self, vals: list) -> Kleene:
        return entailment(self.atom.rel, vals[self._lroot], vals[self._rroot])

    def narrow(self, vals: list):
        """Backward half of :meth:`revise` from ``forward`` values (consumed)."""
        l, r = _narrow_root(self.atom.rel, vals[self._lroot], vals[self._rroot])
        if l.lo > l.hi or r.lo > r.hi:
            return None
        narrowed: dict = {}
        # the right tree occupies tape[lroot + 1 .. rroot]
        vals[self._lroot] = l
        vals[self._rroot] = r
        right = list(vals)
        for i in range(self._lroot + 1):
            right[i] = None
        if not _backward(self._tape, right, self._rroot, narrowed):
            return None
        left = vals
        for i in range(self._lroot + 1, len(left)):
            left[i] = None
        if not _backward(self._tape, left, self._lroot, narrowed):
            return None
        return narrowed

    def apply(self, element, hull: Optional[Callable] = None):
        """Narrow ``element`` in place; returns the variables whose hull changed.

        None means the atom is ground and false, so no variable can carry the
        failure.  ``ENTAILED`` means nothing can narrow now or in any
        descendant.  ``hull`` overrides ``element.project`` for reading.
        """
        narrowed = self.revise(hull or element.project, skip_entailed=True)
        if narrowed is ENTAILED:
            return ENTAILED
        changed = set()
        if narrowed is None:
            x = min(self.reacts_on, default=None)
            if x is None:
                return None
            element.embed(x, EMPTY)
            changed.add(x)
            return changed
        for x, itv in narrowed.items():
            if element.embed(x, itv):
                changed.add(x)
        return changed


ENTAILED = "entailed"


@lru_cache(maxsize=None)
def compile_propagator(atom: Atom) -> Propagator:
    return Propagator(atom)


def _atom_of(phi: Formula):
    while isinstance(phi, Annotated):
        phi = phi.sub
    return phi


class IPC(AbstractDomain):
    """``IPC(A)``: an element of ``A`` paired with a set of propagators."""

    def __init__(self, base: AbstractDomain):
        self.base = base
        self.props: tuple = ()
        self._prop_keys: frozenset = frozenset()
        self._snapshot: dict = {}
        self._settled = 0
        self._entailed: set = set()
        self._failed = False
        self._stamp = -1
        self._watch_memo = (None, None)

    def __repr__(self):
        return f"IPC({self.base!r}, {len(self.props)} propagators)"

    def __deepcopy__(self, memo):
        from copy import deepcopy

        e = IPC.__new__(IPC)
        memo[id(self)] = e
        e.base = deepcopy(self.base, memo)
        e.props = self.props
        e._prop_keys = self._prop_keys
        e._snapshot = dict(self._snapshot)
        e._settled = self._settled
        e._entailed = set(self._entailed)
        e._failed = self._failed
        e._stamp = self._stamp
        e._watch_memo = self._watch_memo
        return e

    # -- language ---------------------------------------------------------

    def supports(self, phi) -> bool:
        for c in conjuncts(phi):
            if isinstance(c, Annotated):
                if not self.base.supports(c):
                    return False
            elif not isinstance(c, Atom):
                return False
        return True

    def interpret(self, phi) -> bool:
        if not self.supports(phi):
            raise NotSupported(f"IPC cannot interpret {phi}")
        changed = False
        for c in conjuncts(phi):
            if isinstance(c, Annotated):
                changed |= self.base.interpret(c)
                continue
            known = self.base.vars()
            missing = [x for x in sorted(vars_of(c)) if x not in known]
            if missing:
                raise UnregisteredVariable(
                    f"variables {missing} of {c} are unknown to the underlying domain")
            changed |= self.add_propagator(compile_propagator(c))
        return changed

    def add_propagator(self, p: Propagator) -> bool:
        if p.atom in self._prop_keys:
            return False
        self.props = self.props + (p,)
        self._prop_keys = self._prop_keys | {p.atom}
        return True

    # -- closure ----------------------------------------------------------

    def _watch(self) -> dict:
        """``{var: [propagator index]}``, memoized per propagator tuple."""
        props, watch = self._watch_memo
        if props is not self.props:
            watch = {}
            for i, p in enumerate(self.props):
                for x in p.reacts_on:
                    watch.setdefault(x, []).append(i)
            self._watch_memo = (self.props, watch)
        return watch

    def closure(self) -> bool:
        """Run propagators to a fixpoint, waking them on hull changes."""
        if self._failed:
            return False
        base = self.base
        if self._settled == len(self.props) and self._stamp == leaf_stamp(base):
            return False
        project = base.project
        watch = self._watch()
        snap = self._snapshot
        queued = [False] * len(self.props)
        queue: deque = deque()
        # propagators added since the last closure run at least once
        for i in range(self._settled, len(self.props)):
            queued[i] = True
            queue.append(i)
        # IPC never closes its base mid-loop, so an embed only moves the
        # embedded variable and the cache stays exact once it is dropped
        cache: dict = {}

        def hull(x):
            v = cache.get(x)
            if v is None:
                v = cache[x] = project(x)
            return v

        for x in sorted(watch):
            if snap.get(x) != hull(x):
                for i in watch[x]:
                    if not queued[i]:
                        queued[i] = True
                        queue.append(i)

        entailed = self._entailed
        changed = False
        while queue:
            i = queue.popleft()
            queued[i] = False
            if i in entailed:
                continue
            moved = self.props[i].apply(base, hull)
            if moved is ENTAILED:
                entailed.add(i)
                continue
            if moved is None:
                self._failed = True
                return True
            if not moved:
                continue
            changed = True
            if base.failed():
                break
            for x in sorted(moved):
                cache.pop(x, None)
                for j in watch.get(x, ()):
                    if not queued[j]:
                        queued[j] = True
                        queue.append(j)
        self._snapshot = {x: hull(x) for x in watch}
        self._settled = len(self.props)
        self._stamp = leaf_stamp(base)
        return changed

    def _at_fixpoint(self) -> bool:
        if self._settled != len(self.props):
            return False
        if self._stamp == leaf_stamp(self.base):
            return True
        project = self.base.project
        for x, itv in self._snapshot.items():
            if project(x) != itv:
                return False
        return True

    def state(self) -> Kleene:
        if self._failed:
            return FALSE
        out = self.base.state()
        if out is FALSE:
            return out
        # after closure no propagator is disentailed: HC4 would have emptied a hull
        settled = self._at_fixpoint()
        hull = self.base.project
        for i, p in enumerate(self.props):
            if i in self._entailed:
                continue
            s = p.state_of(hull)
            if s is TRUE:
                self._entailed.add(i)
            elif s is FALSE:
                return FALSE
            else:
                out = UNKNOWN
                if settled:
                    break
        return out

    def failed(self) -> bool:
        return self._failed or self.base.failed()

    # -- delegation -------------------------------------------------------

    def children(self):
        return (self.base,)

    # meet over the flattened leaves, memoized between mutations
    project = flat_project

    def embed(self, x: str, itv: Interval) -> bool:
        return self.base.embed(x, itv)

    def vars(self) -> set:
        return self.base.vars()

    def split(self) -> list:
        out = []
        for b in self.base.split():
            e = IPC(b)
            e.props = self.props
            e._prop_keys = self._prop_keys
            e._snapshot = dict(self._snapshot)
            e._settled = self._settled
            e._entailed = set(self._entailed)
            e._stamp = -1
            e._watch_memo = self._watch_memo
            out.append(e)
        return out

    def join(self, other: "IPC") -> bool:
        changed = self.base.join(other.base)
        for p in other.props:
            changed |= self.add_propagator(p)
        if other._failed and not self._failed:
            self._failed = changed = True
        return changed

    def leq(self, other: "IPC") -> bool:
        if other._failed:
            return True
        return (not self._failed and self._prop_keys <= other._prop_keys
                and self.base.leq(other.base))

    def contains(self, point) -> bool:
        if self._failed or not self.base.contains(point):
            return False
        from .formula import holds
        return all(holds(p.atom, point) for p in self.props)


def embed(target: AbstractDomain, delta) -> bool:
    """Join a box-like ``delta`` into ``target`` iff all its variables are known.

    ``delta`` is any element exposing ``env`` (a variable-to-interval map).
    Products apply the rule coordinatewise through their own ``embed``.
    """
    from .products import DirectProduct

    if isinstance(target, DirectProduct):
        changed = False
        for c in target.components:
            changed |= embed(c, delta)
        return changed
    env: Mapping = delta.env
    if not set(env) <= target.vars():
        return False
    changed = False
    for x, itv in env.items():
        changed |= target.embed(x, itv)
    return changed


def ipc_closure(e: IPC) -> IPC:
    out = e.copy()
    out.closure()
    return out
