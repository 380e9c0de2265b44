"""Logic completion ``L(A)``: connectives over the constraint language of ``A``.

Formulas are put in negation normal form.  Atomic conjuncts are joined into
the underlying element right away; every other conjunct becomes a clause.
Clauses are evaluated in Kleene logic by hull entailment, propagated when a
single disjunct remains possible, and split on otherwise.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

from .formula import (
    And, Annotated, Atom, Formula, Or, Rel, disjuncts, conjuncts, gt, lt, nnf,
    vars_of,
)
from .ipc import compile_propagator
from .lattice import (
    EMPTY, FALSE, TRUE, UNKNOWN, AbstractDomain, Interval, Kleene, NotSupported,
    flat_project, interval_join, kleene_and, kleene_or, leaf_stamp,
)


def _leaf_atom(phi) -> Optional[Atom]:
    while isinstance(phi, Annotated):
        phi = phi.sub
    return phi if isinstance(phi, Atom) else None


def eval3_with(project, phi: Formula) -> Kleene:
    """Kleene value of an NNF formula over the hulls given by ``project``."""
    if isinstance(phi, Atom):
        return compile_propagator(phi).state_of(project)
    if isinstance(phi, Annotated):
        return eval3_with(project, phi.sub)
    if isinstance(phi, And):
        l = eval3_with(project, phi.l)
        if l is FALSE:
            return l
        return kleene_and(l, eval3_with(project, phi.r))
    if isinstance(phi, Or):
        l = eval3_with(project, phi.l)
        if l is TRUE:
            return l
        return kleene_or(l, eval3_with(project, phi.r))
    raise TypeError(f"formula not in negation normal form: {phi}")


@lru_cache(maxsize=4096)
def _clause_plan(clause) -> tuple:
    """``(disjunct, propagator or None, vars)`` for each disjunct of ``clause``."""
    out = []
    for d in disjuncts(clause):
        leaf = _leaf_atom(d)
        out.append((d, None if leaf is None else compile_propagator(leaf), vars_of(d)))
    return tuple(out)


def _hull_union(a: Interval, b: Interval) -> Interval:
    if a.lo > a.hi:
        return b
    if b.lo > b.hi:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def disjunct_hulls(project, phi) -> Optional[dict]:
    """One revise pass of every atom of ``phi``: ``{var: hull}`` or None if empty."""
    if isinstance(phi, Annotated):
        return disjunct_hulls(project, phi.sub)
    if isinstance(phi, Atom):
        return compile_propagator(phi).revise(project)
    l = disjunct_hulls(project, phi.l)
    r = disjunct_hulls(project, phi.r)
    if isinstance(phi, And):
        if l is None or r is None:
            return None
        out = dict(l)
        for x, itv in r.items():
            prev = out.get(x)
            out[x] = itv if prev is None else interval_join(prev, itv)
            if out[x].lo > out[x].hi:
                return None
        return out
    if l is None:
        return r
    if r is None:
        return l
    return {x: _hull_union(l[x], r[x]) for x in l.keys() & r.keys()}


class LogicCompletion(AbstractDomain):
    """``L(A)`` over a mutable underlying element ``base``."""

    def __init__(self, base: AbstractDomain):
        self.base = base
        self.clauses: tuple = ()
        self.entailed: list = []
        self._index: Optional[dict] = None
        self._snapshot: dict = {}
        self._settled = 0
        self._failed = False
        self._stamp = -1

    def __repr__(self):
        return f"L({self.base!r}, {len(self.clauses)} clauses)"

    def __deepcopy__(self, memo):
        from copy import deepcopy

        e = LogicCompletion.__new__(LogicCompletion)
        memo[id(self)] = e
        e.base = deepcopy(self.base, memo)
        e.clauses = self.clauses
        e.entailed = list(self.entailed)
        e._index = self._index
        e._snapshot = dict(self._snapshot)
        e._settled = self._settled
        e._failed = self._failed
        e._stamp = self._stamp
        return e

    # -- language ---------------------------------------------------------

    def _normalize(self, phi: Formula) -> Formula:
        """NNF, with ``!=`` atoms the base cannot hold split into two strict ones."""
        return self._expand_ne(nnf(phi))

    def _expand_ne(self, phi):
        if isinstance(phi, (And, Or)):
            return type(phi)(self._expand_ne(phi.l), self._expand_ne(phi.r))
        a = _leaf_atom(phi)
        if a is not None and a.rel is Rel.NE and not self.base.supports(phi):
            l, r = lt(a.left, a.right), gt(a.left, a.right)
            if isinstance(phi, Annotated):
                l, r = Annotated(l, phi.target), Annotated(r, phi.target)
            return Or(l, r)
        return phi

    def _leaves_supported(self, phi) -> bool:
        if isinstance(phi, (And, Or)):
            return self._leaves_supported(phi.l) and self._leaves_supported(phi.r)
        return self.base.supports(phi)

    def supports(self, phi) -> bool:
        try:
            return self._leaves_supported(self._normalize(phi))
        except NotSupported:
            return False

    def interpret(self, phi) -> bool:
        n = self._normalize(phi)
        if not self._leaves_supported(n):
            raise NotSupported(f"some atom of {phi} is outside the underlying language")
        return self._assert(n)

    def _assert(self, phi) -> bool:
        changed = False
        for c in conjuncts(phi):
            if isinstance(c, Or):
                self._add_clause(c)
                changed = True
            else:
                changed |= self.base.interpret(c)
        return changed

    def _add_clause(self, c: Formula):
        self.clauses = self.clauses + (c,)
        self.entailed.append(False)
        self._index = None

    def _clause_index(self) -> dict:
        if self._index is None:
            idx: dict = {}
            for i, c in enumerate(self.clauses):
                for x in vars_of(c):
                    idx.setdefault(x, []).append(i)
            self._index = idx
        return self._index

    def eval3(self, phi: Formula) -> Kleene:
        if self._failed:
            return FALSE
        return eval3_with(self.base.project, nnf(phi))

    # -- closure ----------------------------------------------------------

    def _propagate(self, i: int, project=None, touched=None) -> Optional[bool]:
        """Unit-propagate clause ``i``; None signals a failed clause.

        ``project`` overrides the base projection for reading; ``touched``
        is called after every write to the base with the variables concerned
        (None for all).
        """
        project = project or self.base.project
        alive = []
        for d, p, vs in _clause_plan(self.clauses[i]):
            if p is None:
                vals = None
                s = eval3_with(project, d)
            else:
                vals = p.forward(project)
                s = p.kleene(vals)
            if s is TRUE:
                self.entailed[i] = True
                return False
            if s is UNKNOWN:
                alive.append((d, p, vs, vals))
        if not alive:
            return None
        if len(alive) > 1:
            return self._narrow_by_hull(alive, project, touched)
        # the clause is now implied by the base, so it is never revisited
        self.entailed[i] = True
        self._assert(alive[0][0])
        if touched is not None:
            touched(None)
        return True

    def _narrow_by_hull(self, alive: list, project=None, touched=None) -> Optional[bool]:
        """Join, per variable common to all live disjuncts, the union of their hulls.

        ``alive`` holds ``(disjunct, propagator, vars, forward values)``; the
        last two entries are None for a compound disjunct.
        """
        common = None
        for _, _, vs, _ in alive:
            common = vs if common is None else common & vs
            if not common:
                return False
        project = project or self.base.project
        hulls = []
        for d, p, _, vals in alive:
            h = disjunct_hulls(project, d) if p is None else p.narrow(vals)
            if h is not None:
                hulls.append(h)
        if not hulls:
            return None
        changed = False
        for x in sorted(common):
            u = EMPTY
            for h in hulls:
                u = _hull_union(u, h.get(x, project(x)))
            if self.base.embed(x, u):
                changed = True
                if touched is not None:
                    touched((x,))
        return changed

    def closure(self) -> bool:
        if self._failed:
            return False
        changed = False
        project = self.base.project
        while True:
            changed |= self.base.closure()
            if self.base.failed():
                return changed
            if self._settled == len(self.clauses) and self._stamp == leaf_stamp(self.base):
                return changed
            index = self._clause_index()
            snap = self._snapshot
            woken = set(range(self._settled, len(self.clauses)))
            fresh = {}
            for x, ids in index.items():
                itv = project(x)
                if snap.get(x) != itv:
                    woken.update(ids)
                fresh[x] = itv
            self._snapshot = fresh
            self._settled = len(self.clauses)
            progress = False
            # embeds move only their variable; an assert may move anything
            cache: dict = {}

            def hull(x):
                v = cache.get(x)
                if v is None:
                    v = cache[x] = project(x)
                return v

            def touched(xs):
                if xs is None:
                    cache.clear()
                else:
                    for x in xs:
                        cache.pop(x, None)

            for i in sorted(woken):
                if self.entailed[i]:
                    continue
                r = self._propagate(i, hull, touched)
                if r is None:
                    self._failed = True
                    return True
                progress |= r
            if not progress:
                self._stamp = leaf_stamp(self.base)
                return changed
            changed = True

    def _at_fixpoint(self) -> bool:
        if self._settled != len(self.clauses):
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
        # after closure every open clause has two live disjuncts
        settled = self._at_fixpoint()
        project = self.base.project
        for i, c in enumerate(self.clauses):
            if self.entailed[i]:
                continue
            if settled:
                return UNKNOWN
            s = eval3_with(project, c)
            if s is FALSE:
                return FALSE
            if s is UNKNOWN:
                out = UNKNOWN
        return out

    def failed(self) -> bool:
        return self._failed or self.base.failed()

    # -- splitting --------------------------------------------------------

    def clause_choices(self):
        """``(i, disjuncts)`` of the first undecided clause, or None."""
        if self._failed:
            return None
        project = self.base.project
        for i, c in enumerate(self.clauses):
            if self.entailed[i]:
                continue
            if eval3_with(project, c) is not UNKNOWN:
                continue
            return i, [d for d in disjuncts(c) if eval3_with(project, d) is not FALSE]
        return None

    def commit(self, i: int, disjunct: Formula):
        self.entailed[i] = True
        self._assert(disjunct)

    def split(self) -> list:
        choice = self.clause_choices()
        if choice is not None:
            i, ds = choice
            out = []
            for d in ds:
                e = self.copy()
                e.commit(i, d)
                out.append(e)
            return out
        out = []
        for b in self.base.split():
            e = self.copy()
            e.base = b
            e._snapshot = {}
            e._settled = 0
            out.append(e)
        return out

    # -- delegation -------------------------------------------------------

    def children(self):
        return (self.base,)

    # meet over the flattened leaves, memoized between mutations
    project = flat_project

    def embed(self, x: str, itv: Interval) -> bool:
        return self.base.embed(x, itv)

    def vars(self) -> set:
        return self.base.vars()

    def join(self, other: "LogicCompletion") -> bool:
        changed = self.base.join(other.base)
        known = set(self.clauses)
        for c, done in zip(other.clauses, other.entailed):
            if c not in known:
                self._add_clause(c)
                self.entailed[-1] = done
                changed = True
        if other._failed and not self._failed:
            self._failed = changed = True
        return changed

    def leq(self, other: "LogicCompletion") -> bool:
        if other._failed:
            return True
        if self._failed:
            return False
        return set(self.clauses) <= set(other.clauses) and self.base.leq(other.base)

    def contains(self, point) -> bool:
        if self._failed or not self.base.contains(point):
            return False
        from .formula import holds
        return all(holds(c, point) for c in self.clauses)


def lc_interpret(e: LogicCompletion, phi: Formula) -> LogicCompletion:
    out = e.copy()
    out.interpret(phi)
    return out


def lc_closure(e: LogicCompletion) -> LogicCompletion:
    out = e.copy()
    out.closure()
    return out
