"""Product transformers: direct, delayed and shared products."""

from __future__ import annotations

from copy import deepcopy
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .box import Box
from .formula import (
    Annotated, Atom, Formula, conjuncts, relaxations, strip_annotations,
    substitute_fixed, vars_of,
)
from .ipc import IPC
from .lattice import (
    BOTTOM, EMPTY, FALSE, INF, AbstractDomain, AmbiguousTarget, Interval, Kleene,
    NotSupported, SolverError, TRUE, bound_split, flat_project, interval_join, kleene_and,
    leaf_stamp,
)
from .logic import LogicCompletion
from .octagon import Octagon


class UnknownComponentName(SolverError):
    pass


class MissingAnnotation(SolverError):
    pass


class UnknownDependency(SolverError):
    pass


class ForwardReference(SolverError):
    pass


class ArityMismatch(SolverError):
    pass


class KindMismatch(SolverError):
    pass


def _meet_projections(components, x: str) -> Interval:
    lo, hi = -INF, INF
    for c in components:
        itv = c.project(x)
        if itv.lo > lo:
            lo = itv.lo
        if itv.hi < hi:
            hi = itv.hi
        if lo > hi:
            return EMPTY
    if lo == -INF and hi == INF:
        return BOTTOM
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# direct product
# ---------------------------------------------------------------------------

class DirectProduct(AbstractDomain):
    """Coordinatewise product.  Formulas are routed by ``:i`` (1-based) or label."""

    def __init__(self, components: Sequence[AbstractDomain],
                 labels: Optional[Sequence[Optional[str]]] = None):
        self.components = list(components)
        self.labels = list(labels) if labels is not None else [None] * len(self.components)
        if len(self.labels) != len(self.components):
            raise ValueError("one label per component")

    def __repr__(self):
        return f"Prod({', '.join(map(repr, self.components))})"

    def __deepcopy__(self, memo):
        e = DirectProduct.__new__(DirectProduct)
        memo[id(self)] = e
        e.components = [deepcopy(c, memo) for c in self.components]
        e.labels = self.labels
        return e

    def _target(self, label) -> AbstractDomain:
        if isinstance(label, int):
            if not 1 <= label <= len(self.components):
                raise UnknownComponentName(f"no component :{label}")
            return self.components[label - 1]
        if label in self.labels:
            return self.components[self.labels.index(label)]
        raise UnknownComponentName(f"no component named {label!r}")

    def _route(self, phi):
        if isinstance(phi, Annotated):
            return self._target(phi.target), phi.sub
        able = [c for c in self.components if c.supports(phi)]
        if not able:
            raise NotSupported(f"no component supports {phi}")
        if len(able) > 1:
            raise AmbiguousTarget(f"{phi} fits {len(able)} components; annotate it")
        return able[0], phi

    def supports(self, phi) -> bool:
        for c in conjuncts(phi):
            if isinstance(c, Annotated):
                try:
                    target = self._target(c.target)
                except UnknownComponentName:
                    return False
                if not target.supports(c.sub):
                    return False
            elif not any(k.supports(c) for k in self.components):
                return False
        return True

    def interpret(self, phi) -> bool:
        changed = False
        for c in conjuncts(phi):
            target, sub = self._route(c)
            changed |= target.interpret(sub)
        return changed

    def closure(self) -> bool:
        changed = False
        for c in self.components:
            changed |= c.closure()
        return changed

    def state(self) -> Kleene:
        out = TRUE
        for c in self.components:
            s = c.state()
            if s is FALSE:
                return s
            out = kleene_and(out, s)
        return out

    def children(self):
        return self.components

    # meet over the flattened leaves, memoized between mutations
    project = flat_project

    def failed(self) -> bool:
        return any(c.failed() for c in self.components)

    def embed(self, x: str, itv: Interval) -> bool:
        changed = False
        for c in self.components:
            changed |= c.embed(x, itv)
        return changed

    def vars(self) -> set:
        out = set()
        for c in self.components:
            out |= c.vars()
        return out

    def split(self) -> list:
        return bound_split(self)

    def join(self, other: "DirectProduct") -> bool:
        changed = False
        for a, b in zip(self.components, other.components):
            changed |= a.join(b)
        return changed

    def leq(self, other: "DirectProduct") -> bool:
        return all(a.leq(b) for a, b in zip(self.components, other.components))

    def contains(self, point) -> bool:
        return all(c.contains(point) for c in self.components)


def direct_interpret(e: DirectProduct, phi: Formula) -> DirectProduct:
    out = e.copy()
    out.interpret(phi)
    return out


# ---------------------------------------------------------------------------
# delayed product
# ---------------------------------------------------------------------------

PENDING, TRANSFERRED = False, True


class DelayedProduct(AbstractDomain):
    """``DP(A1, A2)``: formulas wait in ``a1`` until ``a2`` can take them.

    ``table`` maps each formula held by ``a1`` to ``TRANSFERRED`` once its
    instantiated form is joined into ``a2``.  Relaxed forms are joined while
    the formula stays pending.  ``trace`` (shared across copies) records every
    relaxed formula joined, with the bounds it was derived under.
    """

    def __init__(self, a1: AbstractDomain, a2: AbstractDomain, trace: Optional[list] = None):
        self.a1 = a1
        self.a2 = a2
        self.table: dict = {}
        self.trace = trace
        self._stamp = None

    def __repr__(self):
        pending = sum(1 for v in self.table.values() if v is PENDING)
        return f"DP({self.a1!r}, {self.a2!r}, {pending} pending)"

    def __deepcopy__(self, memo):
        e = DelayedProduct.__new__(DelayedProduct)
        memo[id(self)] = e
        e.a1 = deepcopy(self.a1, memo)
        e.a2 = deepcopy(self.a2, memo)
        e.table = dict(self.table)
        e.trace = self.trace
        e._stamp = self._stamp
        return e

    def pending(self) -> list:
        return [f for f, v in self.table.items() if v is PENDING]

    def supports(self, phi) -> bool:
        return all(self.a2.supports(c) or self.a1.supports(c) for c in conjuncts(phi))

    def interpret(self, phi) -> bool:
        changed = False
        for c in conjuncts(phi):
            if self.a2.supports(c):
                changed |= self.a2.interpret(c)
            elif self.a1.supports(c):
                changed |= self.a1.interpret(c)
                key = strip_annotations(c)
                if key not in self.table:
                    self.table[key] = PENDING
                    changed = True
            else:
                raise NotSupported(f"neither side of the delayed product supports {c}")
        return changed

    def _transfer(self, phi: Formula) -> bool:
        a1, a2 = self.a1, self.a2
        fixed = {}
        for x in vars_of(phi):
            itv = a1.project(x)
            if itv.lo == itv.hi:
                fixed[x] = itv.lo
        inst = substitute_fixed(phi, fixed)
        known = a2.vars()
        if vars_of(inst) <= known and a2.supports(inst):
            a2.interpret(inst)
            self.table[phi] = TRANSFERRED
            return True
        if not isinstance(inst, Atom):
            return False
        lb, ub = {}, {}
        for x in vars_of(inst):
            itv = a1.project(x)
            lb[x], ub[x] = itv.lo, itv.hi
        for r in relaxations(inst, lb, ub):
            if vars_of(r) <= known and a2.supports(r):
                changed = a2.interpret(r)
                if changed and self.trace is not None:
                    self.trace.append((r, {x: (lb[x], ub[x]) for x in lb}))
                return changed
        return False

    def _key(self):
        # a fixpoint stays one until a leaf moves or a formula arrives
        return leaf_stamp(self), len(self.table)

    def closure(self) -> bool:
        if self._stamp is not None and self._stamp == self._key():
            return False
        changed = False
        while True:
            step = self.a1.closure()
            step |= self.a2.closure()
            if self.failed():
                return changed or step
            for phi in self.pending():
                step |= self._transfer(phi)
            if not step:
                self._stamp = self._key()
                return changed
            changed = True

    def failed(self) -> bool:
        return self.a1.failed() or self.a2.failed()

    def state(self) -> Kleene:
        return kleene_and(self.a1.state(), self.a2.state())

    def children(self):
        return (self.a1, self.a2)

    # meet over the flattened leaves, memoized between mutations
    project = flat_project

    def embed(self, x: str, itv: Interval) -> bool:
        changed = self.a1.embed(x, itv)
        changed |= self.a2.embed(x, itv)
        return changed

    def vars(self) -> set:
        return self.a1.vars() | self.a2.vars()

    def split(self) -> list:
        return bound_split(self)

    def join(self, other: "DelayedProduct") -> bool:
        changed = self.a1.join(other.a1)
        changed |= self.a2.join(other.a2)
        for f, v in other.table.items():
            mine = self.table.get(f)
            if mine is None or (v is TRANSFERRED and mine is PENDING):
                self.table[f] = v
                changed = True
        return changed

    def leq(self, other: "DelayedProduct") -> bool:
        for f, v in self.table.items():
            w = other.table.get(f)
            if w is None or (v is TRANSFERRED and w is PENDING):
                return False
        return self.a1.leq(other.a1) and self.a2.leq(other.a2)

    def contains(self, point) -> bool:
        return self.a1.contains(point) and self.a2.contains(point)


def delayed_interpret(e: DelayedProduct, phi: Formula) -> DelayedProduct:
    out = e.copy()
    out.interpret(phi)
    return out


def delayed_closure(e: DelayedProduct) -> DelayedProduct:
    out = e.copy()
    out.closure()
    return out


# ---------------------------------------------------------------------------
# shared product
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kind:
    """Domain kind of a declaration.  Leaves are the slots dependencies bind to."""

    def leaves(self) -> list:
        raise NotImplementedError

    def build(self, slots) -> AbstractDomain:
        raise NotImplementedError


@dataclass(frozen=True)
class BoxKind(Kind):
    def leaves(self):
        return [self]

    def build(self, slots):
        s = next(slots)
        return Box() if s is None else s

    def __str__(self):
        return "Box"


@dataclass(frozen=True)
class OctKind(Kind):
    def leaves(self):
        return [self]

    def build(self, slots):
        s = next(slots)
        return Octagon() if s is None else s

    def __str__(self):
        return "Oct"


@dataclass(frozen=True)
class Slot(Kind):
    """A composite kind used as a single leaf (bound to a whole component)."""

    kind: Kind
    name: str = ""

    def leaves(self):
        return [self]

    def build(self, slots):
        s = next(slots)
        if s is None:
            return self.kind.build(iter([None] * len(self.kind.leaves())))
        return s

    def __str__(self):
        return self.name or f"({self.kind})"


@dataclass(frozen=True)
class LKind(Kind):
    inner: Kind

    def leaves(self):
        return self.inner.leaves()

    def build(self, slots):
        return LogicCompletion(self.inner.build(slots))

    def __str__(self):
        return f"L({self.inner})"


@dataclass(frozen=True)
class IPCKind(Kind):
    inner: Kind

    def leaves(self):
        return self.inner.leaves()

    def build(self, slots):
        return IPC(self.inner.build(slots))

    def __str__(self):
        return f"IPC({self.inner})"


@dataclass(frozen=True)
class ProdKind(Kind):
    parts: tuple

    def leaves(self):
        return [leaf for p in self.parts for leaf in p.leaves()]

    def build(self, slots):
        return DirectProduct([p.build(slots) for p in self.parts])

    def __str__(self):
        return "Prod(" + ", ".join(map(str, self.parts)) + ")"


@dataclass(frozen=True)
class DPKind(Kind):
    first: Kind
    second: Kind

    def leaves(self):
        return self.first.leaves() + self.second.leaves()

    def build(self, slots):
        return DelayedProduct(self.first.build(slots), self.second.build(slots))

    def __str__(self):
        return f"DP({self.first}, {self.second})"


BOX = BoxKind()
OCT = OctKind()


def L(k: Kind) -> LKind:
    return LKind(k)


def IPCK(k: Kind) -> IPCKind:
    return IPCKind(k)


def Prod(*ks: Kind) -> ProdKind:
    return ProdKind(tuple(ks))


def DP(k1: Kind, k2: Kind) -> DPKind:
    return DPKind(k1, k2)


def _leaf_kind(k: Kind) -> Kind:
    return k.kind if isinstance(k, Slot) else k


@dataclass
class SharedDecl:
    """``kind name(deps)``; ``deps`` lists one name or None per leaf of ``kind``.

    An empty ``deps`` leaves every slot private.
    """

    name: str
    kind: Kind
    deps: tuple = ()

    def __post_init__(self):
        self.deps = tuple(self.deps)


class SharedProduct(AbstractDomain):
    """Named components wired by dependencies.

    ``mode="alias"`` binds a dependency slot to the very element it names.
    ``mode="exchange"`` gives each slot a private view and merges views with
    the named elements by join in both directions until nothing changes.
    """

    def __init__(self, decls: Sequence[SharedDecl], mode: str = "alias"):
        if mode not in ("alias", "exchange"):
            raise ValueError(f"unknown sharing mode {mode!r}")
        self.mode = mode
        self.decls = list(decls)
        self.components: dict = {}
        self.views: list = []
        kinds: dict = {}
        all_names = {d.name for d in self.decls}
        for d in self.decls:
            if d.name in kinds:
                raise ValueError(f"component {d.name!r} declared twice")
            leaves = d.kind.leaves()
            deps = d.deps or (None,) * len(leaves)
            if len(deps) != len(leaves):
                raise ArityMismatch(
                    f"{d.name}: {d.kind} takes {len(leaves)} dependencies, got {len(deps)}")
            slots = []
            for leaf, dep in zip(leaves, deps):
                if dep is None:
                    slots.append(None)
                    continue
                if dep not in kinds:
                    if dep in all_names:
                        raise ForwardReference(f"{d.name} uses {dep} before its declaration")
                    raise UnknownDependency(f"{d.name} depends on undeclared {dep!r}")
                if _leaf_kind(leaf) != kinds[dep]:
                    raise KindMismatch(f"{d.name}: slot {leaf} cannot hold {dep}: {kinds[dep]}")
                target = self.components[dep]
                if mode == "alias":
                    slots.append(target)
                else:
                    view = target.copy()
                    self.views.append((dep, view))
                    slots.append(view)
            self.components[d.name] = d.kind.build(iter(slots))
            kinds[d.name] = d.kind

    def __repr__(self):
        inner = ", ".join(f"{n}: {c!r}" for n, c in self.components.items())
        return f"Shared({inner})"

    def __deepcopy__(self, memo):
        e = SharedProduct.__new__(SharedProduct)
        memo[id(self)] = e
        e.mode = self.mode
        e.decls = self.decls
        e.components = {n: deepcopy(c, memo) for n, c in self.components.items()}
        e.views = [(n, deepcopy(v, memo)) for n, v in self.views]
        return e

    def __getitem__(self, name: str) -> AbstractDomain:
        return self.components[name]

    # -- language ---------------------------------------------------------

    def _route(self, phi):
        if not isinstance(phi, Annotated) or not isinstance(phi.target, str):
            raise MissingAnnotation(f"{phi} must name its target component")
        target = self.components.get(phi.target)
        if target is None:
            raise UnknownComponentName(f"no component named {phi.target!r}")
        return target, phi.sub

    def supports(self, phi) -> bool:
        try:
            return all(t.supports(s) for t, s in map(self._route, conjuncts(phi)))
        except (MissingAnnotation, UnknownComponentName):
            return False

    def interpret(self, phi) -> bool:
        changed = False
        for c in conjuncts(phi):
            target, sub = self._route(c)
            changed |= target.interpret(sub)
        return changed

    # -- closure ----------------------------------------------------------

    def rho(self) -> bool:
        """Exchange views and named elements until they agree."""
        changed = False
        while True:
            step = False
            for name, view in self.views:
                target = self.components[name]
                step |= target.join(view)
                step |= view.join(target)
            if not step:
                return changed
            changed = True

    def closure(self) -> bool:
        changed = False
        while True:
            step = False
            for c in self.components.values():
                step |= c.closure()
                if c.failed():
                    self._smash()
                    return True
            step |= self.rho()
            if not step:
                return changed
            changed = True

    def _smash(self):
        """One failed component empties them all, shared elements included."""
        for c in self.components.values():
            xs = sorted(c.vars())
            if xs:
                c.embed(xs[0], EMPTY)
        self.rho()

    def state(self) -> Kleene:
        out = TRUE
        for c in self.components.values():
            s = c.state()
            if s is FALSE:
                return s
            out = kleene_and(out, s)
        return out

    # -- splitting --------------------------------------------------------

    def split(self) -> list:
        for name, c in self.components.items():
            if isinstance(c, LogicCompletion):
                choice = c.clause_choices()
                if choice is None:
                    continue
                i, ds = choice
                out = []
                for d in ds:
                    e = self.copy()
                    e.components[name].commit(i, d)
                    out.append(e)
                return out
        return bound_split(self)

    # -- delegation -------------------------------------------------------

    def project(self, x: str) -> Interval:
        return _meet_projections(self.components.values(), x)

    def failed(self) -> bool:
        return any(c.failed() for c in self.components.values())

    def embed(self, x: str, itv: Interval) -> bool:
        changed = False
        for c in self.components.values():
            changed |= c.embed(x, itv)
        return changed

    def vars(self) -> set:
        out = set()
        for c in self.components.values():
            out |= c.vars()
        return out

    def join(self, other: "SharedProduct") -> bool:
        changed = False
        for name, c in self.components.items():
            changed |= c.join(other.components[name])
        return changed

    def leq(self, other: "SharedProduct") -> bool:
        return all(c.leq(other.components[n]) for n, c in self.components.items())

    def contains(self, point) -> bool:
        return all(c.contains(point) for c in self.components.values())


def shared_build(decls: Sequence[SharedDecl], mode: str = "alias") -> SharedProduct:
    return SharedProduct(decls, mode)


def rho_reduce(e: SharedProduct) -> SharedProduct:
    out = e.copy()
    out.rho()
    return out


def shared_closure(e: SharedProduct) -> SharedProduct:
    out = e.copy()
    out.closure()
    return out


def shared_interpret(e: SharedProduct, phi: Formula) -> SharedProduct:
    out = e.copy()
    out.interpret(phi)
    return out
