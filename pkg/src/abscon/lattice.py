"""Extended-integer intervals, Kleene logic and the abstract-domain contract.

Bounds are Python ints for finite values and ``math.inf``/``-math.inf`` for
the infinities.  Finite results are checked against ``MAX_BOUND`` so that an
overflow fails loudly instead of silently growing.

Intervals are ordered by *information*: ``a <= b`` iff ``b`` denotes fewer
integers, so bottom is ``[-inf..inf]`` and top is the empty interval.
"""

from __future__ import annotations

import copy
import enum
import itertools
import math
from abc import ABC, abstractmethod
from typing import Iterable, Mapping, NamedTuple, Union

from .formula import Op

INF = math.inf
MAX_BOUND = 2 ** 62

Bound = Union[int, float]


class SolverError(Exception):
    pass


class NotSupported(SolverError):
    """The formula lies outside the constraint language of a domain.

    Distinct from inconsistency: an unsupported formula says nothing about
    satisfiability.
    """


class UnregisteredVariable(SolverError):
    pass


class AmbiguousTarget(SolverError):
    pass


class InfiniteLowerBound(SolverError):
    pass


class IntervalOverflow(SolverError, ArithmeticError):
    pass


def check_bound(v: Bound) -> Bound:
    if v != INF and v != -INF and not -MAX_BOUND <= v <= MAX_BOUND:
        raise IntervalOverflow(f"bound {v} exceeds the supported range")
    return v


class Interval(NamedTuple):
    lo: Bound
    hi: Bound

    def is_empty(self) -> bool:
        return self.lo > self.hi

    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def width(self) -> Bound:
        """Number of integers in the interval (inf when unbounded)."""
        if self.lo > self.hi:
            return 0
        return self.hi - self.lo + 1

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def leq(self, other: "Interval") -> bool:
        """Information order: ``other`` is at least as tight as ``self``."""
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        return self.lo <= other.lo and other.hi <= self.hi

    def __str__(self):
        if self.is_empty():
            return "{}"
        return f"[{_fmt(self.lo)}..{_fmt(self.hi)}]"


def _fmt(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return str(v)


EMPTY = Interval(INF, -INF)
BOTTOM = Interval(-INF, INF)


def interval(lo: Bound, hi: Bound) -> Interval:
    """Build an interval, mapping every empty one to ``EMPTY``."""
    if lo > hi or lo == INF or hi == -INF:
        return EMPTY
    return Interval(lo, hi)


def singleton(v: int) -> Interval:
    return Interval(v, v)


def interval_join(a: Interval, b: Interval) -> Interval:
    """Lattice join, i.e. set intersection."""
    lo = a.lo if a.lo >= b.lo else b.lo
    hi = a.hi if a.hi <= b.hi else b.hi
    if lo > hi or lo == INF or hi == -INF:
        return EMPTY
    return Interval(lo, hi)


def _mul(x: Bound, y: Bound) -> Bound:
    if x == 0 or y == 0:
        return 0
    return x * y


def neg_interval(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    return Interval(-a.hi, -a.lo)


def interval_arith(op: Op, a: Interval, b: Interval) -> Interval:
    """Smallest interval containing ``{x op y}`` for x in a, y in b."""
    if a.lo > a.hi or b.lo > b.hi:
        return EMPTY
    if op is Op.ADD:
        lo, hi = a.lo + b.lo, a.hi + b.hi
    elif op is Op.SUB:
        lo, hi = a.lo - b.hi, a.hi - b.lo
    else:
        c = (_mul(a.lo, b.lo), _mul(a.lo, b.hi), _mul(a.hi, b.lo), _mul(a.hi, b.hi))
        lo, hi = min(c), max(c)
    return Interval(check_bound(lo), check_bound(hi))


def _div_floor(n: Bound, d: Bound) -> Bound:
    # d is finite and non-zero or infinite; n/inf tends to 0
    if d == INF or d == -INF:
        return 0
    if n == INF or n == -INF:
        return n if d > 0 else -n
    return n // d


def _div_ceil(n: Bound, d: Bound) -> Bound:
    if d == INF or d == -INF:
        return 0
    if n == INF or n == -INF:
        return n if d > 0 else -n
    return -((-n) // d)


def interval_inv_narrow(op: Op, result: Interval, known: Interval,
                        side: str = "left") -> Interval:
    """Hull of the values ``v`` such that ``v op k`` (side="left") or
    ``k op v`` (side="right") lands in ``result`` for some ``k`` in ``known``.
    """
    if result.is_empty() or known.is_empty():
        return EMPTY
    if op is Op.ADD:
        return interval_arith(Op.SUB, result, known)
    if op is Op.SUB:
        if side == "left":
            return interval_arith(Op.ADD, result, known)
        return interval_arith(Op.SUB, known, result)
    if known.lo <= 0 <= known.hi:
        return BOTTOM
    # real quotient hull of result / known, then rounded inwards to integers
    lows, highs = [], []
    for n in (result.lo, result.hi):
        for d in (known.lo, known.hi):
            lows.append(_div_ceil(n, d))
            highs.append(_div_floor(n, d))
    return interval(min(lows), max(highs))


class Kleene(enum.Enum):
    FALSE = 0
    TRUE = 1
    UNKNOWN = 2

    def __str__(self):
        return self.name.lower()


TRUE, FALSE, UNKNOWN = Kleene.TRUE, Kleene.FALSE, Kleene.UNKNOWN


def kleene_and(a: Kleene, b: Kleene) -> Kleene:
    if a is FALSE or b is FALSE:
        return FALSE
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return TRUE


def kleene_or(a: Kleene, b: Kleene) -> Kleene:
    if a is TRUE or b is TRUE:
        return TRUE
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return FALSE


def kleene_not(a: Kleene) -> Kleene:
    if a is UNKNOWN:
        return a
    return FALSE if a is TRUE else TRUE


def kleene_all(values: Iterable[Kleene]) -> Kleene:
    out = TRUE
    for v in values:
        if v is FALSE:
            return FALSE
        if v is UNKNOWN:
            out = UNKNOWN
    return out


class AbstractDomain(ABC):
    """Operations shared by every abstract element.

    Elements are mutable: ``interpret``, ``join``, ``embed`` and ``closure``
    update ``self`` and report whether anything changed.  Branching works on
    copies (:meth:`copy`), which preserve sharing between sub-elements.
    """

    @abstractmethod
    def interpret(self, phi) -> bool:
        """Join the interpretation of ``phi``; raise NotSupported if undefined."""

    @abstractmethod
    def supports(self, phi) -> bool:
        ...

    @abstractmethod
    def closure(self) -> bool:
        ...

    @abstractmethod
    def state(self) -> Kleene:
        ...

    @abstractmethod
    def split(self) -> list:
        ...

    @abstractmethod
    def project(self, x: str) -> Interval:
        ...

    @abstractmethod
    def embed(self, x: str, itv: Interval) -> bool:
        """Join the bound ``x in itv`` if ``x`` is a variable of this element."""

    @abstractmethod
    def vars(self) -> set:
        ...

    @abstractmethod
    def join(self, other) -> bool:
        ...

    @abstractmethod
    def leq(self, other) -> bool:
        ...

    @abstractmethod
    def contains(self, point: Mapping[str, int]) -> bool:
        """Membership of a total assignment in the concretization."""

    def failed(self) -> bool:
        """Cheap inconsistency test; may miss what only ``state`` detects."""
        return self.state() is FALSE

    def children(self):
        """Sub-elements whose projections meet to this one's; None for a leaf."""
        return None

    def copy(self):
        return copy.deepcopy(self)


# global mutation clock: every change to a leaf element stores a fresh tick
_clock = [0]


def tick() -> int:
    _clock[0] += 1
    return _clock[0]


# composite projections since the last tick, keyed by (leaf ids, variable);
# the flattened tuples are kept alive so that no id is reused meanwhile
_memo: dict = {}
_memo_refs: list = []
_memo_epoch = [0]


def leaf_stamp(element) -> int:
    """Latest mutation tick among ``element``'s leaves."""
    flat = element.__dict__.get("_flat")
    if flat is None:
        flat = element._flat = flatten(element)
    return max((l._ver for l in flat[0]), default=0)


def flatten(element) -> tuple:
    """``(leaves, guards, key)`` of a composite element.

    ``leaves`` are the distinct leaf elements, aliases counted once;
    ``guards`` are the wrappers whose own ``_failed`` flag empties every
    projection; ``key`` identifies the leaf set.
    """
    leaves, guards, seen = [], [], set()

    def walk(e):
        if id(e) in seen:
            return
        seen.add(id(e))
        kids = e.children()
        if kids is None:
            leaves.append(e)
            return
        if hasattr(e, "_failed"):
            guards.append(e)
        for k in kids:
            walk(k)

    walk(element)
    return tuple(leaves), tuple(guards), tuple(id(l) for l in leaves)


def flat_project(element, x: str) -> Interval:
    """``element.project(x)`` as a meet over its flattened leaves."""
    flat = element.__dict__.get("_flat")
    if flat is None:
        flat = element._flat = flatten(element)
    leaves, guards, key = flat
    for g in guards:
        if g._failed:
            return EMPTY
    if _memo_epoch[0] != _clock[0]:
        _memo.clear()
        _memo_refs.clear()
        _memo_epoch[0] = _clock[0]
    hit = _memo.get((key, x))
    if hit is not None:
        return hit
    _memo_refs.append(flat)
    out = _meet_leaves(leaves, x)
    _memo[(key, x)] = out
    return out


_new = tuple.__new__


def _meet_leaves(leaves, x: str) -> Interval:
    lo, hi = -INF, INF
    for c in leaves:
        itv = c.project(x)
        if itv.lo > lo:
            lo = itv.lo
        if itv.hi < hi:
            hi = itv.hi
        if lo > hi:
            return EMPTY
    if lo == -INF and hi == INF:
        return BOTTOM
    return _new(Interval, (lo, hi))


def bound_split(element) -> list:
    """Split on the narrowest non-singleton variable: ``x = l`` then ``x > l``.

    Ties are broken by variable name.  Returns [] when every variable is fixed.
    """
    best = None
    for x in sorted(element.vars()):
        itv = element.project(x)
        if itv.lo >= itv.hi:
            continue
        w = itv.hi - itv.lo
        if best is None or w < best[0]:
            best = (w, x, itv)
    if best is None:
        return []
    _, x, itv = best
    if itv.lo == -INF:
        raise InfiniteLowerBound(f"cannot split {x} = {itv}: no finite lower bound")
    left = element.copy()
    left.embed(x, Interval(itv.lo, itv.lo))
    right = element.copy()
    right.embed(x, Interval(itv.lo + 1, itv.hi))
    return [left, right]


def concretize(element, variables: Iterable[str]) -> list:
    """Enumerate the points of a bounded element (tests only)."""
    import itertools

    names = sorted(variables)
    ranges = []
    for x in names:
        itv = element.project(x)
        if itv.is_empty():
            return []
        if itv.lo == -INF or itv.hi == INF:
            raise ValueError(f"cannot enumerate unbounded variable {x}")
        ranges.append(range(int(itv.lo), int(itv.hi) + 1))
    out = []
    for values in itertools.product(*ranges):
        point = dict(zip(names, values))
        if element.contains(point):
            out.append(point)
    return out
