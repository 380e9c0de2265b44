"""The box domain: a partial map from variables to intervals."""

from __future__ import annotations

from typing import Mapping, Optional

from .formula import And, Atom, Formula, linear_le
from .lattice import (
    BOTTOM, EMPTY, FALSE, INF, TRUE, AbstractDomain, Interval, Kleene,
    NotSupported, bound_split, check_bound, interval_join, tick,
)


def unary_bound(a: Atom) -> Optional[list]:
    """``[(x, Interval)]`` for an atom ``x REL c`` (up to linear rewriting)."""
    rows = linear_le(a)
    if rows is None:
        return None
    out = []
    for coeffs, k in rows:
        if len(coeffs) != 1:
            return None
        (x, c), = coeffs.items()
        if c == 1:
            out.append((x, Interval(-INF, check_bound(k))))
        elif c == -1:
            out.append((x, Interval(check_bound(-k), INF)))
        else:
            return None
    return out


class Box(AbstractDomain):
    __slots__ = ("env", "_failed", "_ver")

    def __init__(self, env: Optional[Mapping[str, Interval]] = None):
        self.env: dict = {}
        self._failed = False
        self._ver = tick()
        for x, itv in (env or {}).items():
            self.embed_new(x, itv)

    def __repr__(self):
        inner = ", ".join(f"{x}: {itv}" for x, itv in sorted(self.env.items()))
        return f"Box({{{inner}}})"

    def __deepcopy__(self, memo):
        b = Box.__new__(Box)
        b.env = dict(self.env)
        b._failed = self._failed
        b._ver = self._ver
        memo[id(self)] = b
        return b

    def __eq__(self, other):
        return isinstance(other, Box) and self._norm() == other._norm()

    __hash__ = None

    def _norm(self):
        return {x: itv for x, itv in self.env.items() if itv != BOTTOM}

    # -- language ---------------------------------------------------------

    def _bounds(self, phi: Formula) -> Optional[list]:
        if isinstance(phi, Atom):
            return unary_bound(phi)
        if isinstance(phi, And):
            l = self._bounds(phi.l)
            if l is None:
                return None
            r = self._bounds(phi.r)
            return None if r is None else l + r
        return None

    def supports(self, phi) -> bool:
        return self._bounds(phi) is not None

    def interpret(self, phi) -> bool:
        bounds = self._bounds(phi)
        if bounds is None:
            raise NotSupported(f"box cannot interpret {phi}")
        changed = False
        for x, itv in bounds:
            changed |= self.embed_new(x, itv)
        return changed

    # -- lattice ----------------------------------------------------------

    def embed_new(self, x: str, itv: Interval) -> bool:
        """Join ``x in itv``, registering ``x`` if needed."""
        old = self.env.get(x)
        new = interval_join(BOTTOM if old is None else old, itv)
        if new == old:
            return False
        self.env[x] = new
        self._ver = tick()
        if new is EMPTY:
            self._failed = True
        return True

    def embed(self, x: str, itv: Interval) -> bool:
        old = self.env.get(x)
        if old is None:
            return False
        new = interval_join(old, itv)
        if new == old:
            return False
        self.env[x] = new
        self._ver = tick()
        if new is EMPTY:
            self._failed = True
        return True

    def join(self, other: "Box") -> bool:
        changed = False
        for x, itv in other.env.items():
            changed |= self.embed_new(x, itv)
        return changed

    def leq(self, other: "Box") -> bool:
        if other._failed:
            return True
        if self._failed:
            return False
        for x, itv in self.env.items():
            if not itv.leq(other.env.get(x, BOTTOM)):
                return False
        return True

    def closure(self) -> bool:
        return False

    def state(self) -> Kleene:
        return FALSE if self._failed else TRUE

    def failed(self) -> bool:
        return self._failed

    def project(self, x: str) -> Interval:
        return self.env.get(x, BOTTOM)

    def vars(self) -> set:
        return set(self.env)

    def split(self) -> list:
        return bound_split(self)

    def contains(self, point) -> bool:
        if self._failed:
            return False
        for x, itv in self.env.items():
            v = point[x]
            if not itv.lo <= v <= itv.hi:
                return False
        return True


def box_interpret(phi: Formula) -> Box:
    b = Box()
    b.interpret(phi)
    return b


def box_join(a: Box, b: Box) -> Box:
    out = a.copy()
    out.join(b)
    return out
