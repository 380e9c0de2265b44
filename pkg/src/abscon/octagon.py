"""Integer octagons over a coherent difference-bound matrix.

Variable ``i`` owns the literal ``+x_i`` at index ``2i`` and ``-x_i`` at
``2i + 1``; ``dbm[r, c]`` bounds ``lit(c) - lit(r)``.  Bars flip the low bit
(``r ^ 1``).  Entries are float64 so that ``inf`` is native; every finite entry
is an integer well inside the exactly-representable range.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np

from .formula import And, Atom, linear_le
from .lattice import (
    BOTTOM, EMPTY, FALSE, INF, TRUE, AbstractDomain, Interval, IntervalOverflow,
    Kleene, NotSupported, bound_split, tick,
)

MAX_ENTRY = 2 ** 50


def _octagonal_rows(phi) -> Optional[list]:
    """``[(r, c, bound)]`` entries encoding ``phi`` keyed by variable name."""
    if isinstance(phi, And):
        l = _octagonal_rows(phi.l)
        if l is None:
            return None
        r = _octagonal_rows(phi.r)
        return None if r is None else l + r
    if not isinstance(phi, Atom):
        return None
    rows = linear_le(phi)
    if rows is None:
        return None
    out = []
    for coeffs, k in rows:
        if abs(k) > MAX_ENTRY:
            raise IntervalOverflow(f"constant {k} too large for an octagon")
        items = sorted(coeffs.items())
        if not items:
            out.append(None if k >= 0 else False)
        elif len(items) == 1:
            x, a = items[0]
            if a in (1, -1):
                # x <= k: (+x) - (-x) <= 2k
                out.append(((x, -a), (x, a), 2 * k))
            elif a in (2, -2):
                out.append(((x, -a // 2), (x, a // 2), k))
            else:
                return None
        elif len(items) == 2:
            (x, a), (y, b) = items
            if a not in (1, -1) or b not in (1, -1):
                return None
            # a*x + b*y <= k  as  lit(a*x) - lit(-b*y) <= k
            out.append(((y, -b), (x, a), k))
        else:
            return None
    return out


class Octagon(AbstractDomain):
    def __init__(self, variables: Iterable[str] = ()):
        self.variables: list = []
        self.index: dict = {}
        self.dbm = np.zeros((0, 0))
        self.closed = True
        # literal indices touched since the last closure; None forces a full pass
        self._pivots: Optional[set] = set()
        self._failed = False
        self._proj: dict = {}
        self._ver = tick()
        for x in variables:
            self.register(x)

    def __repr__(self):
        return f"Octagon({self.variables}, failed={self._failed})"

    def __deepcopy__(self, memo):
        o = Octagon.__new__(Octagon)
        o.variables = list(self.variables)
        o.index = dict(self.index)
        o.dbm = self.dbm.copy()
        o.closed = self.closed
        o._pivots = None if self._pivots is None else set(self._pivots)
        o._failed = self._failed
        o._proj = dict(self._proj)
        o._ver = self._ver
        memo[id(self)] = o
        return o

    @classmethod
    def from_matrix(cls, variables: list, dbm) -> "Octagon":
        o = cls()
        o.variables = list(variables)
        o.index = {x: i for i, x in enumerate(variables)}
        o.dbm = np.array(dbm, dtype=float)
        if o.dbm.shape != (2 * len(variables),) * 2:
            raise ValueError("matrix shape does not match the variables")
        o.closed = False
        o._pivots = None
        o._proj = {}
        return o

    def register(self, x: str) -> int:
        i = self.index.get(x)
        if i is not None:
            return i
        i = len(self.variables)
        self.variables.append(x)
        self.index[x] = i
        n2 = 2 * i
        m = np.full((n2 + 2, n2 + 2), INF)
        m[:n2, :n2] = self.dbm
        m[n2, n2] = m[n2 + 1, n2 + 1] = 0.0
        self.dbm = m
        self._ver = tick()
        return i

    def _lit(self, x: str, sign: int) -> int:
        i = self.register(x)
        return 2 * i if sign > 0 else 2 * i + 1

    def tighten(self, r: int, c: int, bound) -> bool:
        """Lower ``dbm[r, c]`` (and its coherent mirror) to ``bound``."""
        m = self.dbm
        if bound >= m.item(r, c):
            return False
        m[r, c] = bound
        m[c ^ 1, r ^ 1] = bound
        self._proj.clear()
        self._ver = tick()
        self.closed = False
        if self._pivots is not None:
            self._pivots.update((r, c, r ^ 1, c ^ 1))
        return True

    # -- language ---------------------------------------------------------

    def supports(self, phi) -> bool:
        try:
            return _octagonal_rows(phi) is not None
        except IntervalOverflow:
            return False

    def interpret(self, phi) -> bool:
        rows = _octagonal_rows(phi)
        if rows is None:
            raise NotSupported(f"octagon cannot interpret {phi}")
        changed = False
        for row in rows:
            if row is None:
                continue
            if row is False:
                changed |= not self._failed
                self._failed = True
                self._ver = tick()
                continue
            (y, sy), (x, sx), k = row
            r = self._lit(y, sy)
            c = self._lit(x, sx)
            changed |= self.tighten(r, c, float(k))
        return changed

    # -- closure ----------------------------------------------------------

    def close(self) -> bool:
        """Full tight closure (Floyd-Warshall, tightening, strengthening)."""
        self._pivots = None
        self.closed = False
        return self.closure()

    def incremental_close(self, entries: Iterable[tuple]) -> bool:
        """Closure after tightening ``entries`` of a previously closed matrix."""
        pivots = set()
        for r, c in entries:
            pivots.update((r, c, r ^ 1, c ^ 1))
        self._pivots = pivots
        self.closed = False
        return self.closure()

    def closure(self) -> bool:
        if self._failed or self.closed:
            return False
        m = self.dbm
        n2 = m.shape[0]
        before = m.copy()
        pivots = range(n2) if self._pivots is None else sorted(self._pivots)
        for k in pivots:
            np.minimum(m, m[:, k:k + 1] + m[k:k + 1, :], out=m)
        _tighten_and_strengthen(m)
        self._proj.clear()
        self.closed = True
        self._pivots = set()
        if n2 and (np.diagonal(m) < 0).any():
            self._failed = True
            self._ver = tick()
            return True
        if np.array_equal(before, m):
            return False
        self._ver = tick()
        return True

    # -- queries ----------------------------------------------------------

    def state(self) -> Kleene:
        return FALSE if self._failed else TRUE

    def failed(self) -> bool:
        return self._failed

    def project(self, x: str) -> Interval:
        if self._failed:
            return EMPTY
        hit = self._proj.get(x)
        if hit is not None:
            return hit
        i = self.index.get(x)
        if i is None:
            return BOTTOM
        m = self.dbm
        up = m.item(2 * i + 1, 2 * i)
        down = m.item(2 * i, 2 * i + 1)
        hi = INF if up == INF else math.floor(up / 2)
        lo = -INF if down == INF else math.ceil(-down / 2)
        out = EMPTY if lo > hi else Interval(lo, hi)
        self._proj[x] = out
        return out

    def embed(self, x: str, itv: Interval) -> bool:
        i = self.index.get(x)
        if i is None:
            return False
        if itv.lo > itv.hi:
            changed = not self._failed
            self._failed = True
            self._ver = tick()
            return changed
        changed = False
        if itv.hi != INF:
            changed |= self.tighten(2 * i + 1, 2 * i, float(2 * itv.hi))
        if itv.lo != -INF:
            changed |= self.tighten(2 * i, 2 * i + 1, float(-2 * itv.lo))
        return changed

    def vars(self) -> set:
        return set(self.variables)

    def split(self) -> list:
        return bound_split(self)

    def contains(self, point) -> bool:
        if self._failed:
            return False
        n = len(self.variables)
        if n == 0:
            return True
        v = np.empty(2 * n)
        for i, x in enumerate(self.variables):
            v[2 * i] = point[x]
            v[2 * i + 1] = -point[x]
        return bool((v[None, :] - v[:, None] <= self.dbm).all())

    # -- lattice ----------------------------------------------------------

    def _aligned(self, other: "Octagon") -> np.ndarray:
        """``other``'s matrix over self's literal indices (inf where unknown)."""
        n2 = 2 * len(self.variables)
        out = np.full((n2, n2), INF)
        np.fill_diagonal(out, 0.0)
        mine, theirs = [], []
        for x, j in other.index.items():
            i = self.index.get(x)
            if i is not None:
                mine += [2 * i, 2 * i + 1]
                theirs += [2 * j, 2 * j + 1]
        if mine:
            out[np.ix_(mine, mine)] = other.dbm[np.ix_(theirs, theirs)]
        return out

    def join(self, other: "Octagon") -> bool:
        if other._failed:
            changed = not self._failed
            self._failed = True
            self._ver = tick()
            return changed
        for x in other.variables:
            self.register(x)
        aligned = self._aligned(other)
        if (aligned >= self.dbm).all():
            return False
        np.minimum(self.dbm, aligned, out=self.dbm)
        self._proj.clear()
        self._ver = tick()
        self.closed = False
        self._pivots = None
        return True

    def leq(self, other: "Octagon") -> bool:
        if other._failed:
            return True
        if self._failed:
            return False
        # self's constraints on variables unknown to other must be trivial
        probe = Octagon.__new__(Octagon)
        probe.variables = list(other.variables)
        probe.index = dict(other.index)
        for x in self.variables:
            if x not in probe.index:
                probe.index[x] = len(probe.variables)
                probe.variables.append(x)
        n2 = 2 * len(probe.variables)
        mine = np.full((n2, n2), INF)
        np.fill_diagonal(mine, 0.0)
        k = other.dbm.shape[0]
        mine[:k, :k] = other.dbm
        return bool((mine <= probe._aligned(self)).all())

    def __eq__(self, other):
        return isinstance(other, Octagon) and self.leq(other) and other.leq(self)

    __hash__ = None


def _tighten_and_strengthen(m: np.ndarray) -> None:
    n2 = m.shape[0]
    if not n2:
        return
    idx = np.arange(n2)
    bar = idx ^ 1
    m[idx, bar] = 2 * np.floor(m[idx, bar] / 2)
    half = np.floor(m[idx, bar] / 2)
    np.minimum(m, half[:, None] + half[bar][None, :], out=m)


def oct_close(o: Octagon) -> Octagon:
    out = o.copy()
    out.close()
    return out


def oct_incremental_close(o: Octagon, changed: tuple) -> Octagon:
    out = o.copy()
    out.incremental_close([changed])
    return out
