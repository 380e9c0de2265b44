"""Propagate-and-search: enumeration, the ``dms`` strategy and branch and bound."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .lattice import FALSE, INF, TRUE, Interval, InfiniteLowerBound

OPTIMAL, SAT, UNSAT, TIMEOUT = "Optimal", "Sat", "Unsat", "Timeout"


@dataclass
class Strategy:
    """Variable phases for ``dms``: smallest width first, lower bound first."""

    phases: list = field(default_factory=list)

    def variables(self) -> list:
        return [x for phase in self.phases for x in phase]


@dataclass
class SearchStats:
    nodes: int = 0
    solutions: int = 0
    best_objective: Optional[int] = None
    time_to_best: Optional[float] = None
    total_time: float = 0.0
    status: str = UNSAT
    nodes_to_best: Optional[int] = None
    # objective values in the order they were found
    trajectory: list = field(default_factory=list)


def _pick(element, names: Sequence[str]):
    best = None
    for x in names:
        itv = element.project(x)
        if itv.lo >= itv.hi:
            continue
        key = (itv.hi - itv.lo, x)
        if best is None or key < best[0]:
            best = (key, x, itv)
    return best


def dms_branch(element, strategy: Strategy) -> list:
    """Branch on the first phase with an unfixed variable; ``x = l`` first.

    When every strategy variable is fixed, defer to the element's own split.
    """
    for phase in strategy.phases:
        best = _pick(element, phase)
        if best is None:
            continue
        _, x, itv = best
        if itv.lo == -INF:
            raise InfiniteLowerBound(f"cannot branch on {x} = {itv}: no finite lower bound")
        left = element.copy()
        left.embed(x, Interval(itv.lo, itv.lo))
        right = element.copy()
        right.embed(x, Interval(itv.lo + 1, itv.hi))
        return [left, right]
    return element.split()


def _fixed(element, names) -> bool:
    for x in names:
        itv = element.project(x)
        if itv.lo != itv.hi:
            return False
    return True


def _branch(element, strategy: Optional[Strategy]) -> list:
    if strategy is None:
        return element.split()
    return dms_branch(element, strategy)


def solve(root, timeout: Optional[float] = None, strategy: Optional[Strategy] = None,
          max_solutions: Optional[int] = None):
    """Depth-first enumeration.  Returns the elements reached in state True."""
    start = time.monotonic()
    deadline = None if timeout is None else start + timeout
    stats = SearchStats()
    solutions = []
    stack = [root.copy()]
    timed_out = False
    while stack:
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        node = stack.pop()
        stats.nodes += 1
        node.closure()
        s = node.state()
        if s is FALSE:
            continue
        if s is TRUE:
            solutions.append(node)
            stats.solutions += 1
            if max_solutions is not None and stats.solutions >= max_solutions:
                timed_out = bool(stack)
                break
            continue
        stack.extend(reversed(_branch(node, strategy)))
    stats.total_time = time.monotonic() - start
    if timed_out:
        stats.status = TIMEOUT
    else:
        stats.status = SAT if solutions else UNSAT
    return solutions, stats


def minimize(root, objective: str, strategy: Strategy, timeout: Optional[float] = None,
             node_limit: Optional[int] = None):
    """Branch and bound on ``objective``.

    A node yields a solution once it is in state True with every strategy
    variable fixed; later nodes are entered with ``objective <= best - 1``.
    Returns ``(stats, assignment)`` where the assignment is the best solution
    over the strategy variables, or None.
    """
    start = time.monotonic()
    deadline = None if timeout is None else start + timeout
    stats = SearchStats()
    names = strategy.variables()
    if objective not in names:
        names.append(objective)
    best_point = None
    stack = [root.copy()]
    exhausted = True
    while stack:
        if (deadline is not None and time.monotonic() > deadline) or \
                (node_limit is not None and stats.nodes >= node_limit):
            exhausted = False
            break
        node = stack.pop()
        stats.nodes += 1
        if stats.best_objective is not None:
            node.embed(objective, Interval(-INF, stats.best_objective - 1))
        node.closure()
        s = node.state()
        if s is FALSE:
            continue
        if s is TRUE and _fixed(node, names):
            v = node.project(objective).lo
            stats.solutions += 1
            stats.best_objective = v
            stats.time_to_best = time.monotonic() - start
            stats.nodes_to_best = stats.nodes
            stats.trajectory.append(v)
            best_point = {x: node.project(x).lo for x in names}
            continue
        stack.extend(reversed(dms_branch(node, strategy)))
    stats.total_time = time.monotonic() - start
    if exhausted:
        stats.status = OPTIMAL if stats.solutions else UNSAT
    else:
        stats.status = TIMEOUT
    return stats, best_point
