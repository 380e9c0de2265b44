"""Independent reference implementations and random generators for testing.

Nothing here shares code with the domains it checks beyond the formula AST:
octagon closure is recomputed with Bellman-Ford on plain lists, and solution
sets come from exhaustive enumeration of ``holds``.
"""

from __future__ import annotations

import itertools
import math
import random
from typing import Iterable, Optional

from .formula import (
    Atom, Formula, IntConst, Op, Rel, Var, Bin, Neg, conj, disj, eq, ge, gt, holds,
    le, lt, ne,
)

INF = math.inf


# -- octagons ---------------------------------------------------------------

def random_coherent_dbm(rng: random.Random, n: int, lo: int = -8, hi: int = 8,
                        p_inf: float = 0.4) -> list:
    """A coherent ``2n x 2n`` matrix with zero diagonal."""
    size = 2 * n
    m = [[INF] * size for _ in range(size)]
    for i in range(size):
        m[i][i] = 0
    for r in range(size):
        for c in range(size):
            if r == c:
                continue
            # one draw per coherent pair {(r, c), (c^1, r^1)}
            mr, mc = c ^ 1, r ^ 1
            if (mr, mc) < (r, c):
                continue
            v = INF if rng.random() < p_inf else rng.randint(lo, hi)
            m[r][c] = v
            m[mr][mc] = v
    return m


def bellman_ford_closure(m: list) -> Optional[list]:
    """All-pairs shortest paths by Bellman-Ford from every source; None on a negative cycle."""
    size = len(m)
    edges = [(u, v, m[u][v]) for u in range(size) for v in range(size)
             if u != v and m[u][v] != INF]
    out = []
    for s in range(size):
        dist = [INF] * size
        dist[s] = 0
        for _ in range(size - 1):
            moved = False
            for u, v, w in edges:
                if dist[u] != INF and dist[u] + w < dist[v]:
                    dist[v] = dist[u] + w
                    moved = True
            if not moved:
                break
        for u, v, w in edges:
            if dist[u] != INF and dist[u] + w < dist[v]:
                return None
        # the diagonal keeps its own entry when no cycle improves it
        dist[s] = min(m[s][s], 0)
        out.append(dist)
    return out


def _floor_half(v):
    return v if v == INF else math.floor(v / 2)


def octagon_oracle(m: list):
    """``(matrix, consistent)``: shortest paths, integer tightening, one strengthening."""
    sp = bellman_ford_closure(m)
    if sp is None or any(sp[i][i] < 0 for i in range(len(m))):
        return None, False
    size = len(sp)
    for i in range(size):
        v = sp[i][i ^ 1]
        if v != INF:
            sp[i][i ^ 1] = 2 * math.floor(v / 2)
    half = [_floor_half(sp[i][i ^ 1]) for i in range(size)]
    out = [[min(sp[i][j], half[i] + half[j ^ 1]) for j in range(size)] for i in range(size)]
    if any(out[i][i] < 0 for i in range(size)):
        return None, False
    return out, True


def octagon_points(m: list, names: list, lo: int, hi: int) -> list:
    """Integer points of the box ``[lo..hi]^n`` satisfying every DBM entry."""
    size = len(m)
    out = []
    for values in itertools.product(range(lo, hi + 1), repeat=len(names)):
        lit = []
        for v in values:
            lit += [v, -v]
        if all(lit[c] - lit[r] <= m[r][c] for r in range(size) for c in range(size)):
            out.append(dict(zip(names, values)))
    return out


# -- formulas ---------------------------------------------------------------

def solutions(phi: Formula, domains: dict) -> list:
    """Every assignment over ``domains`` (name -> (lo, hi)) satisfying ``phi``."""
    names = sorted(domains)
    ranges = [range(domains[x][0], domains[x][1] + 1) for x in names]
    out = []
    for values in itertools.product(*ranges):
        point = dict(zip(names, values))
        if holds(phi, point):
            out.append(point)
    return out


def as_keys(points: Iterable[dict], names=None) -> set:
    points = list(points)
    if names is None:
        names = sorted(points[0]) if points else []
    return {tuple(p[x] for x in names) for p in points}


_RELS = [le, lt, ge, gt, eq, ne]


def random_expr(rng: random.Random, names: list, depth: int = 2, ops=(Op.ADD, Op.SUB, Op.MUL)):
    if depth == 0 or rng.random() < 0.35:
        if rng.random() < 0.7:
            return Var(rng.choice(names))
        return IntConst(rng.randint(-3, 6))
    if rng.random() < 0.1:
        return Neg(random_expr(rng, names, depth - 1, ops))
    return Bin(rng.choice(ops), random_expr(rng, names, depth - 1, ops),
               random_expr(rng, names, depth - 1, ops))


def random_atom(rng: random.Random, names: list, depth: int = 2, rels=None,
                ops=(Op.ADD, Op.SUB, Op.MUL)) -> Atom:
    rel = rng.choice(rels or _RELS)
    return rel(random_expr(rng, names, depth, ops), random_expr(rng, names, depth - 1, ops))


def random_domains(rng: random.Random, names: list, lo: int = 0, hi: int = 8) -> dict:
    out = {}
    for x in names:
        a, b = sorted((rng.randint(lo, hi), rng.randint(lo, hi)))
        out[x] = (a, b)
    return out


def random_clause(rng: random.Random, names: list, width: int = 3, depth: int = 1) -> Formula:
    k = rng.randint(2, width)
    return disj(*[random_atom(rng, names, depth) for _ in range(k)])


def unary_atom(rng: random.Random, names: list, lo: int = 0, hi: int = 9) -> Atom:
    x = Var(rng.choice(names))
    rel = rng.choice([le, lt, ge, gt, eq])
    return rel(x, rng.randint(lo, hi))


def c3_system(rng: random.Random, names=("x", "y", "z"), hi: int = 6) -> list:
    """A mix of unary, octagonal and ternary linear atoms in the style of
    ``x > 1, x + y + z <= 5, y - z <= 3``."""
    xs = [Var(n) for n in names]
    out = [gt(rng.choice(xs), rng.randint(0, 2))]
    for _ in range(rng.randint(1, 2)):
        a, b, c = rng.sample(xs, 3)
        s = rng.choice([1, -1])
        total = a + b + c if s > 0 else a + b - c
        out.append(rng.choice([le, ge])(total, rng.randint(2, 2 * hi)))
    for _ in range(rng.randint(1, 2)):
        a, b = rng.sample(xs, 2)
        out.append(le(a - b if rng.random() < 0.5 else a + b, rng.randint(-2, hi)))
    return out


# -- job shop ---------------------------------------------------------------

def random_fjs(rng: random.Random, max_tasks: int = 8, max_machines: int = 3,
               max_duration: int = 5):
    from .fjssp import FjsInstance

    n_machines = rng.randint(1, max_machines)
    total = rng.randint(2, max_tasks)
    n_jobs = rng.randint(1, min(4, total))
    sizes = [1] * n_jobs
    for _ in range(total - n_jobs):
        sizes[rng.randrange(n_jobs)] += 1
    jobs = []
    for size in sizes:
        job = []
        for _ in range(size):
            k = rng.randint(1, min(2, n_machines))
            ms = rng.sample(range(1, n_machines + 1), k)
            job.append([(m, rng.randint(1, max_duration)) for m in sorted(ms)])
        jobs.append(job)
    return FjsInstance(n_jobs, n_machines, jobs)
