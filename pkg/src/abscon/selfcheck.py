"""Oracle suites shared by ``abscon check`` and the test-suite.

Each suite takes a seeded ``random.Random`` and a trial count and returns a
:class:`SuiteResult` listing the failing trials.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

import numpy as np

from .box import Box
from .formula import Var, at, conj, disj, ge, holds, le
from .ipc import IPC
from .logic import LogicCompletion
from .lattice import Interval, concretize
from .octagon import Octagon
from .oracles import (
    as_keys, c3_system, octagon_oracle, random_atom, random_coherent_dbm,
    random_clause, random_domains, random_fjs, solutions, unary_atom,
)
from .products import (
    BOX, IPCK, L, DelayedProduct, DirectProduct, SharedDecl, SharedProduct,
)
from .search import OPTIMAL, minimize, solve


@dataclass
class SuiteResult:
    name: str
    trials: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures and self.trials > 0

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return (f"{verdict} {self.name}: {self.trials - len(self.failures)}/{self.trials} "
                f"trials ok in {self.seconds:.2f}s")


def _timed(fn):
    def run(rng, trials, **kw):
        t = time.monotonic()
        res = fn(rng, trials, **kw)
        res.seconds = time.monotonic() - t
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_timed
def octagon_suite(rng: random.Random, trials: int = 500) -> SuiteResult:
    """Full closure against Bellman-Ford + tightening, exact matrix equality."""
    res = SuiteResult("octagon")
    inconsistent = 0
    for k in range(trials):
        n = rng.randint(1, 5)
        m = random_coherent_dbm(rng, n, p_inf=rng.uniform(0.3, 0.9))
        o = Octagon.from_matrix([f"v{i}" for i in range(n)], m)
        o.close()
        ref, ok = octagon_oracle(m)
        res.trials += 1
        if ok == o.failed():
            res.failures.append((k, "consistency flag differs"))
        elif not ok:
            inconsistent += 1
        elif not np.array_equal(o.dbm, np.array(ref, dtype=float)):
            res.failures.append((k, "matrix differs"))
    res.extra["inconsistent"] = inconsistent
    return res


def _ipc_over(domains: dict, atoms_: list):
    box = Box({x: Interval(lo, hi) for x, (lo, hi) in domains.items()})
    e = IPC(box)
    for a in atoms_:
        e.interpret(a)
    return e


@_timed
def ipc_suite(rng: random.Random, trials: int = 1000) -> SuiteResult:
    """No brute-force solution of a random conjunction is lost by IPC closure."""
    res = SuiteResult("ipc")
    for k in range(trials):
        names = ["a", "b", "c", "d"][:rng.randint(1, 4)]
        doms = random_domains(rng, names, 0, 8)
        atoms_ = [random_atom(rng, names) for _ in range(rng.randint(1, 4))]
        phi = conj(*atoms_)
        truth = solutions(phi, doms)
        e = _ipc_over(doms, atoms_)
        e.closure()
        res.trials += 1
        lost = [p for p in truth if not all(p[x] in e.project(x) for x in names)]
        if lost:
            res.failures.append((k, f"{phi}: lost {lost[:3]}"))
    return res


@_timed
def enumeration_suite(rng: random.Random, trials: int = 200) -> SuiteResult:
    """Search over L(IPC(Box)) returns exactly the brute-force solution set."""
    res = SuiteResult("enumeration")
    for k in range(trials):
        names = ["x", "y", "z"][:rng.randint(1, 3)]
        doms = random_domains(rng, names, 0, 6)
        clauses = [random_clause(rng, names) if rng.random() < 0.6 else random_atom(rng, names, 1)
                   for _ in range(rng.randint(1, 3))]
        phi = conj(*clauses)
        truth = as_keys(solutions(phi, doms), names)
        e = LogicCompletion(IPC(Box({x: Interval(lo, hi) for x, (lo, hi) in doms.items()})))
        for c in clauses:
            e.interpret(c)
        found, _ = solve(e, timeout=30)
        got = []
        for f in found:
            got += [tuple(p[x] for x in names) for p in concretize(f, names) if holds(phi, p)]
        extra = [p for f in found for p in concretize(f, names) if not holds(phi, p)]
        res.trials += 1
        # disjunct branches may overlap, so a point can appear in two solutions
        if set(got) != truth or extra:
            res.failures.append((k, f"{phi}: {len(set(got))} found, {len(extra)} spurious, "
                                    f"{len(truth)} expected"))
    return res


def _dp_element(doms: dict, system: list, trace: list):
    env = {x: Interval(lo, hi) for x, (lo, hi) in doms.items()}
    box = Box(env)
    # one octagon on both sides, wired as in the second job shop model
    oct_ = Octagon()
    for x, (lo, hi) in doms.items():
        oct_.interpret(conj(ge(Var(x), lo), le(Var(x), hi)))
    dp = DelayedProduct(IPC(DirectProduct([box, oct_])), oct_, trace=trace)
    for phi in system:
        dp.interpret(phi)
    return dp


@_timed
def dp_suite(rng: random.Random, trials: int = 200) -> SuiteResult:
    """Search through DP(IPC(Box x Oct), Oct) finds exactly the brute-force set."""
    res = SuiteResult("delayed-product")
    names = ["x", "y", "z"]
    relaxed_total = 0
    for k in range(trials):
        hi = rng.randint(3, 6)
        doms = {x: (0, hi) for x in names}
        system = c3_system(rng, names, hi)
        phi = conj(*system)
        truth = as_keys(solutions(phi, doms), names)
        trace: list = []
        dp = _dp_element(doms, system, trace)
        found, stats = solve(dp, timeout=30)
        got = set()
        for e in found:
            for p in concretize(e, names):
                got.add(tuple(p[x] for x in names))
        res.trials += 1
        relaxed_total += len(trace)
        if got != truth:
            res.failures.append((k, f"{phi}: {len(got)} found vs {len(truth)} expected"))
            continue
        pts = [dict(zip(names, t)) for t in truth]
        for r, box in trace:
            inside = [p for p in pts if all(lo <= p[x] <= hi for x, (lo, hi) in box.items())]
            if not all(holds(r, p) for p in inside):
                res.failures.append((k, f"relaxed {r} excludes a solution"))
                break
    res.extra["relaxed"] = relaxed_total
    return res


D1 = [
    SharedDecl("box", BOX),
    SharedDecl("lbox", L(BOX), ("box",)),
    SharedDecl("ipc", IPCK(BOX), ("box",)),
]


def d1_inputs(rng: random.Random):
    names = ["x", "y", "z"]
    doms = random_domains(rng, names, 0, 9)
    bounds = [at(conj(ge(Var(x), lo), le(Var(x), hi)), "box") for x, (lo, hi) in doms.items()]
    clauses = [at(disj(*[unary_atom(rng, names) for _ in range(rng.randint(2, 3))]), "lbox")
               for _ in range(rng.randint(1, 3))]
    props = [at(random_atom(rng, names, depth=1), "ipc") for _ in range(rng.randint(1, 3))]
    return names, bounds, clauses + props


def d1_element(mode: str, bounds: list, constraints: list) -> SharedProduct:
    e = SharedProduct(D1, mode)
    for b in bounds:
        e.interpret(b)
    # views start from the bounds; later constraints name their component
    e.rho()
    for c in constraints:
        e.interpret(c)
    return e


def same_information(a, b) -> bool:
    return a.leq(b) and b.leq(a)


@_timed
def sharing_suite(rng: random.Random, trials: int = 100) -> SuiteResult:
    """Exchange by joins and literal aliasing reach the same components."""
    res = SuiteResult("sharing")
    for k in range(trials):
        names, bounds, cs = d1_inputs(rng)
        alias = d1_element("alias", bounds, cs)
        exch = d1_element("exchange", bounds, cs)
        alias.closure()
        exch.closure()
        res.trials += 1
        for name in alias.components:
            if not same_information(alias[name], exch[name]):
                res.failures.append((k, f"component {name} differs"))
                break
        else:
            # every view of the shared box agrees with it
            if any(not same_information(v, exch[n]) for n, v in exch.views):
                res.failures.append((k, "a view disagrees with its box"))
    return res


@_timed
def fjssp_suite(rng: random.Random, trials: int = 20, timeout: float = 10.0,
                kinds=("fjs1", "fjs2")) -> SuiteResult:
    """Branch and bound over both models matches brute force on tiny instances."""
    from .fjssp import OBJECTIVE, build_model, fjssp_oracle, verify_schedule

    res = SuiteResult("fjssp")
    for k in range(trials):
        inst = random_fjs(rng)
        best = fjssp_oracle(inst)
        for kind in kinds:
            m = build_model(kind, inst)
            stats, point = minimize(m.element(), OBJECTIVE, m.strategy, timeout=timeout)
            res.trials += 1
            if stats.status != OPTIMAL or stats.best_objective != best:
                res.failures.append((k, f"{kind}: {stats.status} {stats.best_objective} vs {best}"))
            elif verify_schedule(inst, point):
                res.failures.append((k, f"{kind}: infeasible schedule"))
    return res


def _random_elements(rng: random.Random):
    """One freshly interpreted, unclosed element per domain kind."""
    names = ["x", "y", "z"]
    doms = random_domains(rng, names, 0, 8)
    bounds = {x: Interval(lo, hi) for x, (lo, hi) in doms.items()}
    atoms_ = [random_atom(rng, names, depth=1) for _ in range(rng.randint(1, 3))]
    n = rng.randint(1, 3)
    oct_ = Octagon.from_matrix(names[:n], random_coherent_dbm(rng, n, p_inf=0.6))
    yield "box", Box(bounds)
    yield "octagon", oct_
    ipc = IPC(Box(bounds))
    for a in atoms_:
        ipc.interpret(a)
    yield "ipc", ipc
    lc = LogicCompletion(IPC(Box(bounds)))
    lc.interpret(random_clause(rng, names))
    lc.interpret(atoms_[0])
    yield "logic", lc
    system = c3_system(rng, names, 6)
    yield "delayed", _dp_element({x: (0, 6) for x in names}, system, [])
    _, b, cs = d1_inputs(rng)
    yield "shared", d1_element(rng.choice(["alias", "exchange"]), b, cs)


@_timed
def extensive_suite(rng: random.Random, trials: int = 100) -> SuiteResult:
    """Closure only adds information: ``a <= closure(a)`` for every domain."""
    res = SuiteResult("extensive")
    for k in range(trials):
        for kind, e in _random_elements(rng):
            before = e.copy()
            e.closure()
            res.trials += 1
            if not before.leq(e):
                res.failures.append((k, f"{kind}: closure lost information"))
    return res


@_timed
def determinism_suite(rng: random.Random, trials: int = 5, node_limit: int = 300) -> SuiteResult:
    """Identical node-limited runs give identical records and schedules."""
    import json
    from dataclasses import asdict

    from .fjssp import OBJECTIVE, build_model

    res = SuiteResult("determinism")
    for k in range(trials):
        inst = random_fjs(rng, max_tasks=10)
        for kind in ("fjs1", "fjs2"):
            outs = []
            for _ in range(2):
                m = build_model(kind, inst)
                stats, point = minimize(m.element(), OBJECTIVE, m.strategy, node_limit=node_limit)
                rec = {k: v for k, v in asdict(stats).items()
                       if k not in ("time_to_best", "total_time")}
                outs.append(json.dumps([rec, point], sort_keys=True, default=str))
            res.trials += 1
            if outs[0] != outs[1]:
                res.failures.append((k, f"{kind}: runs differ"))
    return res


SUITES = {
    "octagon": (octagon_suite, 200),
    "ipc": (ipc_suite, 300),
    "dp": (dp_suite, 60),
    "sharing": (sharing_suite, 50),
    "enumeration": (enumeration_suite, 100),
    "fjssp": (fjssp_suite, 6),
    "extensive": (extensive_suite, 50),
    "determinism": (determinism_suite, 3),
}
