"""Flexible job shop: instances, models over shared products, and a brute-force oracle.

Tasks are numbered from 1 inside each job, jobs from 1, machines from 1.  The
model variables of task ``t`` of job ``j`` are ``s_j_t`` (start), ``d_j_t``
(duration) and ``m_j_t`` (machine); ``makespan`` is the objective.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .formula import (
    Formula, Imply, Var, at, conj, disj, eq, ge, le,
)
from .lattice import SolverError
from .products import (
    BOX, DP, IPCK, L, OCT, Prod, SharedDecl, SharedProduct, Slot,
)
from .search import Strategy

OBJECTIVE = "makespan"


class FjsParseError(SolverError, ValueError):
    def __init__(self, message: str, line: int, token: Optional[int] = None):
        where = f"line {line}" if token is None else f"line {line}, token {token}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.token = token


class MalformedHeader(FjsParseError):
    pass


class TruncatedJobLine(FjsParseError):
    pass


class MachineIdOutOfRange(FjsParseError):
    pass


class NonPositiveDuration(FjsParseError):
    pass


class SizeGuard(SolverError):
    pass


@dataclass
class FjsInstance:
    n_jobs: int
    n_machines: int
    # jobs[j][t] lists the (machine, duration) alternatives of a task
    jobs: list = field(default_factory=list)
    name: str = ""

    def tasks(self):
        """``(j, t, alternatives)`` with 1-based job and task numbers."""
        for j, job in enumerate(self.jobs, 1):
            for t, alts in enumerate(job, 1):
                yield j, t, alts

    @property
    def n_tasks(self) -> int:
        return sum(len(job) for job in self.jobs)

    def to_fjs(self) -> str:
        lines = [f"{self.n_jobs} {self.n_machines}"]
        for job in self.jobs:
            toks = [str(len(job))]
            for alts in job:
                toks.append(str(len(alts)))
                for m, d in alts:
                    toks += [str(m), str(d)]
            lines.append(" ".join(toks))
        return "\n".join(lines) + "\n"


def _int_token(tok: str, line: int, pos: int, err=TruncatedJobLine) -> int:
    try:
        return int(tok)
    except ValueError:
        raise err(f"expected an integer, got {tok!r}", line, pos) from None


def parse_fjs(text: Union[str, bytes], name: str = "") -> FjsInstance:
    """Read the line-oriented ``.fjs`` format (header, then one line per job)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not rows:
        raise MalformedHeader("empty input", 1)
    hline, head = rows[0]
    if len(head) < 2:
        raise MalformedHeader("expected 'n_jobs n_machines'", hline)
    n_jobs = _int_token(head[0], hline, 1, MalformedHeader)
    n_machines = _int_token(head[1], hline, 2, MalformedHeader)
    if n_jobs < 0 or n_machines < 1:
        raise MalformedHeader(f"bad sizes {n_jobs} jobs, {n_machines} machines", hline)
    if len(rows) - 1 < n_jobs:
        last = rows[-1][0]
        raise TruncatedJobLine(f"expected {n_jobs} job lines, found {len(rows) - 1}", last + 1)
    jobs = []
    for lineno, toks in rows[1:n_jobs + 1]:
        pos = 0

        def take():
            nonlocal pos
            if pos >= len(toks):
                raise TruncatedJobLine("job line ends early", lineno, pos + 1)
            pos += 1
            return _int_token(toks[pos - 1], lineno, pos)

        n_tasks = take()
        job = []
        for _ in range(n_tasks):
            k = take()
            if k < 1:
                raise TruncatedJobLine("a task needs at least one machine", lineno, pos)
            alts = []
            for _ in range(k):
                m = take()
                if not 1 <= m <= n_machines:
                    raise MachineIdOutOfRange(
                        f"machine {m} outside [1..{n_machines}]", lineno, pos)
                d = take()
                if d < 1:
                    raise NonPositiveDuration(f"duration {d}", lineno, pos)
                alts.append((m, d))
            job.append(alts)
        if pos != len(toks):
            raise TruncatedJobLine(f"{len(toks) - pos} extra tokens", lineno, pos + 1)
        jobs.append(job)
    return FjsInstance(n_jobs, n_machines, jobs, name)


def load_fjs(path) -> FjsInstance:
    from pathlib import Path

    p = Path(path)
    return parse_fjs(p.read_bytes(), name=p.stem)


def horizon(inst: FjsInstance) -> int:
    """Serial-schedule bound: every task at its longest alternative, one after another."""
    return sum(max(d for _, d in alts) for _, _, alts in inst.tasks())


def lower_bound(inst: FjsInstance) -> int:
    """Max of the longest job (shortest alternatives) and the average machine load."""
    if not inst.jobs:
        return 0
    job_lb = max((sum(min(d for _, d in alts) for alts in job) for job in inst.jobs),
                 default=0)
    total = sum(min(d for _, d in alts) for _, _, alts in inst.tasks())
    load_lb = -(-total // inst.n_machines)
    return max(job_lb, load_lb)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def s_(j, t):
    return Var(f"s_{j}_{t}")


def d_(j, t):
    return Var(f"d_{j}_{t}")


def m_(j, t):
    return Var(f"m_{j}_{t}")


@dataclass
class FjsModel:
    kind: str
    instance: FjsInstance
    h: int
    declarations: list
    constraints: list
    bounds: dict
    strategy: Strategy
    objective: str = OBJECTIVE

    def element(self, mode: str = "alias") -> SharedProduct:
        e = SharedProduct(self.declarations, mode)
        for c in self.constraints:
            e.interpret(c)
        return e


def _bounds(inst: FjsInstance, h: int) -> dict:
    b = {}
    for j, t, alts in inst.tasks():
        b[f"s_{j}_{t}"] = (0, h)
        ds = [d for _, d in alts]
        ms = [m for m, _ in alts]
        b[f"d_{j}_{t}"] = (min(ds), max(ds))
        b[f"m_{j}_{t}"] = (min(ms), max(ms))
    b[OBJECTIVE] = (0, h)
    return b


def _bound_formula(name: str, lo: int, hi: int) -> Formula:
    x = Var(name)
    return conj(ge(x, lo), le(x, hi))


def _octagon_bounds(bounds: dict) -> list:
    # start dates and the makespan also live in the octagon: its relational
    # bounds are useless without them, and transfers need the variables known
    return [at(_bound_formula(x, lo, hi), "oct") for x, (lo, hi) in bounds.items()
            if x.startswith("s_") or x == OBJECTIVE]


def _strategy(inst: FjsInstance) -> Strategy:
    tasks = [(j, t) for j, t, _ in inst.tasks()]
    return Strategy([
        [f"d_{j}_{t}" for j, t in tasks],
        [f"m_{j}_{t}" for j, t in tasks],
        [f"s_{j}_{t}" for j, t in tasks],
        [OBJECTIVE],
    ])


def fixed_duration(alts) -> Optional[int]:
    ds = {d for _, d in alts}
    return ds.pop() if len(ds) == 1 else None


def precedences(inst: FjsInstance, constant_fixed: bool = False):
    """Job-order and makespan atoms as ``(formula, fixed duration or None)``.

    With ``constant_fixed`` a task whose alternatives share one duration uses
    that constant instead of its duration variable.
    """
    for j, job in enumerate(inst.jobs, 1):
        for t, alts in enumerate(job, 1):
            dd = fixed_duration(alts)
            dur = dd if (constant_fixed and dd is not None) else d_(j, t)
            nxt = s_(j, t + 1) if t < len(job) else Var(OBJECTIVE)
            yield le(s_(j, t) + dur, nxt), dd


def non_overlap_pairs(inst: FjsInstance):
    tasks = [(j, t) for j, t, _ in inst.tasks()]
    for (ja, ta), (jb, tb) in itertools.combinations(tasks, 2):
        if ja != jb:
            yield (ja, ta), (jb, tb)


def non_overlap(a, b, machine_label=None, prec_label=None) -> Formula:
    (ja, ta), (jb, tb) = a, b

    def tag(f, label):
        return f if label is None else at(f, label)

    same = tag(eq(m_(ja, ta), m_(jb, tb)), machine_label)
    before = tag(le(s_(ja, ta) + d_(ja, ta), s_(jb, tb)), prec_label)
    after = tag(le(s_(jb, tb) + d_(jb, tb), s_(ja, ta)), prec_label)
    return Imply(same, disj(before, after))


def alternatives(j, t, alts) -> Formula:
    return disj(*[conj(eq(m_(j, t), m), eq(d_(j, t), d)) for m, d in alts])


def build_fjs1(inst: FjsInstance, h: Optional[int] = None) -> FjsModel:
    """Box and octagon stores plus ``L(IPC(Box x Oct))`` for the rest.

    Precedences of fixed-duration tasks are octagonal and go to the octagon.
    """
    h = horizon(inst) if h is None else h
    decls = [
        SharedDecl("box", BOX),
        SharedDecl("oct", OCT),
        SharedDecl("any", L(IPCK(Prod(BOX, OCT))), ("box", "oct")),
    ]
    bounds = _bounds(inst, h)
    cs = [at(_bound_formula(x, lo, hi), "box") for x, (lo, hi) in bounds.items()]
    cs += _octagon_bounds(bounds)
    for phi, dd in precedences(inst, constant_fixed=True):
        cs.append(at(phi, "oct" if dd is not None else "any"))
    for a, b in non_overlap_pairs(inst):
        cs.append(at(non_overlap(a, b), "any"))
    for j, t, alts in inst.tasks():
        cs.append(at(alternatives(j, t, alts), "any"))
    return FjsModel("fjs1", inst, h, decls, cs, bounds, _strategy(inst))


PREC = DP(IPCK(Prod(BOX, OCT)), OCT)


def build_fjs2(inst: FjsInstance, h: Optional[int] = None) -> FjsModel:
    """Precedences go through the delayed product and move to the octagon once
    their durations are fixed."""
    h = horizon(inst) if h is None else h
    decls = [
        SharedDecl("box", BOX),
        SharedDecl("oct", OCT),
        SharedDecl("prec", PREC, ("box", "oct", "oct")),
        SharedDecl("no_overlap", L(Prod(BOX, Slot(PREC, "PREC"))), ("box", "prec")),
        SharedDecl("alternatives", L(BOX), ("box",)),
    ]
    bounds = _bounds(inst, h)
    cs = [at(_bound_formula(x, lo, hi), "box") for x, (lo, hi) in bounds.items()]
    cs += _octagon_bounds(bounds)
    for phi, _ in precedences(inst):
        cs.append(at(phi, "prec"))
    for a, b in non_overlap_pairs(inst):
        cs.append(at(non_overlap(a, b, machine_label=2, prec_label=2), "no_overlap"))
    for j, t, alts in inst.tasks():
        cs.append(at(alternatives(j, t, alts), "alternatives"))
    return FjsModel("fjs2", inst, h, decls, cs, bounds, _strategy(inst))


def build_box_ipc(inst: FjsInstance, h: Optional[int] = None) -> FjsModel:
    """Baseline without octagons: ``L(IPC(Box))`` over a shared box."""
    h = horizon(inst) if h is None else h
    decls = [
        SharedDecl("box", BOX),
        SharedDecl("any", L(IPCK(BOX)), ("box",)),
    ]
    bounds = _bounds(inst, h)
    cs = [at(_bound_formula(x, lo, hi), "box") for x, (lo, hi) in bounds.items()]
    for phi, _ in precedences(inst):
        cs.append(at(phi, "any"))
    for a, b in non_overlap_pairs(inst):
        cs.append(at(non_overlap(a, b), "any"))
    for j, t, alts in inst.tasks():
        cs.append(at(alternatives(j, t, alts), "any"))
    return FjsModel("box-ipc", inst, h, decls, cs, bounds, _strategy(inst))


BUILDERS = {"fjs1": build_fjs1, "fjs2": build_fjs2, "box-ipc": build_box_ipc}


def build_model(kind: str, inst: FjsInstance, h: Optional[int] = None) -> FjsModel:
    try:
        return BUILDERS[kind](inst, h)
    except KeyError:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(BUILDERS)}") from None


# ---------------------------------------------------------------------------
# checking and brute force
# ---------------------------------------------------------------------------

def verify_schedule(inst: FjsInstance, point: dict) -> list:
    """Violated constraints of ``point`` (empty when the schedule is feasible)."""
    bad = []
    ends = []
    for j, job in enumerate(inst.jobs, 1):
        for t, alts in enumerate(job, 1):
            s, d, m = point[f"s_{j}_{t}"], point[f"d_{j}_{t}"], point[f"m_{j}_{t}"]
            if (m, d) not in alts:
                bad.append(f"task {j}.{t}: (machine {m}, duration {d}) is not an alternative")
            if s < 0:
                bad.append(f"task {j}.{t} starts before 0")
            if t < len(job) and s + d > point[f"s_{j}_{t + 1}"]:
                bad.append(f"task {j}.{t} overlaps its successor")
            ends.append(s + d)
    for (ja, ta), (jb, tb) in non_overlap_pairs(inst):
        a, b = f"{ja}_{ta}", f"{jb}_{tb}"
        if point["m_" + a] == point["m_" + b]:
            sa, da, sb, db = point["s_" + a], point["d_" + a], point["s_" + b], point["d_" + b]
            if sa + da > sb and sb + db > sa:
                bad.append(f"tasks {ja}.{ta} and {jb}.{tb} overlap on machine {point['m_' + a]}")
    if ends and point[OBJECTIVE] < max(ends):
        bad.append("makespan below the last completion time")
    return bad


def _earliest_makespan(inst, flat, assign, orders) -> Optional[int]:
    """Longest path through job and machine sequences; None if they form a cycle."""
    n = len(flat)
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    pos = {task: i for i, task in enumerate(flat)}
    for j, job in enumerate(inst.jobs, 1):
        for t in range(1, len(job)):
            a, b = pos[(j, t)], pos[(j, t + 1)]
            succ[a].append(b)
            indeg[b] += 1
    for seq in orders:
        for a, b in zip(seq, seq[1:]):
            succ[a].append(b)
            indeg[b] += 1
    start = [0] * n
    ready = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    best = 0
    while ready:
        i = ready.pop()
        seen += 1
        end = start[i] + assign[i][1]
        best = max(best, end)
        for k in succ[i]:
            start[k] = max(start[k], end)
            indeg[k] -= 1
            if indeg[k] == 0:
                ready.append(k)
    return best if seen == n else None


def fjssp_oracle(inst: FjsInstance, h: Optional[int] = None, cap: int = 2_000_000) -> Optional[int]:
    """Optimal makespan by exhaustive enumeration (tiny instances only).

    Returns None when no schedule fits within ``h``.
    """
    flat = [(j, t) for j, t, _ in inst.tasks()]
    alts = [a for _, _, a in inst.tasks()]
    if not flat:
        return 0
    space = _enumeration_size(alts)
    if space > cap:
        raise SizeGuard(f"enumeration space ~{space} exceeds the cap {cap}")
    best = None
    for assign in itertools.product(*alts):
        per_machine: dict = {}
        for i, (m, _) in enumerate(assign):
            per_machine.setdefault(m, []).append(i)
        groups = list(per_machine.values())
        for orders in itertools.product(*(itertools.permutations(g) for g in groups)):
            ms = _earliest_makespan(inst, flat, assign, orders)
            if ms is not None and (best is None or ms < best):
                best = ms
    if best is not None and h is not None and best > h:
        return None
    return best


def _enumeration_size(alts) -> int:
    """Number of (assignment, machine orders) pairs the oracle visits."""
    total = 0
    for assign in itertools.product(*alts):
        load: dict = {}
        for m, _ in assign:
            load[m] = load.get(m, 0) + 1
        n = 1
        for k in load.values():
            n *= math.factorial(k)
        total += n
    return total
