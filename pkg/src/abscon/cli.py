"""Command-line front-end: ``solve``, ``bench`` and ``check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .fjssp import BUILDERS, OBJECTIVE, FjsParseError, build_model, load_fjs
from .search import OPTIMAL, SAT, TIMEOUT, UNSAT, minimize

EXIT_OK, EXIT_USAGE, EXIT_UNSAT, EXIT_NO_SOLUTION = 0, 1, 2, 3
ERROR = "Error"


@dataclass
class RunConfig:
    instance: str
    domain: str = "fjs1"
    strategy: str = "dms"
    timeout: float = 60.0
    output: str = "jsonl"
    horizon: Optional[int] = None
    node_limit: Optional[int] = None
    lower_bound: Optional[int] = None

    def __post_init__(self):
        if self.timeout < 1:
            raise ValueError("timeout must be at least 1 second")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.domain not in BUILDERS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.strategy != "dms":
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class ResultRecord:
    instance: str
    domain: str
    status: str
    best_makespan: Optional[int] = None
    nodes: int = 0
    time_to_best_ms: Optional[float] = None
    total_time_ms: float = 0.0
    delta_lb_percent: Optional[float] = None
    # node count at which the final best bound was found
    nodes_to_best: Optional[int] = None


FIELDS = [f.name for f in fields(ResultRecord)]
TIMING_FIELDS = ("time_to_best_ms", "total_time_ms")


def delta_lb(best: Optional[int], lb: Optional[int]) -> Optional[float]:
    if best is None or lb is None or lb <= 0:
        return None
    return round(100.0 * (best - lb) / lb, 1)


def _ms(seconds: Optional[float]) -> Optional[float]:
    return None if seconds is None else round(1000.0 * seconds, 3)


def run_solve(cfg: RunConfig, schedule: Optional[list] = None) -> ResultRecord:
    """Solve one instance.  Parse errors propagate to the caller."""
    inst = load_fjs(cfg.instance)
    model = build_model(cfg.domain, inst, cfg.horizon)
    stats, point = minimize(model.element(), OBJECTIVE, model.strategy,
                            timeout=cfg.timeout, node_limit=cfg.node_limit)
    if schedule is not None and point is not None:
        schedule.append(point)
    return ResultRecord(
        instance=inst.name or cfg.instance,
        domain=cfg.domain,
        status=stats.status,
        best_makespan=stats.best_objective,
        nodes=stats.nodes,
        time_to_best_ms=_ms(stats.time_to_best),
        total_time_ms=_ms(stats.total_time),
        delta_lb_percent=delta_lb(stats.best_objective, cfg.lower_bound),
        nodes_to_best=stats.nodes_to_best,
    )


def exit_code(rec: ResultRecord) -> int:
    if rec.status in (OPTIMAL, SAT):
        return EXIT_OK
    if rec.status == UNSAT:
        return EXIT_UNSAT
    if rec.status == TIMEOUT:
        return EXIT_OK if rec.best_makespan is not None else EXIT_NO_SOLUTION
    return EXIT_USAGE


def format_record(rec: ResultRecord, fmt: str, header: bool = False) -> str:
    d = asdict(rec)
    if fmt == "jsonl":
        return json.dumps(d)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
    if header:
        w.writeheader()
    w.writerow({k: ("" if v is None else v) for k, v in d.items()})
    return buf.getvalue().rstrip("\n")


# -- bench ------------------------------------------------------------------

def read_manifest(path) -> list:
    """``[(instance path, lower bound or None)]``; paths relative to the manifest."""
    path = Path(path)
    out = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) > 2:
            raise ValueError(f"{path}:{lineno}: expected 'instance [lower-bound]'")
        inst = Path(toks[0])
        if not inst.is_absolute():
            inst = path.parent / inst
        lb = int(toks[1]) if len(toks) == 2 else None
        out.append((str(inst), lb))
    return out


def _bench_one(job):
    cfg = RunConfig(**job)
    try:
        return run_solve(cfg)
    except Exception as exc:  # noqa: BLE001 - recorded, batch goes on
        name = Path(cfg.instance).stem
        print(f"{name} [{cfg.domain}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return ResultRecord(instance=name, domain=cfg.domain, status=ERROR)


def run_bench(manifest, domains, timeout: float, out_path=None, fmt: str = "jsonl",
              jobs: int = 1, node_limit: Optional[int] = None) -> list:
    """Run every (instance, domain) pair; records are written in manifest order."""
    work = []
    for inst, lb in read_manifest(manifest):
        for d in domains:
            work.append(dict(instance=inst, domain=d, timeout=timeout,
                             node_limit=node_limit, lower_bound=lb))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_bench_one, work))
    else:
        records = [_bench_one(w) for w in work]
    if out_path is not None:
        with open(out_path, "w") as fh:
            for i, rec in enumerate(records):
                fh.write(format_record(rec, fmt, header=(i == 0)) + "\n")
    return records


def better_counts(records, domains) -> dict:
    """``{(a, b): n}``: instances where ``a`` found a strictly smaller makespan than ``b``."""
    best: dict = {}
    for r in records:
        best.setdefault(r.instance, {})[r.domain] = r.best_makespan
    out = {(a, b): 0 for a in domains for b in domains}
    for per in best.values():
        for a in domains:
            for b in domains:
                va, vb = per.get(a), per.get(b)
                if a == b or va is None:
                    continue
                if vb is None or va < vb:
                    out[(a, b)] += 1
    return out


def summary(records, domains) -> str:
    lines = ["domain  mean_delta_lb_percent  solved"]
    for d in domains:
        ds = [r.delta_lb_percent for r in records if r.domain == d and r.delta_lb_percent is not None]
        solved = sum(1 for r in records if r.domain == d and r.best_makespan is not None)
        mean = f"{sum(ds) / len(ds):.1f}" if ds else "n/a"
        lines.append(f"{d}  {mean}  {solved}")
    counts = better_counts(records, domains)
    lines.append("strictly better bounds (row vs column)")
    lines.append("  ".join(["-"] + list(domains)))
    for a in domains:
        lines.append("  ".join([a] + [("-" if a == b else str(counts[(a, b)])) for b in domains]))
    return "\n".join(lines)


# -- check ------------------------------------------------------------------

def _inject_closure_fault():
    """Skip strengthening in octagon closure (test mode)."""
    from . import octagon

    octagon._tighten_and_strengthen = lambda m: None


def run_check(suites, seed: int = 0, inject_fault: bool = False, out=None) -> int:
    from .selfcheck import SUITES

    out = sys.stdout if out is None else out
    if inject_fault:
        _inject_closure_fault()
    ok = True
    for name in suites:
        fn, trials = SUITES[name]
        res = fn(random.Random(seed), trials)
        print(res.line(), file=out)
        for k, why in res.failures[:5]:
            print(f"  trial {k}: {why}", file=out)
        ok &= res.ok
    print("all suites passed" if ok else "some suites failed", file=out)
    return EXIT_OK if ok else EXIT_USAGE


# -- entry point ------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    from .selfcheck import SUITES

    ap = argparse.ArgumentParser(prog="abscon", description="Abstract-domain constraint solver.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", help="minimize the makespan of one .fjs instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--domain", choices=sorted(BUILDERS), default="fjs1")
    s.add_argument("--timeout", type=float, required=True)
    s.add_argument("--strategy", choices=["dms"], default="dms")
    s.add_argument("--horizon", type=int)
    s.add_argument("--output", choices=["jsonl", "csv"], default="jsonl")
    s.add_argument("--node-limit", type=int)
    s.add_argument("--lower-bound", type=int)
    s.add_argument("--schedule", action="store_true", help="also print the best schedule")

    b = sub.add_parser("bench", help="run a manifest of instances")
    b.add_argument("--manifest", required=True)
    b.add_argument("--timeout", type=float, required=True)
    b.add_argument("--domains", default="fjs1,fjs2")
    b.add_argument("--out", required=True)
    b.add_argument("--output", choices=["jsonl", "csv"], default="jsonl")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--node-limit", type=int)

    c = sub.add_parser("check", help="run the oracle self-check suites")
    c.add_argument("--suite", action="append", choices=sorted(SUITES) + [""],
                   help="suite to run (repeatable; default all)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    if args.cmd == "solve":
        try:
            cfg = RunConfig(args.instance, args.domain, args.strategy, args.timeout,
                            args.output, args.horizon, args.node_limit, args.lower_bound)
            sched: list = []
            rec = run_solve(cfg, sched)
        except FjsParseError as exc:
            print(f"{args.instance}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(format_record(rec, args.output, header=True))
        if args.schedule and sched:
            print(json.dumps(sched[0], sort_keys=True), file=sys.stderr)
        return exit_code(rec)

    if args.cmd == "bench":
        domains = [d for d in args.domains.split(",") if d]
        unknown = [d for d in domains if d not in BUILDERS]
        if not domains or unknown or args.timeout < 1:
            print(f"error: bad --domains or --timeout ({unknown or args.domains})", file=sys.stderr)
            return EXIT_USAGE
        try:
            records = run_bench(args.manifest, domains, args.timeout, args.out,
                                args.output, args.jobs, args.node_limit)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(summary(records, domains))
        return EXIT_OK

    from .selfcheck import SUITES

    suites = args.suite if args.suite is not None else list(SUITES)
    if not suites or any(s == "" for s in suites):
        print("error: empty suite selection", file=sys.stderr)
        return EXIT_USAGE
    return run_check(suites, args.seed, args.inject_fault)


if __name__ == "__main__":
    sys.exit(main())
