"""Generate lightly flexible job shop instances from classical job shop ones.

Each operation keeps its original machine and gains every other machine
independently with probability ``p / (m - 1)``, at the same duration, so that
on average an operation has ``1 + p`` alternatives.  Output goes to
``data/edata/*.fjs`` with a ``manifest.txt`` listing each instance and a
trivial lower bound (longest job, average machine load).
"""

import argparse
import json
from pathlib import Path

import numpy as np

from abscon.fjssp import FjsInstance, lower_bound

ROOT = Path(__file__).resolve().parent.parent


def flexible(base: dict, name: str, rng, p: float) -> FjsInstance:
    machines = np.asarray(base["machines"])
    durations = np.asarray(base["durations"])
    n_jobs, n_ops = machines.shape
    n_machines = int(machines.max()) + 1
    jobs = []
    for j in range(n_jobs):
        job = []
        for o in range(n_ops):
            m0, d = int(machines[j, o]), int(durations[j, o])
            others = [m for m in range(n_machines) if m != m0]
            extra = [m for m in others if rng.random() < p / len(others)]
            job.append([(m + 1, d) for m in sorted([m0] + extra)])
        jobs.append(job)
    return FjsInstance(n_jobs, n_machines, jobs, name)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--base", default=ROOT / "data" / "jssp" / "base_instances.json", type=Path)
    ap.add_argument("--out", default=ROOT / "data" / "edata", type=Path)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--p", type=float, default=0.15)
    ap.add_argument("--names", nargs="*", default=None)
    args = ap.parse_args(argv)

    base = json.loads(args.base.read_text())["instances"]
    names = args.names or sorted(base)
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    lines = [
        "# flexible variants of classical job shop instances (scripts/make_edata.py)",
        f"# seed {args.seed}, p {args.p}; lower bound = max(longest job, average load)",
    ]
    for name in names:
        inst = flexible(base[name], name, rng, args.p)
        (args.out / f"{name}.fjs").write_text(inst.to_fjs())
        lines.append(f"{name}.fjs {lower_bound(inst)}")
        print(f"{name}: {inst.n_jobs}x{inst.n_machines}, "
              f"{sum(len(a) for _, _, a in inst.tasks()) / inst.n_tasks:.2f} alternatives/op")
    (args.out / "manifest.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
