"""Command line entry point: ``rlcsteiner <verb> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .components import GENERAL, MODES
from .exact import exact_steiner
from .experiment import csv_text, prepare, q, run_experiment, trial_json, trial_seed
from .graph import GraphError
from .instances import MODELS, ParseError, generate_random, parse_instance, write_instance
from .rounding import choose_m_and_t, rlc_round


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _shared(p: argparse.ArgumentParser, *, trials: bool = False) -> None:
    p.add_argument("--instance", required=True, help="instance file (.stp or .json)")
    p.add_argument("--r", type=int, default=None, help="largest component size (default |R|)")
    p.add_argument("--mode", choices=MODES, default=GENERAL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    if trials:
        p.add_argument("--trials", type=int, default=1)


def cmd_solve_lp(args) -> int:
    inst = parse_instance(args.instance)
    prep = prepare(inst, args.r, args.mode)
    x, cat, g = prep.solution, prep.catalog, inst.graph
    _emit({
        "instance": inst.name,
        "r": cat.r,
        "components": len(cat),
        "lp_star": q(x.lp_star),
        "loss_star": q(x.loss_star),
        "mass": q(x.mass),
        "x": [{"K": list(g.sort_vertices(K)), "x": q(w)} for _, K, w in x.support],
    }, args.out)
    return 0


def cmd_rlc(args) -> int:
    inst = parse_instance(args.instance)
    prep = prepare(inst, args.r, args.mode)
    config = choose_m_and_t(prep.solution, args.mode)
    traces = []
    for k in range(args.trials):
        s = trial_seed(args.seed, inst.name, k)
        trace = rlc_round(inst.graph, prep.catalog, prep.solution, config.with_seed(s))
        traces.append(trial_json(trace, k, s, inst.graph, keep_iterations=True))
    _emit({"instance": inst.name, "mode": args.mode, "seed": args.seed, "t": config.t,
           "lp_star": q(prep.solution.lp_star), "trials": traces}, args.out)
    return 0


def cmd_exact(args) -> int:
    inst = parse_instance(args.instance)
    res = exact_steiner(inst.graph)
    _emit({"instance": inst.name, "opt": q(res.opt_cost),
           "edges": [[e.u, e.v, q(e.cost)["exact"]] for e in res.edges]}, args.out)
    return 0


def cmd_verify(args) -> int:
    inst = parse_instance(args.instance)
    report = run_experiment(inst, args.r, args.trials, args.seed, args.mode, compute_opt=not args.no_opt)
    _emit(report, args.out)
    return 0 if report["passed"] else 1


def cmd_gen(args) -> int:
    if args.count == 1 and args.out and not Path(args.out).is_dir() and Path(args.out).suffix:
        write_instance(generate_random(args.n, args.k, args.model, args.seed), args.out)
        return 0
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        inst = generate_random(args.n, args.k, args.model, args.seed + i)
        write_instance(inst, out / f"{inst.name}.{args.format}")
    return 0


def _batch_one(job):
    path, r, trials, seed, mode, compute_opt = job
    inst = parse_instance(path)
    return run_experiment(inst, r, trials, seed, mode, compute_opt=compute_opt)


def cmd_batch(args) -> int:
    src = Path(args.instance)
    files = sorted(p for p in src.iterdir() if p.suffix.lower() in (".stp", ".json"))
    jobs = [(str(p), args.r, args.trials, args.seed, args.mode, not args.no_opt) for p in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(_batch_one, jobs))
    else:
        reports = [_batch_one(j) for j in jobs]
    out = Path(args.out or "reports")
    out.mkdir(parents=True, exist_ok=True)
    for p, rep in zip(files, reports):
        (out / f"{p.stem}.json").write_text(json.dumps(rep, indent=2) + "\n")
    (out / "summary.csv").write_text(csv_text(reports))
    failed = [rep["instance"] for rep in reports if not rep["passed"]]
    for name in failed:
        print(f"FAIL {name}", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlcsteiner",
                                     description="Randomized loss-contracting rounding for Steiner trees.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("solve-lp", help="solve the hypergraphic LP exactly")
    _shared(p)
    p.set_defaults(func=cmd_solve_lp)

    p = sub.add_parser("rlc", help="run rounding trials and dump their traces")
    _shared(p, trials=True)
    p.set_defaults(func=cmd_rlc)

    p = sub.add_parser("exact", help="optimal Steiner tree by Dreyfus-Wagner")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("verify", help="full report with every inequality verdict")
    _shared(p, trials=True)
    p.add_argument("--no-opt", action="store_true", help="skip the exact optimum")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate random instances")
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--k", type=int, required=True, help="number of terminals")
    p.add_argument("--model", choices=MODELS, default="random-metric")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--format", choices=("stp", "json"), default="stp")
    p.add_argument("--out", default=None, help="file (count 1) or directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("batch", help="verify every instance in a directory")
    _shared(p, trials=True)
    p.add_argument("--no-opt", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
