"""Command-line interface: ``qtsp {encode,schedule,resources,simulate,sweep}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import circuits, resources
from .encodings import Encoding, TspInstance, default_penalty, encode, random_instance
from .optimizer import (CSV_COLUMNS, SUMMARY_COLUMNS, OptimizerConfig, aggregate_rows, experiment_rows,
                        minimize, run_experiment, run_random_instances)
from .simulator import QaoaParams, ResourceError, build_diagonal, feasible_probability, qaoa_state

KINDS = [e.value for e in Encoding]


class UsageError(ValueError):
    pass


def _instance_args(p: argparse.ArgumentParser, kinds=KINDS):
    p.add_argument("--kind", required=True, choices=kinds)
    p.add_argument("--n", type=int, help="number of cities (not needed with --w file)")
    p.add_argument("--k", type=int, help="bits per bunch (mixed encoding only)")
    p.add_argument("--w", choices=["zero", "random", "file"], default="zero", help="cost matrix source")
    p.add_argument("--instance", type=Path, help="instance JSON for --w file: {n, w, a1, a2, b}")
    p.add_argument("--seed", type=int)
    p.add_argument("--a1", type=float)
    p.add_argument("--a2", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--fix-first-city", action="store_true", help="QUBO only: pin city 0 to time 0")
    p.add_argument("--e-pen", type=float, help="enumeration penalty energy")


def _load_instance(args) -> tuple[TspInstance, str]:
    b = 1.0 if args.b is None else args.b
    if args.w == "file":
        if args.instance is None:
            raise UsageError("--w file needs --instance PATH")
        base = TspInstance.from_json(args.instance.read_text())
        if args.n is not None and args.n != base.n:
            raise UsageError(f"--n {args.n} disagrees with the file's n={base.n}")
        a1 = base.a1 if args.a1 is None else args.a1
        a2 = base.a2 if args.a2 is None else args.a2
        return TspInstance(base.n, base.w, a1, a2, base.b if args.b is None else b), args.instance.name
    if args.n is None:
        raise UsageError("--n is required")
    if args.w == "zero":
        w = np.zeros((args.n, args.n))
        pen = 1.0
        w_id = "zero"
    else:
        seed = args.seed or 0
        w = random_instance(args.n, seed).w
        pen = default_penalty(args.kind, w, b)
        w_id = f"seed{seed}"
    return TspInstance(args.n, w, pen if args.a1 is None else args.a1, pen if args.a2 is None else args.a2, b), w_id


def _check_flags(args):
    if args.kind == "mixed" and args.k is None:
        raise UsageError("--kind mixed needs --k")
    if args.kind != "mixed" and args.k is not None:
        raise UsageError("--k only applies to --kind mixed")
    if args.fix_first_city and args.kind != "qubo":
        raise UsageError("--fix-first-city only applies to --kind qubo")
    if getattr(args, "e_pen", None) is not None and args.kind != "enum":
        raise UsageError("--e-pen only applies to --kind enum")


def _problem(args):
    _check_flags(args)
    inst, w_id = _load_instance(args)
    return encode(args.kind, inst, k=args.k, fix_first_city=args.fix_first_city, e_pen=args.e_pen), w_id


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_encode(args) -> int:
    problem, _ = _problem(args)
    out = problem.summary()
    if args.full and problem.hamiltonian is not None:
        out["hamiltonian"] = problem.hamiltonian.to_json()
    _emit(json.dumps(out, indent=2), args.out)
    return 0


def cmd_schedule(args) -> int:
    problem, _ = _problem(args)
    sched = circuits.schedule(problem, args.strategy)
    print(json.dumps({"kind": problem.kind.value, "strategy": args.strategy, **sched.summary()}))
    if args.out is not None:
        args.out.write_text(json.dumps(sched.to_json()) + "\n")
    return 0


def cmd_resources(args) -> int:
    kinds = args.kinds or KINDS
    reports = []
    for kind in kinds:
        for n in args.ns:
            if kind == "mixed":
                if args.k is None and args.alpha is None:
                    raise UsageError("mixed rows need --k or --alpha")
                reports.append(resources.report(kind, n, args.k, alpha=args.alpha, t=args.t, delta=args.delta))
            else:
                reports.append(resources.report(kind, n, t=args.t, delta=args.delta))
    if args.format == "json":
        rows = []
        for r in reports:
            d = r.to_json()
            d["samples"] = r.samples_standard if args.hoeffding_convention == "standard" else r.samples_paper
            d["hoeffding_convention"] = args.hoeffding_convention
            rows.append(d)
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        _emit(resources.format_table(reports), args.out)
    return 0


def _optimizer_config(args, restarts_default: int) -> OptimizerConfig:
    data = json.loads(args.config.read_text()) if args.config else {}
    cfg = OptimizerConfig.from_json(data)
    if args.restarts is not None:
        cfg.restarts = args.restarts
    elif "restarts" not in data:
        cfg.restarts = restarts_default
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.period is None:
        cfg.period = cfg.resolved_period(args.kind)
    return cfg


def cmd_simulate(args) -> int:
    problem, _ = _problem(args)
    h = build_diagonal(problem)
    cfg = _optimizer_config(args, 1)
    best = None
    for j in range(cfg.restarts):
        init = QaoaParams.random(args.r, np.random.default_rng([cfg.seed, args.r, j]), cfg.period)
        res = minimize(h, init, cfg) if args.r > 0 else None
        params = res.params if res else init
        prob = feasible_probability(qaoa_state(h, params), h)
        row = {"restart": j, "energy": res.energy if res else float(h.energies.mean()),
               "feasible_prob": prob, "converged": bool(res.converged) if res else True,
               "theta_mix": params.theta_mix.tolist(), "theta_obj": params.theta_obj.tolist()}
        if best is None or prob > best["feasible_prob"]:
            best = row
    out = {"kind": problem.kind.value, "num_qubits": problem.num_qubits, "r": args.r,
           "feasible_count": h.feasible_count, "baseline_feasible_prob": float(h.feasible_mask.mean()), "best": best}
    _emit(json.dumps(out, indent=2), args.out)
    return 0


def cmd_sweep(args) -> int:
    _check_flags(args)
    aggregate = args.w == "random" and args.instances is not None
    restarts = args.samples if args.samples is not None else (40 if args.w == "random" else 100)
    cfg = _optimizer_config(args, restarts)
    if aggregate:
        if args.n is None:
            raise UsageError("--n is required")
        results = run_random_instances(args.kind, args.n, args.instances, args.rmax, cfg, k=args.k)
        _emit(_csv_text(SUMMARY_COLUMNS, aggregate_rows(args.kind, args.n, results)), args.out)
        if args.detail_out is not None:
            rows = []
            for i, res in enumerate(results):
                rows.extend(experiment_rows(args.kind, args.n, f"seed{cfg.seed}:{i}", res))
            args.detail_out.write_text(_csv_text(CSV_COLUMNS, rows))
        return 0
    problem, w_id = _problem(args)
    h = build_diagonal(problem)
    result = run_experiment(h, args.rmax, cfg)
    _emit(_csv_text(CSV_COLUMNS, experiment_rows(args.kind, problem.instance.n, w_id, result)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtsp", description="TSP encodings for QAOA: build, schedule, estimate, simulate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="build an encoding and print its summary")
    _instance_args(p)
    p.add_argument("--full", action="store_true", help="include the full polynomial")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("schedule", help="compile the Hamiltonian into a gate schedule")
    _instance_args(p, kinds=["qubo", "hobo", "mixed"])
    p.add_argument("--strategy", choices=list(circuits.STRATEGIES), default=circuits.PER_TERM)
    p.add_argument("--out", type=Path, help="write the full schedule JSON here")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("resources", help="closed-form resource table")
    p.add_argument("--kinds", nargs="+", choices=KINDS)
    p.add_argument("--ns", "--n", nargs="+", type=int, required=True, dest="ns")
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--t", type=float, default=0.1, help="Hoeffding accuracy")
    p.add_argument("--delta", type=float, default=0.05, help="Hoeffding failure probability")
    p.add_argument("--hoeffding-convention", choices=["paper", "standard"], default="standard")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_resources)

    for name, func, helptext in (("simulate", cmd_simulate, "optimize one QAOA level count"),
                                 ("sweep", cmd_sweep, "best feasible probability per level, as CSV")):
        p = sub.add_parser(name, help=helptext)
        _instance_args(p)
        p.add_argument("--restarts", type=int)
        p.add_argument("--config", type=Path, help="optimizer settings JSON")
        p.add_argument("--out", type=Path)
        p.set_defaults(func=func)
        if name == "simulate":
            p.add_argument("--r", type=int, default=1)
        else:
            p.add_argument("--rmax", type=int, default=15)
            p.add_argument("--instances", type=int, help="random-W instances to aggregate")
            p.add_argument("--samples", type=int, help="restarts per level for random W")
            p.add_argument("--detail-out", type=Path, help="per-instance CSV when aggregating")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
