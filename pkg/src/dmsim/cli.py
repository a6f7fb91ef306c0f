"""Command-line front end.

Subcommands: ``gen`` (synthesize traces), ``sim`` (run a configured
simulation and write its artifact directory), ``analyze`` (DM-LRU must
analysis of a CFG file), ``rta`` (response-time analysis of a task set),
``report`` (aggregate run directories into plots and tidy data).

Exit codes: 0 success, 2 validation or input error, 3 simulation error
(including page faults).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import config, dmlru, engine, report, rta
from .errors import SimulationError, ValidationError


def _int0(text: str) -> int:
    return int(text, 0)


def cmd_gen(args) -> int:
    records = engine.gen_trace(
        kind=args.kind,
        working_set=args.ws,
        iterations=args.iters,
        stride=args.stride,
        seed=args.seed,
        line_size=args.line_size,
        base=args.base,
    )
    engine.write_trace(records, args.output)
    print(f"wrote {len(records)} records to {args.output}")
    return 0


def _baseline_cycles(run_dir: str, measured_core: int | None) -> int:
    summary = report.read_summary(run_dir)
    key = f"core{measured_core}.runtime" if measured_core is not None else "cycles"
    value = summary.get(key, summary.get("cycles"))
    if value is None:
        raise ValidationError(f"{run_dir}/summary.txt has neither {key} nor cycles")
    try:
        return int(value)
    except ValueError as exc:
        raise ValidationError(f"{run_dir}: baseline {key}={value!r} is not a cycle count") from exc


def cmd_sim(args) -> int:
    cfg = config.load_config(args.config)
    baseline = None
    if args.baseline:
        baseline = _baseline_cycles(args.baseline, cfg.measured_core)
    result = engine.run(cfg)
    report.write_run(result, args.outdir, baseline_cycles=baseline, schedule=args.schedule_log)
    print(f"mode={result.mode} cycles={result.cycles}")
    for c in result.traced_cores:
        runtime = result.core_runtime[c]
        shown = runtime if runtime is not None else "unfinished"
        print(
            f"core{c}: accesses={result.core_accesses[c]} runtime={shown} "
            f"dm_misses={result.dm_misses[c]} be_l1_misses={result.be_l1_misses[c]}"
        )
    if baseline is not None:
        mc = cfg.measured_core if cfg.measured_core is not None else result.traced_cores[0]
        print(f"slowdown={result.core_runtime[mc] / baseline:.6f}")
    print(f"wrote {args.outdir}")
    return 0


def cmd_analyze(args) -> int:
    prog, assoc = dmlru.CfgProgram.from_file(args.cfg)
    result = dmlru.must_analysis(
        prog,
        assoc,
        variant=args.variant,
        d_guard=args.d_guard,
        persistence=args.persistence,
    )
    counts = {dmlru.ALWAYS_HIT: 0, dmlru.PERSISTENT: 0, dmlru.UNCLASSIFIED: 0}
    for site in result.sites.values():
        counts[site.classification] += 1
    print(
        f"assoc={assoc} variant={args.variant} d_guard={args.d_guard} "
        f"sites={len(result.sites)}"
    )
    for name in (dmlru.ALWAYS_HIT, dmlru.PERSISTENT, dmlru.UNCLASSIFIED):
        print(f"{name}: {counts[name]}")
    if args.output:
        dmlru.write_classification(result, args.output)
        print(f"wrote {args.output}")
    return 0


def cmd_rta(args) -> int:
    tasks, platform = rta.load_taskset(args.taskset)
    if args.counts:
        with open(args.counts) as fh:
            counts = rta.parse_rta_export(fh.read(), source=args.counts)
        tasks = rta.apply_counts(tasks, counts)
    results = rta.response_times(tasks, platform)
    for r in results:
        print(f"{r.name}: R={r.response} schedulable={r.schedulable} iters={r.iterations}")
    ok = all(r.schedulable for r in results)
    print(f"taskset schedulable: {ok}")
    if args.output:
        rta.write_results(results, args.output)
        print(f"wrote {args.output}")
    return 0


def cmd_report(args) -> int:
    written = report.write_report(args.runs, args.outdir, plot_data=args.plot_data)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmsim",
        description="deterministic-memory cache/DRAM simulator and WCET analysis tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a memory trace")
    p.add_argument("--kind", required=True, choices=engine.TRACE_KINDS)
    p.add_argument("--ws", required=True, type=_int0, help="working-set bytes")
    p.add_argument("--iters", type=_int0, default=1)
    p.add_argument("--stride", type=_int0, default=None)
    p.add_argument("--seed", type=_int0, default=0)
    p.add_argument("--line-size", type=_int0, default=64)
    p.add_argument("--base", type=_int0, default=0, help="base virtual address")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sim", help="run a simulation from an INI config")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--outdir", required=True)
    p.add_argument("--baseline", help="run directory to compute slowdown against")
    p.add_argument("--schedule-log", action="store_true", help="also write schedule.csv")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("analyze", help="DM-LRU must analysis of a CFG file")
    p.add_argument("--cfg", required=True)
    p.add_argument("--variant", choices=(dmlru.UB_LITERAL, dmlru.UB_STRICT),
                   default=dmlru.UB_LITERAL)
    p.add_argument("--d-guard", choices=(dmlru.GUARD_FULL, dmlru.GUARD_CAPPED),
                   default=dmlru.GUARD_FULL)
    p.add_argument("--persistence", action="store_true",
                   help="also classify Persistent sites (loop peeling)")
    p.add_argument("-o", "--output", help="classification CSV path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rta", help="response-time analysis of a task set")
    p.add_argument("--taskset", required=True)
    p.add_argument("--counts", help="per-core miss counts exported by sim")
    p.add_argument("-o", "--output", help="results CSV path")
    p.set_defaults(func=cmd_rta)

    p = sub.add_parser("report", help="aggregate run directories into figures")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("-o", "--outdir", required=True)
    p.add_argument("--plot-data", action="store_true",
                   help="also write tidy plot_data.csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
