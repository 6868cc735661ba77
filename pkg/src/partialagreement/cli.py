"""Command-line front end.

Subcommands: bounds (threshold catalog for one configuration), table (CSV
sweep over n), run (one execution plus verdict), explore (exhaustive or
sampled adversary search), reduce (oracle-backed reduction check).

Exit codes: 0 pass, 1 violation/failed verdict, 2 budget-incomplete,
64 usage or validation error. Default budget via PARTIAL_AGREEMENT_BUDGET.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys

from .algorithms import build_algorithm, get_algorithm, CATALOG
from .core import (
    BudgetExceededError,
    ModelViolationError,
    ProblemSpec,
    SpecError,
    evaluate_bounds,
)
from .shmem import AsyncSchedule, run_async
from .syncmp import CrashPattern, run_sync
from .verify import ExploreBudget, check_agreement, explore

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_spec_flags(p, *, need_t=True, required=True):
    p.add_argument("--n", type=int, required=required)
    p.add_argument("--m", type=int, default=None, help="value domain size; inferred from --inputs when omitted")
    p.add_argument("--t", type=int, default=1 if need_t else 0)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--g", type=int, default=None)
    p.add_argument("--validity", choices=["weak", "strong"], default="weak")


def _add_output_flags(p):
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default=None, help="write the full report/trace JSON here")


def build_parser() -> _Parser:
    parser = _Parser(prog="pagree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate the threshold catalog for one configuration")
    _add_spec_flags(p)
    p.add_argument("--model", choices=["async-rw", "sync-mp", "sm-g"], default=None)
    _add_output_flags(p)

    p = sub.add_parser("table", help="CSV threshold sweep over a range of n")
    p.add_argument("--n-range", default="2:12", help="inclusive lo:hi")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--g", type=int, default=None)
    p.add_argument("--model", choices=["async-rw", "sync-mp", "sm-g"], default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="one execution with explicit inputs and adversary")
    p.add_argument("--alg", choices=sorted(CATALOG))
    _add_spec_flags(p, required=False)
    p.add_argument("--inputs", default=None, help="comma-separated values, e.g. 2,1,0")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--schedule", default=None, help="async schedule token")
    p.add_argument("--pattern", default=None, help="sync crash pattern token")
    p.add_argument("--no-crash", action="store_true")
    p.add_argument("--seed", type=int, default=None, help="seeded random adversary")
    p.add_argument("--replay", default=None, help="replay encoding emitted by a previous run")
    _add_output_flags(p)

    p = sub.add_parser("explore", help="exhaustive or sampled adversary search")
    p.add_argument("--alg", required=True, choices=sorted(CATALOG))
    _add_spec_flags(p)
    p.add_argument("--inputs", default="all", help="'all', 'canonical', or a;b;c vectors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample", action="store_true", help="seeded random runs instead of DFS")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--max-runs", type=int, default=None)
    _add_output_flags(p)

    p = sub.add_parser("reduce", help="check an oracle-backed reduction")
    p.add_argument(
        "--alg",
        required=True,
        choices=[name for name, e in sorted(CATALOG.items()) if e.oracle_contract],
    )
    _add_spec_flags(p)
    p.add_argument("--inputs", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample", action="store_true")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--max-runs", type=int, default=None)
    _add_output_flags(p)

    return parser


def _spec_from_args(args, entry=None) -> ProblemSpec:
    if args.m is None:
        inputs_text = getattr(args, "inputs", None)
        if inputs_text and "," in str(inputs_text):
            args.m = max(2, 1 + max(int(x) for x in inputs_text.split(",")))
        else:
            args.m = 2
    model = getattr(args, "model", None)
    if model is None:
        if args.g is not None:
            model = "sm-g"
        elif entry is not None and entry.flavor == "sync":
            model = "sync-mp"
        else:
            model = "async-rw"
    if entry is not None and getattr(args, "alg", "") == "smg-comp":
        model = "sm-g"
    k = args.k
    ell = args.ell
    if entry is not None:
        probe = ProblemSpec(
            n=args.n, m=args.m, t=args.t, k=None, ell=min(args.ell, args.m),
            validity=args.validity, model=model, g=args.g if model == "sm-g" else None,
        )
        if k is None:
            k = entry.default_k(probe)
        if ell == 1:
            ell = entry.default_ell(probe)
    return ProblemSpec(
        n=args.n,
        m=args.m,
        t=args.t,
        k=k,
        ell=ell,
        validity=args.validity,
        model=model,
        g=args.g if model == "sm-g" else None,
    )


def _parse_inputs(text, spec) -> tuple:
    vec = tuple(int(x) for x in text.split(","))
    if len(vec) != spec.n:
        raise SpecError(f"expected {spec.n} inputs, got {len(vec)}")
    for v in vec:
        if not 0 <= v < spec.m:
            raise SpecError(f"input {v} outside value domain 0..{spec.m - 1}")
    return vec


def _budget_from_args(args) -> ExploreBudget:
    env_default = os.environ.get("PARTIAL_AGREEMENT_BUDGET")
    max_runs = args.max_runs
    if max_runs is None:
        max_runs = int(env_default) if env_default else ExploreBudget.max_runs
    return ExploreBudget(
        max_runs=max_runs,
        samples=args.samples,
        mode="sample" if args.sample else "auto",
        seed=args.seed,
    )


def _emit(args, text_lines, payload):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)


def _fmt(v):
    return "-" if v is None else str(v)


def cmd_bounds(args) -> int:
    spec = _spec_from_args(args)
    reports = evaluate_bounds(spec)
    lines = [
        f"configuration: n={spec.n} m={spec.m} t={spec.t} k={spec.k} ell={spec.ell} "
        f"model={spec.model}" + (f" g={spec.g}" if spec.g else ""),
        f"{'rule':<6} {'variant':<18} {'sufficient':>10} {'necessary':>10} "
        f"{'rounds>=':>8} {'rounds<=':>8}  assumptions",
    ]
    for r in reports:
        lines.append(
            f"{r.row:<6} {r.variant:<18} {_fmt(r.sufficient_k):>10} {_fmt(r.necessary_k):>10} "
            f"{_fmt(r.rounds_lower):>8} {_fmt(r.rounds_upper):>8}  {'; '.join(r.assumptions)}"
        )
    payload = {"spec": spec.to_dict(), "reports": [r.to_dict() for r in reports]}
    _emit(args, lines, payload)
    return EXIT_PASS


TABLE_COLUMNS = [
    "n", "m", "t", "k", "ell", "g", "model", "row", "variant",
    "sufficient_k", "necessary_k", "rounds_lower", "rounds_upper", "assumptions",
]


def cmd_table(args) -> int:
    lo, hi = (int(x) for x in args.n_range.split(":"))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS)
    writer.writeheader()
    for n in range(lo, hi + 1):
        ns = argparse.Namespace(
            n=n, m=args.m, t=min(args.t, n), k=args.k, ell=args.ell,
            g=min(args.g, n) if args.g else None, validity="weak", model=args.model,
        )
        try:
            spec = _spec_from_args(ns)
        except SpecError:
            continue
        for r in evaluate_bounds(spec):
            writer.writerow(
                {
                    "n": spec.n, "m": spec.m, "t": spec.t, "k": spec.k,
                    "ell": spec.ell, "g": spec.g if spec.g else "",
                    "model": spec.model, "row": r.row, "variant": r.variant,
                    "sufficient_k": _fmt(r.sufficient_k),
                    "necessary_k": _fmt(r.necessary_k),
                    "rounds_lower": _fmt(r.rounds_lower),
                    "rounds_upper": _fmt(r.rounds_upper),
                    "assumptions": "; ".join(r.assumptions),
                }
            )
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def _random_async_schedule(entry, spec, inputs, seed) -> AsyncSchedule:
    # Dry-run with random choices; the recorded path is the schedule.
    from .shmem import AsyncRun

    built = build_algorithm(entry.name, spec, inputs)
    run = AsyncRun(built.programs, inputs, objects=built.objects)
    rng = random.Random(seed)
    crash_budget = min(entry.fault_budget(spec), spec.n)
    while True:
        live = run.live_undecided()
        if not live:
            break
        options = [("s", p) for p in live]
        if sum(run.crashed) < crash_budget:
            options += [("c", p) for p in live]
        tag, pid = options[rng.randrange(len(options))]
        if tag == "s":
            run.step(pid)
        else:
            run.crash(pid)
    return run.schedule_so_far()


def _random_sync_pattern(spec, rounds, seed) -> CrashPattern:
    from .verify import _random_pattern

    return _random_pattern(random.Random(seed), spec.n, spec.t, rounds)


def cmd_run(args) -> int:
    if args.replay:
        replay = json.loads(args.replay)
        args.alg = replay["algorithm"]
        spec = ProblemSpec.from_dict(replay["spec"])
        entry = get_algorithm(args.alg)
        inputs = tuple(replay["inputs"])
        args.schedule = replay.get("schedule")
        args.pattern = replay.get("pattern")
        args.rounds = replay.get("rounds")
        assignment = tuple(replay["assignment"]) if replay.get("assignment") else None
    else:
        if args.alg is None or args.n is None:
            raise SpecError("run needs --alg and --n (or --replay)")
        entry = get_algorithm(args.alg)
        spec = _spec_from_args(args, entry)
        if args.inputs is None:
            raise SpecError("run needs --inputs (or --replay)")
        inputs = _parse_inputs(args.inputs, spec)
        assignment = None

    built = build_algorithm(args.alg, spec, inputs, assignment=assignment)
    replay_payload = {
        "algorithm": args.alg,
        "spec": spec.to_dict(),
        "inputs": list(inputs),
        "assignment": list(built.meta["first_phase"])
        if "first_phase" in built.meta
        else (list(assignment) if assignment else None),
    }

    if entry.flavor == "sync":
        rounds = args.rounds or built.rounds or (entry.rounds(spec) if entry.rounds else 1)
        if args.pattern:
            pattern = CrashPattern.decode(args.pattern)
        elif args.no_crash or args.seed is None:
            pattern = CrashPattern()
        else:
            pattern = _random_sync_pattern(spec, rounds, args.seed)
        trace = run_sync(built.programs, inputs, pattern, rounds, spec=spec)
        replay_payload.update({"pattern": pattern.encode(), "rounds": rounds})
    else:
        if args.schedule:
            schedule = AsyncSchedule.decode(args.schedule)
        elif args.no_crash or args.seed is None:
            schedule = AsyncSchedule()  # round-robin extension drives the run
        else:
            schedule = _random_async_schedule(entry, spec, inputs, args.seed)
        trace = run_async(
            built.programs, inputs, schedule, spec=spec, objects=built.objects
        )
        replay_payload.update({"schedule": trace.schedule.encode()})

    verdict = check_agreement(trace, spec)
    lines = [
        f"algorithm: {args.alg}   inputs: {','.join(map(str, inputs))}",
        f"decisions: {','.join('-' if d is None else str(d) for d in trace.decisions)}",
        f"crashed: {sorted(trace.crashed) if trace.crashed else 'none'}",
        f"verdict: {'PASS' if verdict.passed else 'FAIL'} "
        f"(witness={list(verdict.witness_set)}, offenders={verdict.offenders}, "
        f"k={spec.k}, ell={spec.ell})",
        f"replay: {json.dumps(replay_payload, sort_keys=True)}",
    ]
    payload = {
        "trace": trace.to_dict(),
        "verdict": verdict.to_dict(),
        "replay": replay_payload,
    }
    _emit(args, lines, payload)
    return EXIT_PASS if verdict.passed else EXIT_VIOLATION


def _inputs_mode_from_arg(text):
    if text in ("all", "canonical"):
        return text
    return [tuple(int(x) for x in vec.split(",")) for vec in text.split(";")]


def cmd_explore(args) -> int:
    entry = get_algorithm(args.alg)
    spec = _spec_from_args(args, entry)
    budget = _budget_from_args(args)
    report = explore(args.alg, spec, _inputs_mode_from_arg(args.inputs), budget)
    lines = [
        f"algorithm: {args.alg}   spec: n={spec.n} m={spec.m} t={spec.t} k={spec.k} ell={spec.ell}",
        f"executions checked: {report.executions_checked} "
        f"(states {report.states_explored}, exhaustive: {report.exhaustive})",
        f"violations: {report.violations_total}",
        f"empirical k: {report.empirical_k}   empirical ell: {report.empirical_ell}",
    ]
    lines += [f"note: {n}" for n in report.notes]
    for v in report.violations[:5]:
        lines.append(f"violation: {json.dumps(v, sort_keys=True)}")
    _emit(args, lines, report.to_dict())
    if report.violations_total:
        return EXIT_VIOLATION
    if not report.exhaustive and budget.mode != "sample":
        return EXIT_BUDGET
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "bounds": cmd_bounds,
            "table": cmd_table,
            "run": cmd_run,
            "explore": cmd_explore,
            "reduce": cmd_explore,
        }[args.command]
        return handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ModelViolationError as exc:
        print(f"model violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


def console() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
