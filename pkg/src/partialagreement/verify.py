"""Post-hoc contract checking and exhaustive/sampled execution exploration.

check_agreement turns any finished trace into a Verdict against an
(n, k, ell) spec. explore drives one catalog algorithm across input
assignments x schedules (async, via full-state-deduplicated DFS over the
execution tree) or crash patterns (sync), checking every complete run and
aggregating empirical thresholds. Oracle-backed reductions are additionally
driven across every contract-compliant first-phase assignment.
"""

from __future__ import annotations

import itertools
import json
import random
from collections import Counter
from dataclasses import dataclass, field

from .algorithms import get_algorithm
from .core import BudgetExceededError, ProblemSpec, SpecError, VALIDITY_STRONG
from .shmem import AsyncRun
from .syncmp import CrashPattern, enumerate_crash_patterns, run_sync


@dataclass(frozen=True)
class Verdict:
    """Outcome of checking one run against the agreement contract.

    witness_set is the <= ell proposed values certifying agreement;
    offenders counts processes that decided outside it. Undecided
    processes (crashed or still running) are never offenders: they count
    toward k.
    """

    agreement_ok: bool
    witness_set: tuple
    offenders: int
    validity_ok: bool
    resiliency_ok: bool
    details: tuple
    flags: tuple = ()

    @property
    def passed(self) -> bool:
        return self.agreement_ok and self.validity_ok and self.resiliency_ok

    def to_dict(self) -> dict:
        return {
            "agreement_ok": self.agreement_ok,
            "witness_set": list(self.witness_set),
            "offenders": self.offenders,
            "validity_ok": self.validity_ok,
            "resiliency_ok": self.resiliency_ok,
            "details": [list(d) for d in self.details],
            "flags": list(self.flags),
            "passed": self.passed,
        }


def best_witness(counts: Counter, proposed, ell: int) -> tuple:
    """The <= ell proposed values covering the most decisions.

    Candidates are ranked by decision count (descending) then value
    (ascending); zero-count values are never chosen, so a run with no
    decisions gets the empty witness by convention.
    """
    ranked = sorted(
        (v for v in proposed if counts.get(v, 0) > 0),
        key=lambda v: (-counts[v], v),
    )
    return tuple(sorted(ranked[:ell]))


def check_agreement(trace, spec: ProblemSpec) -> Verdict:
    """Evaluate agreement, validity and resiliency for a finished run.

    ``trace`` needs pid-indexed ``decisions`` (None while undecided),
    ``inputs``, a ``crashed`` container, and a ``nonterminating`` flag.
    """
    n = spec.n
    decisions = trace.decisions
    if len(decisions) != n:
        raise SpecError(f"trace has {len(decisions)} processes, spec has n={n}")
    proposed = set(trace.inputs)
    counts = Counter(v for v in decisions if v is not None)
    witness = best_witness(counts, proposed, spec.ell)
    witness_set = set(witness)
    offenders = sum(c for v, c in counts.items() if v not in witness_set)
    agreement_ok = offenders <= n - spec.k
    if spec.validity == VALIDITY_STRONG:
        validity_ok = all(v in proposed for v in counts)
    else:
        validity_ok = all(v in proposed for v in witness)
    undecided_live = any(
        decisions[pid] is None and pid not in trace.crashed for pid in range(n)
    )
    resiliency_ok = not trace.nonterminating and not undecided_live
    return Verdict(
        agreement_ok=agreement_ok,
        witness_set=witness,
        offenders=offenders,
        validity_ok=validity_ok,
        resiliency_ok=resiliency_ok,
        details=tuple(sorted(counts.items())),
        flags=tuple(sorted(trace.flags)),
    )


# --- exploration ------------------------------------------------------------


@dataclass(frozen=True)
class ExploreBudget:
    """Limits for one exploration.

    mode "auto" enumerates exhaustively and fails soft (partial report)
    past the caps; mode "sample" replaces schedule/pattern enumeration with
    ``samples`` seeded random runs per cell.
    """

    max_runs: int = 500_000
    max_states: int = 4_000_000
    max_input_vectors: int = 4096
    samples: int = 100
    mode: str = "auto"
    seed: int = 0
    max_recorded_violations: int = 25

    def to_dict(self) -> dict:
        return {
            "max_runs": self.max_runs,
            "max_states": self.max_states,
            "max_input_vectors": self.max_input_vectors,
            "samples": self.samples,
            "mode": self.mode,
            "seed": self.seed,
            "max_recorded_violations": self.max_recorded_violations,
        }


@dataclass
class ExplorationReport:
    algorithm: str
    spec: ProblemSpec
    inputs_mode: object
    budget: ExploreBudget
    executions_checked: int = 0
    states_explored: int = 0
    violations: list = field(default_factory=list)
    violations_total: int = 0
    flagged_executions: int = 0
    empirical_k: int | None = None
    empirical_k_all_runs: int | None = None
    empirical_ell: int | None = None
    exhaustive: bool = True
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        mode = self.inputs_mode
        if not isinstance(mode, str):
            mode = [list(v) for v in mode]
        return {
            "schema_version": 1,
            "algorithm": self.algorithm,
            "spec": self.spec.to_dict(),
            "inputs_mode": mode,
            "budget": self.budget.to_dict(),
            "executions_checked": self.executions_checked,
            "states_explored": self.states_explored,
            "violations": self.violations,
            "violations_total": self.violations_total,
            "flagged_executions": self.flagged_executions,
            "empirical_k": self.empirical_k,
            "empirical_k_all_runs": self.empirical_k_all_runs,
            "empirical_ell": self.empirical_ell,
            "exhaustive": self.exhaustive,
            "notes": self.notes,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    def replay_encoding(self) -> str:
        d = self.to_dict()
        return json.dumps(
            {k: d[k] for k in ("algorithm", "spec", "inputs_mode", "budget")},
            sort_keys=True,
        )


def explore_from_replay(encoding: str | dict) -> ExplorationReport:
    d = json.loads(encoding) if isinstance(encoding, str) else encoding
    mode = d["inputs_mode"]
    if not isinstance(mode, str):
        mode = [tuple(v) for v in mode]
    return explore(
        d["algorithm"],
        ProblemSpec.from_dict(d["spec"]),
        inputs_mode=mode,
        budget=ExploreBudget(**d["budget"]),
    )


class _BudgetStop(Exception):
    pass


@dataclass(frozen=True)
class _Outcome:
    inputs: tuple
    decisions: tuple
    crashed: frozenset
    flags: frozenset
    nonterminating: bool


class _Aggregator:
    def __init__(self, spec: ProblemSpec, budget: ExploreBudget, report: ExplorationReport):
        self.spec = spec
        self.budget = budget
        self.report = report

    def record(self, outcome, encoding: dict) -> None:
        rep = self.report
        rep.executions_checked += 1
        if outcome.flags:
            rep.flagged_executions += 1
        verdict = check_agreement(outcome, self.spec)
        decided = [v for v in outcome.decisions if v is not None]
        undecided = self.spec.n - len(decided)
        counts = Counter(decided)
        if decided:
            rep.empirical_ell = max(rep.empirical_ell or 0, len(counts))
            top_all = max(counts.values()) + undecided
        else:
            top_all = undecided
        if rep.empirical_k_all_runs is None or top_all < rep.empirical_k_all_runs:
            rep.empirical_k_all_runs = top_all
        if undecided == 0:
            top = max(counts.values())
            if rep.empirical_k is None or top < rep.empirical_k:
                rep.empirical_k = top
        if not verdict.passed:
            rep.violations_total += 1
            if len(rep.violations) < self.budget.max_recorded_violations:
                rep.violations.append({**encoding, "verdict": verdict.to_dict()})
        if rep.executions_checked >= self.budget.max_runs:
            raise _BudgetStop


def _canonical_pattern(vector) -> tuple:
    rank = {v: i for i, v in enumerate(sorted(set(vector)))}
    return tuple(rank[v] for v in vector)


def _input_vectors(spec: ProblemSpec, inputs_mode, budget: ExploreBudget) -> list:
    if isinstance(inputs_mode, str):
        if inputs_mode not in ("all", "canonical"):
            raise SpecError(f"inputs_mode must be 'all', 'canonical', or vectors, got {inputs_mode!r}")
        total = spec.m**spec.n
        if total > budget.max_input_vectors:
            raise BudgetExceededError(
                f"{total} input assignments exceed the cap "
                f"{budget.max_input_vectors}; pass explicit vectors or raise the budget",
                total,
            )
        vectors = itertools.product(range(spec.m), repeat=spec.n)
        if inputs_mode == "canonical":
            # Order-isomorphism representatives: sound for the catalog since
            # every algorithm and the verdict commute with monotone
            # injective value relabelings.
            return sorted({_canonical_pattern(v) for v in vectors})
        return list(vectors)
    out = []
    for vec in inputs_mode:
        vec = tuple(vec)
        if len(vec) != spec.n:
            raise SpecError(f"input vector {vec} has {len(vec)} entries for n={spec.n}")
        for v in vec:
            if not 0 <= v < spec.m:
                raise SpecError(f"input {v} outside value domain 0..{spec.m - 1}")
        out.append(vec)
    return out


def _crash_can_matter(run, pid) -> bool:
    hint = getattr(run.progs[pid], "no_more_visible", None)
    return hint is None or not hint(run.states[pid])


def _async_outcome(run) -> _Outcome:
    return _Outcome(
        inputs=run.inputs,
        decisions=run.decisions,
        crashed=frozenset(p for p in range(run.n) if run.crashed[p]),
        flags=frozenset(run.flags),
        nonterminating=run.nonterminating,
    )


def _explore_async_cell(entry, spec, inputs, assignment, agg, budget, report, full_scan=False):
    built = entry.build(spec, inputs, assignment=assignment, full_scan=full_scan)
    crash_budget = min(entry.fault_budget(spec), spec.n)
    base = {"inputs": list(inputs)}
    if assignment is not None:
        base["assignment"] = list(assignment)

    if budget.mode == "sample":
        rng = random.Random(f"{budget.seed}|{inputs}|{assignment}")
        template = AsyncRun(built.programs, inputs, objects=built.objects, eager=True)
        for _ in range(budget.samples):
            run = template.clone()
            while not run.nonterminating:
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
            agg.record(_async_outcome(run), {**base, "schedule": run.schedule_so_far().encode()})
        return

    root = AsyncRun(built.programs, inputs, objects=built.objects, eager=True)
    seen = set()
    stack = [root]
    while stack:
        run = stack.pop()
        key = run.key()
        if key in seen:
            continue
        seen.add(key)
        report.states_explored += 1
        if report.states_explored > budget.max_states:
            raise _BudgetStop
        if run.nonterminating or not run.live_undecided():
            agg.record(_async_outcome(run), {**base, "schedule": run.schedule_so_far().encode()})
            continue
        live = run.live_undecided()
        children = []
        if sum(run.crashed) < crash_budget:
            # Crashing a process whose remaining actions are invisible to
            # others (post-write scans, local decide) is dominated by
            # letting it run: it removes a decision (never adds offenders)
            # and burns fault budget. Those branches are skipped.
            for pid in live:
                if _crash_can_matter(run, pid):
                    child = run.clone()
                    child.crash(pid)
                    children.append(child)
        for pid in live:
            child = run.clone()
            child.step(pid)
            children.append(child)
        stack.extend(reversed(children))


def _random_pattern(rng, n, t, rounds) -> CrashPattern:
    count = rng.randint(0, t)
    victims = sorted(rng.sample(range(n), count))
    chosen = []
    for pid in victims:
        rnd = rng.randint(1, rounds)
        reached = frozenset(q for q in range(n) if rng.random() < 0.5)
        chosen.append((pid, rnd, reached))
    return CrashPattern(tuple(chosen))


def _explore_sync_cell(entry, spec, inputs, assignment, agg, budget, report):
    built = entry.build(spec, inputs, assignment=assignment)
    rounds = built.rounds
    crash_budget = min(entry.fault_budget(spec), spec.n)
    base = {"inputs": list(inputs), "rounds": rounds}
    if assignment is not None:
        base["assignment"] = list(assignment)

    if budget.mode == "sample":
        rng = random.Random(f"{budget.seed}|{inputs}|{assignment}")
        patterns = (
            _random_pattern(rng, spec.n, crash_budget, rounds) for _ in range(budget.samples)
        )
    else:
        patterns = enumerate_crash_patterns(spec.n, crash_budget, rounds, canonical=True)
    for pattern in patterns:
        trace = run_sync(built.programs, inputs, pattern, rounds, log=False)
        report.states_explored += 1
        agg.record(trace, {**base, "pattern": pattern.encode()})


def explore(
    algorithm: str,
    spec: ProblemSpec,
    inputs_mode="all",
    budget: ExploreBudget | None = None,
    *,
    full_scan: bool = False,
) -> ExplorationReport:
    """Check one catalog algorithm across adversary choices.

    Iterates input assignments x schedules (async) or crash patterns
    (sync); oracle-backed reductions additionally iterate every
    contract-compliant first-phase assignment. Budget exhaustion yields a
    partial report flagged non-exhaustive rather than an exception.
    """
    entry = get_algorithm(algorithm)
    budget = budget or ExploreBudget()
    report = ExplorationReport(algorithm, spec, inputs_mode, budget)
    agg = _Aggregator(spec, budget, report)
    vectors = _input_vectors(spec, inputs_mode, budget)
    try:
        for inputs in vectors:
            cells = [None]
            if entry.uses_oracle:
                cells = entry.oracle_assignments(spec, inputs)
            for assignment in cells:
                if entry.flavor == "async":
                    _explore_async_cell(
                        entry, spec, inputs, assignment, agg, budget, report, full_scan
                    )
                else:
                    _explore_sync_cell(entry, spec, inputs, assignment, agg, budget, report)
    except _BudgetStop:
        report.exhaustive = False
    if budget.mode == "sample":
        report.exhaustive = False
    if entry.uses_oracle:
        report.notes.append("conditional construction verified against oracle")
    if spec.model == "async-rw" and spec.t >= 1 and not entry.uses_oracle:
        d = min(spec.m, spec.t + 1)
        gap = (spec.n // d + spec.n % d) - (-(-spec.n // d))
        if gap > 0:
            report.notes.append(
                "sufficient and necessary thresholds differ at this configuration; "
                "whether either side is tight here is open"
            )
    return report


def measure_empirical_k(
    algorithm: str,
    spec: ProblemSpec,
    budget: ExploreBudget | None = None,
    inputs_mode="all",
) -> int | None:
    """Smallest plurality over explored executions where everyone decided."""
    return explore(algorithm, spec, inputs_mode=inputs_mode, budget=budget).empirical_k
