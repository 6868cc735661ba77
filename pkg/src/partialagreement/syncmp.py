"""Lockstep round-based message-passing executor.

Rounds are numbered from 1. In each round every live process emits its
message set, deliveries are computed from the crash pattern (a round-r
victim reaches exactly its recipients_reached and takes no further action,
not even receiving), then every surviving process consumes its inbox.
Decisions happen once, after the final configured round.

A sync behavior is a pure state machine: ``state0``,
``round_send(state, rnd) -> (state, {dst: payload})``,
``round_recv(state, rnd, inbox) -> state`` with ``inbox = {src: payload}``,
and ``finalize(state) -> Decide``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .core import BudgetExceededError, ProblemSpec, SpecError
from .shmem import Decide


@dataclass(frozen=True)
class CrashPattern:
    """Adversary choices: victims as ``(pid, round, recipients_reached)``.

    A victim delivers its round-r messages exactly to recipients_reached
    and is silent afterwards.
    """

    victims: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self,
            "victims",
            tuple(sorted((p, r, frozenset(rcpts)) for p, r, rcpts in self.victims)),
        )

    def validate(self, n: int, t: int, rounds: int) -> None:
        pids = [p for p, _, _ in self.victims]
        if len(pids) != len(set(pids)):
            raise SpecError("a process may crash at most once")
        if len(pids) > t:
            raise SpecError(f"{len(pids)} victims exceed the fault budget t={t}")
        for p, r, rcpts in self.victims:
            if not 0 <= p < n:
                raise SpecError(f"victim {p} is not a process id")
            if not 1 <= r <= rounds:
                raise SpecError(f"victim round {r} outside 1..{rounds}")
            for q in rcpts:
                if not 0 <= q < n:
                    raise SpecError(f"recipient {q} is not a process id")

    def crash_round(self) -> dict[int, int]:
        return {p: r for p, r, _ in self.victims}

    def reached(self) -> dict[int, frozenset]:
        return {p: rcpts for p, _, rcpts in self.victims}

    def encode(self) -> str:
        items = [
            f"{p}@{r}=" + ".".join(str(q) for q in sorted(rcpts))
            for p, r, rcpts in self.victims
        ]
        return "p1:" + ",".join(items)

    @classmethod
    def decode(cls, token: str) -> "CrashPattern":
        try:
            tag, body = token.split(":", 1)
            if tag != "p1":
                raise ValueError(tag)
            victims = []
            for item in body.split(","):
                if not item:
                    continue
                head, rcpts_s = item.split("=")
                p, r = head.split("@")
                rcpts = frozenset(int(q) for q in rcpts_s.split(".") if q != "")
                victims.append((int(p), int(r), rcpts))
        except ValueError as exc:
            raise SpecError(f"bad pattern token {token!r}") from exc
        return cls(tuple(victims))


@dataclass(frozen=True)
class RoundTrace:
    """Per-round message log plus final decisions.

    ``rounds[r-1]`` is ``(sent, delivered)`` where each entry is a tuple of
    ``(src, dst, payload)``. ``crashed`` maps victim pid to its crash round.
    """

    inputs: tuple[int, ...]
    rounds: tuple
    decisions: tuple
    crashed: dict
    flags: frozenset
    pattern: CrashPattern
    nonterminating: bool = False

    @property
    def distinct_inputs(self) -> int:
        return len(set(self.inputs))

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "rounds": [
                {"sent": [list(e) for e in sent], "delivered": [list(e) for e in dlv]}
                for sent, dlv in self.rounds
            ],
            "decisions": list(self.decisions),
            "crashed": {str(p): r for p, r in sorted(self.crashed.items())},
            "flags": sorted(self.flags),
            "pattern": self.pattern.encode(),
        }

    def to_jsonl(self) -> str:
        lines = []
        for rnd, (sent, delivered) in enumerate(self.rounds, start=1):
            for src, dst, payload in delivered:
                lines.append(f"{rnd}\t{src}\t{dst}\tdeliver\t{payload!r}")
        for pid, v in enumerate(self.decisions):
            if v is not None:
                lines.append(f"{len(self.rounds)}\t{pid}\t-\tdecide\t{v!r}")
        return "\n".join(lines)


def run_sync(
    programs,
    inputs,
    pattern: CrashPattern,
    rounds: int,
    *,
    spec: ProblemSpec | None = None,
    log: bool = True,
) -> RoundTrace:
    """Execute exactly ``rounds`` lockstep rounds under ``pattern``."""
    inputs = tuple(inputs)
    n = len(inputs)
    if rounds < 1:
        raise SpecError(f"rounds must be >= 1, got {rounds}")
    if spec is not None:
        if n != spec.n:
            raise SpecError(f"got {n} inputs for n={spec.n}")
        pattern.validate(n, spec.t, rounds)
    else:
        pattern.validate(n, n, rounds)

    crash_round = pattern.crash_round()
    reached = pattern.reached()
    states = [programs[pid].state0 for pid in range(n)]
    alive = [pid for pid in range(n) if crash_round.get(pid, rounds + 1) >= 1]
    trace_rounds = []

    for rnd in range(1, rounds + 1):
        outboxes: dict[int, dict] = {}
        for pid in alive:
            states[pid], msgs = programs[pid].round_send(states[pid], rnd)
            outboxes[pid] = msgs
        victims_now = [pid for pid in alive if crash_round.get(pid) == rnd]
        survivors = [pid for pid in alive if crash_round.get(pid, rounds + 1) > rnd]
        sent = []
        inboxes: dict[int, dict] = {pid: {} for pid in survivors}
        delivered = []
        for src in alive:
            partial = reached[src] if src in victims_now else None
            for dst, payload in outboxes[src].items():
                if log:
                    sent.append((src, dst, payload))
                if partial is not None and dst not in partial:
                    continue
                if dst in inboxes:
                    inboxes[dst][src] = payload
                    if log:
                        delivered.append((src, dst, payload))
        for pid in survivors:
            states[pid] = programs[pid].round_recv(states[pid], rnd, inboxes[pid])
        alive = survivors
        if log:
            trace_rounds.append((tuple(sorted(sent)), tuple(sorted(delivered))))

    decisions = [None] * n
    flags: set = set()
    for pid in alive:
        outcome = programs[pid].finalize(states[pid])
        if not isinstance(outcome, Decide):
            raise SpecError(f"finalize for process {pid} must return a Decide")
        decisions[pid] = outcome.value
        flags.update(outcome.flags)

    return RoundTrace(
        inputs=inputs,
        rounds=tuple(trace_rounds),
        decisions=tuple(decisions),
        crashed=dict(sorted(crash_round.items())),
        flags=frozenset(flags),
        pattern=pattern,
    )


def count_crash_patterns(n: int, t: int, rounds: int, *, canonical: bool = False) -> int:
    """Closed-form pattern count for budget display (matches the enumerator)."""
    total = 0
    budget = min(t, n)
    for victims in _victim_sets(n, budget):
        if not canonical:
            total += (rounds * 2**n) ** len(victims)
            continue
        for rnds in itertools.product(range(1, rounds + 1), repeat=len(victims)):
            prod = 1
            for i in range(len(victims)):
                dead = sum(1 for j in range(len(victims)) if rnds[j] <= rnds[i])
                prod *= 2 ** (n - dead)
            total += prod
    return total


def _victim_sets(n, budget):
    for size in range(budget + 1):
        yield from itertools.combinations(range(n), size)


def enumerate_crash_patterns(
    n: int,
    t: int,
    rounds: int,
    *,
    canonical: bool = False,
    cap: int | None = None,
) -> Iterator[CrashPattern]:
    """Yield every crash pattern with at most min(t, n) victims.

    Each victim gets a round in 1..rounds and a recipients_reached subset.
    canonical=True restricts recipients to processes still alive when the
    partial delivery lands (the victim itself and processes already dead by
    that round never observe the delivery, so those subsets are no-op
    duplicates); verdicts are unaffected. Raises BudgetExceededError past
    ``cap`` yields.
    """
    if rounds < 1:
        raise SpecError(f"rounds must be >= 1, got {rounds}")
    budget = min(t, n)
    yielded = 0
    for victims in _victim_sets(n, budget):
        for rnds in itertools.product(range(1, rounds + 1), repeat=len(victims)):
            pools = []
            for i, pid in enumerate(victims):
                if canonical:
                    dead = {victims[j] for j in range(len(victims)) if rnds[j] <= rnds[i]}
                    pool = [q for q in range(n) if q not in dead]
                else:
                    pool = list(range(n))
                pools.append(_subsets(pool))
            for combo in itertools.product(*pools):
                yielded += 1
                if cap is not None and yielded > cap:
                    raise BudgetExceededError(
                        f"pattern enumeration exceeded cap {cap}", yielded
                    )
                yield CrashPattern(
                    tuple((pid, rnds[i], combo[i]) for i, pid in enumerate(victims))
                )


def _subsets(pool):
    out = []
    for size in range(len(pool) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(pool, size))
    return out
