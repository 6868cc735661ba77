"""Asynchronous shared-memory executor.

Single-writer register arrays, schedule-driven stepping at register-operation
granularity, crashes as schedule exclusion. Process ids are 0..n-1. A behavior
is a pure state machine: ``prog.state0`` plus ``prog.step(state, obs)`` which
returns ``(new_state, action)``. The observation passed to a step is the
result of the process's previous action (a read's value, a propose's winner,
else None), so a scan is one register read per scheduled step and the
adversary can interleave inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

from .core import BudgetExceededError, ModelViolationError, ProblemSpec, SpecError


class Write(NamedTuple):
    """Append a payload to the caller's own register array (next unused cell)."""

    payload: object


class Read(NamedTuple):
    owner: int
    index: int = 0


class Propose(NamedTuple):
    """One atomic access to a named shared object; the winner arrives as the next observation."""

    obj: str
    value: int


class Decide(NamedTuple):
    value: int
    flags: tuple = ()


class RegisterSpace:
    """Per-process append-only arrays of single-writer registers."""

    __slots__ = ("rows",)

    def __init__(self, n: int, rows: tuple | None = None):
        self.rows = rows if rows is not None else tuple(() for _ in range(n))

    def write(self, writer: int, owner: int, index: int, payload) -> "RegisterSpace":
        if writer != owner:
            raise ModelViolationError(
                f"process {writer} attempted to write a register owned by {owner}"
            )
        row = self.rows[owner]
        if index != len(row):
            raise ModelViolationError(
                f"process {owner} wrote register index {index}; next unused is {len(row)}"
            )
        rows = list(self.rows)
        rows[owner] = row + (payload,)
        return RegisterSpace(len(rows), tuple(rows))

    def append(self, owner: int, payload) -> "RegisterSpace":
        return self.write(owner, owner, len(self.rows[owner]), payload)

    def read(self, owner: int, index: int):
        row = self.rows[owner]
        return row[index] if 0 <= index < len(row) else None


@dataclass(frozen=True)
class AsyncSchedule:
    """An interleaving plus crash placements.

    ``steps[i]`` is the process stepped at position i. A crash ``(pid, pos)``
    means the process takes no step at or after position ``pos``.
    """

    steps: tuple[int, ...] = ()
    crashes: frozenset = frozenset()

    def validate(self, n: int, t: int) -> None:
        pids = [p for p, _ in self.crashes]
        if len(pids) != len(set(pids)):
            raise SpecError("a process may crash at most once")
        if len(pids) > t:
            raise SpecError(f"{len(pids)} crashes exceed the fault budget t={t}")
        for p, pos in self.crashes:
            if not 0 <= p < n:
                raise SpecError(f"crash names unknown process {p}")
            if p in self.steps[pos:]:
                raise SpecError(f"process {p} is scheduled at or after its crash position {pos}")
        for p in self.steps:
            if not 0 <= p < n:
                raise SpecError(f"schedule names unknown process {p}")

    def crash_at(self) -> dict[int, list[int]]:
        by_pos: dict[int, list[int]] = {}
        for p, pos in sorted(self.crashes):
            by_pos.setdefault(pos, []).append(p)
        return by_pos

    def encode(self) -> str:
        steps = ".".join(str(p) for p in self.steps)
        crashes = ",".join(f"{p}@{pos}" for p, pos in sorted(self.crashes))
        return f"a1:{steps}:{crashes}"

    @classmethod
    def decode(cls, token: str) -> "AsyncSchedule":
        try:
            tag, steps_s, crashes_s = token.split(":")
            if tag != "a1":
                raise ValueError(tag)
            steps = tuple(int(x) for x in steps_s.split(".") if x != "")
            crashes = frozenset(
                (int(p), int(pos))
                for p, pos in (item.split("@") for item in crashes_s.split(",") if item)
            )
        except ValueError as exc:
            raise SpecError(f"bad schedule token {token!r}") from exc
        return cls(steps, crashes)


@dataclass(frozen=True)
class ExecutionTrace:
    """Full event log of one asynchronous run.

    Events are ``(position, pid, kind, payload)`` with kind one of write,
    read, propose, decide, crash. ``decisions[pid]`` is None while undecided.
    """

    inputs: tuple[int, ...]
    events: tuple
    decisions: tuple
    crashed: frozenset
    flags: frozenset
    nonterminating: bool
    schedule: AsyncSchedule

    @property
    def distinct_inputs(self) -> int:
        return len(set(self.inputs))

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "events": [list(e) for e in self.events],
            "decisions": list(self.decisions),
            "crashed": sorted(self.crashed),
            "flags": sorted(self.flags),
            "nonterminating": self.nonterminating,
            "distinct_inputs": self.distinct_inputs,
            "schedule": self.schedule.encode(),
        }

    def to_jsonl(self) -> str:
        lines = []
        for pos, pid, kind, payload in self.events:
            lines.append(f"{pos}\t{pid}\t{kind}\t{payload!r}")
        return "\n".join(lines)


class AsyncRun:
    """Mutable state of one run; scheduling decisions live with the caller.

    Each process carries its program state plus the precomputed action it
    will perform next, so observations fold into the state at the step that
    produced them. clone() is cheap (immutable leaves are shared), key() is
    a hashable snapshot of everything that determines the run's future, and
    path records the schedule taken so far for replay.

    With eager=True, steps whose outcome is already fixed are committed
    immediately: local decides, reads of written cells (write-once
    registers make the value immutable), and reads of cells whose owner
    crashed before writing (permanently empty). Those steps commute with
    every other enabled step, so folding them never changes the reachable
    decision outcomes; it only collapses equivalent interleavings.
    """

    __slots__ = (
        "progs",
        "inputs",
        "n",
        "states",
        "actions",
        "decided",
        "crashed",
        "regs",
        "objects",
        "flags",
        "steps_taken",
        "step_bound",
        "nonterminating",
        "eager",
        "events",
        "path",
    )

    def __init__(self, progs, inputs, objects=None, eager=False, log=False, step_bound=None):
        self.n = len(inputs)
        self.progs = progs
        self.inputs = tuple(inputs)
        self.states = [None] * self.n
        self.actions = [None] * self.n
        for pid in range(self.n):
            self.states[pid], self.actions[pid] = progs[pid].step(progs[pid].state0, None)
        self.decided = [None] * self.n
        self.crashed = [False] * self.n
        self.regs = RegisterSpace(self.n)
        self.objects = dict(objects) if objects else {}
        self.flags: set = set()
        self.steps_taken = 0
        self.step_bound = step_bound if step_bound is not None else default_step_bound(self.n)
        self.nonterminating = False
        self.eager = eager
        self.events = [] if log else None
        self.path: list = []
        if eager:
            self._settle_all()

    def clone(self) -> "AsyncRun":
        new = object.__new__(AsyncRun)
        new.n = self.n
        new.progs = self.progs
        new.inputs = self.inputs
        new.states = list(self.states)
        new.actions = list(self.actions)
        new.decided = list(self.decided)
        new.crashed = list(self.crashed)
        new.regs = self.regs
        new.objects = {name: obj.clone() for name, obj in self.objects.items()}
        new.flags = set(self.flags)
        new.steps_taken = self.steps_taken
        new.step_bound = self.step_bound
        new.nonterminating = self.nonterminating
        new.eager = self.eager
        new.events = None
        new.path = list(self.path)
        return new

    def key(self):
        return (
            tuple(self.states),
            tuple(self.actions),
            tuple(self.decided),
            tuple(self.crashed),
            self.regs.rows,
            tuple(obj.key() for obj in self.objects.values()),
            frozenset(self.flags),
        )

    def live_undecided(self) -> list[int]:
        return [
            pid
            for pid in range(self.n)
            if not self.crashed[pid] and self.decided[pid] is None
        ]

    def all_settled(self) -> bool:
        return not self.live_undecided()

    @property
    def decisions(self) -> tuple:
        return tuple(self.decided)

    def crash(self, pid: int) -> None:
        if self.crashed[pid]:
            raise SpecError(f"process {pid} crashed twice")
        self.crashed[pid] = True
        self.path.append(("c", pid))
        if self.events is not None:
            self.events.append((self.steps_taken, pid, "crash", None))
        if self.eager:
            self._settle_all()

    def step(self, pid: int) -> None:
        if self.crashed[pid]:
            raise SpecError(f"crashed process {pid} cannot step")
        if self.decided[pid] is not None:
            raise ModelViolationError(f"process {pid} acted after deciding")
        self._advance(pid)
        if self.eager:
            self._settle_all()

    def _fixed(self, pid: int) -> bool:
        act = self.actions[pid]
        kind = type(act)
        if kind is Decide:
            return True
        if kind is Read:
            if act.index < len(self.regs.rows[act.owner]):
                return True  # write-once cell: the value can never change
            return self.crashed[act.owner]  # permanently unwritten
        if kind is Propose:
            return self.objects[act.obj].commutes
        return False

    def _settle_all(self) -> None:
        for pid in range(self.n):
            while (
                not self.crashed[pid]
                and self.decided[pid] is None
                and self._fixed(pid)
            ):
                if self.steps_taken >= self.step_bound:
                    self.nonterminating = True
                    return
                self._advance(pid)

    def _advance(self, pid: int) -> None:
        act = self.actions[pid]
        kind = type(act)
        pos = self.steps_taken
        obs = None
        if kind is Read:
            obs = self.regs.read(act.owner, act.index)
            if self.events is not None:
                self.events.append((pos, pid, "read", (act.owner, act.index, obs)))
        elif kind is Write:
            self.regs = self.regs.append(pid, act.payload)
            if self.events is not None:
                index = len(self.regs.rows[pid]) - 1
                self.events.append((pos, pid, "write", (index, act.payload)))
        elif kind is Propose:
            obj = self.objects[act.obj]
            obs = obj.propose(pid, act.value)
            if self.events is not None:
                self.events.append((pos, pid, "propose", (act.obj, act.value, obs)))
        elif kind is Decide:
            self.decided[pid] = act.value
            self.flags.update(act.flags)
            if self.events is not None:
                self.events.append((pos, pid, "decide", act.value))
        else:
            raise ModelViolationError(f"behavior emitted unknown action {act!r}")
        self.steps_taken += 1
        self.path.append(("s", pid))
        if self.decided[pid] is None:
            self.states[pid], self.actions[pid] = self.progs[pid].step(self.states[pid], obs)
        else:
            self.actions[pid] = None

    def schedule_so_far(self) -> AsyncSchedule:
        steps = []
        crashes = []
        for tag, pid in self.path:
            if tag == "s":
                steps.append(pid)
            else:
                crashes.append((pid, len(steps)))
        return AsyncSchedule(tuple(steps), frozenset(crashes))


def default_step_bound(n: int) -> int:
    # Every catalog algorithm finishes within O(n) scans of n registers;
    # the slack catches bugs, not legitimate runs.
    return 64 * n * n


def run_async(
    programs,
    inputs,
    schedule: AsyncSchedule,
    *,
    spec: ProblemSpec | None = None,
    objects=None,
    step_bound: int | None = None,
) -> ExecutionTrace:
    """Execute one schedule-driven run and return its full trace.

    Processes are stepped exactly in schedule order; if the schedule runs
    out with live undecided processes it is extended round-robin over them
    until everyone decided or ``step_bound`` is hit, in which case the trace
    is flagged nonterminating (resiliency violation) rather than raising.
    """
    inputs = tuple(inputs)
    n = len(inputs)
    if spec is not None:
        if n != spec.n:
            raise SpecError(f"got {n} inputs for n={spec.n}")
        for v in inputs:
            if not 0 <= v < spec.m:
                raise SpecError(f"input {v} outside value domain 0..{spec.m - 1}")
        schedule.validate(n, spec.t)
    else:
        schedule.validate(n, n)
    if step_bound is None:
        step_bound = default_step_bound(n)

    run = AsyncRun(programs, inputs, objects=objects, log=True, step_bound=step_bound)
    crash_at = schedule.crash_at()
    pos = 0
    nonterminating = False
    rr: list[int] = []
    while True:
        for pid in crash_at.get(pos, ()):
            run.crash(pid)
        if run.all_settled():
            break
        if pos < len(schedule.steps):
            pid = schedule.steps[pos]
            if not run.crashed[pid] and run.decided[pid] is None:
                run.step(pid)
        else:
            if run.steps_taken >= step_bound:
                nonterminating = True
                break
            while rr and (run.crashed[rr[0]] or run.decided[rr[0]] is not None):
                rr.pop(0)
            if not rr:
                rr = run.live_undecided()
            run.step(rr.pop(0))
        pos += 1

    return ExecutionTrace(
        inputs=inputs,
        events=tuple(run.events),
        decisions=run.decisions,
        crashed=frozenset(p for p in range(n) if run.crashed[p]),
        flags=frozenset(run.flags),
        nonterminating=nonterminating,
        schedule=run.schedule_so_far(),
    )


def enumerate_async_schedules(
    n: int,
    t: int,
    max_steps: int,
    *,
    runnable: Callable | None = None,
    prune: Callable | None = None,
    cap: int | None = None,
) -> Iterator[AsyncSchedule]:
    """Depth-first enumeration of interleavings and crash placements.

    ``runnable(steps, crashed)`` returns the pids eligible to take the next
    step; an empty answer completes the schedule (default: every uncrashed
    pid, completing only at ``max_steps``). ``prune(steps, crashes)`` cuts a
    subtree when it returns True. Crash placements are canonical: within one
    position, victims are chosen in ascending pid order. At most min(t, n)
    processes crash. Raises BudgetExceededError past ``cap`` yields.
    """
    if max_steps < n:
        raise SpecError(f"max_steps must be at least n, got {max_steps} < {n}")
    budget = min(t, n)
    yielded = 0

    def rec(steps, crashes, last_crash):
        nonlocal yielded
        if prune is not None and prune(steps, crashes):
            return
        crashed = frozenset(p for p, _ in crashes)
        if runnable is not None:
            choices = sorted(runnable(steps, crashed))
        else:
            choices = [p for p in range(n) if p not in crashed]
        if not choices or len(steps) == max_steps:
            yielded += 1
            if cap is not None and yielded > cap:
                raise BudgetExceededError(
                    f"schedule enumeration exceeded cap {cap}", yielded
                )
            yield AsyncSchedule(steps, frozenset(crashes))
            return
        pos = len(steps)
        if len(crashes) < budget:
            for pid in choices:
                if last_crash is not None and last_crash[1] == pos and pid <= last_crash[0]:
                    continue
                yield from rec(steps, crashes + ((pid, pos),), (pid, pos))
        for pid in choices:
            yield from rec(steps + (pid,), crashes, last_crash)

    yield from rec((), (), None)
