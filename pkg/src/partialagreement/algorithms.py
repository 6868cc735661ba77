"""Every catalog algorithm and reduction, as executor-ready state machines.

Async behaviors expose ``state0`` and ``step(state, obs) -> (state, action)``;
sync behaviors expose ``state0``, ``round_send``, ``round_recv`` and
``finalize``. All are pure and deterministic, so runs replay bit-identically
and the explorer can dedupe on state.

The catalog maps stable string ids ("no-comm", "max-wait", "min-flood",
"smg-comp", "reduce-binary", "reduce-set", "reduce-sync", "reduce-smg") to
builders that wire programs, shared objects, and verdict defaults together.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from .core import MODEL_SM_G, ProblemSpec, SpecError, VALIDITY_STRONG, ceil_div
from .objects import ConsensusObject, PartialAgreementOracle, compliant_assignments
from .shmem import Decide, Propose, Read, Write


# --- decision rules shared by the reductions -------------------------------


def strict_majority(values):
    """The value held by more than half of ``values``.

    A compliant first phase always leaves a strict majority; if none exists
    the smallest value is returned with a soundness flag so the run stays
    total but the violation is visible.
    """
    counts = Counter(values)
    best = min(counts, key=lambda v: (-counts[v], v))
    if 2 * counts[best] > len(values):
        return best, ()
    return min(counts), ("reduction-soundness",)


def most_repeated_max(values):
    """The largest value among those with the most repetitions."""
    counts = Counter(values)
    top = max(counts.values())
    return max(v for v, c in counts.items() if c == top)


# --- async behaviors --------------------------------------------------------

_INIT = ("i",)


class NoComm:
    """Decide the own input at the first step; never touch a register."""

    __slots__ = ("value",)
    state0 = _INIT

    def __init__(self, value: int):
        self.value = value

    def step(self, state, obs):
        return state, Decide(self.value)

    def no_more_visible(self, state):
        return True


class MaxWait:
    """Publish the input, scan everyone, decide the max of `quorum` known inputs.

    Registers hold plain input values, so observations are tracked as an
    owner bitmask and the eventual max is read off the input vector.
    """

    __slots__ = ("pid", "n", "value", "inputs", "quorum")

    state0 = _INIT

    def __init__(self, pid: int, n: int, inputs, quorum: int):
        self.pid = pid
        self.n = n
        self.inputs = inputs
        self.value = inputs[pid]
        self.quorum = quorum

    def _next(self, owner):
        owner = (owner + 1) % self.n
        return (owner + 1) % self.n if owner == self.pid else owner

    def no_more_visible(self, state):
        # after the single write only reads and the decide remain
        return not (state is _INIT or state[0] == "i")

    def step(self, state, obs):
        if state is _INIT or state[0] == "i":
            cursor = self._next(self.pid)
            return (cursor, -1, 1 << self.pid), Write(self.value)
        cursor, last, mask = state
        if last >= 0 and obs is not None:
            mask |= 1 << last
        if mask.bit_count() >= self.quorum:
            best = max(self.inputs[o] for o in range(self.n) if mask >> o & 1)
            return (cursor, -1, mask), Decide(best)
        return (self._next(cursor), cursor, mask), Read(cursor, 0)


class OracleThenQuorum:
    """Two-phase reduction: ask the first-phase object, publish its answer,
    scan until enough answers are known, then apply the decision rule.

    rule "majority" decides the strict majority (flagging if none exists);
    rule "mode-max" decides the largest among the most-repeated values.
    With full_scan=True the quorum is only checked at scan boundaries, so a
    decision reflects everything available during one whole pass.
    """

    __slots__ = ("pid", "n", "value", "quorum", "obj", "rule", "full_scan", "start")

    state0 = _INIT

    def __init__(self, pid, n, value, quorum, obj="A", rule="majority", full_scan=False):
        self.pid = pid
        self.n = n
        self.value = value
        self.quorum = quorum
        self.obj = obj
        self.rule = rule
        self.full_scan = full_scan
        self.start = (pid + 1) % n

    def _next(self, owner):
        owner = (owner + 1) % self.n
        return (owner + 1) % self.n if owner == self.pid else owner

    def no_more_visible(self, state):
        return state[0] == "s"

    def _decision(self, observed):
        values = [v for _, v in observed]
        if self.rule == "majority":
            value, flags = strict_majority(values)
            return Decide(value, flags)
        return Decide(most_repeated_max(values))

    def step(self, state, obs):
        if state is _INIT or state[0] == "i":
            return ("w",), Propose(self.obj, self.value)
        if state[0] == "w":
            own = frozenset(((self.pid, obs),))
            return ("s", self.start, -1, own), Write(obs)
        _, cursor, last, observed = state
        if last >= 0 and obs is not None:
            observed = observed | {(last, obs)}
        at_boundary = cursor == self.start and last >= 0
        if len(observed) >= self.quorum and (not self.full_scan or at_boundary):
            return state, self._decision(observed)
        return ("s", self._next(cursor), cursor, observed), Read(cursor, 0)


class DecideOwn:
    """Outside every group: decide the own input immediately."""

    __slots__ = ("value",)
    state0 = _INIT

    def __init__(self, value: int):
        self.value = value

    def step(self, state, obs):
        return state, Decide(self.value)

    def no_more_visible(self, state):
        return True


class ProposeThenDecide:
    """Propose to one object and decide its winner."""

    __slots__ = ("obj", "value")
    state0 = _INIT

    def __init__(self, obj: str, value: int):
        self.obj = obj
        self.value = value

    def step(self, state, obs):
        if state is _INIT or state[0] == "i":
            return ("w",), Propose(self.obj, self.value)
        return state, Decide(obs)

    def no_more_visible(self, state):
        return state[0] == "w"


class ProposeRelayDecide:
    """Propose to a group object, relay its winner into the tie object, decide."""

    __slots__ = ("first", "relay", "value")
    state0 = _INIT

    def __init__(self, first: str, relay: str, value: int):
        self.first = first
        self.relay = relay
        self.value = value

    def step(self, state, obs):
        if state is _INIT or state[0] == "i":
            return ("w1",), Propose(self.first, self.value)
        if state[0] == "w1":
            return ("w2",), Propose(self.relay, obs)
        return state, Decide(obs)

    def no_more_visible(self, state):
        return state[0] == "w2"


# --- sync behaviors ---------------------------------------------------------


class MinFlood:
    """Broadcast the preferred value each round; adopt the round minimum."""

    __slots__ = ("n", "state0")

    def __init__(self, n: int, value: int):
        self.n = n
        self.state0 = value

    def round_send(self, pref, rnd):
        return pref, {dst: pref for dst in range(self.n)}

    def round_recv(self, pref, rnd, inbox):
        return min(inbox.values()) if inbox else pref

    def finalize(self, pref):
        return Decide(pref)


class BroadcastMajority:
    """One broadcast round of the first-phase answer, then majority."""

    __slots__ = ("n", "state0")

    def __init__(self, n: int, first_phase_value: int):
        self.n = n
        self.state0 = (first_phase_value, ())

    def round_send(self, state, rnd):
        return state, {dst: state[0] for dst in range(self.n)}

    def round_recv(self, state, rnd, inbox):
        return (state[0], tuple(sorted(inbox.values())))

    def finalize(self, state):
        value, flags = strict_majority(list(state[1]) or [state[0]])
        return Decide(value, flags)


# --- composition placement --------------------------------------------------


def composition_plan(n: int, g: int) -> dict:
    """Group layout for the object-composition algorithm.

    Case split on g > 3*floor(n/4): a single object covers g processes;
    otherwise two disjoint groups of size ghat feed A and B and half of each
    relays into the tie object C. Groups take the lowest available pids.
    """
    if g > 3 * (n // 4):
        return {"case": 1, "participants": list(range(g))}
    ghat = min(n // 2, g)
    g1 = list(range(ghat))
    g2 = list(range(ghat, 2 * ghat))
    g3 = g1[: ghat // 2]
    g4 = g2[: ghat // 2]
    return {"case": 2, "ghat": ghat, "G1": g1, "G2": g2, "G3": g3, "G4": g4}


# --- catalog ----------------------------------------------------------------


@dataclass
class Built:
    """Everything one run needs: programs, fresh shared objects, metadata."""

    programs: dict
    objects: dict = field(default_factory=dict)
    rounds: int | None = None
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    flavor: str  # "async" | "sync"
    build: Callable
    fault_budget: Callable
    default_k: Callable
    default_ell: Callable = lambda spec: spec.ell
    rounds: Callable | None = None
    oracle_contract: Callable | None = None  # spec -> (k, ell, validity)

    @property
    def uses_oracle(self) -> bool:
        return self.oracle_contract is not None

    def oracle_assignments(self, spec: ProblemSpec, inputs):
        k, ell, validity = self.oracle_contract(spec)
        return compliant_assignments(spec.n, k, ell, validity, inputs)


def _build_no_comm(spec, inputs, assignment=None, full_scan=False):
    return Built({pid: NoComm(inputs[pid]) for pid in range(spec.n)})


def _build_max_wait(spec, inputs, assignment=None, full_scan=False):
    q = spec.n - spec.t
    if q < 1:
        raise SpecError(f"max-wait needs n - t >= 1, got n={spec.n}, t={spec.t}")
    inputs = tuple(inputs)
    return Built(
        {pid: MaxWait(pid, spec.n, inputs, q) for pid in range(spec.n)},
        meta={"quorum": q},
    )


def _build_min_flood(spec, inputs, assignment=None, full_scan=False):
    rounds = spec.t // spec.ell + 1
    return Built(
        {pid: MinFlood(spec.n, inputs[pid]) for pid in range(spec.n)},
        rounds=rounds,
    )


def _build_smg_comp(spec, inputs, assignment=None, full_scan=False):
    if spec.model != MODEL_SM_G or spec.g is None:
        raise SpecError("smg-comp needs model sm-g with g set")
    n, g = spec.n, spec.g
    plan = composition_plan(n, g)
    programs: dict = {}
    if plan["case"] == 1:
        objects = {"A": ConsensusObject(g)}
        members = set(plan["participants"])
        for pid in range(n):
            if pid in members:
                programs[pid] = ProposeThenDecide("A", inputs[pid])
            else:
                programs[pid] = DecideOwn(inputs[pid])
    else:
        objects = {"A": ConsensusObject(g), "B": ConsensusObject(g), "C": ConsensusObject(g)}
        relay_a, relay_b = set(plan["G3"]), set(plan["G4"])
        group_a, group_b = set(plan["G1"]), set(plan["G2"])
        for pid in range(n):
            if pid in relay_a:
                programs[pid] = ProposeRelayDecide("A", "C", inputs[pid])
            elif pid in relay_b:
                programs[pid] = ProposeRelayDecide("B", "C", inputs[pid])
            elif pid in group_a:
                programs[pid] = ProposeThenDecide("A", inputs[pid])
            elif pid in group_b:
                programs[pid] = ProposeThenDecide("B", inputs[pid])
            else:
                programs[pid] = DecideOwn(inputs[pid])
    return Built(programs, objects=objects, meta={"plan": plan})


def smg_guarantee(spec: ProblemSpec) -> int:
    ghat = min(spec.n // 2, spec.g)
    return max(spec.g, 3 * (ghat // 2))


def _oracle_for(spec, inputs, contract, assignment):
    k, ell, validity = contract
    if assignment is not None:
        return PartialAgreementOracle(
            spec.n, k, ell, validity, strategy="fixed", inputs=inputs, assignment=assignment
        )
    return PartialAgreementOracle(
        spec.n, k, ell, validity, strategy="worst-case-split", inputs=inputs
    )


def _binary_contract(spec):
    return (ceil_div(spec.n, 2) + 1, 1, VALIDITY_STRONG)


def _build_reduce_binary(spec, inputs, assignment=None, full_scan=False):
    if spec.m != 2:
        raise SpecError("reduce-binary needs m=2")
    oracle = _oracle_for(spec, tuple(inputs), _binary_contract(spec), assignment)
    quorum = spec.n - 1
    programs = {
        pid: OracleThenQuorum(pid, spec.n, inputs[pid], quorum, rule="majority", full_scan=full_scan)
        for pid in range(spec.n)
    }
    return Built(programs, objects={"A": oracle}, meta={"quorum": quorum})


def _set_contract(spec):
    return (spec.n // spec.m + spec.n % spec.m + 1, 1, VALIDITY_STRONG)


def _build_reduce_set(spec, inputs, assignment=None, full_scan=False):
    if spec.m > spec.t + 1:
        raise SpecError(f"reduce-set needs m <= t+1, got m={spec.m}, t={spec.t}")
    oracle = _oracle_for(spec, tuple(inputs), _set_contract(spec), assignment)
    quorum = spec.n - (spec.m - 1)
    programs = {
        pid: OracleThenQuorum(pid, spec.n, inputs[pid], quorum, rule="mode-max", full_scan=full_scan)
        for pid in range(spec.n)
    }
    return Built(programs, objects={"A": oracle}, meta={"quorum": quorum})


def _smg_contract(spec):
    return (ceil_div(spec.n + spec.t - 1, 2) + 1, 1, VALIDITY_STRONG)


def _build_reduce_smg(spec, inputs, assignment=None, full_scan=False):
    if spec.m != 2:
        raise SpecError("reduce-smg needs m=2")
    if not spec.n > spec.t >= 1:
        raise SpecError(f"reduce-smg needs n > t >= 1, got n={spec.n}, t={spec.t}")
    oracle = _oracle_for(spec, tuple(inputs), _smg_contract(spec), assignment)
    quorum = spec.n - spec.t
    programs = {
        pid: OracleThenQuorum(pid, spec.n, inputs[pid], quorum, rule="majority", full_scan=full_scan)
        for pid in range(spec.n)
    }
    return Built(programs, objects={"A": oracle}, meta={"quorum": quorum})


def _sync_contract(spec):
    return (ceil_div(spec.n + spec.t + 1, 2), 1, VALIDITY_STRONG)


def _build_reduce_sync(spec, inputs, assignment=None, full_scan=False):
    # The first phase is a black box answered before the broadcast round;
    # its round cost is accounting, not simulation. A victim of the single
    # round with no recipients models a crash inside the first phase.
    if spec.m != 2:
        raise SpecError("reduce-sync needs m=2")
    inputs = tuple(inputs)
    oracle = _oracle_for(spec, inputs, _sync_contract(spec), assignment)
    answers = [oracle.propose(pid, inputs[pid]) for pid in range(spec.n)]
    programs = {pid: BroadcastMajority(spec.n, answers[pid]) for pid in range(spec.n)}
    return Built(programs, rounds=1, meta={"first_phase": answers})


CATALOG: dict[str, CatalogEntry] = {
    "no-comm": CatalogEntry(
        name="no-comm",
        flavor="async",
        build=_build_no_comm,
        fault_budget=lambda spec: spec.t,
        default_k=lambda spec: ceil_div(spec.n, spec.m),
    ),
    "max-wait": CatalogEntry(
        name="max-wait",
        flavor="async",
        build=_build_max_wait,
        fault_budget=lambda spec: spec.t,
        default_k=lambda spec: ceil_div(spec.n, min(spec.m, spec.t + 1)),
    ),
    "min-flood": CatalogEntry(
        name="min-flood",
        flavor="sync",
        build=_build_min_flood,
        fault_budget=lambda spec: spec.t,
        default_k=lambda spec: ceil_div(spec.n, spec.ell),
        rounds=lambda spec: spec.t // spec.ell + 1,
    ),
    "smg-comp": CatalogEntry(
        name="smg-comp",
        flavor="async",
        build=_build_smg_comp,
        fault_budget=lambda spec: spec.t,
        default_k=smg_guarantee,
    ),
    "reduce-binary": CatalogEntry(
        name="reduce-binary",
        flavor="async",
        build=_build_reduce_binary,
        fault_budget=lambda spec: 1,
        default_k=lambda spec: spec.n,
        oracle_contract=_binary_contract,
    ),
    "reduce-set": CatalogEntry(
        name="reduce-set",
        flavor="async",
        build=_build_reduce_set,
        fault_budget=lambda spec: spec.m - 1,
        default_k=lambda spec: spec.n,
        default_ell=lambda spec: spec.m - 1,
        oracle_contract=_set_contract,
    ),
    "reduce-sync": CatalogEntry(
        name="reduce-sync",
        flavor="sync",
        build=_build_reduce_sync,
        fault_budget=lambda spec: spec.t,
        default_k=lambda spec: spec.n,
        rounds=lambda spec: 1,
        oracle_contract=_sync_contract,
    ),
    "reduce-smg": CatalogEntry(
        name="reduce-smg",
        flavor="async",
        build=_build_reduce_smg,
        fault_budget=lambda spec: spec.t,
        default_k=lambda spec: spec.n,
        oracle_contract=_smg_contract,
    ),
}


def get_algorithm(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        known = ", ".join(sorted(CATALOG))
        raise SpecError(f"unknown algorithm {name!r}; known: {known}") from None


def build_algorithm(name: str, spec: ProblemSpec, inputs, **kwargs) -> Built:
    return get_algorithm(name).build(spec, inputs, **kwargs)
