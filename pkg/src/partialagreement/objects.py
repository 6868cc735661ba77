"""Linearizable shared objects used inside the executors.

ConsensusObject is a wait-free first-value-wins agreement object for up to
``capacity`` distinct proposers. PartialAgreementOracle stands in for a
black-box protocol that meets an (n, k, ell) agreement contract: it answers
in a single atomic step, and its completed assignment over all n processes
always satisfies the contract (checkable post hoc). The "fixed" strategy
plus ``compliant_assignments`` lets an explorer drive every assignment the
contract admits.
"""

from __future__ import annotations

import itertools
from collections import Counter
from typing import Iterator

from .core import ModelViolationError, SpecError, VALIDITY_STRONG

STRATEGIES = (
    "worst-case-split",
    "plurality-exact-k",
    "honest-full-agreement",
    "fixed",
)


class ConsensusObject:
    """First proposal wins; every propose returns the winner."""

    __slots__ = ("capacity", "winner", "proposers")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise SpecError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.winner = None
        self.proposers: frozenset = frozenset()

    commutes = False  # first-value-wins: outcomes depend on access order

    def propose(self, pid: int, value: int) -> int:
        if pid in self.proposers:
            raise ModelViolationError(f"process {pid} proposed twice on one object")
        if len(self.proposers) + 1 > self.capacity:
            raise ModelViolationError(
                f"object capacity {self.capacity} exceeded by proposer {pid}"
            )
        self.proposers = self.proposers | {pid}
        if self.winner is None:
            self.winner = value
        return self.winner

    def clone(self) -> "ConsensusObject":
        new = object.__new__(ConsensusObject)
        new.capacity = self.capacity
        new.winner = self.winner
        new.proposers = self.proposers
        return new

    def key(self):
        return ("consensus", self.capacity, self.winner, self.proposers)


def agreement_holds(assignment, n, k, ell, validity, inputs) -> bool:
    """Does a full decision assignment satisfy the (n, k, ell) contract?"""
    proposed = set(inputs)
    counts = Counter(assignment)
    if validity == VALIDITY_STRONG and any(v not in proposed for v in counts):
        return False
    witness = sorted((v for v in counts if v in proposed), key=lambda v: (-counts[v], v))[:ell]
    covered = sum(counts[v] for v in witness)
    return n - covered <= n - k


def compliant_assignments(
    n: int,
    k: int,
    ell: int,
    validity: str,
    inputs,
    m: int | None = None,
) -> Iterator[tuple]:
    """Every full decision assignment satisfying the (n, k, ell) contract."""
    if validity == VALIDITY_STRONG:
        domain = sorted(set(inputs))
    else:
        if m is None:
            raise SpecError("weak validity enumeration needs the domain size m")
        domain = list(range(m))
    for assignment in itertools.product(domain, repeat=n):
        if agreement_holds(assignment, n, k, ell, validity, inputs):
            yield assignment


def plan_worst_case_split(n: int, k: int, inputs) -> tuple:
    """Exactly k processes get the witness; the rest spread evenly.

    The witness is the value whose selection leaves the most even residual
    split (ties to the smaller value); residual processes are spread over
    the other proposed values, smaller values filled first.
    """
    distinct = sorted(set(inputs))
    if len(distinct) == 1:
        return tuple(inputs)
    rem = n - k
    # The even-split residual (max bucket ceil(rem/(D-1))) is the same for
    # every witness candidate, so the tie-break always lands on the
    # smallest value.
    witness = distinct[0]
    others = [v for v in distinct if v != witness]
    share, extra = divmod(rem, len(others))
    residual = []
    for i, v in enumerate(others):
        residual.extend([v] * (share + (1 if i < extra else 0)))
    order = sorted(range(n), key=lambda p: (inputs[p] != witness, p))
    plan = [None] * n
    for slot, pid in enumerate(order):
        plan[pid] = witness if slot < k else residual[slot - k]
    return tuple(plan)


def plan_plurality_exact_k(n: int, k: int, inputs) -> tuple:
    """The plurality value goes to k processes; everyone else keeps its own.

    Witness proposers come first when picking the k receivers; a witness
    proposer that misses the cut falls back to the smallest other proposed
    value so the witness count stays exactly k where possible.
    """
    counts = Counter(inputs)
    witness = min(counts, key=lambda v: (-counts[v], v))
    others = sorted(v for v in set(inputs) if v != witness)
    order = sorted(range(n), key=lambda p: (inputs[p] != witness, p))
    plan = [None] * n
    for slot, pid in enumerate(order):
        if slot < k:
            plan[pid] = witness
        elif inputs[pid] == witness:
            plan[pid] = others[0] if others else witness
        else:
            plan[pid] = inputs[pid]
    return tuple(plan)


class PartialAgreementOracle:
    """Single-step stand-in for a protocol meeting an (n, k, ell) contract.

    Split strategies plan the full assignment up front from the input
    vector; "honest-full-agreement" answers the first proposal to everyone;
    "fixed" replays a caller-supplied compliant assignment.
    """

    __slots__ = ("n", "k", "ell", "validity", "strategy", "inputs", "plan", "proposed")

    def __init__(
        self,
        n: int,
        k: int,
        ell: int = 1,
        validity: str = VALIDITY_STRONG,
        strategy: str = "worst-case-split",
        inputs=None,
        assignment=None,
    ):
        if strategy not in STRATEGIES:
            raise SpecError(f"unknown oracle strategy {strategy!r}")
        if not 1 <= k <= n:
            raise SpecError(f"oracle needs 1 <= k <= n, got k={k}, n={n}")
        self.n = n
        self.k = k
        self.ell = ell
        self.validity = validity
        self.strategy = strategy
        self.inputs = tuple(inputs) if inputs is not None else None
        self.proposed: frozenset = frozenset()
        if strategy == "fixed":
            if assignment is None:
                raise SpecError("fixed strategy needs an assignment")
            plan = tuple(assignment)
            if self.inputs is not None and not agreement_holds(
                plan, n, k, ell, validity, self.inputs
            ):
                raise SpecError("fixed assignment violates the oracle contract")
            self.plan = plan
        elif strategy == "honest-full-agreement":
            self.plan = None
        else:
            if self.inputs is None:
                raise SpecError(f"strategy {strategy!r} needs the input vector")
            if strategy == "worst-case-split":
                self.plan = plan_worst_case_split(n, k, self.inputs)
            else:
                self.plan = plan_plurality_exact_k(n, k, self.inputs)

    @property
    def commutes(self) -> bool:
        # A pre-planned oracle answers each process from a plan fixed at
        # construction, so accesses are order-independent.
        return self.strategy != "honest-full-agreement"

    def propose(self, pid: int, value: int) -> int:
        if pid in self.proposed:
            raise ModelViolationError(f"process {pid} proposed twice to the oracle")
        self.proposed = self.proposed | {pid}
        if self.strategy == "honest-full-agreement":
            if self.plan is None:
                self.plan = tuple([value] * self.n)
            return self.plan[pid]
        if self.inputs is not None and value != self.inputs[pid]:
            raise SpecError(
                f"process {pid} proposed {value} but the oracle was planned for {self.inputs[pid]}"
            )
        return self.plan[pid]

    def assignment(self) -> tuple | None:
        return self.plan

    def clone(self) -> "PartialAgreementOracle":
        new = object.__new__(PartialAgreementOracle)
        new.n = self.n
        new.k = self.k
        new.ell = self.ell
        new.validity = self.validity
        new.strategy = self.strategy
        new.inputs = self.inputs
        new.plan = self.plan
        new.proposed = self.proposed
        return new

    def key(self):
        return ("oracle", self.plan, self.proposed)
