"""Inconsistency metrics and the selective checklist gate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core import ContractError, EvalInstance, TaskKind
from .judge import N_REPLICATES, JudgmentSet

PAIRWISE_GRID = (1, 2, 3, 4, 5)
DIRECT_GRID = (0.3, 0.35, 0.4, 0.45, 0.5, 0.6, 0.7)
# float std devs such as sqrt(0.16) must still meet k=0.4
TOLERANCE = 1e-9


def default_grid(kind: TaskKind) -> tuple:
    return PAIRWISE_GRID if TaskKind(kind) is TaskKind.PAIRWISE else DIRECT_GRID


@dataclass(frozen=True)
class GatePolicy:
    mode: str
    k: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("none", "all", "selective"):
            raise ContractError(f"unknown gate mode {self.mode!r}")
        if self.mode == "selective" and self.k is None:
            raise ContractError("selective gate needs a threshold k")

    def check_grid(self, kind: TaskKind, grid: Optional[Sequence[float]] = None) -> None:
        if self.mode != "selective":
            return
        grid = default_grid(kind) if grid is None else grid
        if not any(math.isclose(self.k, g) for g in grid):
            raise ContractError(f"k={self.k} not in the {TaskKind(kind).value} grid {tuple(grid)}")

    @property
    def label(self) -> str:
        return self.mode if self.mode != "selective" else f"selective(k={self.k:g})"


@dataclass(frozen=True)
class GateDecision:
    instance_id: str
    inconsistency: float
    applied: bool

    def to_record(self) -> dict:
        return {"instance_id": self.instance_id, "inconsistency": self.inconsistency,
                "applied": self.applied}


def _check_full(jset: JudgmentSet, kind: TaskKind) -> None:
    if jset.kind is not kind:
        raise ContractError(f"{jset.instance_id}: expected a {kind.value} set, got {jset.kind.value}")
    if kind is TaskKind.PAIRWISE and len(jset.replicates) != N_REPLICATES:
        raise ContractError(f"{jset.instance_id}: pairwise inconsistency needs {N_REPLICATES} votes")


def minority_votes(choices: Iterable[int]) -> int:
    choices = list(choices)
    return min(choices.count(1), choices.count(2))


def population_std(values: Iterable[int]) -> float:
    values = list(values)
    if not values:
        raise ContractError("standard deviation of no values")
    mean = Fraction(sum(values), len(values))
    var = sum((Fraction(v) - mean) ** 2 for v in values) / len(values)
    return math.sqrt(var)


def inconsistency_pairwise(jset: JudgmentSet) -> int:
    """Votes received by the less-preferred output."""
    _check_full(jset, TaskKind.PAIRWISE)
    return minority_votes(jset.values)


def inconsistency_direct(jset: JudgmentSet) -> float:
    """Population standard deviation of the replicate scores."""
    _check_full(jset, TaskKind.DIRECT)
    return population_std(jset.values)


def inconsistency(jset: JudgmentSet) -> float:
    if jset.kind is TaskKind.PAIRWISE:
        return inconsistency_pairwise(jset)
    return inconsistency_direct(jset)


def decide(policy: GatePolicy, instance_id: str, value: float) -> GateDecision:
    if policy.mode == "none":
        applied = False
    elif policy.mode == "all":
        applied = True
    else:
        applied = value >= policy.k - TOLERANCE
    return GateDecision(instance_id, value, applied)


def gate(instance: EvalInstance, policy: GatePolicy, no_checklist_set: JudgmentSet,
         with_checklist_set: JudgmentSet) -> tuple[GateDecision, JudgmentSet]:
    """Pick the judgment set that counts for this instance."""
    for s in (no_checklist_set, with_checklist_set):
        if s.instance_id != instance.id:
            raise ContractError(f"set for {s.instance_id!r} passed with instance {instance.id!r}")
    if no_checklist_set.condition.uses_checklist:
        raise ContractError("no_checklist_set was judged with a checklist")
    policy.check_grid(instance.kind)
    decision = decide(policy, instance.id, inconsistency(no_checklist_set))
    return decision, (with_checklist_set if decision.applied else no_checklist_set)


def application_rate(decisions: Sequence[GateDecision]) -> float:
    if not decisions:
        raise ContractError("application rate of no decisions")
    return sum(d.applied for d in decisions) / len(decisions)
