"""Shared domain types and label algebra."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union


class ValidationError(ValueError):
    """Raised when input data violates a domain invariant."""


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


class TaskKind(str, enum.Enum):
    PAIRWISE = "pairwise"
    DIRECT = "direct"


class PolicyId(str, enum.Enum):
    BASELINE = "baseline"
    SPECIFY = "specify"
    LENGTH_HALF = "length_half"
    LENGTH_X1_5 = "length_x1_5"
    SELF_REFINE = "self_refine"
    TICKING = "ticking"


class ItemVerdict(str, enum.Enum):
    YES = "yes"
    NO = "no"
    NOT_APPLICABLE = "n/a"


def round_half_away(value: Union[Fraction, float, int]) -> int:
    """Round to the nearest integer, halves away from zero.

    Pass a ``Fraction`` when the value is a mean of integers so that
    exact halves are detected without float error.
    """
    if isinstance(value, Fraction):
        magnitude = abs(value)
        rounded = math.floor(magnitude + Fraction(1, 2))
    else:
        magnitude = abs(value)
        rounded = math.floor(magnitude + 0.5)
    return int(rounded) if value >= 0 else -int(rounded)


def exact_mean(values: Iterable[int]) -> Fraction:
    values = list(values)
    if not values:
        raise ContractError("mean of an empty sequence")
    return Fraction(sum(values), len(values))


def derive_direct_gold(annotations: Iterable[int], instance_id: str = "?") -> int:
    """Gold Likert label from three annotator scores (rounded mean)."""
    annotations = list(annotations)
    if len(annotations) != 3:
        raise ValidationError(
            f"instance {instance_id!r}: expected 3 annotations, got {len(annotations)}"
        )
    for a in annotations:
        if isinstance(a, bool) or not isinstance(a, int) or not 1 <= a <= 5:
            raise ValidationError(
                f"instance {instance_id!r}: annotation {a!r} outside integer range [1, 5]"
            )
    return round_half_away(exact_mean(annotations))


@dataclass(frozen=True)
class GoldLabel:
    pairwise_winner: Optional[int] = None
    direct_annotations: Optional[tuple[int, ...]] = None
    direct_gold: Optional[int] = None

    @classmethod
    def pairwise(cls, winner: int) -> "GoldLabel":
        return cls(pairwise_winner=winner)

    @classmethod
    def direct(cls, annotations: Iterable[int], instance_id: str = "?") -> "GoldLabel":
        annotations = tuple(annotations)
        return cls(
            direct_annotations=annotations,
            direct_gold=derive_direct_gold(annotations, instance_id),
        )

    @property
    def kind(self) -> TaskKind:
        return TaskKind.PAIRWISE if self.pairwise_winner is not None else TaskKind.DIRECT

    def mean(self) -> float:
        """Mean human score: the winner label for pairwise, mean annotation for direct."""
        if self.pairwise_winner is not None:
            return float(self.pairwise_winner)
        return float(exact_mean(self.direct_annotations))


@dataclass(frozen=True)
class EvalInstance:
    id: str
    kind: TaskKind
    input_text: str
    outputs: tuple[str, ...]
    gold: GoldLabel
    subset: str = ""

    def __post_init__(self):
        expected = 2 if self.kind is TaskKind.PAIRWISE else 1
        if len(self.outputs) != expected:
            raise ValidationError(
                f"instance {self.id!r}: {self.kind.value} needs {expected} outputs, "
                f"got {len(self.outputs)}"
            )
        g = self.gold
        if self.kind is TaskKind.PAIRWISE:
            if g.pairwise_winner not in (1, 2):
                raise ValidationError(
                    f"instance {self.id!r}: gold_winner must be 1 or 2, got {g.pairwise_winner!r}"
                )
            if g.direct_annotations is not None or g.direct_gold is not None:
                raise ValidationError(f"instance {self.id!r}: pairwise gold carries direct fields")
        else:
            if g.pairwise_winner is not None:
                raise ValidationError(f"instance {self.id!r}: direct gold carries a winner")
            if g.direct_annotations is None:
                raise ValidationError(f"instance {self.id!r}: missing annotations")
            if g.direct_gold != derive_direct_gold(g.direct_annotations, self.id):
                raise ValidationError(f"instance {self.id!r}: direct_gold disagrees with annotations")


@dataclass(frozen=True)
class PairwiseVerdict:
    choice: int

    def __post_init__(self):
        if self.choice not in (1, 2):
            raise ValidationError(f"pairwise choice must be 1 or 2, got {self.choice!r}")


@dataclass(frozen=True)
class DirectVerdict:
    score: int

    def __post_init__(self):
        if isinstance(self.score, bool) or not isinstance(self.score, int) or not 1 <= self.score <= 5:
            raise ValidationError(f"direct score must be an integer in [1, 5], got {self.score!r}")


Verdict = Union[PairwiseVerdict, DirectVerdict]


@dataclass(frozen=True)
class Condition:
    """Judging condition: plain chain-of-thought, or with a checklist.

    ``ablated_item`` marks leave-one-out runs where one checklist item
    (by original index) was removed.
    """

    mode: str = "no_checklist"
    policy: Optional[PolicyId] = None
    ablated_item: Optional[int] = field(default=None)

    def __post_init__(self):
        if self.mode not in ("no_checklist", "with_checklist"):
            raise ValidationError(f"unknown condition mode {self.mode!r}")
        if self.mode == "with_checklist" and self.policy is None:
            raise ValidationError("with_checklist condition needs a policy")
        if self.mode == "no_checklist" and (self.policy is not None or self.ablated_item is not None):
            raise ValidationError("no_checklist condition cannot carry a policy")

    @classmethod
    def none(cls) -> "Condition":
        return cls()

    @classmethod
    def checklist(cls, policy: Union[PolicyId, str], ablated_item: Optional[int] = None) -> "Condition":
        return cls("with_checklist", PolicyId(policy), ablated_item)

    @property
    def uses_checklist(self) -> bool:
        return self.mode == "with_checklist"

    @property
    def key(self) -> str:
        if not self.uses_checklist:
            return "none"
        if self.ablated_item is None:
            return f"checklist:{self.policy.value}"
        return f"checklist:{self.policy.value}:drop{self.ablated_item}"

    @classmethod
    def from_key(cls, key: str) -> "Condition":
        if key == "none":
            return cls.none()
        parts = key.split(":")
        if parts[0] != "checklist" or len(parts) not in (2, 3):
            raise ValidationError(f"bad condition key {key!r}")
        dropped = int(parts[2][4:]) if len(parts) == 3 else None
        return cls.checklist(parts[1], dropped)
