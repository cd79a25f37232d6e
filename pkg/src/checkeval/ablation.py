"""Checklist- and item-level ablation of alignment with human scores."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .core import Condition, ContractError, EvalInstance, PolicyId, TaskKind
from .judge import JudgmentSet, PartialJudgmentError, judge_instance

DEFAULT_THRESHOLDS = {TaskKind.PAIRWISE: 0.3, TaskKind.DIRECT: 1.5}
# deltas are differences of means of ten small integers; anything this
# close to a boundary is float noise
EPS = 1e-9


def mean_score(jset: JudgmentSet) -> float:
    """Mean of replicate values (choice labels 1/2 for pairwise, scores for direct)."""
    if not jset.is_complete:
        raise ContractError(f"{jset.instance_id} [{jset.condition.key}]: incomplete set")
    return sum(jset.values) / len(jset.values)


def delta_all(gold_mean: float, none_mean: float, all_mean: float) -> float:
    """Reduction in distance to gold achieved by the checklist (positive is better)."""
    return abs(gold_mean - none_mean) - abs(gold_mean - all_mean)


def delta_abl(gold_mean: float, all_mean: float, abl_mean: float) -> float:
    """Same formula with the full checklist as reference and one item removed."""
    return delta_all(gold_mean, all_mean, abl_mean)


def _sign_label(value: float, threshold: float) -> str:
    if value >= threshold - EPS:
        return "positive"
    if value <= -threshold + EPS:
        return "negative"
    return "neutral"


@dataclass(frozen=True)
class ChecklistScore:
    instance_id: str
    policy: PolicyId
    gold: float
    none: float
    all: float


@dataclass(frozen=True)
class ChecklistClass:
    instance_id: str
    policy: PolicyId
    delta_all: float
    label: str

    def to_record(self) -> dict:
        return {"instance_id": self.instance_id, "policy": self.policy.value,
                "delta_all": self.delta_all, "label": self.label}


@dataclass(frozen=True)
class ItemClass:
    instance_id: str
    policy: PolicyId
    item_index: int
    delta_abl: Optional[float]
    label: str  # positive / negative / neutral / unresolved
    item_text: str = ""

    def to_record(self) -> dict:
        return {"instance_id": self.instance_id, "policy": self.policy.value,
                "item_index": self.item_index, "delta_abl": self.delta_abl,
                "label": self.label, "item_text": self.item_text}


def classify_item(delta: float) -> str:
    if delta < -EPS:
        return "positive"
    if delta > EPS:
        return "negative"
    return "neutral"


def classify_checklists(scores: Sequence[ChecklistScore], kind: TaskKind,
                        threshold: Optional[float] = None) -> list[ChecklistClass]:
    kind = TaskKind(kind)
    thr = DEFAULT_THRESHOLDS[kind] if threshold is None else threshold
    out = []
    for s in scores:
        d = delta_all(s.gold, s.none, s.all)
        out.append(ChecklistClass(s.instance_id, PolicyId(s.policy), d, _sign_label(d, thr)))
    return out


def ablate_items(instance: EvalInstance, checklist_items: Sequence[str], cls: ChecklistClass,
                 all_mean: float, client, judge: Callable = judge_instance,
                 on_set: Optional[Callable[[JudgmentSet], None]] = None) -> list[ItemClass]:
    """Re-judge with each item left out and classify the items.

    Neutral checklists are skipped without any model calls. A leave-one-out
    run that cannot be completed (parse failures, or a one-item checklist
    that would leave nothing to judge with) yields an ``unresolved`` item.
    """
    if cls.label == "neutral":
        return []
    if cls.instance_id != instance.id:
        raise ContractError(f"class for {cls.instance_id!r} given instance {instance.id!r}")
    gold = instance.gold.mean()
    items = list(checklist_items)
    out = []
    for i, text in enumerate(items):
        remaining = items[:i] + items[i + 1:]
        if not remaining:
            out.append(ItemClass(instance.id, cls.policy, i, None, "unresolved", text))
            continue
        condition = Condition.checklist(cls.policy, ablated_item=i)
        try:
            jset = judge(instance, condition, remaining, client)
        except PartialJudgmentError as exc:
            if on_set is not None:
                on_set(exc.partial)
            out.append(ItemClass(instance.id, cls.policy, i, None, "unresolved", text))
            continue
        if on_set is not None:
            on_set(jset)
        d = delta_abl(gold, all_mean, mean_score(jset))
        out.append(ItemClass(instance.id, cls.policy, i, d, classify_item(d), text))
    return out


@dataclass
class AblationReport:
    checklists: list[ChecklistClass]
    items: list[ItemClass]
    summary: dict = field(default_factory=dict)
    histogram: list[tuple[float, int]] = field(default_factory=list)


def _fraction(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def ablation_report(checklists: Sequence[ChecklistClass], items: Sequence[ItemClass],
                    bin_width: float = 0.1) -> AblationReport:
    """Counts of item labels within positive and negative checklists.

    Fractions with an empty denominator are ``None`` rather than 0.
    """
    labels = {(c.instance_id, c.policy): c.label for c in checklists}
    summary: dict = {
        "checklists": dict(sorted(Counter(c.label for c in checklists).items())),
    }
    for group in ("positive", "negative"):
        members = [it for it in items if labels.get((it.instance_id, it.policy)) == group]
        counts = Counter(it.label for it in members)
        resolved = len(members) - counts["unresolved"]
        summary[f"{group}_checklists"] = {
            "items": len(members),
            "positive_items": counts["positive"],
            "negative_items": counts["negative"],
            "neutral_items": counts["neutral"],
            "unresolved_items": counts["unresolved"],
            "positive_fraction": _fraction(counts["positive"], resolved),
            "negative_fraction": _fraction(counts["negative"], resolved),
        }
    bins = Counter(
        round(round(it.delta_abl / bin_width) * bin_width, 10)
        for it in items if it.delta_abl is not None
    )
    histogram = sorted((b + 0.0, n) for b, n in bins.items())
    return AblationReport(list(checklists), list(items), summary, histogram)
