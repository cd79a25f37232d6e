"""Loading normalized JSONL datasets and filtering to count-consistent checklists."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .core import EvalInstance, GoldLabel, TaskKind, ValidationError

PAIRWISE_FIELDS = ("id", "input", "output_1", "output_2", "gold_winner", "subset")
DIRECT_FIELDS = ("id", "input", "output", "annotations", "subset")


class DatasetError(ValidationError):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    kind: TaskKind
    path: Path
    subset_filter: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TaskKind(self.kind))
        object.__setattr__(self, "path", Path(self.path))
        if self.subset_filter is not None:
            object.__setattr__(self, "subset_filter", tuple(self.subset_filter))


def _record_to_instance(rec: dict, kind: TaskKind, lineno: int) -> EvalInstance:
    required = PAIRWISE_FIELDS if kind is TaskKind.PAIRWISE else DIRECT_FIELDS
    missing = [f for f in required if f not in rec]
    if missing:
        raise DatasetError(f"line {lineno}: record missing fields {missing}")
    rid = str(rec["id"])
    try:
        if kind is TaskKind.PAIRWISE:
            winner = rec["gold_winner"]
            if isinstance(winner, bool) or winner not in (1, 2):
                raise DatasetError(f"line {lineno}: record {rid!r} field gold_winner must be 1 or 2")
            return EvalInstance(
                id=rid,
                kind=kind,
                input_text=rec["input"],
                outputs=(rec["output_1"], rec["output_2"]),
                gold=GoldLabel.pairwise(winner),
                subset=rec["subset"],
            )
        return EvalInstance(
            id=rid,
            kind=kind,
            input_text=rec["input"],
            outputs=(rec["output"],),
            gold=GoldLabel.direct(rec["annotations"], rid),
            subset=rec["subset"],
        )
    except DatasetError:
        raise
    except ValidationError as exc:
        raise DatasetError(f"line {lineno}: {exc}") from exc


def load_dataset(manifest: DatasetManifest) -> list[EvalInstance]:
    """Read a dataset file, validating every record.

    Records are returned in file order. Blank lines are ignored.
    """
    path = manifest.path
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    instances: list[EvalInstance] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: malformed record ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise DatasetError(f"line {lineno}: record is not an object")
            inst = _record_to_instance(rec, manifest.kind, lineno)
            if inst.id in seen:
                raise DatasetError(f"line {lineno}: duplicate id {inst.id!r}")
            seen.add(inst.id)
            instances.append(inst)

    if manifest.subset_filter is not None:
        present = {i.subset for i in instances}
        unknown = sorted(set(manifest.subset_filter) - present)
        if unknown:
            raise DatasetError(f"subset_filter names tags absent from {path}: {unknown}")
        wanted = set(manifest.subset_filter)
        instances = [i for i in instances if i.subset in wanted]
    return instances


def instance_to_record(inst: EvalInstance, generator_model: str = "") -> dict:
    if inst.kind is TaskKind.PAIRWISE:
        return {
            "id": inst.id,
            "input": inst.input_text,
            "output_1": inst.outputs[0],
            "output_2": inst.outputs[1],
            "gold_winner": inst.gold.pairwise_winner,
            "subset": inst.subset,
        }
    return {
        "id": inst.id,
        "input": inst.input_text,
        "output": inst.outputs[0],
        "annotations": list(inst.gold.direct_annotations),
        "subset": inst.subset,
        "generator_model": generator_model,
    }


@dataclass
class RetentionReport:
    total: int
    kept: int
    dropped_ids: list[str] = field(default_factory=list)
    kept_ids: list[str] = field(default_factory=list)
    # policy -> {"consistent": n, "inconsistent": n, "missing": n}
    per_policy: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def retention(self) -> Optional[float]:
        return self.kept / self.total if self.total else None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "retention": self.retention,
            "kept_ids": list(self.kept_ids),
            "dropped_ids": list(self.dropped_ids),
            "per_policy": {p: dict(c) for p, c in sorted(self.per_policy.items())},
        }


def filter_count_consistent(
    instances: Sequence[EvalInstance],
    checklists: Mapping[str, Sequence],
    required_policies: Optional[Sequence] = None,
) -> tuple[list[EvalInstance], RetentionReport]:
    """Keep instances whose checklists have stable item counts.

    An instance survives when it has at least one checklist and, within
    each policy, every generated checklist has the same number of items.
    Counts are compared per policy because the scaled policies differ
    from the baseline count by construction. With ``required_policies``
    an instance lacking any of those policies is dropped as well.
    """
    required = [getattr(p, "value", p) for p in (required_policies or ())]
    kept: list[EvalInstance] = []
    dropped: list[str] = []
    per_policy: dict[str, dict[str, int]] = defaultdict(
        lambda: {"consistent": 0, "inconsistent": 0}
    )
    for inst in instances:
        lists = checklists.get(inst.id) or []
        if not lists:
            dropped.append(inst.id)
            continue
        counts: dict[str, set[int]] = defaultdict(set)
        for cl in lists:
            counts[cl.policy.value].add(len(cl.items))
        ok = True
        for policy in required:
            if policy not in counts:
                per_policy[policy]["missing"] = per_policy[policy].get("missing", 0) + 1
                ok = False
        for policy, sizes in counts.items():
            if len(sizes) == 1:
                per_policy[policy]["consistent"] += 1
            else:
                per_policy[policy]["inconsistent"] += 1
                ok = False
        if ok:
            kept.append(inst)
        else:
            dropped.append(inst.id)
    report = RetentionReport(
        total=len(instances), kept=len(kept), dropped_ids=dropped,
        kept_ids=[i.id for i in kept], per_policy=dict(per_policy)
    )
    return kept, report
