"""Ten-replicate judging protocol with order alternation and checklist answers."""

from __future__ import annotations

import hashlib
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .client import ChatRequest, LLMClient
from .core import (
    Condition,
    ContractError,
    DirectVerdict,
    EvalInstance,
    ItemVerdict,
    PairwiseVerdict,
    TaskKind,
    Verdict,
)
from . import templates

logger = logging.getLogger(__name__)

N_REPLICATES = 10
MAX_REPLICATE_ATTEMPTS = 3
ORDER_ORIGINAL = "1-2"
ORDER_SWAPPED = "2-1"

_WINNER = re.compile(r"Winner\s*:\s*\**\s*\(?\s*(-?\d+)\s*\)?", re.IGNORECASE)
_SCORE = re.compile(r"Score\s*:\s*\**\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_ITEM_ANSWER = re.compile(r"(?:^|(?<=\s))(\d{1,3})\s*:\s*\**([A-Za-z][A-Za-z/\-]*)")
_BLOCK_HEADER = re.compile(r"Checklist for Output\s*\(?\s*([12])\s*\)?\s*:", re.IGNORECASE)
_DIRECT_HEADER = re.compile(r"Checklist\s*:", re.IGNORECASE)
_TOKENS = {
    "yes": ItemVerdict.YES,
    "no": ItemVerdict.NO,
    "n/a": ItemVerdict.NOT_APPLICABLE,
    "na": ItemVerdict.NOT_APPLICABLE,
    "n-a": ItemVerdict.NOT_APPLICABLE,
}


class VerdictParseError(ValueError):
    def __init__(self, message: str, raw: str):
        excerpt = raw.strip().replace("\n", " ")[-160:]
        super().__init__(f"{message} (raw: ...{excerpt!r})")
        self.raw = raw


@dataclass(frozen=True)
class JudgmentReplicate:
    instance_id: str
    condition: Condition
    replicate_index: int
    final: Verdict
    raw: str
    presentation_order: Optional[str] = None
    # one tuple per original output (two for pairwise), aligned to checklist items
    item_verdicts: Optional[tuple[tuple[ItemVerdict, ...], ...]] = None
    attempts: int = 1

    @property
    def value(self) -> int:
        f = self.final
        return f.choice if isinstance(f, PairwiseVerdict) else f.score

    def to_record(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "condition": self.condition.key,
            "replicate_index": self.replicate_index,
            "order": self.presentation_order,
            "final": self.value,
            "item_verdicts": (
                None if self.item_verdicts is None
                else [[v.value for v in block] for block in self.item_verdicts]
            ),
            "attempts": self.attempts,
            "raw_sha256": hashlib.sha256(self.raw.encode("utf-8")).hexdigest(),
            "raw": self.raw,
        }

    @classmethod
    def from_record(cls, rec: dict, kind: TaskKind) -> "JudgmentReplicate":
        final = PairwiseVerdict(rec["final"]) if kind is TaskKind.PAIRWISE else DirectVerdict(rec["final"])
        iv = rec.get("item_verdicts")
        return cls(
            instance_id=rec["instance_id"],
            condition=Condition.from_key(rec["condition"]),
            replicate_index=rec["replicate_index"],
            final=final,
            raw=rec.get("raw", ""),
            presentation_order=rec.get("order"),
            item_verdicts=None if iv is None else tuple(tuple(ItemVerdict(v) for v in b) for b in iv),
            attempts=rec.get("attempts", 1),
        )


@dataclass(frozen=True)
class JudgmentSet:
    instance_id: str
    kind: TaskKind
    condition: Condition
    replicates: tuple[JudgmentReplicate, ...]
    failed_indices: tuple[int, ...] = ()

    def __post_init__(self):
        if self.is_complete:
            if len(self.replicates) != N_REPLICATES:
                raise ContractError(f"complete set must have {N_REPLICATES} replicates")
            if self.kind is TaskKind.PAIRWISE:
                counts = self.order_counts()
                if counts != {ORDER_ORIGINAL: N_REPLICATES // 2, ORDER_SWAPPED: N_REPLICATES // 2}:
                    raise ContractError(f"order imbalance in {self.instance_id}: {counts}")

    @property
    def is_complete(self) -> bool:
        return not self.failed_indices and len(self.replicates) == N_REPLICATES

    @property
    def values(self) -> list[int]:
        return [r.value for r in self.replicates]

    def order_counts(self) -> dict[str, int]:
        counts = {ORDER_ORIGINAL: 0, ORDER_SWAPPED: 0}
        for r in self.replicates:
            counts[r.presentation_order] = counts.get(r.presentation_order, 0) + 1
        return counts


class PartialJudgmentError(RuntimeError):
    def __init__(self, partial: JudgmentSet, errors: dict[int, str]):
        super().__init__(
            f"{partial.instance_id} [{partial.condition.key}]: replicates "
            f"{list(partial.failed_indices)} failed after {MAX_REPLICATE_ATTEMPTS} attempts"
        )
        self.partial = partial
        self.errors = errors


def presentation_order(replicate_index: int) -> str:
    return ORDER_ORIGINAL if replicate_index % 2 == 0 else ORDER_SWAPPED


def unflip(position: int, order: Optional[str]) -> int:
    """Map a displayed position (1 or 2) back to the original output label."""
    return position if order in (None, ORDER_ORIGINAL) else 3 - position


def parse_final_verdict(raw: str, kind: TaskKind,
                        order: Optional[str] = None) -> Verdict:
    kind = TaskKind(kind)
    if kind is TaskKind.PAIRWISE:
        found = _WINNER.findall(raw)
        if not found:
            raise VerdictParseError("no 'Winner:' marker", raw)
        shown = int(found[-1])
        if shown not in (1, 2):
            raise VerdictParseError(f"winner {shown} is not 1 or 2", raw)
        return PairwiseVerdict(unflip(shown, order))
    found = _SCORE.findall(raw)
    if not found:
        raise VerdictParseError("no 'Score:' marker", raw)
    text = found[-1]
    if "." in text:
        raise VerdictParseError(f"score {text} is not an integer", raw)
    score = int(text)
    if not 1 <= score <= 5:
        raise VerdictParseError(f"score {score} outside 1-5", raw)
    return DirectVerdict(score)


def parse_item_verdicts(raw: str, n_items: int) -> list[ItemVerdict]:
    if n_items < 1:
        raise ContractError("n_items must be >= 1")
    answers = _ITEM_ANSWER.findall(raw)
    verdicts = []
    for number, token in answers:
        key = token.lower().rstrip(".,;")
        if key not in _TOKENS:
            raise VerdictParseError(f"unknown item answer {token!r} for item {number}", raw)
        verdicts.append((int(number), _TOKENS[key]))
    if [n for n, _ in verdicts] != list(range(1, n_items + 1)):
        raise VerdictParseError(
            f"expected answers for items 1..{n_items}, got {[n for n, _ in verdicts]}", raw
        )
    return [v for _, v in verdicts]


def _final_marker_start(raw: str, kind: TaskKind) -> int:
    pattern = _WINNER if kind is TaskKind.PAIRWISE else _SCORE
    last = None
    for last in pattern.finditer(raw):
        pass
    return last.start() if last else len(raw)


def parse_checklist_answers(raw: str, n_items: int, kind: TaskKind,
                            order: Optional[str] = None) -> tuple[tuple[ItemVerdict, ...], ...]:
    """Item answer blocks, returned per original output."""
    end = _final_marker_start(raw, kind)
    body = raw[:end]
    if kind is TaskKind.DIRECT:
        headers = list(_DIRECT_HEADER.finditer(body))
        if headers:
            body = body[headers[-1].end():]
        return (tuple(parse_item_verdicts(body, n_items)),)
    headers = list(_BLOCK_HEADER.finditer(body))
    if [h.group(1) for h in headers] != ["1", "2"]:
        raise VerdictParseError("expected answer blocks for Output (1) and Output (2)", raw)
    first = body[headers[0].end():headers[1].start()]
    second = body[headers[1].end():]
    blocks = (tuple(parse_item_verdicts(first, n_items)), tuple(parse_item_verdicts(second, n_items)))
    if order == ORDER_SWAPPED:
        blocks = (blocks[1], blocks[0])
    return blocks


def build_prompt(instance: EvalInstance, items: Optional[Sequence[str]], order: Optional[str]) -> str:
    if instance.kind is TaskKind.PAIRWISE:
        first, second = instance.outputs
        if order == ORDER_SWAPPED:
            first, second = second, first
        if items is None:
            return templates.render("judge_pairwise_plain", input=instance.input_text,
                                    first=first, second=second)
        return templates.render("judge_pairwise_checklist", input=instance.input_text,
                                first=first, second=second,
                                checklist_items=templates.numbered(items))
    if items is None:
        return templates.render("judge_direct_plain", input=instance.input_text,
                                response=instance.outputs[0])
    return templates.render("judge_direct_checklist", input=instance.input_text,
                            response=instance.outputs[0],
                            checklist_items=templates.numbered(items))


def _run_replicate(instance: EvalInstance, condition: Condition, items: Optional[list[str]],
                   client: LLMClient, r: int) -> Union[JudgmentReplicate, str]:
    order = presentation_order(r) if instance.kind is TaskKind.PAIRWISE else None
    prompt = build_prompt(instance, items, order)
    error = ""
    for attempt in range(MAX_REPLICATE_ATTEMPTS):
        req = ChatRequest.user(prompt, client.endpoint.temperature, r + N_REPLICATES * attempt)
        raw = client.complete(req)
        try:
            blocks = None
            if items is not None:
                blocks = parse_checklist_answers(raw, len(items), instance.kind, order)
            final = parse_final_verdict(raw, instance.kind, order)
        except VerdictParseError as exc:
            error = str(exc)
            logger.info("%s [%s] replicate %d attempt %d: %s",
                        instance.id, condition.key, r, attempt + 1, exc)
            continue
        return JudgmentReplicate(instance.id, condition, r, final, raw, order, blocks, attempt + 1)
    return error


def judge_instance(instance: EvalInstance, condition: Condition,
                   checklist_items: Optional[Sequence[str]], client: LLMClient,
                   n_replicates: int = N_REPLICATES) -> JudgmentSet:
    """Collect ``n_replicates`` verdicts for one instance under one condition.

    Pairwise replicates alternate presentation order, so even indices show
    output 1 first and odd indices show output 2 first. Raises
    ``PartialJudgmentError`` (carrying the partial set) when any replicate
    exhausts its parse retries.
    """
    if condition.uses_checklist and not checklist_items:
        raise ContractError(f"{condition.key} needs checklist items")
    if not condition.uses_checklist and checklist_items is not None:
        raise ContractError("no_checklist condition given checklist items")
    if hasattr(checklist_items, "texts"):
        checklist_items = checklist_items.texts
    items = list(checklist_items) if checklist_items is not None else None

    workers = max(1, min(n_replicates, client.endpoint.max_concurrency))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(
            lambda r: _run_replicate(instance, condition, items, client, r), range(n_replicates)
        ))
    reps = tuple(r for r in results if isinstance(r, JudgmentReplicate))
    errors = {i: r for i, r in enumerate(results) if isinstance(r, str)}
    jset = JudgmentSet(instance.id, instance.kind, condition, reps, tuple(sorted(errors)))
    if errors:
        raise PartialJudgmentError(jset, errors)
    return jset
