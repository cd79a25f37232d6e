"""Checklist generation under the six prompting policies."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .client import ChatRequest, LLMClient
from .core import ContractError, EvalInstance, PolicyId, round_half_away
from . import templates

logger = logging.getLogger(__name__)

MAX_GENERATION_ATTEMPTS = 3
TICKING_BOUNDS = (2, 8)
SCALE_FACTORS = {
    PolicyId.LENGTH_HALF: Fraction(1, 2),
    PolicyId.LENGTH_X1_5: Fraction(3, 2),
}

_INLINE_SPLIT = re.compile(r"\?\s+(?=(?:\(?\d{1,2}[.)]|[-*•])\s)")
_ITEM_LINE = re.compile(r"^\s*(?:\(?\d{1,2}[.)]|[-*•□]|\[ ?\])\s+(?P<text>.*\S)\s*$")
_RATING = re.compile(r"Rating:\s*\**\s*(-?\d+)", re.IGNORECASE)
_FEEDBACK = re.compile(r"Feedback:\s*(?P<text>.+)", re.IGNORECASE | re.DOTALL)


class ChecklistParseError(ValueError):
    def __init__(self, message: str, raw: str):
        excerpt = raw.strip().replace("\n", " ")[:160]
        super().__init__(f"{message} (raw: {excerpt!r})")
        self.raw = raw


class GenerationFailure(RuntimeError):
    def __init__(self, instance_id: str, policy: PolicyId, raw_outputs: list[str],
                 errors: list[str]):
        super().__init__(
            f"{policy.value} checklist for {instance_id!r} failed after "
            f"{len(errors)} attempts: {errors[-1] if errors else 'no output'}"
        )
        self.instance_id = instance_id
        self.policy = policy
        self.raw_outputs = raw_outputs
        self.errors = errors


@dataclass(frozen=True)
class ChecklistItem:
    text: str
    index: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("empty checklist item")
        if not self.text.rstrip().endswith("?"):
            raise ValueError(f"checklist item is not a question: {self.text!r}")


@dataclass(frozen=True)
class Checklist:
    instance_id: str
    policy: PolicyId
    items: tuple[ChecklistItem, ...]
    generation_attempt: int = 1
    refine_feedback: Optional[str] = None
    refine_rating: Optional[int] = None
    sample_index: int = 0
    template_hash: str = ""
    raw_outputs: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.items:
            raise ValueError("a checklist needs at least one item")
        if not 1 <= self.generation_attempt <= MAX_GENERATION_ATTEMPTS:
            raise ValueError(f"generation_attempt out of range: {self.generation_attempt}")
        if self.policy is PolicyId.TICKING:
            lo, hi = TICKING_BOUNDS
            if not lo <= len(self.items) <= hi:
                raise ValueError(f"ticking checklist has {len(self.items)} items")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def texts(self) -> list[str]:
        return [item.text for item in self.items]

    def without(self, index: int) -> list[str]:
        """Item texts with one item removed (used for leave-one-out judging)."""
        if not 0 <= index < len(self.items):
            raise IndexError(index)
        return [t for i, t in enumerate(self.texts) if i != index]

    def to_record(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "policy": self.policy.value,
            "sample_index": self.sample_index,
            "items": self.texts,
            "generation_attempt": self.generation_attempt,
            "refine_rating": self.refine_rating,
            "refine_feedback": self.refine_feedback,
            "template_hash": self.template_hash,
            "raw_outputs": list(self.raw_outputs),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Checklist":
        return cls(
            instance_id=rec["instance_id"],
            policy=PolicyId(rec["policy"]),
            items=tuple(ChecklistItem(t, i) for i, t in enumerate(rec["items"])),
            generation_attempt=rec["generation_attempt"],
            refine_feedback=rec.get("refine_feedback"),
            refine_rating=rec.get("refine_rating"),
            sample_index=rec.get("sample_index", 0),
            template_hash=rec.get("template_hash", ""),
            raw_outputs=tuple(rec.get("raw_outputs", ())),
        )


def _clean(text: str) -> str:
    text = text.strip().strip("*_`").strip()
    return text.strip("\"'“”").strip()


def parse_checklist(raw: str, policy: PolicyId,
                    expected_count: Optional[int] = None) -> list[ChecklistItem]:
    """Extract numbered or bulleted questions from model output."""
    policy = PolicyId(policy)
    text = _INLINE_SPLIT.sub("?\n", raw)
    questions = []
    for line in text.splitlines():
        m = _ITEM_LINE.match(line)
        if not m:
            continue
        q = _clean(m.group("text"))
        if not q.endswith("?"):
            raise ChecklistParseError(f"item {len(questions) + 1} is not a question", raw)
        questions.append(q)
    if not questions:
        raise ChecklistParseError("no checklist items found", raw)
    if policy is PolicyId.TICKING:
        lo, hi = TICKING_BOUNDS
        if not lo <= len(questions) <= hi:
            raise ChecklistParseError(
                f"ticking checklist needs {lo}-{hi} items, got {len(questions)}", raw
            )
    if expected_count is not None and len(questions) != expected_count:
        raise ChecklistParseError(
            f"expected exactly {expected_count} items, got {len(questions)}", raw
        )
    return [ChecklistItem(q, i) for i, q in enumerate(questions)]


def parse_critique(raw: str) -> tuple[int, str]:
    m = _RATING.search(raw)
    if not m:
        raise ChecklistParseError("critique has no rating", raw)
    rating = int(m.group(1))
    if not 1 <= rating <= 5:
        raise ChecklistParseError(f"critique rating {rating} outside 1-5", raw)
    fb = _FEEDBACK.search(raw)
    if not fb or not fb.group("text").strip():
        raise ChecklistParseError("critique has no feedback", raw)
    return rating, fb.group("text").strip()


def scaled_target(baseline_count: int, factor) -> int:
    return max(1, round_half_away(Fraction(factor) * baseline_count))


def _replicate(sample_index: int, attempt: int) -> int:
    return sample_index * MAX_GENERATION_ATTEMPTS + attempt - 1


def _ask(client: LLMClient, prompt: str, replicate_index: int) -> str:
    req = ChatRequest.user(prompt, client.endpoint.temperature, replicate_index)
    return client.complete(req)


_SIMPLE_TEMPLATES = {
    PolicyId.BASELINE: "gen_baseline",
    PolicyId.SPECIFY: "gen_specify",
    PolicyId.TICKING: "gen_ticking",
}


def generate(instance: EvalInstance, policy: PolicyId, client: LLMClient,
             sample_index: int = 0) -> Checklist:
    """Generate one checklist, regenerating on malformed output.

    Self-refine generates its own baseline first. The scaled-length
    policies need an existing baseline and go through ``generate_scaled``.
    """
    policy = PolicyId(policy)
    if policy in SCALE_FACTORS:
        raise ContractError(f"{policy.value} needs a baseline checklist; use generate_scaled")
    if policy is PolicyId.SELF_REFINE:
        base = generate(instance, PolicyId.BASELINE, client, sample_index)
        return self_refine(instance, base, client, sample_index)

    name = _SIMPLE_TEMPLATES[policy]
    prompt = templates.render(name, input=instance.input_text)
    raws: list[str] = []
    errors: list[str] = []
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        raw = _ask(client, prompt, _replicate(sample_index, attempt))
        raws.append(raw)
        try:
            items = parse_checklist(raw, policy)
        except ChecklistParseError as exc:
            logger.info("%s/%s attempt %d: %s", instance.id, policy.value, attempt, exc)
            errors.append(str(exc))
            continue
        return Checklist(instance.id, policy, tuple(items), attempt,
                         sample_index=sample_index, template_hash=templates.template_hash(name),
                         raw_outputs=tuple(raws))
    raise GenerationFailure(instance.id, policy, raws, errors)


def generate_scaled(instance: EvalInstance, baseline: Checklist, factor,
                    client: LLMClient, sample_index: int = 0) -> Checklist:
    if baseline.policy is not PolicyId.BASELINE:
        raise ContractError("generate_scaled needs a baseline checklist")
    factor = Fraction(str(factor))
    policy = next((p for p, f in SCALE_FACTORS.items() if f == factor), None)
    if policy is None:
        raise ContractError(f"unsupported length factor {factor}")
    target = scaled_target(len(baseline), factor)
    prompt = templates.render(
        "gen_length",
        input=instance.input_text,
        baseline_count=len(baseline),
        baseline_items=templates.numbered(baseline.texts),
        target_count=target,
    )
    raws: list[str] = []
    errors: list[str] = []
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        raw = _ask(client, prompt, _replicate(sample_index, attempt))
        raws.append(raw)
        try:
            items = parse_checklist(raw, policy, expected_count=target)
        except ChecklistParseError as exc:
            errors.append(str(exc))
            continue
        return Checklist(instance.id, policy, tuple(items), attempt, sample_index=sample_index,
                         template_hash=templates.template_hash("gen_length"),
                         raw_outputs=tuple(raws))
    raise GenerationFailure(instance.id, policy, raws, errors)


def self_refine(instance: EvalInstance, baseline: Checklist, client: LLMClient,
                sample_index: int = 0) -> Checklist:
    """One critique-then-regenerate round on top of a baseline checklist.

    Each attempt issues the critique and the regeneration call; a parse
    failure in either one consumes the attempt.
    """
    if baseline.policy is not PolicyId.BASELINE:
        raise ContractError("self_refine needs a baseline checklist")
    current = templates.numbered(baseline.texts)
    critique_prompt = templates.render("refine_critique", input=instance.input_text,
                                       checklist_items=current)
    tag = templates.template_hash("refine_critique")[:8] + templates.template_hash("refine_regenerate")[:8]
    raws: list[str] = []
    errors: list[str] = []
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        rep = _replicate(sample_index, attempt)
        raw = _ask(client, critique_prompt, rep)
        raws.append(raw)
        try:
            rating, feedback = parse_critique(raw)
        except ChecklistParseError as exc:
            errors.append(str(exc))
            continue
        prompt = templates.render("refine_regenerate", input=instance.input_text,
                                  checklist_items=current, rating=rating, feedback=feedback)
        raw = _ask(client, prompt, rep)
        raws.append(raw)
        try:
            items = parse_checklist(raw, PolicyId.SELF_REFINE)
        except ChecklistParseError as exc:
            errors.append(str(exc))
            continue
        return Checklist(instance.id, PolicyId.SELF_REFINE, tuple(items), attempt,
                         refine_feedback=feedback, refine_rating=rating,
                         sample_index=sample_index, template_hash=tag,
                         raw_outputs=tuple(raws))
    raise GenerationFailure(instance.id, PolicyId.SELF_REFINE, raws, errors)


def generate_policies(instance: EvalInstance, policies, client: LLMClient,
                      sample_index: int = 0) -> tuple[dict[PolicyId, Checklist], list[GenerationFailure]]:
    """Run every requested policy for one instance.

    The baseline is generated once and reused by the scaled and refined
    policies, even when it was not itself requested.
    """
    policies = [PolicyId(p) for p in policies]
    out: dict[PolicyId, Checklist] = {}
    failures: list[GenerationFailure] = []
    needs_base = any(p in SCALE_FACTORS or p in (PolicyId.BASELINE, PolicyId.SELF_REFINE)
                     for p in policies)
    base = None
    if needs_base:
        try:
            base = generate(instance, PolicyId.BASELINE, client, sample_index)
        except GenerationFailure as exc:
            failures.append(exc)
    for policy in policies:
        try:
            if policy is PolicyId.BASELINE:
                if base is not None:
                    out[policy] = base
            elif policy in SCALE_FACTORS or policy is PolicyId.SELF_REFINE:
                if base is None:
                    failures.append(GenerationFailure(instance.id, policy, [],
                                                      ["baseline checklist unavailable"]))
                elif policy is PolicyId.SELF_REFINE:
                    out[policy] = self_refine(instance, base, client, sample_index)
                else:
                    out[policy] = generate_scaled(instance, base, SCALE_FACTORS[policy],
                                                  client, sample_index)
            else:
                out[policy] = generate(instance, policy, client, sample_index)
        except GenerationFailure as exc:
            failures.append(exc)
    return out, failures
