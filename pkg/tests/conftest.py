from __future__ import annotations

from pathlib import Path

import pytest

from checkeval.core import (
    Condition,
    DirectVerdict,
    EvalInstance,
    GoldLabel,
    PairwiseVerdict,
    TaskKind,
)
from checkeval.judge import JudgmentReplicate, JudgmentSet, presentation_order

FIXTURES = Path(__file__).parent / "fixtures"

_ACCEPTANCE: list[tuple[str, bool]] = []


def pairwise_instance(iid="p1", winner=1, text="Pick the better answer."):
    return EvalInstance(iid, TaskKind.PAIRWISE, text, ("first answer", "second answer"),
                        GoldLabel.pairwise(winner), "Natural")


def direct_instance(iid="d1", annotations=(3, 3, 4), text="Rate this answer."):
    return EvalInstance(iid, TaskKind.DIRECT, text, ("an answer",),
                        GoldLabel.direct(annotations, iid), "Easy")


def make_set(values, kind=TaskKind.PAIRWISE, iid="p1", condition=None):
    """JudgmentSet from a list of final values (original output labels or scores)."""
    condition = condition or Condition.none()
    reps = []
    for r, v in enumerate(values):
        if kind is TaskKind.PAIRWISE:
            reps.append(JudgmentReplicate(iid, condition, r, PairwiseVerdict(v), f"Winner: {v}",
                                          presentation_order(r)))
        else:
            reps.append(JudgmentReplicate(iid, condition, r, DirectVerdict(v), f"Score: {v}"))
    return JudgmentSet(iid, kind, condition, tuple(reps))


def record_criterion(name: str, passed: bool) -> None:
    _ACCEPTANCE.append((name, passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
