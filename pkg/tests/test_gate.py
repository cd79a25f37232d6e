import math

import pytest
from hypothesis import given, strategies as st

from checkeval.core import Condition, ContractError, TaskKind
from checkeval.gate import (
    DIRECT_GRID,
    PAIRWISE_GRID,
    GateDecision,
    GatePolicy,
    application_rate,
    decide,
    gate,
    inconsistency_direct,
    inconsistency_pairwise,
    population_std,
)

from conftest import direct_instance, make_set, pairwise_instance

D = TaskKind.DIRECT
CL = Condition.checklist("baseline")


def test_pairwise_worked_examples():
    assert inconsistency_pairwise(make_set([1] * 7 + [2] * 3)) == 3
    assert inconsistency_pairwise(make_set([1] * 5 + [2] * 5)) == 5
    assert inconsistency_pairwise(make_set([2] * 10)) == 0


def test_direct_worked_examples():
    assert inconsistency_direct(make_set([3, 3, 3, 3, 4], D, "d1")) == pytest.approx(0.40, abs=0.005)
    assert inconsistency_direct(make_set([2, 3, 3, 3, 4], D, "d1")) == pytest.approx(0.63, abs=0.005)
    assert inconsistency_direct(make_set([4] * 10, D, "d1")) == 0.0
    # the n-1 divisor would give 0.447 here
    assert population_std([3, 3, 3, 3, 4]) == pytest.approx(0.4, abs=1e-12)


def test_pairwise_needs_ten_votes():
    with pytest.raises(ContractError):
        inconsistency_pairwise(make_set([1, 1, 2]))
    with pytest.raises(ContractError):
        inconsistency_direct(make_set([1] * 10))


@pytest.mark.parametrize("k, applied", [(3, True), (4, False), (1, True), (5, False)])
def test_pairwise_boundary_inclusive(k, applied):
    inst = pairwise_instance()
    none = make_set([1] * 7 + [2] * 3)
    with_cl = make_set([1] * 10, condition=CL)
    decision, effective = gate(inst, GatePolicy("selective", k), none, with_cl)
    assert decision.applied is applied
    assert effective is (with_cl if applied else none)


def test_direct_boundary_tolerates_float_error():
    inst = direct_instance()
    none = make_set([3] * 8 + [4] * 2, D, "d1")  # std = sqrt(0.16)
    with_cl = make_set([3] * 10, D, "d1", CL)
    assert gate(inst, GatePolicy("selective", 0.4), none, with_cl)[0].applied
    assert not gate(inst, GatePolicy("selective", 0.45), none, with_cl)[0].applied


def test_modes_ignore_inconsistency():
    inst = pairwise_instance()
    none = make_set([1] * 5 + [2] * 5)
    with_cl = make_set([1] * 10, condition=CL)
    assert not gate(inst, GatePolicy("none"), none, with_cl)[0].applied
    assert gate(inst, GatePolicy("all"), make_set([1] * 10), with_cl)[0].applied


def test_policy_validation():
    with pytest.raises(ContractError):
        GatePolicy("sometimes")
    with pytest.raises(ContractError):
        GatePolicy("selective")
    with pytest.raises(ContractError, match="grid"):
        GatePolicy("selective", 0.55).check_grid(D)
    GatePolicy("selective", 0.35).check_grid(D)
    with pytest.raises(ContractError):
        gate(pairwise_instance(), GatePolicy("selective", 6), make_set([1] * 10),
             make_set([1] * 10, condition=CL))
    with pytest.raises(ContractError):
        gate(pairwise_instance("other"), GatePolicy("all"), make_set([1] * 10),
             make_set([1] * 10, condition=CL))
    with pytest.raises(ContractError):
        gate(pairwise_instance(), GatePolicy("all"), make_set([1] * 10, condition=CL),
             make_set([1] * 10, condition=CL))


def test_application_rate():
    dec = [GateDecision(str(i), 0, i < 3) for i in range(10)]
    assert application_rate(dec) == 0.3
    assert application_rate([GateDecision("a", 0, True)] * 4) == 1.0
    assert application_rate([GateDecision("a", 0, False)] * 4) == 0.0
    with pytest.raises(ContractError):
        application_rate([])
    assert GatePolicy("selective", 0.5).label == "selective(k=0.5)"


votes = st.lists(st.sampled_from([1, 2]), min_size=10, max_size=10)


@given(votes)
def test_pairwise_symmetric_under_relabel(v):
    flipped = [3 - x for x in v]
    assert inconsistency_pairwise(make_set(v)) == inconsistency_pairwise(make_set(flipped))
    assert 0 <= inconsistency_pairwise(make_set(v)) <= 5


@given(st.lists(st.floats(0, 2, allow_nan=False), min_size=1, max_size=30), st.data())
def test_rate_non_increasing_in_k(values, data):
    grid = data.draw(st.sampled_from([PAIRWISE_GRID, DIRECT_GRID]))
    rates = [application_rate([decide(GatePolicy("selective", k), "i", x) for x in values])
             for k in grid]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


@given(st.lists(st.floats(0, 2, allow_nan=False), min_size=1, max_size=30))
def test_extreme_thresholds_match_fixed_modes(values):
    lo, hi = min(values), max(values)
    sel_lo = [decide(GatePolicy("selective", lo), "i", x).applied for x in values]
    sel_hi = [decide(GatePolicy("selective", hi + 0.01), "i", x).applied for x in values]
    assert sel_lo == [decide(GatePolicy("all"), "i", x).applied for x in values]
    assert sel_hi == [decide(GatePolicy("none"), "i", x).applied for x in values]


@given(st.lists(st.integers(1, 5), min_size=1, max_size=20))
def test_std_matches_definition(scores):
    m = sum(scores) / len(scores)
    assert population_std(scores) == pytest.approx(math.sqrt(sum((s - m) ** 2 for s in scores) / len(scores)))
