"""
Measuring judge inconsistency and gating checklists
====================================================

Ten repeated verdicts per instance, how much they disagree, and what the
selective gate does with that number. No model calls are made here; the
verdict lists are written out by hand.
"""

from checkeval.core import Condition, DirectVerdict, EvalInstance, GoldLabel, PairwiseVerdict, TaskKind
from checkeval.gate import GatePolicy, gate, inconsistency
from checkeval.judge import JudgmentReplicate, JudgmentSet, presentation_order
from checkeval.metrics import accuracy, aggregate, krippendorff_alpha


def judgment_set(iid, kind, values, condition=Condition.none()):
    reps = []
    for r, v in enumerate(values):
        if kind is TaskKind.PAIRWISE:
            reps.append(JudgmentReplicate(iid, condition, r, PairwiseVerdict(v), "", presentation_order(r)))
        else:
            reps.append(JudgmentReplicate(iid, condition, r, DirectVerdict(v), ""))
    return JudgmentSet(iid, kind, condition, tuple(reps))


# %%
# Pairwise inconsistency is the vote count of the less-preferred output.
steady = judgment_set("a", TaskKind.PAIRWISE, [1] * 9 + [2])
split = judgment_set("b", TaskKind.PAIRWISE, [1, 2] * 5)
print("minority votes:", inconsistency(steady), inconsistency(split))

# %%
# A tie aggregates to 0.5 credit.
gold = GoldLabel.pairwise(1)
print("accuracy:", accuracy([aggregate(steady), aggregate(split)], [gold, gold]))

# %%
# The gate swaps in the checklist verdicts only where x >= k.
# Here plain judging leans the wrong way 7-3 and the checklist fixes it.
inst = EvalInstance("w", TaskKind.PAIRWISE, "Pick one.", ("x", "y"), gold, "Natural")
wobbly = judgment_set("w", TaskKind.PAIRWISE, [2, 1, 2, 2, 1, 2, 2, 1, 2, 2])
with_checklist = judgment_set("w", TaskKind.PAIRWISE, [1] * 8 + [2] * 2, Condition.checklist("baseline"))
for k in (1, 3, 4):
    decision, chosen = gate(inst, GatePolicy("selective", k), wobbly, with_checklist)
    print(f"k={k}: applied={decision.applied} outcome={aggregate(chosen).pairwise_outcome}")

# %%
# Direct scoring uses the population standard deviation instead.
scores = judgment_set("c", TaskKind.DIRECT, [2, 3, 3, 3, 4, 3, 3, 3, 3, 3])
print(f"std of scores: {inconsistency(scores):.3f}")

# %%
# Agreement with human scores: interval Krippendorff alpha.
system = [4, 2, 5, 3, 1, 4]
human = [5, 2, 4, 3, 1, 4]
print(f"alpha: {krippendorff_alpha(list(zip(system, human))):.3f}")
