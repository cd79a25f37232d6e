"""Checklist-based LLM-as-a-judge evaluation with selective application.

Generate per-input checklists, judge responses ten times with and without
them, apply checklists only where plain judgments disagree, measure
agreement with human labels, and ablate individual checklist items.
"""

from .core import (
    Condition,
    ContractError,
    DirectVerdict,
    EvalInstance,
    GoldLabel,
    ItemVerdict,
    PairwiseVerdict,
    PolicyId,
    TaskKind,
    ValidationError,
    derive_direct_gold,
    round_half_away,
)
from .dataset import DatasetManifest, filter_count_consistent, load_dataset
from .client import Cassette, ChatRequest, LLMClient, ModelEndpoint, complete
from .checklist import (
    Checklist,
    ChecklistItem,
    generate,
    generate_scaled,
    parse_checklist,
    self_refine,
)
from .judge import (
    JudgmentReplicate,
    JudgmentSet,
    judge_instance,
    parse_final_verdict,
    parse_item_verdicts,
)
from .gate import (
    GateDecision,
    GatePolicy,
    application_rate,
    gate,
    inconsistency_direct,
    inconsistency_pairwise,
)
from .metrics import (
    AggregatedOutcome,
    BootstrapConfig,
    accuracy,
    aggregate_direct,
    aggregate_pairwise,
    bootstrap_diff,
    krippendorff_alpha,
)
from .ablation import (
    AblationReport,
    ChecklistClass,
    ItemClass,
    ablate_items,
    ablation_report,
    classify_checklists,
    delta_abl,
    delta_all,
    mean_score,
)

__version__ = "0.1.0"

__all__ = [
    "AblationReport",
    "AggregatedOutcome",
    "BootstrapConfig",
    "Cassette",
    "ChatRequest",
    "Checklist",
    "ChecklistClass",
    "ChecklistItem",
    "Condition",
    "ContractError",
    "DatasetManifest",
    "DirectVerdict",
    "EvalInstance",
    "GateDecision",
    "GatePolicy",
    "GoldLabel",
    "ItemClass",
    "ItemVerdict",
    "JudgmentReplicate",
    "JudgmentSet",
    "LLMClient",
    "ModelEndpoint",
    "PairwiseVerdict",
    "PolicyId",
    "TaskKind",
    "ValidationError",
    "ablate_items",
    "ablation_report",
    "accuracy",
    "aggregate_direct",
    "aggregate_pairwise",
    "application_rate",
    "bootstrap_diff",
    "classify_checklists",
    "complete",
    "delta_abl",
    "delta_all",
    "derive_direct_gold",
    "filter_count_consistent",
    "gate",
    "generate",
    "generate_scaled",
    "inconsistency_direct",
    "inconsistency_pairwise",
    "judge_instance",
    "krippendorff_alpha",
    "load_dataset",
    "mean_score",
    "parse_checklist",
    "parse_final_verdict",
    "parse_item_verdicts",
    "round_half_away",
    "self_refine",
]
