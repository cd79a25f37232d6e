"""Pipeline commands over a run directory: gen, judge, sweep, ablate.

Every artifact is UTF-8 text written in a deterministic order, so a replay
run reproduces the directory byte for byte (``meta.json`` aside, which
records library versions).
"""

from __future__ import annotations

import copy
import json
import logging
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

import httpx
import numpy as np

from . import templates
from .ablation import (
    DEFAULT_THRESHOLDS,
    ChecklistScore,
    ablate_items,
    ablation_report,
    classify_checklists,
    mean_score,
)
from .checklist import Checklist, GenerationFailure, generate_policies
from .client import Cassette, LLMClient, ModelEndpoint
from .core import Condition, ContractError, EvalInstance, PolicyId, TaskKind, ValidationError
from .dataset import DatasetManifest, filter_count_consistent, load_dataset
from .gate import GatePolicy, application_rate, decide, default_grid, inconsistency
from .judge import (
    ORDER_ORIGINAL,
    ORDER_SWAPPED,
    JudgmentReplicate,
    JudgmentSet,
    PartialJudgmentError,
    judge_instance,
)
from .metrics import (
    RNG_NAME,
    BootstrapConfig,
    DegenerateDataWarning,
    aggregate,
    bootstrap_alpha_diff,
    bootstrap_diff,
    krippendorff_alpha,
    pairwise_instance_score,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_TRANSPORT = 2
EXIT_PARTIAL = 3

SWEEP_COLUMNS = (
    "policy", "gate", "k", "metric", "level", "value", "application_rate", "n",
    "ci_low_vs_none", "ci_high_vs_none", "significant_vs_none",
    "ci_low_vs_all", "ci_high_vs_all", "significant_vs_all", "bootstrap_stat",
)
PAIRWISE_ENCODING = "pairwise means average choice labels 1/2; gold mean is the winner label"


class ConfigError(ValidationError):
    pass


class PrerequisiteError(ValidationError):
    pass


class ProtocolViolation(ValidationError):
    pass


def _endpoint(raw: Optional[dict], name: str) -> Optional[ModelEndpoint]:
    if raw is None:
        return None
    missing = [k for k in ("base_url", "model_name", "temperature") if k not in raw]
    if missing:
        raise ConfigError(f"{name} is missing {missing} (sampling temperature must be set explicitly)")
    try:
        return ModelEndpoint(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


@dataclass
class RunConfig:
    dataset: DatasetManifest
    policies: tuple[PolicyId, ...]
    grid: tuple
    gen_endpoint: ModelEndpoint
    judge_endpoint: ModelEndpoint
    cassette: Cassette
    out: Path
    ablation_endpoint: Optional[ModelEndpoint] = None
    seed: int = 42
    bootstrap_iterations: int = 1000
    confidence: float = 0.95
    krippendorff_level: str = "interval"
    thresholds: dict = field(default_factory=dict)
    generation_samples: int = 1
    direct_bootstrap: str = "proxy"
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def kind(self) -> TaskKind:
        return self.dataset.kind

    @property
    def bootstrap(self) -> BootstrapConfig:
        return BootstrapConfig(self.bootstrap_iterations, self.seed, self.confidence)

    @property
    def ablation_threshold(self) -> float:
        return float(self.thresholds.get(self.kind.value, DEFAULT_THRESHOLDS[self.kind]))

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = Path(".")) -> "RunConfig":
        raw = copy.deepcopy(raw)
        try:
            ds = raw["dataset"]
            kind = TaskKind(ds.get("kind") or raw.get("task"))
            dpath = Path(ds["path"])
            if not dpath.is_absolute():
                dpath = base_dir / dpath
            if not dpath.exists():
                raise ConfigError(f"dataset file not found: {dpath}")
            manifest = DatasetManifest(kind, dpath, ds.get("subset_filter"))
            policies = tuple(PolicyId(p) for p in raw.get("policies", [p.value for p in PolicyId]))
            grid = tuple(raw.get("grid") or default_grid(kind))
            for k in grid:
                GatePolicy("selective", k).check_grid(kind)
            cas = raw.get("cassette", {})
            cdir = Path(cas.get("directory", "cassette"))
            if not cdir.is_absolute():
                cdir = base_dir / cdir
            out = Path(raw.get("out", "run"))
            if not out.is_absolute():
                out = base_dir / out
            level = raw.get("krippendorff_level", "interval")
            if level not in ("nominal", "ordinal", "interval"):
                raise ConfigError(f"unknown krippendorff_level {level!r}")
            direct_bootstrap = raw.get("direct_bootstrap", "proxy")
            if direct_bootstrap not in ("proxy", "alpha"):
                raise ConfigError("direct_bootstrap must be 'proxy' or 'alpha'")
            config = cls(
                dataset=manifest,
                policies=policies,
                grid=grid,
                gen_endpoint=_endpoint(raw.get("gen_endpoint"), "gen_endpoint"),
                judge_endpoint=_endpoint(raw.get("judge_endpoint"), "judge_endpoint"),
                ablation_endpoint=_endpoint(raw.get("ablation_endpoint"), "ablation_endpoint"),
                cassette=Cassette(cdir, cas.get("mode", "replay")),
                out=out,
                seed=int(raw.get("seed", 42)),
                bootstrap_iterations=int(raw.get("bootstrap_iterations", 1000)),
                confidence=float(raw.get("confidence", 0.95)),
                krippendorff_level=level,
                thresholds=dict(raw.get("thresholds", {})),
                generation_samples=int(raw.get("generation_samples", 1)),
                direct_bootstrap=direct_bootstrap,
                raw=raw,
            )
        except ConfigError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid run config: {exc!r}") from exc
        if config.gen_endpoint is None or config.judge_endpoint is None:
            raise ConfigError("gen_endpoint and judge_endpoint are required")
        if config.generation_samples < 1:
            raise ConfigError("generation_samples must be >= 1")
        return config

    @classmethod
    def load(cls, path: Path, overrides: Optional[dict] = None) -> "RunConfig":
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            raw = json.load(fh)
        _merge(raw, overrides or {})
        return cls.from_dict(raw, path.parent)


def _merge(base: dict, extra: dict) -> None:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value


# run directory I/O ---------------------------------------------------------

def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def write_jsonl(path: Path, records: Iterable[dict]) -> None:
    _write_text(path, "".join(_dumps(r) + "\n" for r in records))


def read_jsonl(path: Path) -> list[dict]:
    with path.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path: Path, obj: Any) -> None:
    _write_text(path, json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value + 0.0:.6f}"
    return str(value)


def write_tsv(path: Path, columns: Iterable[str], rows: Iterable[dict]) -> None:
    columns = list(columns)
    lines = ["\t".join(columns)]
    lines += ["\t".join(_fmt(row.get(c)).replace("\t", " ").replace("\n", " ") for c in columns)
              for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def _write_run_header(config: RunConfig) -> None:
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", config.raw)
    write_json(out / "templates.json", templates.all_hashes())
    write_json(out / "meta.json", {"bootstrap_rng": RNG_NAME, "numpy": np.__version__})


@dataclass
class CommandResult:
    exit_code: int
    message: str = ""
    details: dict = field(default_factory=dict)


def _client(endpoint: ModelEndpoint, config: RunConfig,
            transport: Optional[httpx.BaseTransport]) -> LLMClient:
    return LLMClient(endpoint, config.cassette, transport=transport)


# gen -------------------------------------------------------------------------

def _order_key(policies: tuple[PolicyId, ...]):
    rank = {p: i for i, p in enumerate(PolicyId)}
    return lambda cl: (rank[cl.policy], cl.sample_index)


def cmd_gen(config: RunConfig, transport: Optional[httpx.BaseTransport] = None) -> CommandResult:
    """Generate checklists for every instance and requested policy."""
    instances = load_dataset(config.dataset)
    _write_run_header(config)
    samples = range(config.generation_samples)

    def work(inst: EvalInstance):
        lists: list[Checklist] = []
        fails: list[GenerationFailure] = []
        for s in samples:
            got, failed = generate_policies(inst, config.policies, client, s)
            lists.extend(got.values())
            fails.extend(failed)
        return lists, fails

    with _client(config.gen_endpoint, config, transport) as client:
        with ThreadPoolExecutor(max_workers=config.gen_endpoint.max_concurrency) as pool:
            results = list(pool.map(work, instances))

    by_id: dict[str, list[Checklist]] = {}
    records, failures = [], []
    key = _order_key(config.policies)
    for inst, (lists, fails) in zip(instances, results):
        lists = sorted(lists, key=key)
        by_id[inst.id] = lists
        records += [cl.to_record() for cl in lists]
        failures += [{"instance_id": f.instance_id, "policy": f.policy.value,
                      "errors": f.errors, "raw_outputs": f.raw_outputs} for f in fails]
    kept, retention = filter_count_consistent(instances, by_id, config.policies)

    write_jsonl(config.out / "checklists.jsonl", records)
    write_jsonl(config.out / "generation_failures.jsonl", failures)
    write_json(config.out / "retention.json", retention.to_dict())
    write_tsv(config.out / "checklist_stats.tsv",
              ("policy", "checklists", "mean_items", "min_items", "max_items", "mean_attempts",
               "consistent", "inconsistent", "missing"),
              _checklist_stats(config.policies, by_id, retention))

    if failures:
        ids = sorted({f["instance_id"] for f in failures})
        return CommandResult(EXIT_PARTIAL, f"generation failed for {len(failures)} "
                             f"(instance, policy) pairs: {', '.join(ids)}", {"failures": failures})
    return CommandResult(EXIT_OK, f"{len(records)} checklists; kept {retention.kept}/{retention.total}")


def _checklist_stats(policies, by_id, retention) -> list[dict]:
    rows = []
    for p in policies:
        lists = [cl for lists in by_id.values() for cl in lists if cl.policy is p]
        sizes = [len(cl) for cl in lists]
        counts = retention.per_policy.get(p.value, {})
        rows.append({
            "policy": p.value,
            "checklists": len(lists),
            "mean_items": float(np.mean(sizes)) if sizes else None,
            "min_items": min(sizes) if sizes else None,
            "max_items": max(sizes) if sizes else None,
            "mean_attempts": float(np.mean([cl.generation_attempt for cl in lists])) if lists else None,
            "consistent": counts.get("consistent", 0),
            "inconsistent": counts.get("inconsistent", 0),
            "missing": counts.get("missing", 0),
        })
    return rows


def load_checklists(out: Path) -> dict[tuple[str, PolicyId], Checklist]:
    """First generated sample per (instance, policy); this is the one judged."""
    path = out / "checklists.jsonl"
    if not path.exists():
        raise PrerequisiteError(f"{path} not found; run the 'gen' command first")
    found: dict[tuple[str, PolicyId], Checklist] = {}
    for rec in read_jsonl(path):
        cl = Checklist.from_record(rec)
        if cl.sample_index == 0:
            found[(cl.instance_id, cl.policy)] = cl
    return found


def kept_instances(config: RunConfig) -> list[EvalInstance]:
    path = config.out / "retention.json"
    if not path.exists():
        raise PrerequisiteError(f"{path} not found; run the 'gen' command first")
    with path.open(encoding="utf-8") as fh:
        kept = set(json.load(fh)["kept_ids"])
    return [i for i in load_dataset(config.dataset) if i.id in kept]


# judge -----------------------------------------------------------------------

def _conditions(config: RunConfig) -> list[Condition]:
    return [Condition.none()] + [Condition.checklist(p) for p in config.policies]


def sets_from_records(records: list[dict], kind: TaskKind) -> dict[tuple[str, str], JudgmentSet]:
    grouped: dict[tuple[str, str], list[dict]] = defaultdict(list)
    failed: dict[tuple[str, str], list[int]] = {}
    for rec in records:
        key = (rec["instance_id"], rec["condition"])
        if rec.get("failed"):
            failed[key] = rec["failed_indices"]
        else:
            grouped[key].append(rec)
    out = {}
    for key in set(grouped) | set(failed):
        reps = tuple(JudgmentReplicate.from_record(r, kind)
                     for r in sorted(grouped.get(key, []), key=lambda r: r["replicate_index"]))
        out[key] = JudgmentSet(key[0], kind, Condition.from_key(key[1]), reps,
                               tuple(failed.get(key, ())))
    return out


def set_records(jset: JudgmentSet) -> list[dict]:
    recs = [r.to_record() for r in jset.replicates]
    if jset.failed_indices:
        recs.append({"instance_id": jset.instance_id, "condition": jset.condition.key,
                     "failed": True, "failed_indices": list(jset.failed_indices)})
    return recs


def _sorted_sets(sets: dict, instances: list[EvalInstance]) -> list[JudgmentSet]:
    rank = {inst.id: i for i, inst in enumerate(instances)}
    return sorted(sets.values(), key=lambda s: (rank.get(s.instance_id, len(rank)), s.instance_id,
                                                s.condition.key))


def audit_order_balance(sets: Iterable[JudgmentSet]) -> list[str]:
    problems = []
    for s in sets:
        if s.kind is TaskKind.PAIRWISE and s.is_complete:
            counts = s.order_counts()
            if counts.get(ORDER_ORIGINAL) != 5 or counts.get(ORDER_SWAPPED) != 5:
                problems.append(f"{s.instance_id} [{s.condition.key}]: {counts}")
    return problems


def _judge_many(tasks, client: LLMClient, workers: int):
    """Run (instance, condition, items) tasks; returns (sets, partial sets)."""
    def one(task):
        inst, cond, items = task
        try:
            return judge_instance(inst, cond, items, client)
        except PartialJudgmentError as exc:
            logger.warning("%s", exc)
            return exc.partial

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, tasks))


def cmd_judge(config: RunConfig, transport: Optional[httpx.BaseTransport] = None) -> CommandResult:
    """Judge every kept instance with and without each policy's checklist.

    Complete sets already in ``judgments.jsonl`` are kept and not re-queried.
    """
    instances = kept_instances(config)
    checklists = load_checklists(config.out)
    path = config.out / "judgments.jsonl"
    try:
        existing = sets_from_records(read_jsonl(path), config.kind) if path.exists() else {}
    except ContractError as exc:
        raise ProtocolViolation(f"{path}: stored judgments violate the protocol: {exc}") from exc
    done = {k: s for k, s in existing.items() if s.is_complete}

    tasks = []
    for inst in instances:
        for cond in _conditions(config):
            if (inst.id, cond.key) in done:
                continue
            items = checklists[(inst.id, cond.policy)].texts if cond.uses_checklist else None
            tasks.append((inst, cond, items))

    with _client(config.judge_endpoint, config, transport) as client:
        new_sets = _judge_many(tasks, client, config.judge_endpoint.max_concurrency)
        stats = client.stats

    all_sets = dict(done)
    for s in new_sets:
        all_sets[(s.instance_id, s.condition.key)] = s
    ordered = _sorted_sets(all_sets, instances)
    write_jsonl(path, (rec for s in ordered for rec in set_records(s)))

    problems = audit_order_balance(ordered)
    if problems:
        raise ProtocolViolation("presentation order imbalance: " + "; ".join(problems))
    partial = [s for s in ordered if not s.is_complete]
    write_jsonl(config.out / "judge_failures.jsonl",
                ({"instance_id": s.instance_id, "condition": s.condition.key,
                  "failed_indices": list(s.failed_indices)} for s in partial))
    details = {"skipped_sets": len(done), "judged_sets": len(new_sets),
               "requests": stats.requests, "cassette_hits": stats.cassette_hits,
               "network_calls": stats.network_calls}
    if partial:
        return CommandResult(EXIT_PARTIAL, f"{len(partial)} incomplete judgment sets", details)
    return CommandResult(EXIT_OK, f"{len(ordered)} judgment sets", details)


def load_judgments(config: RunConfig) -> dict[tuple[str, str], JudgmentSet]:
    path = config.out / "judgments.jsonl"
    if not path.exists():
        raise PrerequisiteError(f"{path} not found; run the 'judge' command first")
    return sets_from_records(read_jsonl(path), config.kind)


# sweep -----------------------------------------------------------------------

def _paired(config: RunConfig, sets, instances, policy):
    """Instances whose no-checklist and policy sets are both complete."""
    rows = []
    for inst in instances:
        none = sets.get((inst.id, "none"))
        withc = sets.get((inst.id, Condition.checklist(policy).key))
        if none is not None and withc is not None and none.is_complete and withc.is_complete:
            rows.append((inst, none, withc))
    return rows


def _evaluate(config: RunConfig, rows, chosen: list[JudgmentSet]):
    """Metric value and per-instance bootstrap statistic for one gate setting."""
    outcomes = [aggregate(s) for s in chosen]
    if config.kind is TaskKind.PAIRWISE:
        per = [pairwise_instance_score(o, inst.gold) for o, (inst, _, _) in zip(outcomes, rows)]
        return float(np.mean(per)), per, None
    system = [o.direct_score for o in outcomes]
    gold = [inst.gold.direct_gold for inst, _, _ in rows]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDataWarning)
        alpha = krippendorff_alpha(list(zip(system, gold)), config.krippendorff_level)
    per = [-abs(s - g) for s, g in zip(system, gold)]
    return alpha, per, system


def cmd_sweep(config: RunConfig) -> CommandResult:
    """Score none / all / selective(k) for each policy, with paired bootstraps."""
    instances = kept_instances(config)
    sets = load_judgments(config)
    pairwise = config.kind is TaskKind.PAIRWISE
    metric = "accuracy" if pairwise else "krippendorff_alpha"
    level = None if pairwise else config.krippendorff_level
    stat_name = "instance_score" if pairwise else (
        "neg_abs_error" if config.direct_bootstrap == "proxy" else "alpha")
    bcfg = config.bootstrap

    table, decisions_out, excluded = [], [], []
    for policy in config.policies:
        rows = _paired(config, sets, instances, policy)
        paired_ids = {inst.id for inst, _, _ in rows}
        excluded += [{"policy": policy.value, "instance_id": i.id}
                     for i in instances if i.id not in paired_ids]
        if not rows:
            continue
        incons = [inconsistency(none) for _, none, _ in rows]
        gold_direct = [inst.gold.direct_gold for inst, _, _ in rows] if not pairwise else None
        baselines = {}
        gate_rows = [GatePolicy("none"), GatePolicy("all")] + [GatePolicy("selective", k)
                                                               for k in config.grid]
        for gp in gate_rows:
            decisions = [decide(gp, inst.id, x) for (inst, _, _), x in zip(rows, incons)]
            chosen = [w if d.applied else n for d, (_, n, w) in zip(decisions, rows)]
            value, per, system = _evaluate(config, rows, chosen)
            row = {"policy": policy.value, "gate": gp.mode, "k": gp.k, "metric": metric,
                   "level": level, "value": value, "application_rate": application_rate(decisions),
                   "n": len(rows), "bootstrap_stat": stat_name}
            if gp.mode in ("none", "all"):
                baselines[gp.mode] = (per, system)
            else:
                for ref in ("none", "all"):
                    if len(rows) < 2:
                        continue
                    if pairwise or config.direct_bootstrap == "proxy":
                        res = bootstrap_diff(per, baselines[ref][0], bcfg)
                    else:
                        res = bootstrap_alpha_diff(system, baselines[ref][1], gold_direct, bcfg,
                                                   config.krippendorff_level)
                    row[f"ci_low_vs_{ref}"] = res.ci_low
                    row[f"ci_high_vs_{ref}"] = res.ci_high
                    row[f"significant_vs_{ref}"] = res.significant
                decisions_out += [{"policy": policy.value, "k": gp.k, **d.to_record()}
                                  for d in decisions]
            table.append(row)

    write_tsv(config.out / "sweep.tsv", SWEEP_COLUMNS, table)
    write_jsonl(config.out / "gate_decisions.jsonl", decisions_out)
    write_jsonl(config.out / "sweep_excluded.jsonl", excluded)
    return CommandResult(EXIT_OK, f"{len(table)} sweep rows", {"rows": table, "excluded": excluded})


# ablate ----------------------------------------------------------------------

def cmd_ablate(config: RunConfig, transport: Optional[httpx.BaseTransport] = None) -> CommandResult:
    """Classify checklists by alignment gain, then ablate items of non-neutral ones."""
    instances = kept_instances(config)
    checklists = load_checklists(config.out)
    sets = load_judgments(config)
    endpoint = config.ablation_endpoint or config.judge_endpoint
    separate_model = config.ablation_endpoint is not None and config.ablation_endpoint != config.judge_endpoint
    abl_sets: list[JudgmentSet] = []

    with _client(endpoint, config, transport) as client:
        if separate_model:
            # none/all means must come from the ablation model itself
            tasks = [(inst, cond, checklists[(inst.id, cond.policy)].texts if cond.uses_checklist else None)
                     for inst in instances for cond in _conditions(config)]
            fresh = _judge_many(tasks, client, endpoint.max_concurrency)
            abl_sets += fresh
            sets = {(s.instance_id, s.condition.key): s for s in fresh}

        scores, by_key = [], {}
        for policy in config.policies:
            for inst, none, withc in _paired(config, sets, instances, policy):
                s = ChecklistScore(inst.id, policy, inst.gold.mean(), mean_score(none), mean_score(withc))
                scores.append(s)
                by_key[(inst.id, policy)] = (inst, s)
        classes = classify_checklists(scores, config.kind, config.ablation_threshold)

        calls_before = client.stats.requests
        items = []
        for cls in classes:
            if cls.label == "neutral":
                continue
            inst, s = by_key[(cls.instance_id, cls.policy)]
            items += ablate_items(inst, checklists[(inst.id, cls.policy)].texts, cls, s.all,
                                  client, on_set=abl_sets.append)
        loo_calls = client.stats.requests - calls_before

    out = config.out
    write_tsv(out / "ablation_checklists.tsv",
              ("instance_id", "policy", "gold_mean", "none_mean", "all_mean", "delta_all", "label"),
              [{**c.to_record(), "gold_mean": by_key[(c.instance_id, c.policy)][1].gold,
                "none_mean": by_key[(c.instance_id, c.policy)][1].none,
                "all_mean": by_key[(c.instance_id, c.policy)][1].all} for c in classes])
    write_tsv(out / "ablation_items.tsv",
              ("instance_id", "policy", "item_index", "delta_abl", "label", "item_text"),
              [it.to_record() for it in items])
    overall = ablation_report(classes, items)
    per_policy = {}
    for policy in config.policies:
        rep = ablation_report([c for c in classes if c.policy is policy],
                              [it for it in items if it.policy is policy])
        per_policy[policy.value] = rep.summary
    write_json(out / "ablation_summary.json", {
        "threshold": config.ablation_threshold,
        "task": config.kind.value,
        "score_encoding": PAIRWISE_ENCODING if config.kind is TaskKind.PAIRWISE
        else "direct means average Likert scores; gold mean is the mean annotation",
        "overall": overall.summary,
        "per_policy": per_policy,
    })
    write_tsv(out / "ablation_histogram.tsv", ("bin", "count"),
              [{"bin": b, "count": n} for b, n in overall.histogram])
    ordered = _sorted_sets({(s.instance_id, s.condition.key): s for s in abl_sets}, instances)
    write_jsonl(out / "ablation_judgments.jsonl", (rec for s in ordered for rec in set_records(s)))

    partial = [s for s in abl_sets if not s.is_complete]
    details = {"leave_one_out_requests": loo_calls, "summary": overall.summary,
               "classes": classes, "items": items}
    if partial:
        return CommandResult(EXIT_PARTIAL, f"{len(partial)} incomplete leave-one-out sets", details)
    return CommandResult(EXIT_OK, f"{len(classes)} checklists classified, {len(items)} items ablated",
                         details)
