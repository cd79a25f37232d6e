"""Acceptance criteria 1-9, each recorded as one PASS/FAIL summary line."""

import json
import shutil
from contextlib import contextmanager

import httpx
import numpy as np
import pytest

from checkeval.ablation import (
    ChecklistClass,
    ChecklistScore,
    ablate_items,
    classify_checklists,
    classify_item,
    delta_abl,
    delta_all,
)
from checkeval.checklist import Checklist, scaled_target
from checkeval.client import Cassette, LLMClient, ModelEndpoint
from checkeval.core import Condition, PolicyId, TaskKind
from checkeval.gate import (
    DIRECT_GRID,
    PAIRWISE_GRID,
    GatePolicy,
    application_rate,
    gate,
    inconsistency,
    inconsistency_direct,
    inconsistency_pairwise,
)
from checkeval.judge import ORDER_ORIGINAL, ORDER_SWAPPED, judge_instance
from checkeval.metrics import (
    BootstrapConfig,
    accuracy,
    aggregate,
    aggregate_pairwise,
    bootstrap_diff,
    krippendorff_alpha,
)
from checkeval.pipeline import (
    EXIT_OK,
    RunConfig,
    cmd_ablate,
    cmd_gen,
    cmd_judge,
    cmd_sweep,
    load_judgments,
    kept_instances,
    read_jsonl,
)
from checkeval.simulate import always_first_backend

from conftest import FIXTURES, direct_instance, make_set, pairwise_instance, record_criterion
from oracles import alpha_bruteforce

GOLDEN = FIXTURES / "golden"
GEN30 = FIXTURES / "gen30"
EXCLUDED_FROM_GOLDEN = {"config.json", "meta.json"}


@contextmanager
def criterion(name):
    ok = False
    try:
        yield
        ok = True
    finally:
        record_criterion(name, ok)


def offline():
    return httpx.MockTransport(lambda r: pytest.fail(f"network call during replay: {r.url}"))


def golden_config(tmp_path, task):
    shutil.copy(GOLDEN / f"{task}.json", tmp_path / f"{task}.json")
    shutil.copy(GOLDEN / f"{task}.jsonl", tmp_path / f"{task}.jsonl")
    return RunConfig.load(tmp_path / f"{task}.json", {
        "cassette": {"directory": str(GOLDEN / "cassette"), "mode": "replay"},
        "out": str(tmp_path / f"run-{task}"),
    })


def run_all(config):
    results = {}
    for name, cmd in (("gen", cmd_gen), ("judge", cmd_judge), ("ablate", cmd_ablate)):
        results[name] = cmd(config, offline())
        if name == "judge":
            results["sweep"] = cmd_sweep(config)
    return results


@pytest.fixture(scope="module")
def golden_runs(tmp_path_factory):
    out = {}
    for task in ("pairwise", "direct"):
        cfg = golden_config(tmp_path_factory.mktemp(task), task)
        out[task] = (cfg, run_all(cfg))
    return out


def test_criterion_1_inconsistency_formulas():
    with criterion("1 inconsistency formulas reproduce the worked examples"):
        assert inconsistency_pairwise(make_set([1] * 7 + [2] * 3)) == 3
        assert inconsistency_pairwise(make_set([1] * 5 + [2] * 5)) == 5
        assert abs(inconsistency_direct(make_set([3, 3, 3, 3, 4], TaskKind.DIRECT, "d")) - 0.40) <= 0.005
        assert abs(inconsistency_direct(make_set([2, 3, 3, 3, 4], TaskKind.DIRECT, "d")) - 0.63) <= 0.005


def test_criterion_2_tie_semantics():
    with criterion("2 a 5-5 split scores exactly 0.5 accuracy"):
        inst = pairwise_instance()
        outcome = aggregate_pairwise(make_set([1, 2] * 5))
        assert outcome.pairwise_outcome == "tie"
        assert accuracy([outcome], [inst.gold]) == 0.5


def test_criterion_3_krippendorff_alpha():
    with criterion("3 alpha is 1 on identical lists and matches the brute-force oracle"):
        rng = np.random.default_rng(3)
        for level in ("interval", "ordinal", "nominal"):
            scores = rng.integers(1, 6, 10)
            assert krippendorff_alpha(list(zip(scores, scores)), level) == 1.0
            checked = 0
            while checked < 20:
                pairs = [tuple(p) for p in rng.integers(1, 6, (10, 2)).tolist()]
                if len({v for p in pairs for v in p}) < 2:
                    continue
                assert abs(krippendorff_alpha(pairs, level) - alpha_bruteforce(pairs, level)) <= 1e-9
                checked += 1


def test_criterion_4_bootstrap():
    with criterion("4 bootstrap is deterministic, a-vs-a never significant, +1 shift always significant"):
        cfg = BootstrapConfig(iterations=1000, seed=42)
        rng = np.random.default_rng(4)
        a = rng.integers(0, 3, 30) / 2
        b = rng.integers(0, 3, 30) / 2
        assert bootstrap_diff(a, b, cfg) == bootstrap_diff(a, b, cfg)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            x = rng.integers(0, 3, n) / 2
            assert not bootstrap_diff(x, x, cfg).significant
            assert bootstrap_diff(x + 1, x, cfg).significant


# criterion 5: 50 instances with prescribed no-checklist vote patterns
PAIRWISE_PATTERNS = [[1] * (10 - m) + [2] * m for m in (1, 2, 3, 4)]
DIRECT_PATTERNS = [
    [3] * 9 + [4],               # 0.300
    [3] * 8 + [4] * 2,           # 0.400
    [3] * 7 + [4] * 3,           # 0.458
    [3] * 5 + [4] * 5,           # 0.500
    [2] + [3] * 8 + [4],         # 0.447
    [2, 2] + [3] * 6 + [4, 4],   # 0.632
]


def synthetic_transport(kind):
    """Votes keyed by instance number; the checklist condition is unanimous."""
    def handler(request):
        prompt = json.loads(request.content)["messages"][-1]["content"]
        rep = int(request.headers["X-Replicate-Index"])
        idx = int(prompt.split("instance #")[1].split(".")[0])
        with_checklist = "Checklist:" in prompt
        if kind is TaskKind.PAIRWISE:
            pattern = PAIRWISE_PATTERNS[idx % 4]
            label = (2 if idx % 3 == 0 else 1) if with_checklist else pattern[rep % 10]
            shown = label if rep % 2 == 0 else 3 - label
            answers = "Checklist for Output (1):\n1: yes\nChecklist for Output (2):\n1: no\n"
            text = (answers if with_checklist else "") + f"Winner: {shown}"
        else:
            score = (5 if idx % 2 else 1) if with_checklist else DIRECT_PATTERNS[idx % 6][rep % 10]
            text = ("Checklist:\n1: yes\n" if with_checklist else "") + f"Score: {score}"
        return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})
    return httpx.MockTransport(handler)


def synthetic_sets(tmp_path, kind):
    ep = ModelEndpoint("http://synthetic/v1/", "synthetic", temperature=0.7, max_concurrency=8)
    rec = LLMClient(ep, Cassette(tmp_path / "cassette", "record"), transport=synthetic_transport(kind))
    make = pairwise_instance if kind is TaskKind.PAIRWISE else direct_instance
    instances = [make(f"i{n:02d}", text=f"Task for instance #{n}.") for n in range(50)]
    cond = Condition.checklist("baseline")
    for inst in instances:
        judge_instance(inst, Condition.none(), None, rec)
        judge_instance(inst, cond, ["Is it right?"], rec)
    rec.close()
    replay = LLMClient(ep, Cassette(tmp_path / "cassette", "replay"), transport=offline())
    out = [(inst, judge_instance(inst, Condition.none(), None, replay),
            judge_instance(inst, cond, ["Is it right?"], replay)) for inst in instances]
    assert replay.stats.network_calls == 0
    return out


@pytest.mark.parametrize("kind", [TaskKind.PAIRWISE, TaskKind.DIRECT])
def test_criterion_5_gate_extremes_and_monotonicity(tmp_path, kind):
    name = f"5 gate extremes and monotonicity ({kind.value})"
    with criterion(name):
        rows = synthetic_sets(tmp_path, kind)
        grid = PAIRWISE_GRID if kind is TaskKind.PAIRWISE else DIRECT_GRID
        incons = [inconsistency(none) for _, none, _ in rows]
        lo, hi = min(incons), max(incons)
        assert grid[0] <= lo + 1e-9 and grid[-1] > hi

        def outcomes(policy):
            results = [gate(inst, policy, none, withc) for inst, none, withc in rows]
            return [aggregate(s) for _, s in results], [d for d, _ in results]

        all_out, _ = outcomes(GatePolicy("all"))
        none_out, _ = outcomes(GatePolicy("none"))
        assert all_out != none_out
        assert outcomes(GatePolicy("selective", grid[0]))[0] == all_out
        assert outcomes(GatePolicy("selective", grid[-1]))[0] == none_out
        rates = [application_rate(outcomes(GatePolicy("selective", k))[1]) for k in grid]
        assert rates[0] == 1.0 and rates[-1] == 0.0
        assert all(x >= y for x, y in zip(rates, rates[1:]))


def test_criterion_6_ablation(golden_runs, tmp_path):
    with criterion("6 ablation algebra, boundaries and the neutral skip rule"):
        assert delta_all(5, 3, 5) == 2
        assert delta_all(4, 4, 2) == -2
        assert delta_abl(5, 3, 5) == 2 and classify_item(2) == "negative"
        assert delta_abl(5, 4, 3) == -1 and classify_item(-1) == "positive"
        assert classify_item(delta_abl(5, 4, 4)) == "neutral"
        bounds = [
            (TaskKind.DIRECT, 5.0, 3.5, 5.0, "positive"),
            (TaskKind.DIRECT, 5.0, 5.0, 3.5, "negative"),
            (TaskKind.DIRECT, 5.0, 3.6, 5.0, "neutral"),
            (TaskKind.PAIRWISE, 1.0, 1.4, 1.1, "positive"),
            (TaskKind.PAIRWISE, 1.0, 1.1, 1.4, "negative"),
            (TaskKind.PAIRWISE, 1.0, 1.3, 1.1, "neutral"),
        ]
        for kind, g, n, a, label in bounds:
            [c] = classify_checklists([ChecklistScore("x", PolicyId.BASELINE, g, n, a)], kind)
            assert c.label == label, (kind, g, n, a)

        def boom(request):
            raise AssertionError("neutral checklist was re-judged")
        ep = ModelEndpoint("http://x/v1/", "m", temperature=0.7)
        client = LLMClient(ep, Cassette(tmp_path / "c", "record"), transport=httpx.MockTransport(boom))
        neutral = ChecklistClass("d1", PolicyId.BASELINE, 0.1, "neutral")
        assert ablate_items(direct_instance(), ["A?", "B?"], neutral, 3.0, client) == []
        assert client.stats.requests == 0

        for task, (cfg, results) in golden_runs.items():
            res = results["ablate"]
            assert res.exit_code == EXIT_OK
            classes = res.details["classes"]
            active = {(c.instance_id, c.policy.value) for c in classes if c.label != "neutral"}
            assert active and len(active) < len(classes)
            ablated = {(r["instance_id"], Condition.from_key(r["condition"]).policy.value)
                       for r in read_jsonl(cfg.out / "ablation_judgments.jsonl")}
            assert ablated <= active
            items = res.details["items"]
            judged = [it for it in items if it.label != "unresolved"]
            assert res.details["leave_one_out_requests"] >= 10 * len(judged)


def test_criterion_7_protocol_conformance(golden_runs, tmp_path):
    with criterion("7 pairwise order balance and always-first un-flipping"):
        cfg, _ = golden_runs["pairwise"]
        sets = load_judgments(cfg)
        assert sets
        for s in sets.values():
            assert s.is_complete
            assert s.order_counts() == {ORDER_ORIGINAL: 5, ORDER_SWAPPED: 5}
        recs = read_jsonl(cfg.out / "judgments.jsonl")
        assert all(r["order"] == (ORDER_ORIGINAL if r["replicate_index"] % 2 == 0 else ORDER_SWAPPED)
                   for r in recs)

        backend = always_first_backend()
        ep = ModelEndpoint("http://sim/v1/", "always-first", temperature=0.7)
        client = LLMClient(ep, Cassette(tmp_path / "af", "record"), transport=backend.transport())
        for inst in (pairwise_instance("x", 1), pairwise_instance("y", 2)):
            s = judge_instance(inst, Condition.none(), None, client)
            assert sorted(s.values) == [1] * 5 + [2] * 5
            assert aggregate_pairwise(s).pairwise_outcome == "tie"
            assert inconsistency_pairwise(s) == 5


def test_criterion_8_golden_run(golden_runs):
    with criterion("8 end-to-end golden replay is byte-identical"):
        for task, (cfg, results) in golden_runs.items():
            assert all(r.exit_code == EXIT_OK for r in results.values()), {
                k: r.message for k, r in results.items()}
            expected_dir = GOLDEN / "expected" / task
            expected = sorted(p.name for p in expected_dir.iterdir())
            produced = sorted(p.name for p in cfg.out.iterdir() if p.name not in EXCLUDED_FROM_GOLDEN)
            assert produced == expected
            for name in expected:
                assert (cfg.out / name).read_bytes() == (expected_dir / name).read_bytes(), name
        assert sum(len(kept_instances(cfg)) for cfg, _ in golden_runs.values()) >= 7


def test_criterion_9_policy_bounds(tmp_path):
    with criterion("9 ticking 2-8 items, length targets hit, at most 3 attempts"):
        shutil.copy(GEN30 / "config.json", tmp_path / "config.json")
        shutil.copy(GEN30 / "direct30.jsonl", tmp_path / "direct30.jsonl")
        cfg = RunConfig.load(tmp_path / "config.json", {
            "cassette": {"directory": str(GEN30 / "cassette"), "mode": "replay"},
            "out": str(tmp_path / "run"),
        })
        cmd_gen(cfg, offline())
        lists = [Checklist.from_record(r) for r in read_jsonl(cfg.out / "checklists.jsonl")]
        assert len({cl.instance_id for cl in lists}) == 30
        by_key = {(cl.instance_id, cl.sample_index, cl.policy): cl for cl in lists}
        ticking = [cl for cl in lists if cl.policy is PolicyId.TICKING]
        assert ticking and all(2 <= len(cl) <= 8 for cl in ticking)
        assert any(cl.generation_attempt > 1 for cl in ticking)
        scaled = 0
        for cl in lists:
            if cl.policy in (PolicyId.LENGTH_HALF, PolicyId.LENGTH_X1_5):
                base = by_key[(cl.instance_id, cl.sample_index, PolicyId.BASELINE)]
                factor = 0.5 if cl.policy is PolicyId.LENGTH_HALF else 1.5
                assert len(cl) == scaled_target(len(base), factor)
                scaled += 1
        assert scaled >= 50
        assert all(1 <= cl.generation_attempt <= 3 for cl in lists)
