"""
A full run against a scripted backend
=====================================

The scripted backend answers generation, critique and judging prompts
deterministically, so this records a cassette for a small direct-scoring
dataset and then walks through gen, judge, sweep and ablate. Run it twice:
the second run replays everything from the cassette.
"""

import json
import tempfile
from pathlib import Path

from checkeval.pipeline import RunConfig, cmd_ablate, cmd_gen, cmd_judge, cmd_sweep
from checkeval.simulate import ScriptedBackend

work = Path(tempfile.mkdtemp(prefix="checkeval-demo-"))
rows = [
    {"id": "haiku", "subset": "Easy", "input": "Write a haiku about rain in fewer than 20 words.",
     "output": "Soft rain on the roof / puddles gather silver light / the garden drinks deep",
     "annotations": [5, 4, 5]},
    {"id": "capital", "subset": "Easy", "input": "Name the capital of France and one landmark there.",
     "output": "Paris.", "annotations": [3, 2, 3]},
    {"id": "steps", "subset": "Hard", "input": "List three steps to reset a router, numbered.",
     "output": "Unplug it, wait, plug it back in.", "annotations": [2, 3, 2]},
]
(work / "data.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))

endpoint = {"base_url": "http://simulated.local/v1/", "model_name": "sim", "temperature": 0.7}
config = RunConfig.from_dict({
    "dataset": {"path": "data.jsonl", "kind": "direct"},
    "policies": ["baseline", "ticking", "length_half"],
    "gen_endpoint": endpoint,
    "judge_endpoint": endpoint,
    "cassette": {"directory": "cassette", "mode": "record"},
    "out": "run",
    "bootstrap_iterations": 300,
}, work)

# %%
# Each command writes plain-text artifacts into the run directory.
transport = ScriptedBackend().transport()
for name, step in (("gen", cmd_gen), ("judge", cmd_judge)):
    print(name, "->", step(config, transport).message)
print("sweep ->", cmd_sweep(config).message)
print("ablate ->", cmd_ablate(config, transport).message)

# %%
# The sweep table has one row per policy and gate setting.
print((config.out / "sweep.tsv").read_text())
print("artifacts in", config.out)
