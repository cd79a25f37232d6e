"""
Replaying the committed golden cassette
=======================================

The test fixtures ship a recorded cassette for four pairwise instances.
Replaying it needs no network and reproduces the committed reports.
"""

import filecmp
import shutil
import tempfile
from pathlib import Path

import httpx

from checkeval.pipeline import RunConfig, cmd_ablate, cmd_gen, cmd_judge, cmd_sweep

golden = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden"
work = Path(tempfile.mkdtemp(prefix="checkeval-golden-"))
for name in ("pairwise.json", "pairwise.jsonl"):
    shutil.copy(golden / name, work / name)

config = RunConfig.load(work / "pairwise.json", {
    "cassette": {"directory": str(golden / "cassette"), "mode": "replay"},
})


def refuse(request):
    raise RuntimeError(f"unexpected network call to {request.url}")


offline = httpx.MockTransport(refuse)

# %%
cmd_gen(config, offline)
cmd_judge(config, offline)
cmd_sweep(config)
result = cmd_ablate(config, offline)
print(result.message)

# %%
# Compare with the committed reports.
expected = golden / "expected" / "pairwise"
names = sorted(p.name for p in expected.iterdir())
_, mismatch, errors = filecmp.cmpfiles(expected, config.out, names, shallow=False)
print("identical files:", len(names) - len(mismatch) - len(errors), "of", len(names))
print((config.out / "sweep.tsv").read_text())
