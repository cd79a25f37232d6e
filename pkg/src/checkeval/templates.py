"""Prompt templates shipped with the package, pinned by content hash."""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources
from string import Template

TEMPLATE_NAMES = (
    "gen_baseline",
    "gen_specify",
    "gen_length",
    "gen_ticking",
    "refine_critique",
    "refine_regenerate",
    "judge_pairwise_plain",
    "judge_pairwise_checklist",
    "judge_direct_plain",
    "judge_direct_checklist",
)


@lru_cache(maxsize=None)
def _source(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    return resources.files(__package__).joinpath("templates", f"{name}.txt").read_text("utf-8")


def template_hash(name: str) -> str:
    return hashlib.sha256(_source(name).encode("utf-8")).hexdigest()[:16]


def all_hashes() -> dict[str, str]:
    return {name: template_hash(name) for name in TEMPLATE_NAMES}


def render(name: str, **values) -> str:
    return Template(_source(name)).substitute(**values)


def numbered(lines) -> str:
    return "\n".join(f"{i}. {text}" for i, text in enumerate(lines, start=1))
