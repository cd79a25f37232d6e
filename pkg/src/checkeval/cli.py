"""Command-line entry point: ``checkeval {gen,judge,sweep,ablate,run}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from .client import LLMClientError
from .core import ContractError, ValidationError
from .pipeline import (
    EXIT_OK,
    EXIT_TRANSPORT,
    EXIT_VALIDATION,
    RunConfig,
    cmd_ablate,
    cmd_gen,
    cmd_judge,
    cmd_sweep,
)

logger = logging.getLogger("checkeval")

COMMANDS = {
    "gen": lambda cfg: cmd_gen(cfg),
    "judge": lambda cfg: cmd_judge(cfg),
    "sweep": lambda cfg: cmd_sweep(cfg),
    "ablate": lambda cfg: cmd_ablate(cfg),
}


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _endpoint_override(spec: str) -> dict:
    """``MODEL@BASE_URL`` -> partial endpoint dict."""
    if "@" not in spec:
        raise argparse.ArgumentTypeError(f"endpoint must look like MODEL@BASE_URL, got {spec!r}")
    model, url = spec.split("@", 1)
    return {"model_name": model, "base_url": url}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="checkeval", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "run"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="run config JSON")
        p.add_argument("--dataset", type=Path)
        p.add_argument("--task", choices=("pairwise", "direct"))
        p.add_argument("--policies", type=_csv)
        p.add_argument("--grid", type=lambda s: [float(x) if "." in x else int(x) for x in _csv(s)])
        p.add_argument("--judge-endpoint", type=_endpoint_override, metavar="MODEL@URL")
        p.add_argument("--gen-endpoint", type=_endpoint_override, metavar="MODEL@URL")
        p.add_argument("--temperature", type=float, help="sampling temperature for both endpoints")
        p.add_argument("--cassette", choices=("record", "replay", "passthrough"))
        p.add_argument("--cassette-dir", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path)
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    o: dict = {}
    if args.dataset is not None:
        o.setdefault("dataset", {})["path"] = str(args.dataset.resolve())
    if args.task is not None:
        o["task"] = args.task
        o.setdefault("dataset", {})["kind"] = args.task
    if args.policies is not None:
        o["policies"] = args.policies
    if args.grid is not None:
        o["grid"] = args.grid
    for flag, key in (("judge_endpoint", "judge_endpoint"), ("gen_endpoint", "gen_endpoint")):
        value = getattr(args, flag)
        if value is not None:
            o[key] = dict(value)
    if args.temperature is not None:
        for key in ("judge_endpoint", "gen_endpoint"):
            o.setdefault(key, {})["temperature"] = args.temperature
    if args.cassette is not None:
        o.setdefault("cassette", {})["mode"] = args.cassette
    if args.cassette_dir is not None:
        o.setdefault("cassette", {})["directory"] = str(args.cassette_dir.resolve())
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out is not None:
        o["out"] = str(args.out.resolve())
    return o


def load_config(args: argparse.Namespace) -> RunConfig:
    overrides = overrides_from_args(args)
    if args.config is not None:
        return RunConfig.load(args.config, overrides)
    return RunConfig.from_dict(overrides, Path.cwd())


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
        steps = list(COMMANDS) if args.command == "run" else [args.command]
        code = EXIT_OK
        for step in steps:
            result = COMMANDS[step](config)
            print(f"{step}: {result.message}")
            code = max(code, result.exit_code)
        return code
    except (ValidationError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LLMClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
