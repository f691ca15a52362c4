"""
Variation Spaces - Experiment Runner
====================================
One subcommand per experiment. Each run reads a JSON config, writes its CSV/JSON
artifacts into the output directory and finishes with a run manifest.

    python main.py maurey-rate --config configs/maurey_rate.json --out runs/maurey
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from app.cli.utils import setup_logging
from app.cli.views import COMMANDS, parse_config
from app.errors import ConfigurationError, VarspaceError
from app.records.run_manifests import config_hash, save_manifest, start_manifest
from config import settings
from store import ArtifactStore

logger = logging.getLogger("app.runner")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varspace", description="Variation-space experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        sub = subparsers.add_parser(name, help=(handler.__doc__ or "").strip())
        sub.add_argument("--config", required=True, help="JSON experiment config")
        sub.add_argument("--out", default=None, help="output directory (default: config output_dir, then VARSPACE_OUTPUT_DIR)")
        sub.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sub.add_argument("--quiet", action="store_true", help="console shows warnings and errors only")
    return parser


def _load_raw_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as e:
        raise ConfigurationError(f"cannot read config '{path}': {e}", loc="config") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config '{path}' is not valid JSON: {e}", loc="config") from e
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object", loc="config")
    return raw


def _output_dir(args, raw: dict) -> str:
    if args.out:
        return args.out
    configured = raw.get("output_dir") if isinstance(raw, dict) else None
    return configured or settings.OUTPUT_DIR


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    raw: dict = {}
    load_error = None
    try:
        raw = _load_raw_config(args.config)
    except ConfigurationError as e:
        load_error = e

    store = ArtifactStore(_output_dir(args, raw))
    setup_logging(store.log_dir, quiet=args.quiet)
    manifest = start_manifest(args.command)
    exit_code = 1

    try:
        if load_error is not None:
            raise load_error
        _check_settings()
        if args.seed is not None:
            raw["seed"] = args.seed
        config = parse_config(raw)
        manifest = manifest.model_copy(update={"config_hash": config_hash(config.model_dump(mode="json")), "seed": config.seed})
        if config.experiment != args.command:
            raise ConfigurationError(
                f"config is for '{config.experiment}', not '{args.command}'", loc="experiment"
            )

        logger.info(f"🚀 {args.command} started (seed={config.seed}, out={store.root})")
        exit_code = COMMANDS[args.command](config, store)
        manifest = manifest.model_copy(update={"status": "success", "exit_code": exit_code})
        logger.info(f"✅ {args.command} finished")
    except VarspaceError as e:
        exit_code = e.exit_code
        payload = e.to_payload()
        store.write_json("error.json", payload)
        print(json.dumps(payload, sort_keys=True, default=str))
        manifest = manifest.model_copy(update={"status": "failed", "exit_code": exit_code, "message": e.message})
        logger.error(f"❌ {args.command} failed: {e.message}")
    except Exception as e:
        exit_code = 1
        payload = {"status": "error", "error_type": "internal", "message": str(e), "errors": [], "details": {}}
        store.write_json("error.json", payload)
        print(json.dumps(payload, sort_keys=True, default=str))
        manifest = manifest.model_copy(update={"status": "failed", "exit_code": exit_code, "message": str(e)})
        logger.exception(f"❌ {args.command} crashed")
    finally:
        save_manifest(store, manifest)

    return exit_code


def _check_settings() -> None:
    try:
        settings.validate()
    except ValueError as e:
        raise ConfigurationError(str(e), loc="settings") from e


if __name__ == "__main__":
    sys.exit(run())
