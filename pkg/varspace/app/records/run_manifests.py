import hashlib
import json
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app import __version__

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    command: str
    config_hash: Optional[str] = None
    seed: Optional[int] = None
    library_version: str = __version__
    started_at: str
    finished_at: Optional[str] = None
    status: str = "running"
    exit_code: Optional[int] = None
    outputs: List[str] = Field(default_factory=list)
    message: str = ""


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON form"""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def start_manifest(command: str) -> RunManifest:
    return RunManifest(command=command, started_at=utc_now())


def save_manifest(store, manifest: RunManifest) -> RunManifest:
    """Written last: lists every artifact the store has emitted"""
    final = manifest.model_copy(update={"finished_at": utc_now(), "outputs": list(store.outputs)})
    store.write_json(MANIFEST_NAME, final.model_dump(), track=False)
    return final
