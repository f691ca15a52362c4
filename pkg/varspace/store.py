import json
import logging
import os
from typing import Any, List, Optional

import pandas as pd

from config import settings

logger = logging.getLogger("app.store")


class ArtifactStore:
    """
    Centralized handle on one run's output directory.
    Every CSV/JSON artifact goes through here so the run manifest can list it.
    """

    def __init__(self, root: Optional[str] = None):
        self.root = os.path.abspath(root or settings.OUTPUT_DIR)
        self.outputs: List[str] = []
        self.connect()

    def connect(self):
        """Create the output directory if needed"""
        try:
            os.makedirs(self.root, exist_ok=True)
            logger.debug(f"Artifact store ready at '{self.root}'")
        except OSError as e:
            logger.error(f"❌ Artifact store: cannot create '{self.root}': {e}")
            raise

    @property
    def log_dir(self) -> str:
        return os.path.join(self.root, settings.LOG_DIR_NAME)

    def path_for(self, name: str) -> str:
        return os.path.join(self.root, name)

    def _track(self, name: str) -> None:
        if name not in self.outputs:
            self.outputs.append(name)

    def write_csv(self, name: str, frame: pd.DataFrame) -> str:
        """UTF-8, header row, '.' decimal, round-trip floats, '\\n' line endings"""
        path = self.path_for(name)
        frame.to_csv(path, index=False, encoding="utf-8", float_format="%.17g", lineterminator="\n")
        self._track(name)
        logger.info(f"📝 wrote {name} ({len(frame)} rows)")
        return path

    def write_json(self, name: str, payload: Any, track: bool = True) -> str:
        """UTF-8, sorted keys, two-space indent"""
        path = self.path_for(name)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(payload, handle, sort_keys=True, indent=2, ensure_ascii=False, default=str)
            handle.write("\n")
        if track:
            self._track(name)
        logger.info(f"📝 wrote {name}")
        return path

    def read_json(self, name: str) -> Any:
        with open(self.path_for(name), encoding="utf-8") as handle:
            return json.load(handle)

    def read_csv(self, name: str) -> pd.DataFrame:
        return pd.read_csv(self.path_for(name))
