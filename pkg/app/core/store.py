# app/core/store.py
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, List, Optional, Union

from app.core.config import settings

logger = logging.getLogger(__name__)


def dump_json(payload: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_text_atomic(path: Union[str, Path], text: str) -> Path:
    """Write ``text`` to ``path`` through a temp file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


class ReportStore:
    """File-backed store for check reports and summaries."""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        self.root = Path(root) if root is not None else Path(settings.REPORT_DIR)

    def path_for(self, name: str) -> Path:
        if not name.endswith(".json"):
            name = f"{name}.json"
        return self.root / name

    def write_json(self, name: str, payload: Any) -> Path:
        path = write_text_atomic(self.path_for(name), dump_json(payload))
        logger.info(f"Report written to {path}")
        return path

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
        logger.info(f"Report written to {path}")
        return path

    def read_json(self, name: str) -> Any:
        path = self.path_for(name)
        if not path.exists():
            raise FileNotFoundError(f"No report named {name}")
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)

    def list_reports(self) -> List[str]:
        if not self.root.exists():
            return []
        return sorted(p.stem for p in self.root.glob("*.json") if not p.name.startswith("."))


# Singleton instance
report_store = ReportStore()
