import hashlib
import logging
import os
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from src import __version__
from src.utils.errors import NumericalConsistencyError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
CSV_FLOAT_FORMAT = "%.17g"


class OutputRecord(BaseModel):
    path: str
    sha256: str
    rows: int


class RunManifest(BaseModel):
    """Provenance of one invocation, written even when the run fails"""

    tool_version: str = __version__
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    command: str
    full_config: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    formula_modes: Dict[str, str] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    outputs: List[OutputRecord] = Field(default_factory=list)
    status: str = "ok"
    exit_code: int = 0
    failure: Optional[str] = None


def file_digest(path: str) -> str:
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def check_finite(frame: pd.DataFrame, name: str) -> None:
    """Refuse tables holding NaN or infinite numbers"""
    numeric = frame.select_dtypes(include=[np.number])
    bad = ~np.isfinite(numeric.to_numpy(dtype=float))
    if bad.any():
        columns = sorted({numeric.columns[i] for i in np.nonzero(bad)[1]})
        raise NumericalConsistencyError(f"{name} has non-finite values in columns {columns}")


def write_csv(frame: pd.DataFrame, out_dir: str, name: str) -> OutputRecord:
    """Write a table as CSV with 17 significant digits and return its digest"""
    check_finite(frame, name)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.csv")
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    record = OutputRecord(path=path, sha256=file_digest(path), rows=len(frame))
    logger.info(f"Wrote {record.rows} rows to {path}")
    return record


def write_manifest(manifest: RunManifest, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, "w", encoding="utf-8") as f:
        f.write(manifest.model_dump_json(indent=2))
        f.write("\n")
    logger.info(f"Wrote manifest to {path}")
    return path


def read_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as f:
        return RunManifest.model_validate_json(f.read())
