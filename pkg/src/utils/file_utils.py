"""
Report file helpers for the experiment runner.
"""

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np

from ..utils.logger import get_logger

logger = get_logger(__name__)


def ensure_directory_exists(directory_path: Path) -> None:
    """Create directory if it doesn't exist."""
    Path(directory_path).mkdir(parents=True, exist_ok=True)
    logger.debug(f"Ensured directory exists: {directory_path}")


def to_plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and dataclass-like values into JSON-friendly objects."""
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if hasattr(value, "value") and hasattr(value, "name") and not isinstance(value, (str, int, float)):
        return value.value
    return value


def format_cell(value: Any) -> str:
    """
    Format one CSV cell.

    Floats are written with repr, which round-trips through float() and
    always uses '.' as the decimal separator.
    """
    value = to_plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def collect_columns(records: Sequence[Mapping[str, Any]]) -> List[str]:
    """Union of record keys, in first-seen order."""
    columns: List[str] = []
    for record in records:
        for key in record:
            if key not in columns:
                columns.append(key)
    return columns


def write_csv(path: Path, records: Sequence[Mapping[str, Any]]) -> Path:
    columns = collect_columns(records)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for record in records:
            writer.writerow([format_cell(record.get(column)) for column in columns])
    return path


def write_json(path: Path, payload: Any) -> Path:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(to_plain(payload), handle, indent=2, sort_keys=False)
        handle.write("\n")
    return path


def emit_results(out_dir: Path, experiment: str, records: Sequence[Mapping[str, Any]],
                 formats: Iterable[str] = ("csv", "json"), header: Mapping[str, Any] = None) -> Dict[str, Path]:
    """
    Write the experiment records.

    Args:
        out_dir: Report folder (created if missing)
        experiment: Experiment name, used as the file stem
        records: One mapping per result row
        formats: Any of "csv" and "json"
        header: Echoed parameters placed in the JSON document next to the records

    Returns:
        Mapping from format to written path
    """
    out_dir = Path(out_dir)
    ensure_directory_exists(out_dir)
    written: Dict[str, Path] = {}
    for fmt in formats:
        fmt = fmt.lower()
        target = out_dir / f"{experiment}.{fmt}"
        if fmt == "csv":
            written[fmt] = write_csv(target, records)
        elif fmt == "json":
            written[fmt] = write_json(target, {"parameters": dict(header or {}), "records": list(records)})
        else:
            raise ValueError(f"Unsupported report format: {fmt}")
        logger.info(f"📄 Wrote {target}")
    return written


def write_sidecar(out_dir: Path, experiment: str, metadata: Mapping[str, Any], complete: bool) -> Path:
    """Write <experiment>.meta.json with the run metadata and completion flag."""
    out_dir = Path(out_dir)
    ensure_directory_exists(out_dir)
    payload = dict(metadata)
    payload["complete"] = bool(complete)
    payload["written_at"] = datetime.now(timezone.utc).isoformat()
    return write_json(out_dir / f"{experiment}.meta.json", payload)
