"""Sweep CSV, report JSON and relaxation JSONL files."""

import csv
import json
import os
from typing import Any, Dict, Iterable, Iterator, List

from .errors import MalformedFile

SWEEP_FIELDS = ["alpha", "bound_bits", "myopic_bits", "fw_gap", "iterations", "wall_time_ms"]


def fmt(value: float) -> str:
    """17 significant digits, enough to parse back the same double."""
    return format(float(value), ".17g")


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_sweep_csv(path: str, rows: Iterable[Dict[str, Any]]) -> None:
    """Write sweep rows with the fixed header; floats as 17-digit decimals."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_FIELDS)
        for rec in rows:
            writer.writerow(
                [str(int(rec[k])) if k == "iterations" else fmt(rec[k]) for k in SWEEP_FIELDS]
            )


def read_sweep_csv(path: str) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        return [
            {k: int(v) if k == "iterations" else float(v) for k, v in row.items()}
            for row in reader
        ]


def write_json(path: str, payload: Any) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
        f.write("\n")


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_jsonl(path: str, records: Iterable[Dict[str, Any]]) -> int:
    """One relaxation record per line, keys in insertion order; returns the count."""
    _ensure_parent(path)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, separators=(",", ":"), allow_nan=False) + "\n")
            count += 1
    return count


def read_jsonl(path: str) -> Iterator[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedFile(f"{path}:{number}: not a JSON record: {e}") from e
            if not isinstance(rec, dict):
                raise MalformedFile(f"{path}:{number}: expected an object")
            yield rec
