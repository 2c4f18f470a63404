"""I/O utilities for saving and loading run artifacts."""

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np


def save_json(data: Any, file_path: str) -> None:
    """
    Save data to a JSON file with sorted keys.

    Args:
        data: Data to save (numpy arrays and scalars are converted)
        file_path: Path to save file
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_to_jsonable, ensure_ascii=False)
        f.write("\n")


def load_json(file_path: str) -> Any:
    """
    Load data from JSON file.

    Args:
        file_path: Path to load file from

    Returns:
        Loaded data
    """
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def format_float(value: float) -> str:
    """Shortest representation that round-trips exactly."""
    return repr(float(value))


def save_matrix_csv(matrix: np.ndarray, header: Sequence[str], file_path: str) -> None:
    """
    Save a 2-D array as CSV with a header row.

    Args:
        matrix: Rows x columns array
        header: Column names
        file_path: Path to save file
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in matrix:
            writer.writerow([format_float(v) for v in row])


def load_matrix_csv(file_path: str) -> tuple:
    """
    Load a CSV written by save_matrix_csv.

    Returns:
        Tuple of (header list, float array)
    """
    with open(file_path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def save_records_csv(rows: Iterable[Dict[str, Any]], columns: List[str], file_path: str) -> None:
    """Save dict rows as CSV; floats use the round-trip representation."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in columns])


def file_digest(file_path: str) -> str:
    """SHA-256 of a file's bytes."""
    sha = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            sha.update(block)
    return sha.hexdigest()


def directory_digests(directory: str, pattern: str = "*") -> Dict[str, str]:
    """Digests of every matching file in a directory, keyed by file name."""
    return {p.name: file_digest(str(p)) for p in sorted(Path(directory).glob(pattern)) if p.is_file()}


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return str(value)
