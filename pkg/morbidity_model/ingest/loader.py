"""Loaders and writers for respondent and location files."""

import csv
import logging
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..config import ModelConfig
from ..errors import (
    ConfigError,
    DataValidationError,
    DanglingAdjacency,
    IncompletePartition,
    IndexOutOfRange,
    MalformedRow,
    MissingValue,
)
from ..schemas import BINARY_RAW_FIELDS, RAW_FIELDS, KernelKind, RespondentRecord
from ..utils.io import format_float
from .design import build_design
from .locations import LocationTable, adjacency_from_edges

logger = logging.getLogger(__name__)

RESPONDENTS_FILE = "respondents.csv"
LOCATIONS_FILE = "locations.csv"
ADJACENCY_FILE = "adjacency.csv"


def distance_file(m: int) -> str:
    return f"distance_{m}.csv"


@contextmanager
def _csv_reader(path: Path) -> Iterator:
    """csv.reader over a UTF-8 file; undecodable bytes surface as MalformedRow."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            yield reader
        except UnicodeDecodeError as e:
            raise MalformedRow(reader.line_num + 1,
                               f"{path.name} is not UTF-8 text (byte {e.object[e.start]:#04x})") from e


def respondent_columns(num_diseases: int) -> List[str]:
    """Canonical header of respondents.csv."""
    return ["id", "location", "cohort"] + [f"y_{j + 1}" for j in range(num_diseases)] + list(RAW_FIELDS)


def load_dataset(respondents_path: str, config: ModelConfig,
                 num_locations: Optional[int] = None) -> List[RespondentRecord]:
    """
    Load and validate respondents.csv.

    Rows with any missing response or covariate are rejected, never imputed.

    Args:
        respondents_path: Path to the respondents CSV
        config: Model configuration (diseases, cohorts, covariate roster)
        num_locations: Location count to bound-check against, if known

    Returns:
        Records in file order
    """
    path = Path(respondents_path)
    if not path.exists():
        raise DataValidationError(f"respondents file not found: {respondents_path}")

    columns = respondent_columns(config.num_diseases)
    records: List[RespondentRecord] = []
    with _csv_reader(path) as reader:
        header = next(reader, None)
        if header is None:
            raise MalformedRow(1, "empty file")
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise MalformedRow(1, f"header lacks columns {missing}")
        position = {name: header.index(name) for name in columns}

        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
            records.append(_parse_row(row, position, line, config, num_locations))

    logger.info(f"Loaded {len(records)} respondents from {path}")
    return records


def _parse_row(row: Sequence[str], position: Dict[str, int], line: int,
               config: ModelConfig, num_locations: Optional[int]) -> RespondentRecord:
    def cell(name: str) -> str:
        value = row[position[name]].strip()
        if value == "" or value.upper() in ("NA", "NAN"):
            raise MissingValue(name, line)
        return value

    record_id = cell("id")
    location = _parse_index(cell("location"), "location", line, num_locations)
    cohort = _parse_index(cell("cohort"), "cohort", line, config.num_cohorts)

    responses = []
    for j in range(config.num_diseases):
        name = f"y_{j + 1}"
        value = cell(name)
        if value not in ("0", "1"):
            raise MalformedRow(line, f"{name} must be 0 or 1, got '{value}'")
        responses.append(int(value))

    raw: Dict[str, float] = {}
    for name in RAW_FIELDS:
        value = cell(name)
        try:
            number = float(value)
        except ValueError:
            raise MalformedRow(line, f"{name} is not a number: '{value}'")
        if not math.isfinite(number):
            raise MalformedRow(line, f"{name} is not finite")
        if name in BINARY_RAW_FIELDS and number not in (0.0, 1.0):
            raise MalformedRow(line, f"{name} must be 0 or 1, got '{value}'")
        raw[name] = number

    try:
        covariates = build_design(raw, config)
    except DataValidationError as e:
        raise MalformedRow(line, str(e)) from e

    return RespondentRecord(
        id=record_id,
        location=location,
        cohort=cohort,
        responses=responses,
        covariates=covariates.tolist(),
        raw=raw,
    )


def _parse_index(value: str, field: str, line: int, bound: Optional[int]) -> int:
    try:
        index = int(value)
    except ValueError:
        raise MalformedRow(line, f"{field} is not an integer: '{value}'")
    if index < 0 or (bound is not None and index >= bound):
        raise IndexOutOfRange(field, line, index, bound)
    return index


def write_dataset(records: Sequence[RespondentRecord], respondents_path: str, config: ModelConfig) -> None:
    """Write records in the canonical respondents.csv layout."""
    path = Path(respondents_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(respondent_columns(config.num_diseases))
        for record in records:
            raw_cells = []
            for name in RAW_FIELDS:
                value = record.raw[name]
                raw_cells.append(str(int(value)) if name in BINARY_RAW_FIELDS else format_float(value))
            writer.writerow([record.id, record.location, record.cohort] + list(record.responses) + raw_cells)


def load_locations(region_path: str, adjacency_path: str, distance_paths: Sequence[str],
                   config: ModelConfig) -> LocationTable:
    """
    Load locations.csv, adjacency.csv and the distance matrices.

    Args:
        region_path: CSV with columns location,region
        adjacency_path: CSV with columns location_a,location_b (each edge once)
        distance_paths: One dense CSV per distance matrix, in index order
        config: Model configuration; its distance kernels must reference loaded matrices

    Returns:
        Validated LocationTable
    """
    region_rows = _read_int_rows(region_path, ["location", "region"])
    if not region_rows:
        raise DataValidationError(f"no locations in {region_path}")
    n = max(row[0] for row in region_rows) + 1
    region_of = [-1] * n
    for location, region in region_rows:
        if location < 0 or region < 0 or region_of[location] != -1:
            raise IncompletePartition(location)
        region_of[location] = region
    for l, r in enumerate(region_of):
        if r < 0:
            raise IncompletePartition(l)

    edges = _read_int_rows(adjacency_path, ["location_a", "location_b"])
    for a, b in edges:
        if not (0 <= a < n and 0 <= b < n) or a == b:
            raise DanglingAdjacency(a, b)
    adjacency = adjacency_from_edges(n, edges)

    matrices = [_read_distance_matrix(p, n) for p in distance_paths]
    for spec in config.kernels:
        if spec.kind == KernelKind.DISTANCE and spec.distance_index >= len(matrices):
            raise ConfigError(
                f"kernel {spec.label()} references a missing distance matrix ({len(matrices)} loaded)",
                key="model.kernels",
            )

    table = LocationTable(region_of=np.asarray(region_of), adjacency=adjacency,
                          distance_matrices=tuple(matrices))
    logger.info(f"Loaded {table.num_locations} locations in {table.num_regions} regions, "
                f"{len(table.edges())} edges, {table.num_distance_matrices} distance matrices")
    return table


def _read_int_rows(file_path: str, columns: List[str]) -> List[Tuple[int, ...]]:
    path = Path(file_path)
    if not path.exists():
        raise DataValidationError(f"file not found: {file_path}")
    rows = []
    with _csv_reader(path) as reader:
        header = [h.strip() for h in next(reader, [])]
        if header != columns:
            raise MalformedRow(1, f"{path.name} header must be {','.join(columns)}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise MalformedRow(line, f"{path.name}: expected {len(columns)} fields")
            try:
                rows.append(tuple(int(v) for v in row))
            except ValueError:
                raise MalformedRow(line, f"{path.name}: non-integer index")
    return rows


def _read_distance_matrix(file_path: str, n: int) -> np.ndarray:
    path = Path(file_path)
    if not path.exists():
        raise DataValidationError(f"file not found: {file_path}")
    with _csv_reader(path) as reader:
        header = next(reader, [])
        expected = ["location"] + [str(l) for l in range(n)]
        if [h.strip() for h in header] != expected:
            raise MalformedRow(1, f"{path.name} header must list locations 0..{n - 1}")
        matrix = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + 1 or row[0].strip() != str(len(matrix)):
                raise MalformedRow(line, f"{path.name}: row must start with location {len(matrix)}")
            try:
                matrix.append([float(v) for v in row[1:]])
            except ValueError:
                raise MalformedRow(line, f"{path.name}: non-numeric distance")
    if len(matrix) != n:
        raise MalformedRow(len(matrix) + 2, f"{path.name}: expected {n} rows")
    return np.asarray(matrix, dtype=float)


def write_locations(table: LocationTable, directory: str) -> List[str]:
    """Write locations.csv, adjacency.csv and distance_<m>.csv; returns written paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / LOCATIONS_FILE
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["location", "region"])
        for l, r in enumerate(table.region_of):
            writer.writerow([l, int(r)])
    written.append(str(path))

    path = out / ADJACENCY_FILE
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["location_a", "location_b"])
        for a, b in table.edges():
            writer.writerow([a, b])
    written.append(str(path))

    for m, D in enumerate(table.distance_matrices):
        path = out / distance_file(m)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["location"] + [str(l) for l in range(table.num_locations)])
            for l, row in enumerate(D):
                writer.writerow([l] + [format_float(v) for v in row])
        written.append(str(path))
    return written


def load_data_dir(directory: str, config: ModelConfig) -> Tuple[List[RespondentRecord], LocationTable]:
    """Load the four file kinds from one data directory."""
    root = Path(directory)
    distance_paths = []
    m = 0
    while (root / distance_file(m)).exists():
        distance_paths.append(str(root / distance_file(m)))
        m += 1
    table = load_locations(str(root / LOCATIONS_FILE), str(root / ADJACENCY_FILE), distance_paths, config)
    records = load_dataset(str(root / RESPONDENTS_FILE), config, num_locations=table.num_locations)
    return records, table
