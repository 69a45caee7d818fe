"""Field files, convergence logs and JSON reports.

Field file layout (little-endian): magic b"FBLF", version u32, N u8, s f64,
L f64, M u32, then M^N f64 values in row-major order (last axis fastest).
"""

from __future__ import annotations

import csv
import json
import logging
import struct
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .exceptions import DomainError, FieldFormatError
from .grid import Field
from .models import GridSpec, IterationRecord

logger = logging.getLogger(__name__)

MAGIC = b"FBLF"
VERSION = 1
HEADER = struct.Struct("<4sIBddI")
CSV_COLUMNS = ("iter", "energy", "nehari", "grad_residual", "min_u", "max_u")
PROFILE_COLUMNS = ("r", "Q")


def encode_field(u: Field) -> bytes:
    grid = u.grid
    header = HEADER.pack(
        MAGIC, VERSION, grid.dimension, grid.order, grid.box_length, grid.points_per_axis
    )
    return header + u.values.astype("<f8").tobytes(order="C")


def decode_field(data: bytes) -> Field:
    if len(data) < HEADER.size:
        raise FieldFormatError(f"field file truncated: {len(data)} bytes, header needs {HEADER.size}")
    magic, version, dimension, order, box, points = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FieldFormatError(f"unsupported field file version {version}")
    try:
        grid = GridSpec(dimension=dimension, order=order, box_length=box, points_per_axis=points)
    except (DomainError, ValueError) as exc:
        raise FieldFormatError(f"invalid grid in field header: {exc}") from exc
    expected = HEADER.size + 8 * grid.size
    if len(data) != expected:
        raise FieldFormatError(f"field file has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64)
    return Field.from_flat(grid, values)


def write_field(path: Path, u: Field) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(u))
    logger.debug(f"Wrote field {path} ({u.grid.size} values)")
    return path


def read_field(path: Path) -> Field:
    path = Path(path)
    if not path.exists():
        raise FieldFormatError(f"field file not found: {path}")
    return decode_field(path.read_bytes())


def write_convergence_csv(path: Path, records: Iterable[IterationRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow([record.iteration, *(repr(float(v)) for v in record[1:])])
    return path


def read_convergence_csv(path: Path) -> list[IterationRecord]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise FieldFormatError(f"unexpected convergence header {header}")
        return [
            IterationRecord(int(row[0]), *(float(v) for v in row[1:])) for row in reader
        ]


def write_profile_csv(path: Path, radii: list[float], values: list[float], centers: list[tuple[float, ...]]) -> Path:
    """r, Q and the center coordinates (x1..xN) per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dimension = len(centers[0]) if centers else 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([*PROFILE_COLUMNS, *(f"x{i + 1}" for i in range(dimension))])
        for r, q, center in zip(radii, values, centers):
            writer.writerow([repr(float(r)), repr(float(q)), *(repr(float(c)) for c in center)])
    return path


def write_report(path: Path, payload: dict[str, Any]) -> Path:
    """JSON with sorted keys; floats use the shortest round-trip representation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_report(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FieldFormatError(f"report not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"report {path} is not valid JSON: {exc}") from exc
