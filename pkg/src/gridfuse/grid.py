"""Occupancy grid types, cell classification and text/PGM serialization.

Coordinates are ``(row, col)``, zero-based. Cells are stored as read-only
``int8`` numpy arrays.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParseError

UNKNOWN = -1

_CHAR_TO_VALUE = {"0": 0, "1": 1, ".": UNKNOWN}
_VALUE_TO_CHAR = {0: "0", 1: "1", UNKNOWN: "."}


def _frozen(cells) -> np.ndarray:
    arr = np.array(cells, dtype=np.int8, copy=True)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class _Grid:
    cells: np.ndarray
    _allowed = frozenset({0, 1})

    def __post_init__(self):
        arr = _frozen(self.cells)
        bad = ~np.isin(arr, list(self._allowed))
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValueError(f"illegal value {arr[r, c]} at ({r}, {c}) for {type(self).__name__}")
        object.__setattr__(self, "cells", arr)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((type(self).__name__, self.cells.shape, self.cells.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}({self.height}x{self.width})"


class GroundTruthMap(_Grid):
    """The true environment: 1 = obstacle, 0 = free."""


class ObservationMap(_Grid):
    """One exploration round. -1 marks a cell not yet observed."""

    _allowed = frozenset({0, 1, UNKNOWN})

    @classmethod
    def unknown(cls, height: int, width: int) -> "ObservationMap":
        return cls(np.full((height, width), UNKNOWN, dtype=np.int8))

    @property
    def complete(self) -> bool:
        return not (self.cells == UNKNOWN).any()


class FusedMap(_Grid):
    """Fused estimate of the ground truth."""


class CellClass(enum.Enum):
    OBSTACLE = "obstacle"
    FREE_IN_M = "free_in_m"
    FREE_OUTSIDE_M = "free_outside_m"


def parse_map(text: str, kind=GroundTruthMap):
    """Parse the ``0``/``1``/``.`` row format into ``kind``.

    ``.`` (unknown) is only accepted when ``kind`` is ObservationMap.
    """
    rows = text.splitlines()
    while rows and rows[-1] == "":
        rows.pop()
    if not rows:
        raise ParseError("empty map")
    allowed = set("01.") if kind is ObservationMap else set("01")
    width = len(rows[0])
    if width == 0:
        raise ParseError("row 0 is empty")
    values = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"ragged row {i}: length {len(row)}, expected {width}")
        for j, ch in enumerate(row):
            if ch not in allowed:
                raise ParseError(f"illegal character {ch!r} at row {i}, column {j}")
        values.append([_CHAR_TO_VALUE[ch] for ch in row])
    return kind(np.array(values, dtype=np.int8))


def serialize_map(grid: _Grid) -> str:
    return "".join("".join(_VALUE_TO_CHAR[int(v)] for v in row) + "\n" for row in grid.cells)


def read_map(path, kind=GroundTruthMap):
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read(), kind)


def write_map(path, grid: _Grid) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_map(grid))


def to_pgm(grid: _Grid) -> str:
    """Plain (P2) PGM: free=255 white, obstacle=0 black, unknown=128 gray."""
    lut = {0: 255, 1: 0, UNKNOWN: 128}
    lines = ["P2", f"{grid.width} {grid.height}", "255"]
    lines += [" ".join(str(lut[int(v)]) for v in row) for row in grid.cells]
    return "\n".join(lines) + "\n"


def coverage_counts(truth: GroundTruthMap, offsets) -> np.ndarray:
    """Number of obstacle neighbourhoods covering each cell (clipped at the border).

    The centre offset is skipped, so an isolated obstacle has coverage 0.
    """
    obstacles = truth.cells == 1
    h, w = truth.shape
    cover = np.zeros((h, w), dtype=np.int64)
    for dy, dx in offsets:
        if (dy, dx) == (0, 0):
            continue
        # obstacle at (r, c) covers (r + dy, c + dx)
        src = obstacles[max(0, -dy): h - max(0, dy), max(0, -dx): w - max(0, dx)]
        cover[max(0, dy): h - max(0, -dy), max(0, dx): w - max(0, -dx)] += src
    return cover


def classify_cells(truth: GroundTruthMap, nh) -> np.ndarray:
    """Label every cell with its CellClass; returns an object array of the truth's shape."""
    offsets = nh.offsets if hasattr(nh, "offsets") else nh
    covered = coverage_counts(truth, offsets) > 0
    out = np.full(truth.shape, CellClass.FREE_OUTSIDE_M, dtype=object)
    out[covered] = CellClass.FREE_IN_M
    out[truth.cells == 1] = CellClass.OBSTACLE
    return out


@dataclass(frozen=True)
class ClassCount:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")


def accuracy_report(fused: FusedMap, truth: GroundTruthMap, classes: np.ndarray) -> dict:
    """Per-class counts of cells where ``fused`` agrees with ``truth``."""
    if fused.shape != truth.shape or classes.shape != truth.shape:
        raise DimensionError(
            f"shapes differ: fused {fused.shape}, truth {truth.shape}, classes {classes.shape}"
        )
    hit = fused.cells == truth.cells
    report = {}
    for cls in CellClass:
        mask = classes == cls
        report[cls] = ClassCount(int(hit[mask].sum()), int(mask.sum()))
    return report
