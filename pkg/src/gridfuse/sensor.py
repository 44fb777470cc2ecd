"""Detection-error model around obstacles and the free-cell confidence floor."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, ParameterError, UnsupportedPattern
from .grid import CellClass, GroundTruthMap, classify_cells

Offset = tuple[int, int]


class QMode(enum.Enum):
    ADDITIVE = "additive"
    PRODUCT = "product"


@dataclass(frozen=True)
class Neighborhood:
    offsets: tuple[Offset, ...]

    def __post_init__(self):
        offs = tuple((int(dy), int(dx)) for dy, dx in self.offsets)
        if (0, 0) not in offs:
            raise ParameterError("neighbourhood must contain the centre offset (0, 0)")
        if len(set(offs)) != len(offs):
            raise ParameterError("neighbourhood offsets must be distinct")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def square(cls, size: int = 3) -> "Neighborhood":
        if size < 1 or size % 2 == 0:
            raise ParameterError(f"square neighbourhood size must be odd and positive, got {size}")
        r = size // 2
        return cls(tuple((dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)))

    @classmethod
    def from_keyword(cls, name: str) -> "Neighborhood":
        if name.startswith("square") and name[6:].isdigit():
            return cls.square(int(name[6:]))
        raise ParameterError(f"unknown neighbourhood keyword {name!r} (try square3, square5)")

    @property
    def off_center(self) -> tuple[Offset, ...]:
        return tuple(o for o in self.offsets if o != (0, 0))

    def __len__(self):
        return len(self.offsets)


@dataclass(frozen=True)
class ErrorDistribution:
    """Where a single detection of an obstacle lands: ``center_mass`` on the
    obstacle itself, the rest spread over ``off_center`` offsets."""

    center_mass: float
    off_center: dict = field(hash=False)

    def __post_init__(self):
        p = self.center_mass
        if not 0.0 < p < 1.0:
            raise ParameterError(f"center mass must lie in (0, 1), got {p}")
        if (0, 0) in self.off_center:
            raise ParameterError("off_center must not contain (0, 0)")
        if any(m < 0 for m in self.off_center.values()):
            raise ParameterError("masses must be non-negative")
        total = p + sum(self.off_center.values())
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"masses sum to {total!r}, not 1")

    @property
    def p(self) -> float:
        return self.center_mass

    @property
    def nh(self) -> Neighborhood:
        return Neighborhood(((0, 0),) + tuple(self.off_center))

    def mass(self, offset: Offset) -> float:
        if offset == (0, 0):
            return self.center_mass
        return self.off_center.get(offset, 0.0)


def make_uniform_de(p: float, nh: Neighborhood) -> ErrorDistribution:
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    others = nh.off_center
    if not others:
        raise ParameterError("neighbourhood has no cell besides the centre to scatter to")
    share = (1.0 - p) / len(others)
    return ErrorDistribution(p, {o: share for o in others})


@dataclass(frozen=True)
class SensorModel:
    de: ErrorDistribution
    qmode: QMode = QMode.ADDITIVE

    @classmethod
    def uniform(cls, p: float, nh: Union[Neighborhood, str] = "square3", qmode=QMode.ADDITIVE):
        if isinstance(nh, str):
            nh = Neighborhood.from_keyword(nh)
        return cls(make_uniform_de(p, nh), QMode(qmode))

    @property
    def p(self) -> float:
        return self.de.center_mass

    @property
    def nh(self) -> Neighborhood:
        return self.de.nh


class PatternKnowledge:
    """What is known about obstacle layout when choosing q'."""

    NOTHING: "PatternKnowledge"
    SEPARATED_LINES: "PatternKnowledge"

    def __init__(self, kind: str, truth: GroundTruthMap | None = None):
        self.kind = kind
        self.truth = truth

    @classmethod
    def explicit(cls, truth: GroundTruthMap) -> "PatternKnowledge":
        if not isinstance(truth, GroundTruthMap):
            raise ParameterError("explicit pattern knowledge needs a GroundTruthMap")
        return cls("explicit", truth)

    def __repr__(self):
        return f"PatternKnowledge({self.kind})"


PatternKnowledge.NOTHING = PatternKnowledge("nothing")
PatternKnowledge.SEPARATED_LINES = PatternKnowledge("lines")


def _combine(masses, mode: QMode) -> float:
    masses = np.asarray(masses, dtype=float)
    if QMode(mode) is QMode.ADDITIVE:
        return min(1.0, float(masses.sum()))
    return float(1.0 - np.prod(1.0 - masses))


def false_positive_map(truth: GroundTruthMap, de: ErrorDistribution, mode=QMode.ADDITIVE) -> np.ndarray:
    """1 - q(x, y) for every cell; obstacle cells are NaN."""
    mode = QMode(mode)
    h, w = truth.shape
    obstacles = truth.cells == 1
    acc = np.zeros((h, w)) if mode is QMode.ADDITIVE else np.ones((h, w))
    for (dy, dx), e in de.off_center.items():
        if e == 0.0:
            continue
        hit = np.zeros((h, w), dtype=bool)
        hit[max(0, dy): h - max(0, -dy), max(0, dx): w - max(0, -dx)] = obstacles[
            max(0, -dy): h - max(0, dy), max(0, -dx): w - max(0, dx)
        ]
        if mode is QMode.ADDITIVE:
            acc += hit * e
        else:
            acc *= np.where(hit, 1.0 - e, 1.0)
    fp = np.minimum(acc, 1.0) if mode is QMode.ADDITIVE else 1.0 - acc
    fp[obstacles] = np.nan
    return fp


def false_positive_prob(truth: GroundTruthMap, de: ErrorDistribution, cell, mode=QMode.ADDITIVE) -> float:
    """Probability that one round reads the free ``cell`` as occupied."""
    r, c = cell
    if truth.cells[r, c] == 1:
        raise DomainError(f"cell {cell} is an obstacle; q is defined on free cells only")
    h, w = truth.shape
    masses = []
    for (dy, dx), e in de.off_center.items():
        orow, ocol = r - dy, c - dx
        if 0 <= orow < h and 0 <= ocol < w and truth.cells[orow, ocol] == 1:
            masses.append(e)
    return _combine(masses, mode)


_LINE_SIDES = {
    # free cell beside a vertical / horizontal line sees these obstacle->cell offsets
    "vertical_right": ((-1, 1), (0, 1), (1, 1)),
    "vertical_left": ((-1, -1), (0, -1), (1, -1)),
    "horizontal_below": ((1, -1), (1, 0), (1, 1)),
    "horizontal_above": ((-1, -1), (-1, 0), (-1, 1)),
}


def q_floor(de: ErrorDistribution, knowledge: PatternKnowledge, mode=QMode.ADDITIVE) -> float:
    """Worst-case probability q' that a free cell near obstacles reads free."""
    mode = QMode(mode)
    if knowledge.kind == "nothing":
        return de.center_mass
    if knowledge.kind == "lines":
        if set(de.nh.offsets) != set(Neighborhood.square(3).offsets):
            raise UnsupportedPattern("separated-lines floor is only defined for the 3x3 square neighbourhood")
        return min(1.0 - _combine([de.mass(o) for o in side], mode) for side in _LINE_SIDES.values())
    if knowledge.kind == "explicit":
        truth = knowledge.truth
        in_m = classify_cells(truth, de.nh) == CellClass.FREE_IN_M
        if not in_m.any():
            return 1.0
        fp = false_positive_map(truth, de, mode)
        return float(1.0 - fp[in_m].max())
    raise UnsupportedPattern(f"unknown pattern knowledge {knowledge.kind!r}")
