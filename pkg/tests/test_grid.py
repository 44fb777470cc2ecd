import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridfuse.errors import DimensionError, ParseError
from gridfuse.grid import (
    CellClass,
    FusedMap,
    GroundTruthMap,
    ObservationMap,
    accuracy_report,
    classify_cells,
    parse_map,
    serialize_map,
    to_pgm,
)
from gridfuse.sensor import Neighborhood

from conftest import truth_from


def test_parse_examples():
    m = parse_map("10\n01\n")
    assert (m.width, m.height) == (2, 2)
    assert m.cells.tolist() == [[1, 0], [0, 1]]
    assert parse_map("1\n").cells.tolist() == [[1]]


def test_parse_ragged_row():
    with pytest.raises(ParseError, match="ragged row 1"):
        parse_map("10\n0\n")


@pytest.mark.parametrize("text", ["", "\n", "1x\n", "1.\n"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse_map(text)


def test_parse_observation_accepts_unknown():
    obs = parse_map("1.\n0.\n", ObservationMap)
    assert obs.cells.tolist() == [[1, -1], [0, -1]]
    assert not obs.complete


def test_serialize_examples():
    assert serialize_map(truth_from([[1, 0], [0, 1]])) == "10\n01\n"
    assert serialize_map(truth_from([[0]])) == "0\n"
    assert serialize_map(ObservationMap(np.array([[1, -1]]))) == "1.\n"


def test_maps_are_immutable():
    m = parse_map("10\n")
    with pytest.raises(ValueError):
        m.cells[0, 0] = 0


def test_unknown_map_is_all_minus_one():
    obs = ObservationMap.unknown(2, 3)
    assert (obs.cells == -1).all() and obs.shape == (2, 3)


def test_truth_rejects_unknown_value():
    with pytest.raises(ValueError):
        GroundTruthMap(np.array([[0, -1]]))


@st.composite
def grids(draw, values=(0, 1)):
    h = draw(st.integers(1, 6))
    w = draw(st.integers(1, 6))
    cells = draw(st.lists(st.lists(st.sampled_from(values), min_size=w, max_size=w), min_size=h, max_size=h))
    return np.array(cells, dtype=np.int8)


@given(grids())
def test_roundtrip_truth(cells):
    m = GroundTruthMap(cells)
    assert parse_map(serialize_map(m)) == m


@given(grids(values=(-1, 0, 1)))
def test_roundtrip_observation(cells):
    m = ObservationMap(cells)
    assert parse_map(serialize_map(m), ObservationMap) == m


def test_pgm_values():
    text = to_pgm(ObservationMap(np.array([[0, 1, -1]])))
    assert text.splitlines() == ["P2", "3 1", "255", "255 0 128"]


def test_classify_center_obstacle(nh3):
    cls = classify_cells(truth_from([[0, 0, 0], [0, 1, 0], [0, 0, 0]]), nh3)
    assert cls[1, 1] is CellClass.OBSTACLE
    assert sum(c is CellClass.FREE_IN_M for c in cls.ravel()) == 8


def test_classify_corner_clipping(nh3):
    cells = np.zeros((5, 5), dtype=np.int8)
    cells[0, 0] = 1
    cls = classify_cells(GroundTruthMap(cells), nh3)
    assert cls[0, 0] is CellClass.OBSTACLE
    in_m = {(int(r), int(c)) for r, c in np.argwhere(cls == CellClass.FREE_IN_M)}
    assert in_m == {(0, 1), (1, 0), (1, 1)}
    assert (cls == CellClass.FREE_OUTSIDE_M).sum() == 21


def test_classify_empty(nh3):
    cls = classify_cells(GroundTruthMap(np.zeros((3, 4))), nh3)
    assert (cls == CellClass.FREE_OUTSIDE_M).all()


@given(grids())
def test_classify_partitions_and_monotone_in_nh(cells):
    truth = GroundTruthMap(cells)
    small = classify_cells(truth, Neighborhood.square(3))
    large = classify_cells(truth, Neighborhood.square(5))
    for cls in (small, large):
        assert all(isinstance(c, CellClass) for c in cls.ravel())
        assert ((cls == CellClass.OBSTACLE) == (cells == 1)).all()
    assert (large == CellClass.FREE_IN_M).sum() >= (small == CellClass.FREE_IN_M).sum()


def test_accuracy_report_examples(nh3):
    truth = truth_from([[1, 0], [0, 0]])
    classes = classify_cells(truth, nh3)
    rep = accuracy_report(FusedMap(np.array([[1, 1], [0, 0]])), truth, classes)
    assert (rep[CellClass.OBSTACLE].correct, rep[CellClass.OBSTACLE].total) == (1, 1)
    assert (rep[CellClass.FREE_IN_M].correct, rep[CellClass.FREE_IN_M].total) == (2, 3)
    assert rep[CellClass.FREE_OUTSIDE_M].total == 0

    same = accuracy_report(FusedMap(truth.cells), truth, classes)
    assert all(r.correct == r.total for r in same.values())
    flipped = accuracy_report(FusedMap(1 - truth.cells), truth, classes)
    assert all(r.correct == 0 for r in flipped.values())
    assert sum(r.total for r in flipped.values()) == 4


def test_accuracy_report_dimension_mismatch(nh3):
    truth = truth_from([[1, 0]])
    with pytest.raises(DimensionError):
        accuracy_report(FusedMap(np.zeros((2, 2))), truth, classify_cells(truth, nh3))
