from fractions import Fraction
import itertools

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from bcmsr.core.errors import InvalidArgumentError, SystemParseError, UnboundedRegionError, UnknownVariableError
from bcmsr.core.polyregion import (
    HalfSpaceSystem,
    LinearInequality,
    contains,
    fme_eliminate,
    fme_project,
    format_system,
    is_subset,
    low_discrepancy_points,
    membership,
    membership_disagreements,
    minimal_system2d,
    parse_system,
    prune_redundant,
    rationalize,
    region_equal,
    vertices2d,
)

coefficient = st.integers(min_value=-3, max_value=3)
row_strategy = st.tuples(coefficient, coefficient, coefficient, st.integers(min_value=-2, max_value=6))
grid_axis = np.arange(0.0, 3.01, 0.5)


def system3(rows) -> HalfSpaceSystem:
    return HalfSpaceSystem.build(
        ("x", "y", "z"),
        [({"x": a, "y": b, "z": c}, rhs) for a, b, c, rhs in rows],
    )


def square(side) -> HalfSpaceSystem:
    return HalfSpaceSystem.build(("R1", "R2"), [({"R1": 1}, side, "cap1"), ({"R2": 1}, side, "cap2")])


def test_rationalize_snaps_floats():
    assert rationalize(0.5) == Fraction(1, 2)
    assert rationalize("3/4") == Fraction(3, 4)
    assert rationalize(0.1) == Fraction(1, 10)


def test_parse_system_with_labels_and_directives():
    text = """
    # variables: R1, R2
    # nonnegative: yes
    cap1: R1 <= 1/2
    R2 <= 0.75   # trailing comment
    sum: R1 + 2*R2 >= -1
    """
    system = parse_system(text)
    assert system.variables == ("R1", "R2")
    assert system.nonnegative
    assert system.rhs("cap1") == 0.5
    assert system.row("sum").coefficient("R2") == -2
    assert system.row("sum").rhs == 1


def test_parse_moves_left_constants_to_the_right():
    system = parse_system("x + 1 <= 3")
    assert system.rows[0].rhs == 2


def test_parse_error_reports_line_number():
    with pytest.raises(SystemParseError) as info:
        parse_system("x <= 1\ny <= 2\nx + 2* <= 3\n")
    assert info.value.line_number == 3


@pytest.mark.parametrize("line", ["x + y", "x <= y", "x <= 1 <= 2", "x ++ y <= 1"])
def test_malformed_rows_are_rejected(line):
    with pytest.raises(SystemParseError):
        parse_system(line)


def test_undeclared_variables_are_rejected():
    with pytest.raises(SystemParseError):
        parse_system("# variables: x\nx + y <= 1\n")


def test_formatted_system_parses_back():
    system = parse_system("# variables: a, b\n# nonnegative: no\nlim: 2*a - 1/3*b <= 5/2\nb >= -1\n")
    text = format_system(system)
    assert "lim: 2*a - 1/3*b <= 5/2" in text
    assert format_system(parse_system(text)) == text


def test_unknown_variable_in_row():
    with pytest.raises(UnknownVariableError):
        HalfSpaceSystem.build(("x",), [({"y": 1}, 1)])


def test_fme_eliminates_a_single_variable():
    system = HalfSpaceSystem.build(("R1", "t"), [({"R1": 1, "t": 1}, 2), ({"t": -1}, -1)])
    projected = fme_eliminate(system, "t")
    assert projected.variables == ("R1",)
    assert contains(projected, [1.0])
    assert not contains(projected, [1.01])


def test_fme_project_checks_names():
    system = square(1)
    with pytest.raises(UnknownVariableError):
        fme_project(system, ["R3"])
    with pytest.raises(InvalidArgumentError):
        fme_project(system, ["R1"], order=["R1"])


def test_prune_collapses_contradictions():
    system = HalfSpaceSystem.build(("x",), [({"x": 1}, 1), ({"x": -1}, -2)])
    projected = fme_eliminate(system, "x")
    assert len(projected) == 1
    assert projected.rows[0].is_contradiction
    assert format_system(projected).splitlines()[-1] == "0 <= -1"


def test_prune_drops_duplicates_and_dominated_rows():
    system = HalfSpaceSystem.build(
        ("x", "y"),
        [
            ({"x": 2}, 2, "cap"),
            ({"x": 1}, 1),
            ({"x": 1}, 3),
            ({"x": 1, "y": 1}, 1, "sum"),
            ({"x": -1}, 0),
        ],
    )
    pruned = prune_redundant(system)
    assert [row.label for row in pruned.rows] == ["sum"]


def test_prune_keeps_rows_without_nonnegativity():
    system = HalfSpaceSystem.build(("x", "y"), [({"x": 1}, 1), ({"x": 1, "y": 1}, 1)], nonnegative=False)
    assert len(prune_redundant(system)) == 2


@given(st.lists(row_strategy, min_size=1, max_size=6))
def test_fme_projection_is_sound(rows):
    system = system3(rows)
    projected = fme_project(system, ["x", "y"])
    points = np.array(list(itertools.product(grid_axis, repeat=3)))
    inside = membership(system, points)
    assert np.all(membership(projected, points[inside][:, :2]))


@given(st.lists(row_strategy, min_size=1, max_size=5))
def test_elimination_order_does_not_matter(rows):
    system = system3(rows)
    first = fme_project(system, ["x"], order=["y", "z"])
    second = fme_project(system, ["x"], order=["z", "y"])
    points = grid_axis[:, None]
    assert membership_disagreements(first, second, points) == 0


@given(st.lists(row_strategy, min_size=1, max_size=6))
def test_pruning_preserves_membership(rows):
    system = system3(rows)
    points = np.array(list(itertools.product(grid_axis, repeat=3)))
    assert membership_disagreements(system, prune_redundant(system), points) == 0


def test_vertices_of_a_square_are_counter_clockwise():
    region = vertices2d(square(Fraction(1, 2)))
    assert region.vertices == (
        (Fraction(0), Fraction(0)),
        (Fraction(1, 2), Fraction(0)),
        (Fraction(1, 2), Fraction(1, 2)),
        (Fraction(0), Fraction(1, 2)),
    )


def test_vertices_with_a_sum_row():
    system = square(1).with_rows(list(square(1).rows) + [LinearInequality.build({"R1": 1, "R2": 1}, 1.5, "sum")])
    region = vertices2d(system)
    assert len(region.vertices) == 5
    assert max(float(x + y) for x, y in region.vertices) == 1.5


def test_degenerate_region_is_a_single_point():
    region = vertices2d(square(0))
    assert region.float_vertices == [(0.0, 0.0)]


def test_infeasible_region_is_empty():
    system = HalfSpaceSystem.build(("R1", "R2"), [({"R1": 1}, -1), ({"R2": 1}, 1)])
    assert vertices2d(system).is_empty


def test_unbounded_region_raises():
    system = HalfSpaceSystem.build(("R1", "R2"), [({"R1": 1}, 1)])
    with pytest.raises(UnboundedRegionError):
        vertices2d(system)


def test_minimal_system_drops_inactive_rows():
    rows = list(square(1).rows) + [LinearInequality.build({"R1": 1, "R2": 1}, 3, "sum")]
    minimal = minimal_system2d(square(1).with_rows(rows))
    assert sorted(row.label for row in minimal.rows) == ["cap1", "cap2"]


def test_subset_and_equality():
    small, large = vertices2d(square(1)), vertices2d(square(2))
    assert is_subset(small, large.inequalities)
    assert not is_subset(large, small.inequalities)
    assert region_equal(small, vertices2d(square(1.0 + 1e-12)))


def test_membership_matches_contains():
    system = square(1)
    points = np.array([[0.5, 0.5], [1.5, 0.0], [-0.1, 0.2], [1.0, 1.0]])
    assert list(membership(system, points)) == [contains(system, p) for p in points]


def test_sampled_equivalence_in_three_dimensions():
    a = HalfSpaceSystem.build(("x", "y", "z"), [({"x": 1, "y": 1, "z": 1}, 1)])
    b = a.with_rows(list(a.rows) + [LinearInequality.build({"x": 1}, 2)])
    points = low_discrepancy_points([1.5, 1.5, 1.5], 512)
    assert membership_disagreements(a, b, points) == 0
    c = a.with_rows([LinearInequality.build({"x": 1, "y": 1, "z": 1}, 0.9)])
    assert membership_disagreements(a, c, points) > 0
