import math

import pytest

from twocolprobe.errors import ProvenInfeasible
from twocolprobe.model import EQ, GE, LE, Literal, LeRow, build_instance
from twocolprobe.prepresolve import (
    PbcRow,
    classify_clique,
    clean_rows,
    detect_binaries,
    extract_pbc,
    run_simple_presolve,
    strengthen_bounds_one_round,
)

from conftest import W, X, Y, Z


def _pbc(coefs, rhs):
    return PbcRow(tuple((Literal(j), a) for j, a in enumerate(coefs)), rhs, 0)


def test_singleton_row_becomes_bound():
    inst = build_instance([{0: 2}, {0: 1, 1: 1}], [LE, LE], [4, 10], [0, 0], [9, 9])
    out = clean_rows(inst)
    assert out.num_rows == 1 and out.upper[0] == 2


def test_negative_singleton_sets_lower_bound():
    inst = build_instance([{0: -2}], [LE], [-3], [0], [9])
    assert clean_rows(inst).lower[0] == 1.5


def test_violated_empty_row_is_infeasible():
    inst = build_instance([{}], [LE], [-1], [0], [1])
    with pytest.raises(ProvenInfeasible, match="empty row"):
        clean_rows(inst)


def test_clean_rows_identity(reference):
    assert clean_rows(reference) is reference


def test_singleton_equality_crossing_bounds():
    inst = build_instance([{0: 1}], [EQ], [3], [0], [1])
    with pytest.raises(ProvenInfeasible):
        clean_rows(inst)


def test_one_round_bound_strengthening():
    inst = build_instance([{0: 1, 1: 1}], [LE], [1], [0, 0], [10, 10], is_integer=[True, True])
    out = strengthen_bounds_one_round(inst)
    assert list(out.upper) == [1, 1]


def test_unbounded_activity_gives_nothing():
    inst = build_instance([{0: 1, 1: 1}], [LE], [1], [-math.inf, -math.inf], [5, 5])
    assert strengthen_bounds_one_round(inst) is inst


def test_integer_rounding_fixes():
    inst = build_instance([{0: 5, 1: 1}], [LE], [2], [0, 0], [1, 9], is_integer=[True, False])
    out = strengthen_bounds_one_round(inst)
    # 5x <= 2 -> x <= 0.4 -> x <= 0
    assert out.upper[0] == 0


def test_single_pass_only():
    # x0 <= x1 is visited before x1 + x2 <= 3, so x0 would only move on a second pass
    inst = build_instance([{0: 1, 1: -1}, {1: 1, 2: 1}], [LE, LE], [0, 3], [0, 0, 0], [5, 5, 5])
    out = strengthen_bounds_one_round(inst)
    assert list(out.upper) == [5, 3, 3]


def test_detect_binaries():
    inst = build_instance([{0: 1, 1: 1, 2: 1}], [LE], [1], [0, 0, 0], [1, 3, 1],
                          is_integer=[True, True, False])
    assert detect_binaries(inst) == (0,)
    assert detect_binaries(strengthen_bounds_one_round(inst)) == (0, 1)


def test_extract_pbc_with_complement_and_continuous():
    row = LeRow((0, 1, 2), (2.0, -3.0, 1.5), 4.0, 0)
    pbc = extract_pbc(row, {0, 1}, [0, 0, 0], [1, 1, 2])
    assert pbc.literals == ((Literal(0), 2.0), (Literal(1, True), 3.0))
    assert pbc.rhs == 7


def test_extract_pbc_pure_binary():
    pbc = extract_pbc(LeRow((0, 1), (1.0, 1.0), 1.0, 0), {0, 1}, [0, 0], [1, 1])
    assert pbc.literals == ((Literal(0), 1.0), (Literal(1), 1.0)) and pbc.rhs == 1


def test_extract_pbc_unbounded_rest():
    row = LeRow((0, 1), (1.0, 1.0), 1.0, 0)
    assert extract_pbc(row, {0}, [0, -math.inf], [1, math.inf]) is None


@pytest.mark.parametrize(
    "coefs, rhs, expected",
    [((1, 1, 1), 1, True), ((2, 3, 2.5), 4, True), ((1, 1, 1), 2, False), ((5, 3, 3), 4, False)],
)
def test_classify_clique(coefs, rhs, expected):
    assert classify_clique(_pbc(coefs, rhs)) is expected


def test_complemented_clique_needs_flag():
    pbc = PbcRow(((Literal(0), 1.0), (Literal(1, True), 1.0)), 1.0, 0)
    assert not classify_clique(pbc)
    assert classify_clique(pbc, complemented=True)


def test_reference_split(reference):
    out = run_simple_presolve(reference)
    assert out.C == [1]
    assert out.cliques == [(W, Y)]
    assert out.S_nsp == [0, 2]
    assert out.binaries == (W, X, Y, Z)
    # one-round strengthening of t + x + y + z >= 1 gives t >= -2
    assert out.instance.lower[0] == -2


def test_all_continuous_has_no_cliques():
    inst = build_instance([{0: 1, 1: 1}, {0: 1, 1: -1}], [LE, GE], [1, 0], [0, 0], [1, 1])
    out = run_simple_presolve(inst)
    assert out.S_sp == [] and out.S_nsp == [0, 1]


def test_only_clique_rows():
    inst = build_instance([{0: 1, 1: 1}, {1: 1, 2: 1, 3: 1}], [LE, LE], [1, 1], [0] * 4,
                          [1] * 4, is_integer=[True] * 4)
    out = run_simple_presolve(inst)
    assert out.S_nsp == [] and out.C == [0, 1]


def test_equality_forms_classified_separately():
    # x + y = 1: the <= form is a clique, the >= form is not
    inst = build_instance([{0: 1, 1: 1}], [EQ], [1], [0, 0], [1, 1], is_integer=[True, True])
    out = run_simple_presolve(inst)
    assert out.C == [0] and out.S_nsp == []


def test_ge_row_negated_into_clique():
    # -x - y >= -1  is  x + y <= 1
    inst = build_instance([{0: -1, 1: -1}], [GE], [-1], [0, 0], [1, 1], is_integer=[True, True])
    assert run_simple_presolve(inst).cliques == [(0, 1)]
