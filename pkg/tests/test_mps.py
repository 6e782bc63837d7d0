import math

import pytest

from twocolprobe.errors import MpsParseError
from twocolprobe.model import EQ, GE, LE, Literal
from twocolprobe.mps import (
    MetricsReport,
    read_metrics,
    read_mps,
    write_infeasibility_report,
    write_metrics,
    write_mps,
)
from twocolprobe.reductions import Reductions

from conftest import DATA, T, W, X, Y, Z, same_content


def _write(tmp_path, text, name="m.mps"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_reference_file_matches_builder(reference):
    inst = read_mps(DATA / "reference.mps")
    assert inst.col_names == ("t", "w", "x", "y", "z")
    assert inst.sense == (GE, LE, GE)
    assert inst.matrix.rows == reference.matrix.rows
    assert list(inst.rhs) == [1, 1, 0]
    assert list(inst.lower) == list(reference.lower)
    assert list(inst.upper) == list(reference.upper)
    assert list(inst.is_integer) == list(reference.is_integer)


def test_binary_bound(tmp_path):
    inst = read_mps(_write(tmp_path, "NAME b\nROWS\n N obj\nCOLUMNS\n x obj 1\nBOUNDS\n BV BND x\nENDATA\n"))
    assert inst.is_integer[0] and (inst.lower[0], inst.upper[0]) == (0, 1)


def test_ranges_on_le_row():
    inst = read_mps(DATA / "ranged.mps")
    r1 = inst.row_index("r1")
    rng = inst.row_index("r1_rng")
    assert (inst.sense[r1], inst.rhs[r1]) == (LE, 10)
    assert (inst.sense[rng], inst.rhs[rng]) == (GE, 6)
    assert inst.matrix.rows[rng] == inst.matrix.rows[r1]


def test_ranges_on_other_rows():
    inst = read_mps(DATA / "ranged.mps")
    get = lambda name: (inst.sense[inst.row_index(name)], inst.rhs[inst.row_index(name)])
    assert get("r2") == (GE, 2) and get("r2_rng") == (LE, 5)
    assert get("r3") == (GE, 1) and get("r3_rng") == (LE, 3)
    assert get("r4") == (LE, 4) and get("r4_rng") == (GE, 2.5)


def test_maximize_negates_objective():
    inst = read_mps(DATA / "maximize.mps")
    assert list(inst.objective) == [-3, -2.5]
    # objective RHS -4 means constant +4 in the max objective, -4 after negation
    assert inst.obj_offset == -4


def test_bound_types():
    inst = read_mps(DATA / "bounds_all.mps")
    b = {name: (inst.lower[j], inst.upper[j], bool(inst.is_integer[j]))
         for j, name in enumerate(inst.col_names)}
    assert b["i1"] == (-2, 4, True)
    assert b["i2"] == (0, 7, True)
    assert b["i3"] == (0, 1, True)
    assert b["f1"] == (-math.inf, math.inf, False)
    assert b["f2"] == (-math.inf, 3, False)
    assert b["f3"] == (1.5, 1.5, False)
    assert b["f4"] == (-1e30, math.inf, False)
    assert b["f5"] == (-math.inf, -2, False)
    assert b["f6"] == (0.25, math.inf, False)


def test_extra_free_rows_ignored():
    inst = read_mps(DATA / "freerows.mps")
    assert inst.row_names == ("c", "d")
    assert list(inst.objective) == [1, -1]


@pytest.mark.parametrize(
    "body, msg, line",
    [
        ("NAME x\nFOO\nENDATA\n", "unknown section", 2),
        ("NAME x\nROWS\n N obj\n L r\n L r\nENDATA\n", "duplicate row", 5),
        ("NAME x\nROWS\n N obj\nCOLUMNS\n x nope 1\nENDATA\n", "unknown row", 5),
        ("NAME x\nROWS\n N obj\nCOLUMNS\n x obj abc\nENDATA\n", "malformed number", 5),
        ("NAME x\nROWS\n N obj\nCOLUMNS\n x obj 1\nBOUNDS\n UP BND y 1\nENDATA\n", "unknown column", 7),
        ("NAME x\nROWS\n N obj\nCOLUMNS\n x obj 1\nBOUNDS\n XX BND x 1\nENDATA\n", "unknown bound", 7),
        ("NAME x\nROWS\n N obj\n L r\nCOLUMNS\n x r 1\n x r 2\nENDATA\n", "duplicate entry", 7),
        ("NAME x\nROWS\n N obj\n L r\nRHS\n rhs q 1\nENDATA\n", "unknown row", 6),
    ],
)
def test_parse_errors_carry_line(tmp_path, body, msg, line):
    p = _write(tmp_path, body)
    with pytest.raises(MpsParseError, match=msg) as err:
        read_mps(p)
    assert err.value.lineno == line
    assert str(p) in str(err.value)


@pytest.mark.parametrize("path", sorted(DATA.glob("*.mps")), ids=lambda p: p.stem)
def test_round_trip_fixpoint(tmp_path, path):
    first = read_mps(path)
    write_mps(first, None, tmp_path / "a.mps")
    second = read_mps(tmp_path / "a.mps")
    assert same_content(first, second)
    write_mps(second, None, tmp_path / "b.mps")
    assert (tmp_path / "a.mps").read_text() == (tmp_path / "b.mps").read_text()


def test_write_appends_conflict_and_aggregation_rows(tmp_path, reference):
    red = Reductions(
        new_conflicts=[(Literal(X), Literal(Y))],
        aggregations=[(Z, W, -1.0, 1.0)],
        fixings={T: 0.0},
    )
    write_mps(reference, red, tmp_path / "r.mps")
    out = read_mps(tmp_path / "r.mps")
    assert out.row_names[:3] == reference.row_names
    assert out.row_names[3:] == ("probe_clq0", "probe_agg0")
    assert (out.sense[3], out.rhs[3], out.matrix.rows[3]) == (LE, 1, ((X, Y), (1.0, 1.0)))
    assert (out.sense[4], out.rhs[4], out.matrix.rows[4]) == (EQ, 1, ((W, Z), (1.0, 1.0)))
    assert out.lower[T] == out.upper[T] == 0


def test_conflict_row_for_mixed_polarity(tmp_path, reference):
    # infeasible (x=1, y=0) -> x - y <= 0
    write_mps(reference, Reductions(new_conflicts=[(Literal(X), Literal(Y, True))]),
              tmp_path / "r.mps")
    out = read_mps(tmp_path / "r.mps")
    assert (out.matrix.rows[3], out.rhs[3]) == (((X, Y), (1.0, -1.0)), 0)


def test_write_without_reductions_is_identity(tmp_path):
    inst = read_mps(DATA / "facility.mps")
    write_mps(inst, Reductions(), tmp_path / "f.mps")
    assert same_content(inst, read_mps(tmp_path / "f.mps"))


def test_metrics_round_trip(tmp_path):
    rep = MetricsReport(pre_time_seconds=0.25, pairs_probed=1000, terminated_by="pair_limit",
                        fixings=3, threads=4)
    write_metrics(rep, tmp_path / "m.txt")
    text = (tmp_path / "m.txt").read_text().splitlines()
    assert [line.split("=")[0] for line in text] == [
        "status", "pre_time_seconds", "pairs_probed", "fixings", "aggregations",
        "new_conflicts", "bound_changes", "threads", "terminated_by", "cm_truncated", "note",
    ]
    assert read_metrics(tmp_path / "m.txt") == rep


def test_metrics_defaults_are_idle():
    rep = MetricsReport()
    assert (rep.pairs_probed, rep.fixings, rep.terminated_by) == (0, 0, "exhausted")


@pytest.mark.parametrize("kw", [{"terminated_by": "bored"}, {"fixings": -1},
                                {"pre_time_seconds": -0.5}])
def test_metrics_validation(kw):
    with pytest.raises(ValueError):
        MetricsReport(**kw)


def test_infeasibility_report(tmp_path):
    write_infeasibility_report(tmp_path / "out.mps", "row r1 cannot be satisfied")
    assert (tmp_path / "out.mps").read_text().startswith("INFEASIBLE\nreason: row r1")
