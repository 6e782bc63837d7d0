"""In-memory MIP representation with row- and column-oriented sparse access.

The instance is treated as immutable once built: every presolve stage that
changes it returns a fresh :class:`MipInstance`.  Infinite bounds are stored
as IEEE ``inf`` so activity arithmetic can detect them exactly.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InstanceError

LE, GE, EQ = "L", "G", "E"
SENSES = (LE, GE, EQ)


class Literal(NamedTuple):
    """A binary variable or its complement.

    ``negated=False`` is the literal ``x_var``; ``negated=True`` is
    ``1 - x_var``.  ``value`` is the variable value that makes the literal true.
    """

    var: int
    negated: bool = False

    @property
    def value(self) -> int:
        return 0 if self.negated else 1

    def holds(self, x) -> bool:
        return round(x[self.var]) == self.value

    def __str__(self):
        return f"~x{self.var}" if self.negated else f"x{self.var}"


class LeRow(NamedTuple):
    """A row in ``<=`` form: ``sum(coefs * x[cols]) <= rhs``."""

    cols: tuple
    coefs: tuple
    rhs: float
    source: int


class SparseMatrix:
    """Constraint matrix held in both row-major and column-major form.

    Both views store ``(indices, values)`` tuples with strictly ascending
    indices, so iteration order is canonical.
    """

    def __init__(self, rows, num_cols):
        self.num_rows = len(rows)
        self.num_cols = num_cols
        self.rows = [(tuple(c), tuple(v)) for c, v in rows]
        buckets = [([], []) for _ in range(num_cols)]
        for i, (cols, vals) in enumerate(self.rows):
            for j, a in zip(cols, vals):
                buckets[j][0].append(i)
                buckets[j][1].append(a)
        self.cols = [(tuple(r), tuple(v)) for r, v in buckets]
        self.nnz = sum(len(c) for c, _ in self.rows)

    def row(self, i):
        return self.rows[i]

    def col(self, j):
        return self.cols[j]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.num_rows, self.num_cols))
        for i, (cols, vals) in enumerate(self.rows):
            out[i, list(cols)] = vals
        return out

    def entries(self):
        """Yield ``(row, col, value)`` in row-major order."""
        for i, (cols, vals) in enumerate(self.rows):
            for j, a in zip(cols, vals):
                yield i, j, a


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(eq=False)
class MipInstance:
    """``min c'x  s.t.  Ax (sense) b,  lower <= x <= upper,  x_j integer for j in I``."""

    matrix: SparseMatrix
    sense: tuple
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    objective: np.ndarray
    is_integer: np.ndarray
    row_names: tuple
    col_names: tuple
    name: str = ""
    obj_offset: float = 0.0
    obj_name: str = "OBJ"
    binaries: tuple = field(init=False)

    def __post_init__(self):
        self.binaries = tuple(
            j
            for j in range(self.num_cols)
            if self.is_integer[j] and self.lower[j] >= 0 and self.upper[j] <= 1
        )

    @property
    def num_rows(self) -> int:
        return self.matrix.num_rows

    @property
    def num_cols(self) -> int:
        return self.matrix.num_cols

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def row_nnz(self, i: int) -> int:
        if not 0 <= i < self.num_rows:
            raise IndexError(f"row index {i} out of range [0, {self.num_rows})")
        return len(self.matrix.rows[i][0])

    def col_nnz(self, j: int) -> int:
        if not 0 <= j < self.num_cols:
            raise IndexError(f"column index {j} out of range [0, {self.num_cols})")
        return len(self.matrix.cols[j][0])

    def col_index(self, name: str) -> int:
        return self.col_names.index(name)

    def row_index(self, name: str) -> int:
        return self.row_names.index(name)

    def normalize_row(self, i: int) -> list:
        """Return row ``i`` as one or two ``<=`` rows (``>=`` negated, ``=`` split)."""
        cols, vals = self.matrix.rows[i]
        b = float(self.rhs[i])
        neg = LeRow(cols, tuple(-a for a in vals), -b, i)
        if self.sense[i] == LE:
            return [LeRow(cols, vals, b, i)]
        if self.sense[i] == GE:
            return [neg]
        return [LeRow(cols, vals, b, i), neg]

    def le_rows(self) -> list:
        out = []
        for i in range(self.num_rows):
            out.extend(self.normalize_row(i))
        return out

    def replace(self, **changes) -> "MipInstance":
        """Copy with some fields swapped; rows given as ``rows=`` rebuild the matrix."""
        rows = changes.pop("rows", None)
        kw = dict(
            matrix=self.matrix,
            sense=self.sense,
            rhs=self.rhs,
            lower=self.lower,
            upper=self.upper,
            objective=self.objective,
            is_integer=self.is_integer,
            row_names=self.row_names,
            col_names=self.col_names,
            name=self.name,
            obj_offset=self.obj_offset,
            obj_name=self.obj_name,
        )
        if rows is not None:
            kw["matrix"] = SparseMatrix(rows, self.num_cols)
        kw.update(changes)
        for key in ("rhs", "lower", "upper", "objective"):
            kw[key] = _frozen(kw[key])
        kw["is_integer"] = _frozen(kw["is_integer"], bool)
        kw["sense"] = tuple(kw["sense"])
        kw["row_names"] = tuple(kw["row_names"])
        kw["col_names"] = tuple(kw["col_names"])
        return MipInstance(**kw)

    def is_feasible(self, x, tol=1e-6) -> bool:
        """Check a full assignment against rows, bounds and integrality."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        ints = self.is_integer
        if np.any(np.abs(x[ints] - np.round(x[ints])) > tol):
            return False
        for i, (cols, vals) in enumerate(self.matrix.rows):
            act = sum(a * x[j] for j, a in zip(cols, vals))
            if not row_satisfied(self.sense[i], act, self.rhs[i], tol):
                return False
        return True


def row_satisfied(sense, activity, rhs, tol=1e-6) -> bool:
    if sense == LE:
        return activity <= rhs + tol
    if sense == GE:
        return activity >= rhs - tol
    return abs(activity - rhs) <= tol


def _row_items(row, r):
    items = row.items() if isinstance(row, Mapping) else row
    out = {}
    for entry in items:
        try:
            j, a = entry
        except (TypeError, ValueError):
            raise InstanceError(f"row {r}: entries must be (col, coef) pairs") from None
        if not isinstance(j, (int, np.integer)) or isinstance(j, bool):
            raise InstanceError(f"row {r}: column index {j!r} is not an integer")
        if j in out:
            raise InstanceError(f"row {r}: duplicate entry for column {j}")
        out[j] = a
    return out


def build_instance(
    rows: Sequence,
    sense: Sequence[str],
    rhs: Sequence[float],
    lower: Sequence[float],
    upper: Sequence[float],
    objective: Sequence[float] | None = None,
    is_integer: Sequence[bool] | None = None,
    row_names: Sequence[str] | None = None,
    col_names: Sequence[str] | None = None,
    name: str = "",
    obj_offset: float = 0.0,
    obj_name: str = "OBJ",
) -> MipInstance:
    """Validate raw data and build a :class:`MipInstance`.

    ``rows`` holds one entry per constraint, either a mapping ``col -> coef``
    or an iterable of ``(col, coef)`` pairs.  The column count is ``len(lower)``.
    Exact zero coefficients are dropped; duplicate ``(row, col)`` entries,
    non-finite coefficients and out-of-range columns are rejected.
    """
    m = len(rows)
    n = len(lower)
    if len(upper) != n:
        raise InstanceError(f"lower has {n} entries but upper has {len(upper)}")
    if len(sense) != m or len(rhs) != m:
        raise InstanceError(
            f"{m} rows but {len(sense)} senses and {len(rhs)} right-hand sides"
        )
    objective = [0.0] * n if objective is None else list(objective)
    is_integer = [False] * n if is_integer is None else list(is_integer)
    if len(objective) != n or len(is_integer) != n:
        raise InstanceError("objective/is_integer length does not match column count")
    row_names = [f"R{i}" for i in range(m)] if row_names is None else list(row_names)
    col_names = [f"C{j}" for j in range(n)] if col_names is None else list(col_names)
    if len(row_names) != m or len(col_names) != n:
        raise InstanceError("name list length does not match dimensions")

    clean = []
    for r, row in enumerate(rows):
        entries = _row_items(row, r)
        cols, vals = [], []
        for j in sorted(entries):
            a = float(entries[j])
            if not 0 <= j < n:
                raise InstanceError(f"row {r}: column index {j!r} out of range [0, {n})")
            if not math.isfinite(a):
                raise InstanceError(f"row {r}, column {j}: non-finite coefficient {a}")
            if a != 0.0:
                cols.append(int(j))
                vals.append(a)
        clean.append((cols, vals))
    for r, s in enumerate(sense):
        if s not in SENSES:
            raise InstanceError(f"row {r}: unknown sense {s!r}")
        if not math.isfinite(float(rhs[r])):
            raise InstanceError(f"row {r}: non-finite right-hand side")
    for j in range(n):
        if math.isnan(float(lower[j])) or math.isnan(float(upper[j])):
            raise InstanceError(f"column {j}: NaN bound")
        if not math.isfinite(float(objective[j])):
            raise InstanceError(f"column {j}: non-finite objective coefficient")

    return MipInstance(
        matrix=SparseMatrix(clean, n),
        sense=tuple(sense),
        rhs=_frozen(rhs),
        lower=_frozen(lower),
        upper=_frozen(upper),
        objective=_frozen(objective),
        is_integer=_frozen(is_integer, bool),
        row_names=tuple(row_names),
        col_names=tuple(col_names),
        name=name,
        obj_offset=float(obj_offset),
        obj_name=obj_name,
    )
