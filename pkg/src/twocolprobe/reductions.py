"""Accumulated probing deductions and their application to a model."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ProvenInfeasible
from .model import EQ, LE, Literal


def conflict_row(a: Literal, b: Literal):
    """Coefficients and rhs of the cut excluding both literals being true.

    For the infeasible assignment ``x_i = v1, x_j = v2`` the literals are
    ``Literal(i, v1 == 0)`` and ``Literal(j, v2 == 0)``; the row is
    ``(2v1-1) x_i + (2v2-1) x_j <= v1 + v2 - 1``.
    """
    v1, v2 = a.value, b.value
    return {a.var: 2 * v1 - 1.0, b.var: 2 * v2 - 1.0}, v1 + v2 - 1.0


@dataclass
class Reductions:
    """Everything probing proved, relative to the model it ran on.

    ``aggregations`` holds ``(k, j, a, b)`` meaning ``x_k = a*x_j + b``;
    ``new_conflicts`` holds literal pairs that cannot both be true.
    Implications are kept for validation but are not written to models.
    """

    fixings: dict = field(default_factory=dict)
    aggregations: list = field(default_factory=list)
    new_conflicts: list = field(default_factory=list)
    lower: dict = field(default_factory=dict)
    upper: dict = field(default_factory=dict)
    single_implications: list = field(default_factory=list)
    pair_implications: list = field(default_factory=list)
    probed: frozenset = frozenset()

    @property
    def bound_changes(self):
        return len(self.lower) + len(self.upper)

    def is_empty(self):
        return not (
            self.fixings or self.aggregations or self.new_conflicts or self.lower or self.upper
        )


def _unique_name(base, taken):
    name = base
    n = 1
    while name in taken:
        name = f"{base}_{n}"
        n += 1
    taken.add(name)
    return name


def apply_reductions(instance, reductions, tol=1e-6):
    """Return a model with tightened bounds, fixings, clique cuts and aggregation rows.

    Conflict cuts and aggregation equalities are appended after the original
    rows in discovery order.  A fixing outside the current bounds raises
    :class:`ProvenInfeasible`.
    """
    if reductions is None or reductions.is_empty():
        return instance
    lower = [float(v) for v in instance.lower]
    upper = [float(v) for v in instance.upper]
    for j, v in reductions.lower.items():
        lower[j] = max(lower[j], v)
    for j, v in reductions.upper.items():
        upper[j] = min(upper[j], v)
    for j, v in sorted(reductions.fixings.items()):
        if v < lower[j] - tol or v > upper[j] + tol:
            raise ProvenInfeasible(
                f"fixing {instance.col_names[j]} = {v} lies outside [{lower[j]}, {upper[j]}]"
            )
        lower[j] = upper[j] = v
    for j in range(instance.num_cols):
        if lower[j] > upper[j] + tol:
            raise ProvenInfeasible(f"column {instance.col_names[j]} has empty domain")

    rows = list(instance.matrix.rows)
    sense = list(instance.sense)
    rhs = [float(b) for b in instance.rhs]
    names = list(instance.row_names)
    taken = set(names)
    for n, (a, b) in enumerate(reductions.new_conflicts):
        coefs, r = conflict_row(a, b)
        cols = sorted(coefs)
        rows.append((cols, [coefs[c] for c in cols]))
        sense.append(LE)
        rhs.append(r)
        names.append(_unique_name(f"probe_clq{n}", taken))
    for n, (k, j, a, b) in enumerate(reductions.aggregations):
        coefs = {k: 1.0, j: -a}
        cols = sorted(coefs)
        rows.append((cols, [coefs[c] for c in cols]))
        sense.append(EQ)
        rhs.append(b)
        names.append(_unique_name(f"probe_agg{n}", taken))
    return instance.replace(
        rows=rows, sense=sense, rhs=rhs, row_names=names, lower=lower, upper=upper
    )
