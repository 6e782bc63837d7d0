"""Brute-force enumeration of small all-integer models, used to check reductions."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SearchSpaceTooLarge
from .model import EQ, GE, LE
from .reductions import conflict_row
from .structures import LOWER

MAX_POINTS = 2**20
_CHUNK = 1 << 15


def fingerprint(instance):
    """Short hash of the model data (rows, senses, rhs, bounds, integrality)."""
    h = hashlib.sha256()
    for cols, vals in instance.matrix.rows:
        h.update(repr((tuple(cols), tuple(float(v) for v in vals))).encode())
    h.update(repr(tuple(instance.sense)).encode())
    for arr in (instance.rhs, instance.lower, instance.upper, instance.is_integer):
        h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
    return h.hexdigest()[:16]


@dataclass
class FeasibleSet:
    fingerprint: str
    points: np.ndarray  # (count, n) integer matrix

    def __len__(self):
        return len(self.points)

    def as_tuples(self):
        return [tuple(int(v) for v in p) for p in self.points]


def _domains(instance):
    doms = []
    size = 1
    for j in range(instance.num_cols):
        lo, up = float(instance.lower[j]), float(instance.upper[j])
        if not instance.is_integer[j]:
            raise SearchSpaceTooLarge(f"column {instance.col_names[j]} is continuous")
        if not (math.isfinite(lo) and math.isfinite(up)):
            raise SearchSpaceTooLarge(f"column {instance.col_names[j]} has an infinite bound")
        vals = np.arange(math.ceil(lo - 1e-9), math.floor(up + 1e-9) + 1, dtype=np.int64)
        doms.append(vals)
        size *= max(len(vals), 1)
        if size > MAX_POINTS:
            raise SearchSpaceTooLarge(f"search space exceeds {MAX_POINTS} points")
    return doms


def enumerate_feasible(instance, tol=1e-6):
    """Every integer point within the bounds that satisfies all rows."""
    doms = _domains(instance)
    n = instance.num_cols
    fp = fingerprint(instance)
    if any(len(d) == 0 for d in doms):
        return FeasibleSet(fp, np.zeros((0, n), dtype=np.int64))
    A = instance.matrix.to_dense()
    b = np.asarray(instance.rhs, dtype=float)
    sense = np.asarray(instance.sense)
    le, ge, eq = sense == LE, sense == GE, sense == EQ
    sizes = np.array([len(d) for d in doms], dtype=np.int64)
    total = int(np.prod(sizes)) if n else 1
    keep = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        pts = np.empty((len(idx), n), dtype=np.int64)
        for j in range(n - 1, -1, -1):
            pts[:, j] = doms[j][idx % sizes[j]]
            idx //= sizes[j]
        act = pts @ A.T if instance.num_rows else np.zeros((len(pts), 0))
        ok = np.all(act[:, le] <= b[le] + tol, axis=1)
        ok &= np.all(act[:, ge] >= b[ge] - tol, axis=1)
        ok &= np.all(np.abs(act[:, eq] - b[eq]) <= tol, axis=1)
        keep.append(pts[ok])
    return FeasibleSet(fp, np.concatenate(keep) if keep else np.zeros((0, n), np.int64))


@dataclass
class Violation:
    kind: str
    detail: str
    point: tuple

    def __str__(self):
        return f"{self.kind}: {self.detail} violated at {self.point}"


@dataclass
class ViolationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def add(self, kind, detail, mask, points):
        bad = np.flatnonzero(~mask)
        if len(bad):
            self.violations.append(Violation(kind, detail, tuple(int(v) for v in points[bad[0]])))


def _bound_mask(x, kind, bound, tol):
    return x >= bound - tol if kind == LOWER else x <= bound + tol


def validate_reductions(feasible, reductions, tol=1e-6):
    """Check every claimed reduction against all feasible points.

    Reports at most one witnessing point per failed claim.
    """
    rep = ViolationReport()
    P = feasible.points
    if len(P) == 0:
        return rep
    for j, v in sorted(reductions.fixings.items()):
        rep.add("fixing", f"x{j} = {v}", np.abs(P[:, j] - v) <= tol, P)
    for k, j, a, b in reductions.aggregations:
        rep.add("aggregation", f"x{k} = {a}*x{j} + {b}", np.abs(P[:, k] - (a * P[:, j] + b)) <= tol, P)
    for lit_a, lit_b in reductions.new_conflicts:
        coefs, rhs = conflict_row(lit_a, lit_b)
        act = sum(c * P[:, var] for var, c in coefs.items())
        rep.add("conflict", f"not ({lit_a} and {lit_b})", act <= rhs + tol, P)
    for j, v in sorted(reductions.lower.items()):
        rep.add("bound", f"x{j} >= {v}", P[:, j] >= v - tol, P)
    for j, v in sorted(reductions.upper.items()):
        rep.add("bound", f"x{j} <= {v}", P[:, j] <= v + tol, P)
    for (var, val), target, kind, bound in reductions.single_implications:
        premise = P[:, var] == val
        ok = ~premise | _bound_mask(P[:, target], kind, bound, tol)
        rep.add("implication", f"x{var}={val} -> x{target} {kind} {bound}", ok, P)
    for ((i, v1), (j, v2)), target, kind, bound in reductions.pair_implications:
        premise = (P[:, i] == v1) & (P[:, j] == v2)
        ok = ~premise | _bound_mask(P[:, target], kind, bound, tol)
        rep.add("implication", f"x{i}={v1}, x{j}={v2} -> x{target} {kind} {bound}", ok, P)
    return rep

