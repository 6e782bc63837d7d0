"""Coupling matrix, clique table, conflict numbers and the implication store."""

from __future__ import annotations

import logging
from collections import defaultdict
from itertools import combinations

from .errors import AggregationContradiction
from .model import Literal

log = logging.getLogger(__name__)

LOWER = "lower"
UPPER = "upper"


class CouplingMatrix:
    """Symmetric pair counts stored once per unordered pair ``(i, j)``, ``i < j``."""

    def __init__(self):
        self.counts = {}
        self.pairs_inserted = 0
        self.truncated = False

    def add(self, i, j, count=1):
        if i == j:
            raise ValueError("coupling matrix has no diagonal")
        key = (i, j) if i < j else (j, i)
        self.counts[key] = self.counts.get(key, 0) + count

    def get(self, i, j):
        if i == j:
            return 0
        return self.counts.get((i, j) if i < j else (j, i), 0)

    def cells(self):
        """``((i, j), count)`` items in ascending pair order."""
        return sorted(self.counts.items())

    def restricted(self, members):
        """Sub-matrix over cells with both endpoints in ``members``."""
        out = CouplingMatrix()
        out.counts = {k: v for k, v in self.counts.items() if k[0] in members and k[1] in members}
        return out

    def __len__(self):
        return len(self.counts)


class CliqueTable:
    """Cliques over literals plus a per-variable membership index.

    Clique ``c`` says at most one of its literals is true.  ``by_var[j]``
    lists clique ids containing a literal of ``x_j``; ``members[c]`` maps
    variable -> negated flag so polarity is known per membership.
    """

    def __init__(self):
        self.members = []
        self.sources = []
        self.by_var = {}

    def __len__(self):
        return len(self.members)

    def add(self, literals, source=None):
        lits = {}
        for lit in literals:
            lits[lit.var] = lit.negated
        cid = len(self.members)
        self.members.append(lits)
        self.sources.append(source)
        for var in lits:
            self.by_var.setdefault(var, []).append(cid)
        return cid

    def literals(self, cid):
        return tuple(Literal(v, n) for v, n in self.members[cid].items())

    def cliques_of(self, var):
        return self.by_var.get(var, ())

    def contains_pair(self, a: Literal, b: Literal) -> bool:
        """True if some clique already holds both literals (same polarities)."""
        ca = self.by_var.get(a.var, ())
        cb = self.by_var.get(b.var, ())
        if len(cb) < len(ca):
            a, b, ca = b, a, cb
        for cid in ca:
            mem = self.members[cid]
            if mem[a.var] == a.negated and mem.get(b.var) == b.negated:
                return True
        return False

    def shares_clique(self, i, j) -> bool:
        ci = self.by_var.get(i, ())
        cj = self.by_var.get(j, ())
        return bool(set(ci) & set(cj))

    def copy(self):
        out = CliqueTable()
        out.members = list(self.members)
        out.sources = list(self.sources)
        out.by_var = {k: list(v) for k, v in self.by_var.items()}
        return out


def build_cm_ct(presolved, size_limit=1000, work_limit=200_000_000):
    """Build the coupling matrix from non-clique rows and the clique table.

    Rows longer than ``size_limit`` nonzeros are skipped.  ``work_limit``
    caps the total number of pair insertions; construction stops at the
    first row that would exceed it and ``cm.truncated`` is set.
    """
    if size_limit <= 0 or work_limit <= 0:
        raise ValueError("size_limit and work_limit must be positive")
    inst = presolved.instance
    binary = presolved.binary_set
    cm = CouplingMatrix()
    for i in presolved.S_nsp:
        cols = inst.matrix.rows[i][0]
        if len(cols) > size_limit:
            continue
        bins = [j for j in cols if j in binary]
        npairs = len(bins) * (len(bins) - 1) // 2
        if cm.pairs_inserted + npairs > work_limit:
            cm.truncated = True
            log.info("coupling matrix truncated at row %d (work limit %d)", i, work_limit)
            break
        for a, b in combinations(bins, 2):
            cm.add(a, b)
        cm.pairs_inserted += npairs

    ct = CliqueTable()
    for pbc, row in zip(presolved.S_sp, presolved.C):
        ct.add([lit for lit, _ in pbc.literals], source=row)
    return cm, ct


def conflict_number(j, ct, instance):
    """Sum of row lengths over the source rows of the cliques containing ``x_j``."""
    total = 0
    for cid in ct.cliques_of(j):
        src = ct.sources[cid]
        if src is not None:
            total += instance.row_nnz(src)
    return total


def conflict_numbers(ct, instance, variables):
    return {j: conflict_number(j, ct, instance) for j in variables}


def _close(a, b, tol):
    return abs(a - b) <= tol


class ImplicationStore:
    """Aggregations ``x_k = a*x_j + b`` and literal-conditioned bound implications.

    ``af[k] = (j, a, b)`` always points at a root (a variable that is not
    itself aggregated).  ``ig_single[(j, v)]`` and ``ig_pair[((i, v1), (j, v2))]``
    map ``(target, kind)`` to the implied bound, keeping only the tightest.
    """

    def __init__(self, tol=1e-6):
        self.tol = tol
        self.af = {}
        self.af_children = defaultdict(set)
        self.ig_single = {}
        self.ig_pair = {}
        self.pair_index = defaultdict(set)

    # -- aggregation ---------------------------------------------------
    def af_lookup(self, k):
        return self.af.get(k)

    def af_add(self, k, j, a, b) -> bool:
        """Record ``x_k = a*x_j + b``; returns True if the store changed.

        Raises :class:`AggregationContradiction` when the new relation and
        an existing one cannot both hold for a free ``x_j``.
        """
        tol = self.tol
        if abs(a) <= tol:
            raise ValueError("aggregation with zero slope is a fixing")
        if j in self.af:
            r, a2, b2 = self.af[j]
            j, a, b = r, a * a2, a * b2 + b
        if j == k:
            # x_k = a*x_k + b
            if _close(a, 1.0, tol):
                if abs(b) <= tol:
                    return False
                raise AggregationContradiction(k, k, None)
            raise AggregationContradiction(k, k, b / (1.0 - a))
        if k in self.af:
            r2, a3, b3 = self.af[k]
            if r2 == j:
                if _close(a3, a, tol) and _close(b3, b, tol):
                    return False
                if _close(a3, a, tol):
                    raise AggregationContradiction(k, j, None)
                raise AggregationContradiction(k, j, (b - b3) / (a3 - a))
            # a3*x_r2 + b3 = a*x_j + b  ->  x_r2 = (a/a3)*x_j + (b - b3)/a3
            return self.af_add(r2, j, a / a3, (b - b3) / a3)
        for m in sorted(self.af_children.pop(k, ())):
            _, am, bm = self.af[m]
            self.af[m] = (j, am * a, am * b + bm)
            self.af_children[j].add(m)
        self.af[k] = (j, a, b)
        self.af_children[j].add(k)
        return True

    def af_remove(self, k):
        j, _, _ = self.af.pop(k)
        self.af_children[j].discard(k)
        if not self.af_children[j]:
            del self.af_children[j]

    def aggregations(self):
        """``(k, j, a, b)`` tuples in ascending dependent order."""
        return [(k, *self.af[k]) for k in sorted(self.af)]

    # -- implications --------------------------------------------------
    def _tighter(self, kind, new, old):
        if old is None:
            return True
        if kind == LOWER:
            return new > old + self.tol
        return new < old - self.tol

    def ig_add(self, premise, target, kind, bound) -> bool:
        """Add ``premise -> x_target (>= | <=) bound``.

        ``premise`` is one ``(var, value)`` literal or a pair of them.  A pair
        entry is dropped when either single literal already implies a bound at
        least as tight.  Returns True if the store changed.
        """
        if kind not in (LOWER, UPPER):
            raise ValueError(f"unknown implication kind {kind!r}")
        if isinstance(premise[0], tuple):
            (i, v1), (j, v2) = sorted(premise)
            if i == j:
                raise ValueError("pair premise needs two distinct variables")
            for lit in ((i, v1), (j, v2)):
                old = self.ig_single.get(lit, {}).get((target, kind))
                if old is not None and not self._tighter(kind, bound, old):
                    return False
            key = ((i, v1), (j, v2))
            entry = self.ig_pair.setdefault(key, {})
            if not self._tighter(kind, bound, entry.get((target, kind))):
                return False
            entry[(target, kind)] = bound
            self.pair_index[(i, v1)].add(key)
            self.pair_index[(j, v2)].add(key)
            return True

        lit = tuple(premise)
        entry = self.ig_single.setdefault(lit, {})
        if not self._tighter(kind, bound, entry.get((target, kind))):
            return False
        entry[(target, kind)] = bound
        for key in sorted(self.pair_index.get(lit, ())):
            pe = self.ig_pair.get(key)
            if pe is None:
                continue
            old = pe.get((target, kind))
            if old is not None and not self._tighter(kind, old, bound):
                del pe[(target, kind)]
                if not pe:
                    self._drop_pair(key)
        return True

    def _drop_pair(self, key):
        del self.ig_pair[key]
        for lit in key:
            keys = self.pair_index.get(lit)
            if keys is not None:
                keys.discard(key)
                if not keys:
                    del self.pair_index[lit]

    def single_implications(self):
        """``((var, value), target, kind, bound)`` in canonical order."""
        return [
            (lit, t, kind, bnd)
            for lit in sorted(self.ig_single)
            for (t, kind), bnd in sorted(self.ig_single[lit].items())
        ]

    def pair_implications(self):
        return [
            (key, t, kind, bnd)
            for key in sorted(self.ig_pair)
            for (t, kind), bnd in sorted(self.ig_pair[key].items())
        ]

    def copy(self):
        out = ImplicationStore(self.tol)
        out.af = dict(self.af)
        out.af_children = defaultdict(set, {k: set(v) for k, v in self.af_children.items()})
        out.ig_single = {k: dict(v) for k, v in self.ig_single.items()}
        out.ig_pair = {k: dict(v) for k, v in self.ig_pair.items()}
        out.pair_index = defaultdict(set, {k: set(v) for k, v in self.pair_index.items()})
        return out
