"""Domain propagation used during probing.

Row propagation is activity based: for a ``<=`` row with minimal activity
``L`` every variable gets the bound implied by the residual ``L - a_k*bnd_k``.
Structure propagation walks the clique table, aggregations and implications
whenever an integer variable becomes fixed.
"""

from __future__ import annotations

import math

from .structures import LOWER, UPPER


class PropagationContext:
    """Read-only row data shared by every probe on one instance."""

    def __init__(self, instance, tol=1e-6, max_rounds=10):
        self.instance = instance
        self.tol = tol
        self.max_rounds = max_rounds
        self.rows = instance.le_rows()
        self.col_rows = [[] for _ in range(instance.num_cols)]
        for r, row in enumerate(self.rows):
            for j in row.cols:
                self.col_rows[j].append(r)
        self.is_int = [bool(v) for v in instance.is_integer]


class LocalDomains:
    """Working bounds for one probe.

    ``log`` records every variable whose bound moved, in order; ``fixed``
    queues integer variables as they become fixed.
    """

    __slots__ = ("lb", "ub", "is_int", "tol", "infeasible", "log", "fixed")

    def __init__(self, lb, ub, is_int, tol=1e-6):
        self.lb = list(lb)
        self.ub = list(ub)
        self.is_int = is_int
        self.tol = tol
        self.infeasible = False
        self.log = []
        self.fixed = []

    @classmethod
    def for_instance(cls, instance, tol=1e-6):
        return cls(
            [float(v) for v in instance.lower],
            [float(v) for v in instance.upper],
            [bool(v) for v in instance.is_integer],
            tol,
        )

    @property
    def fixed_count(self):
        return len(self.fixed)

    def changed(self):
        return set(self.log)

    def is_fixed(self, k):
        return self.lb[k] == self.ub[k]

    def tighten_ub(self, k, val) -> bool:
        tol = self.tol
        if self.is_int[k]:
            val = math.floor(val + tol)
        if val >= self.ub[k] - tol:
            return False
        lbk = self.lb[k]
        if val < lbk - tol:
            self.infeasible = True
            return False
        if val < lbk:
            val = lbk
        self.ub[k] = val
        self.log.append(k)
        if val == lbk and self.is_int[k]:
            self.fixed.append(k)
        return True

    def tighten_lb(self, k, val) -> bool:
        tol = self.tol
        if self.is_int[k]:
            val = math.ceil(val - tol)
        if val <= self.lb[k] + tol:
            return False
        ubk = self.ub[k]
        if val > ubk + tol:
            self.infeasible = True
            return False
        if val > ubk:
            val = ubk
        self.lb[k] = val
        self.log.append(k)
        if val == ubk and self.is_int[k]:
            self.fixed.append(k)
        return True

    def fix(self, k, val) -> bool:
        """Fix ``x_k = val``; returns True if a bound moved."""
        if self.is_int[k]:
            r = round(val)
            if abs(r - val) > self.tol:
                self.infeasible = True
                return False
            val = r
        if val < self.lb[k] - self.tol or val > self.ub[k] + self.tol:
            self.infeasible = True
            return False
        if self.lb[k] == self.ub[k] == val:
            return False
        a = self.tighten_ub(k, val)
        b = self.tighten_lb(k, val)
        return a or b


def propagate_row(ctx, r, dom):
    """Tighten bounds from ``<=`` row ``r``; returns ``[(var, kind, bound)]``.

    Sets ``dom.infeasible`` if the minimal activity exceeds the right-hand side.
    """
    cols, coefs, rhs, _ = ctx.rows[r]
    lb, ub = dom.lb, dom.ub
    tol = dom.tol
    minact = 0.0
    ninf = 0
    infvar = -1
    for k, a in zip(cols, coefs):
        bnd = lb[k] if a > 0 else ub[k]
        if bnd == math.inf or bnd == -math.inf:
            ninf += 1
            infvar = k
            if ninf > 1:
                return []
        else:
            minact += a * bnd
    if ninf == 0 and minact > rhs + tol:
        dom.infeasible = True
        return []
    out = []
    for k, a in zip(cols, coefs):
        if ninf:
            if k != infvar:
                continue
            residual = minact
        else:
            residual = minact - a * (lb[k] if a > 0 else ub[k])
        bound = (rhs - residual) / a + 0.0  # no negative zero
        if a > 0:
            if dom.tighten_ub(k, bound):
                out.append((k, UPPER, ub[k]))
        elif dom.tighten_lb(k, bound):
            out.append((k, LOWER, lb[k]))
        if dom.infeasible:
            break
    return out


def propagate_cliques(ct, var, value, dom):
    """Apply cliques of ``x_var = value``: every other literal of a clique whose
    ``x_var`` literal became true is forced false."""
    out = []
    for cid in ct.cliques_of(var):
        mem = ct.members[cid]
        if value != (0 if mem[var] else 1):
            continue
        for k, neg in mem.items():
            if k == var:
                continue
            if neg:
                if dom.tighten_lb(k, 1):
                    out.append((k, LOWER, 1))
            elif dom.tighten_ub(k, 0):
                out.append((k, UPPER, 0))
            if dom.infeasible:
                return out
    return out


def _apply_implied(dom, target, kind, bound, out):
    if kind == LOWER:
        if dom.tighten_lb(target, bound):
            out.append((target, LOWER, dom.lb[target]))
    elif dom.tighten_ub(target, bound):
        out.append((target, UPPER, dom.ub[target]))


def propagate_implications(store, var, value, dom):
    """Apply aggregations and bound implications triggered by ``x_var = value``."""
    out = []
    entry = store.af.get(var)
    if entry is not None:
        j, a, b = entry
        if dom.fix(j, (value - b) / a):
            out.append((j, "fixed", dom.lb[j]))
        if dom.infeasible:
            return out
    for k in sorted(store.af_children.get(var, ())):
        _, a, b = store.af[k]
        if dom.fix(k, a * value + b):
            out.append((k, "fixed", dom.lb[k]))
        if dom.infeasible:
            return out
    for (target, kind), bound in sorted(store.ig_single.get((var, value), {}).items()):
        _apply_implied(dom, target, kind, bound, out)
        if dom.infeasible:
            return out
    for key in sorted(store.pair_index.get((var, value), ())):
        (i, v1), (j, v2) = key
        other, ov = (j, v2) if i == var else (i, v1)
        if not (dom.lb[other] == dom.ub[other] == ov):
            continue
        for (target, kind), bound in sorted(store.ig_pair[key].items()):
            _apply_implied(dom, target, kind, bound, out)
            if dom.infeasible:
                return out
    return out


def propagate_to_fixpoint(ctx, dom, ct=None, store=None, seeds=(), rows=True, max_rounds=None):
    """Fix ``seeds`` then alternate structure and row propagation.

    Structure propagation (cliques, aggregations, implications) runs to
    exhaustion before each row round.  Row rounds revisit, in ascending
    order, the rows touching variables changed since the previous round.
    Stops at a fixpoint, after ``max_rounds`` row rounds, or on infeasibility.
    """
    if max_rounds is None:
        max_rounds = ctx.max_rounds
    for var, val in seeds:
        if dom.lb[var] == dom.ub[var] == val and dom.is_int[var]:
            dom.fixed.append(var)
        dom.fix(var, val)
        if dom.infeasible:
            return dom
    col_rows = ctx.col_rows
    # seeds that were already fixed leave no log entry; their rows still need a pass
    dirty = set()
    for var, _ in seeds:
        dirty.update(col_rows[var])
    fpos = 0
    lpos = 0
    rounds = 0
    while True:
        while fpos < len(dom.fixed) and not dom.infeasible:
            k = dom.fixed[fpos]
            fpos += 1
            v = int(dom.lb[k])
            if ct is not None:
                propagate_cliques(ct, k, v, dom)
            if store is not None and not dom.infeasible:
                propagate_implications(store, k, v, dom)
        if dom.infeasible or not rows or rounds >= max_rounds:
            break
        for k in dom.log[lpos:]:
            dirty.update(col_rows[k])
        lpos = len(dom.log)
        if not dirty:
            break
        rounds += 1
        for r in sorted(dirty):
            propagate_row(ctx, r, dom)
            if dom.infeasible:
                break
        dirty = set()
    return dom
