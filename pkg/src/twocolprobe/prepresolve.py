"""One-round simple presolve run ahead of probing.

Removes empty and singleton rows, applies one pass of single-row bound
strengthening, detects binaries and sorts the rows into clique
(set-packing) rows and the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ProvenInfeasible
from .model import GE, LE, Literal, MipInstance, row_satisfied
from .propagation import LocalDomains, PropagationContext, propagate_row


@dataclass(frozen=True)
class PbcRow:
    """``sum(coef * literal) <= rhs`` over binary literals, all coefficients > 0."""

    literals: tuple
    rhs: float
    source_row: int

    @property
    def vars(self):
        return tuple(lit.var for lit, _ in self.literals)


@dataclass
class PresolveOutput:
    instance: MipInstance
    S_sp: list
    S_nsp: list
    C: list
    binaries: tuple

    @property
    def binary_set(self):
        return frozenset(self.binaries)

    @property
    def cliques(self):
        """Variable tuples of the clique rows, in row order."""
        return [p.vars for p in self.S_sp]


def _round_integer_bounds(lower, upper, is_int, tol):
    for j, integral in enumerate(is_int):
        if integral:
            if math.isfinite(lower[j]):
                lower[j] = math.ceil(lower[j] - tol)
            if math.isfinite(upper[j]):
                upper[j] = math.floor(upper[j] + tol)


def _check_bounds(instance, lower, upper, tol):
    for j in range(instance.num_cols):
        if lower[j] > upper[j] + tol:
            raise ProvenInfeasible(
                f"presolve: column {instance.col_names[j]} has empty domain "
                f"[{lower[j]}, {upper[j]}]"
            )


def clean_rows(instance, tol=1e-6):
    """Drop empty rows and turn singleton rows into bounds.

    Integer bounds are rounded inward.  Raises :class:`ProvenInfeasible` if an
    empty row is violated or a bound crosses.
    """
    lower = [float(v) for v in instance.lower]
    upper = [float(v) for v in instance.upper]
    is_int = [bool(v) for v in instance.is_integer]
    _round_integer_bounds(lower, upper, is_int, tol)
    keep = []
    for i, (cols, vals) in enumerate(instance.matrix.rows):
        sense = instance.sense[i]
        b = float(instance.rhs[i])
        if not cols:
            if not row_satisfied(sense, 0.0, b, tol):
                raise ProvenInfeasible(
                    f"presolve: empty row {instance.row_names[i]} requires 0 {sense} {b}"
                )
            continue
        if len(cols) == 1:
            j, a = cols[0], vals[0]
            bound = b / a
            caps_upper = (sense == LE) == (a > 0)
            if sense in (LE, GE):
                if caps_upper:
                    upper[j] = min(upper[j], bound)
                else:
                    lower[j] = max(lower[j], bound)
            else:
                upper[j] = min(upper[j], bound)
                lower[j] = max(lower[j], bound)
            continue
        keep.append(i)
    _round_integer_bounds(lower, upper, is_int, tol)
    _check_bounds(instance, lower, upper, tol)
    if len(keep) == instance.num_rows and list(lower) == list(instance.lower) and list(
        upper
    ) == list(instance.upper):
        return instance
    return instance.replace(
        rows=[instance.matrix.rows[i] for i in keep],
        sense=[instance.sense[i] for i in keep],
        rhs=[instance.rhs[i] for i in keep],
        row_names=[instance.row_names[i] for i in keep],
        lower=lower,
        upper=upper,
    )


def strengthen_bounds_one_round(instance, tol=1e-6):
    """One pass of activity-based bound tightening over every row (no fixpoint)."""
    ctx = PropagationContext(instance, tol=tol)
    dom = LocalDomains.for_instance(instance, tol)
    for r in range(len(ctx.rows)):
        propagate_row(ctx, r, dom)
        if dom.infeasible:
            name = instance.row_names[ctx.rows[r].source]
            raise ProvenInfeasible(f"presolve: row {name} cannot be satisfied")
    if not dom.log:
        return instance
    return instance.replace(lower=dom.lb, upper=dom.ub)


def detect_binaries(instance):
    """Integer columns whose domain is exactly ``{0, 1}``."""
    return tuple(
        j
        for j in range(instance.num_cols)
        if instance.is_integer[j]
        and instance.lower[j] >= 0
        and instance.upper[j] <= 1
        and instance.lower[j] < instance.upper[j]
    )


def extract_pbc(row, binary_set, lower, upper):
    """Pure-binary relaxation of a ``<=`` row, or None.

    Negative binary coefficients become complemented literals; the
    non-binary part is replaced by its infimum over the bounds.  None when
    that infimum is ``-inf`` or fewer than two binaries appear.
    """
    lits = []
    inf_rest = 0.0
    neg_sum = 0.0
    for j, a in zip(row.cols, row.coefs):
        if j in binary_set:
            if a > 0:
                lits.append((Literal(j, False), a))
            else:
                lits.append((Literal(j, True), -a))
                neg_sum += a
        else:
            bnd = lower[j] if a > 0 else upper[j]
            if math.isinf(bnd):
                return None
            inf_rest += a * bnd
    if len(lits) < 2:
        return None
    return PbcRow(tuple(lits), row.rhs - inf_rest - neg_sum, row.source)


def classify_clique(pbc, tol=1e-6, complemented=False):
    """True if any two literals of ``pbc`` cannot both be 1.

    Uses the two smallest coefficients; a PBC with a coefficient above the
    right-hand side is not a clique here.  With ``complemented=False`` only
    PBCs over uncomplemented literals qualify.
    """
    if len(pbc.literals) < 2:
        return False
    if not complemented and any(lit.negated for lit, _ in pbc.literals):
        return False
    coefs = sorted(a for _, a in pbc.literals)
    if coefs[-1] > pbc.rhs + tol:
        return False
    return coefs[0] + coefs[1] > pbc.rhs + tol


def run_simple_presolve(instance, tol=1e-6, complemented_cliques=False):
    """Clean, strengthen once, detect binaries, split rows into clique / non-clique."""
    inst = clean_rows(instance, tol)
    inst = strengthen_bounds_one_round(inst, tol)
    binaries = detect_binaries(inst)
    bset = frozenset(binaries)
    lower, upper = list(inst.lower), list(inst.upper)
    S_sp, C, S_nsp = [], [], []
    for i in range(inst.num_rows):
        found = False
        for form in inst.normalize_row(i):
            pbc = extract_pbc(form, bset, lower, upper)
            if pbc is not None and classify_clique(pbc, tol, complemented_cliques):
                S_sp.append(pbc)
                C.append(i)
                found = True
        if not found:
            S_nsp.append(i)
    return PresolveOutput(inst, S_sp, S_nsp, C, binaries)

