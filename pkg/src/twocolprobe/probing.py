"""Two-column probing: pair selection, probing, deduction and the serial driver."""

from __future__ import annotations

import heapq
import logging
import time
from bisect import bisect_left
from dataclasses import dataclass, field

from .config import Config
from .errors import AggregationContradiction, ProvenInfeasible
from .model import Literal
from .mps import MetricsReport
from .prepresolve import run_simple_presolve
from .propagation import LocalDomains, PropagationContext, propagate_to_fixpoint
from .reductions import Reductions, apply_reductions
from .structures import LOWER, UPPER, ImplicationStore, build_cm_ct, conflict_numbers

log = logging.getLogger(__name__)

ASSIGNMENTS = ((0, 0), (1, 0), (0, 1), (1, 1))


# -- pair selection -----------------------------------------------------------


@dataclass(frozen=True)
class CandidatePair:
    i: int
    j: int
    cm: int
    score: float = 0.0


def select_candidates(cm, cand_number):
    """Cells of ``cm`` with count >= tau, tau the smallest threshold keeping at
    most ``cand_number`` cells (found by binary search over the count range).

    Ordered by descending count, then ascending ``(i, j)``.
    """
    if not len(cm):
        return []
    values = sorted(cm.counts.values())
    total = len(values)

    def count_at_least(t):
        return total - bisect_left(values, t)

    lo, hi = 1, values[-1] + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if count_at_least(mid) <= cand_number:
            hi = mid
        else:
            lo = mid + 1
    cells = [(key, c) for key, c in cm.counts.items() if c >= lo]
    cells.sort(key=lambda kc: (-kc[1], kc[0]))
    return [key for key, _ in cells]


def score_pair(i, j, cm, ct, conf, instance, mode="intersection"):
    """``(10*CM_ij + nnz_i + nnz_j + 3*conf_i + 3*conf_j) / conflict``.

    ``conflict`` is 10 when the pair shares a clique (``mode="intersection"``)
    or when either variable is in any clique (``mode="union"``), else 1.
    """
    if mode == "intersection":
        penalized = ct.shares_clique(i, j)
    elif mode == "union":
        penalized = bool(ct.cliques_of(i)) or bool(ct.cliques_of(j))
    else:
        raise ValueError(f"unknown conflict penalty mode {mode!r}")
    conflict = 10.0 if penalized else 1.0
    num = (
        10 * cm.get(i, j)
        + instance.col_nnz(i)
        + instance.col_nnz(j)
        + 3 * conf.get(i, 0)
        + 3 * conf.get(j, 0)
    )
    return num / conflict


def order_pairs(candidates, max_probe_number):
    """Top ``max_probe_number`` candidates by score (partial selection); ties by ``(i, j)``."""
    return heapq.nsmallest(max_probe_number, candidates, key=lambda c: (-c.score, c.i, c.j))


def rank_pairs(ctx, cm, limit=None):
    """Select, score and order the candidate pairs of ``cm``."""
    cfg = ctx.config
    limit = cfg.max_probe_number if limit is None else limit
    cands = [
        CandidatePair(
            i, j, cm.get(i, j),
            score_pair(i, j, cm, ctx.ct, ctx.conf, ctx.instance, cfg.conflict_penalty_mode),
        )
        for i, j in select_candidates(cm, cfg.cand_number)
    ]
    return order_pairs(cands, limit)


# -- shared and worker state ------------------------------------------------


class ProbingContext:
    """Read-only data shared by every worker: presolved model, CM, base CT."""

    def __init__(self, presolved, config):
        self.config = config
        self.presolved = presolved
        self.instance = presolved.instance
        self.prop = PropagationContext(self.instance, config.tol, config.max_propagation_rounds)
        self.cm, self.ct = build_cm_ct(presolved, config.size_limit, config.work_limit)
        self.conf = conflict_numbers(self.ct, self.instance, presolved.binaries)

    @property
    def tol(self):
        return self.config.tol


def prepare(instance, config=None):
    config = config or Config()
    presolved = run_simple_presolve(instance, config.tol, config.complemented_cliques)
    return ProbingContext(presolved, config)


class ProbingState:
    """Mutable state owned by one worker (or the serial driver)."""

    def __init__(self, lb, ub, ct, store):
        self.lb = lb
        self.ub = ub
        self.ct = ct
        self.store = store
        self.conflicts = []
        self.probed = set()
        self.pairs_done = 0
        self.terminated_by = "exhausted"

    @classmethod
    def initial(cls, ctx):
        inst = ctx.instance
        return cls(
            [float(v) for v in inst.lower],
            [float(v) for v in inst.upper],
            ctx.ct.copy(),
            ImplicationStore(ctx.tol),
        )

    def is_fixed(self, k):
        return self.lb[k] == self.ub[k]

    def domains(self, ctx):
        return LocalDomains(self.lb, self.ub, ctx.prop.is_int, ctx.tol)


# -- one pair -----------------------------------------------------------------


@dataclass
class ProbeOutcome:
    """Per-assignment results of probing ``(x_i, x_j)``.

    ``lower[v]`` / ``upper[v]`` hold only the bounds that moved away from the
    global values; infeasible assignments have no entries.
    """

    i: int
    j: int
    feasible: dict = field(default_factory=dict)
    lower: dict = field(default_factory=dict)
    upper: dict = field(default_factory=dict)
    conflicts: list = field(default_factory=list)

    @property
    def infeasible(self):
        return [v for v in ASSIGNMENTS if not self.feasible[v]]

    @property
    def feasible_assignments(self):
        return [v for v in ASSIGNMENTS if self.feasible[v]]


def conflict_literals(i, j, v):
    """Literals whose joint truth is the assignment ``x_i, x_j = v``."""
    return Literal(i, v[0] == 0), Literal(j, v[1] == 0)


def probe_pair(ctx, state, i, j):
    """Probe all four assignments of ``(x_i, x_j)``.

    Each infeasible assignment becomes a conflict, added to the worker's
    clique table and conflict list unless a clique already covers it.
    """
    out = ProbeOutcome(i, j)
    lb, ub = state.lb, state.ub
    for v in ASSIGNMENTS:
        dom = state.domains(ctx)
        propagate_to_fixpoint(ctx.prop, dom, state.ct, state.store, seeds=((i, v[0]), (j, v[1])))
        if dom.infeasible:
            out.feasible[v] = False
            a, b = conflict_literals(i, j, v)
            if not state.ct.contains_pair(a, b):
                state.ct.add((a, b))
                state.conflicts.append((a, b))
                out.conflicts.append((a, b))
            continue
        out.feasible[v] = True
        moved = sorted(set(dom.log))
        out.lower[v] = {k: dom.lb[k] for k in moved if dom.lb[k] != lb[k]}
        out.upper[v] = {k: dom.ub[k] for k in moved if dom.ub[k] != ub[k]}
    return out


@dataclass
class PairDeduction:
    fixings: dict = field(default_factory=dict)
    aggregation: tuple | None = None


def derive_fixings(outcome):
    """Fixings or an aggregation implied by two or more infeasible assignments.

    Aggregations are returned as ``(k, j, a, b)`` meaning ``x_k = a*x_j + b``
    with ``x_j`` the first variable of the pair.
    """
    i, j = outcome.i, outcome.j
    bad = set(outcome.infeasible)
    if len(bad) == 4:
        raise ProvenInfeasible(f"probing: every assignment of (x{i}, x{j}) is infeasible")
    if len(bad) == 3:
        (v,) = outcome.feasible_assignments
        return PairDeduction({i: v[0], j: v[1]})
    if len(bad) < 2:
        return PairDeduction()
    if bad == {(0, 0), (0, 1)}:
        return PairDeduction({i: 1})
    if bad == {(1, 0), (1, 1)}:
        return PairDeduction({i: 0})
    if bad == {(0, 0), (1, 0)}:
        return PairDeduction({j: 1})
    if bad == {(0, 1), (1, 1)}:
        return PairDeduction({j: 0})
    if bad == {(0, 1), (1, 0)}:
        return PairDeduction(aggregation=(j, i, 1.0, 0.0))
    return PairDeduction(aggregation=(j, i, -1.0, 1.0))


@dataclass
class BranchBounds:
    """Bounds valid whenever one pair variable takes one value (None = infeasible)."""

    lower: dict
    upper: dict


@dataclass
class BoundCombination:
    lower: dict = field(default_factory=dict)
    upper: dict = field(default_factory=dict)
    branches: dict = field(default_factory=dict)
    aggregations: list = field(default_factory=list)
    implications: list = field(default_factory=list)


def _merge_branch(outcome, assignments, lb, ub):
    lo, up = {}, {}
    keys_lo = set().union(*(outcome.lower[v] for v in assignments))
    keys_up = set().union(*(outcome.upper[v] for v in assignments))
    for k in keys_lo:
        val = min(outcome.lower[v].get(k, lb[k]) for v in assignments)
        if val != lb[k]:
            lo[k] = val
    for k in keys_up:
        val = max(outcome.upper[v].get(k, ub[k]) for v in assignments)
        if val != ub[k]:
            up[k] = val
    return BranchBounds(lo, up)


def combine_bounds(outcome, lb, ub, tol=1e-6):
    """Global bound updates, per-variable branch bounds, aggregations and implications.

    Global: ``ub_k = min(ub_k, max_v ub(v)_k)`` and ``lb_k = max(lb_k, min_v lb(v)_k)``
    over feasible ``v``.  Branch bounds for ``x_i = c`` combine the two
    feasible assignments with that value.  A variable fixed to different
    values in the two branches of a pair variable yields an aggregation;
    other branch bounds tighter than the incoming global ones become
    single-literal implications.
    """
    feas = outcome.feasible_assignments
    res = BoundCombination()
    if not feas:
        return res
    overall = _merge_branch(outcome, feas, lb, ub)
    res.lower = {k: v for k, v in overall.lower.items() if v > lb[k] + tol}
    res.upper = {k: v for k, v in overall.upper.items() if v < ub[k] - tol}

    i, j = outcome.i, outcome.j
    for pos, var in ((0, i), (1, j)):
        for val in (0, 1):
            vs = [v for v in feas if v[pos] == val]
            res.branches[(var, val)] = _merge_branch(outcome, vs, lb, ub) if vs else None

    for var in (i, j):
        b0, b1 = res.branches[(var, 0)], res.branches[(var, 1)]
        if b0 is None or b1 is None:
            continue
        keys = set(b0.lower) | set(b0.upper) | set(b1.lower) | set(b1.upper)
        for k in sorted(keys):
            if k == var or lb[k] == ub[k]:
                continue
            lo0, up0 = b0.lower.get(k, lb[k]), b0.upper.get(k, ub[k])
            lo1, up1 = b1.lower.get(k, lb[k]), b1.upper.get(k, ub[k])
            if lo0 == up0 and lo1 == up1:
                if abs(lo1 - lo0) > tol:
                    res.aggregations.append((k, var, lo1 - lo0, lo0))
                continue
            for val, lo, up in ((0, lo0, up0), (1, lo1, up1)):
                if lo > lb[k] + tol:
                    res.implications.append(((var, val), k, LOWER, lo))
                if up < ub[k] - tol:
                    res.implications.append(((var, val), k, UPPER, up))
    return res


def derive_pair_implications(outcome, combination, store, lb, ub, tol=1e-6):
    """Implications conditioned on both pair literals.

    Kept only when strictly tighter than both single-literal branch bounds
    and not dominated by an implication already in ``store``.
    """
    i, j = outcome.i, outcome.j
    out = []
    for v in outcome.feasible_assignments:
        bi = combination.branches[(i, v[0])]
        bj = combination.branches[(j, v[1])]
        premise = ((i, v[0]), (j, v[1]))
        single_i = store.ig_single.get((i, v[0]), {})
        single_j = store.ig_single.get((j, v[1]), {})
        for k, lo in sorted(outcome.lower[v].items()):
            if k in (i, j):
                continue
            if lo <= max(bi.lower.get(k, lb[k]), bj.lower.get(k, lb[k])) + tol:
                continue
            old = [s.get((k, LOWER)) for s in (single_i, single_j)]
            if any(o is not None and o >= lo - tol for o in old):
                continue
            out.append((premise, k, LOWER, lo))
        for k, up in sorted(outcome.upper[v].items()):
            if k in (i, j):
                continue
            if up >= min(bi.upper.get(k, ub[k]), bj.upper.get(k, ub[k])) - tol:
                continue
            old = [s.get((k, UPPER)) for s in (single_i, single_j)]
            if any(o is not None and o <= up + tol for o in old):
                continue
            out.append((premise, k, UPPER, up))
    return out


# -- effort budget -----------------------------------------------------------


@dataclass
class ProbingBudget:
    """Stopping rules: pair cap, wall-clock deadline and the soft effort score."""

    max_pairs: int = 1000
    deadline: float = float("inf")
    eff_threshold: float = 1000.0
    eff: float = 0.0
    pairs_done: int = 0

    def start_iteration(self):
        self.eff *= 0.9

    def finish_iteration(self, fixed=0, conflict_or_aggregation=False, ig_updated=False):
        if fixed >= 2:
            self.eff = 0.0
        elif fixed == 1:
            self.eff *= 0.5
        if conflict_or_aggregation:
            self.eff *= 0.8
        if ig_updated:
            self.eff *= 0.9
        self.eff += 110.0
        self.pairs_done += 1

    @property
    def effort_exceeded(self):
        return self.eff > self.eff_threshold


def update_budget(budget, fixed=0, conflict_or_aggregation=False, ig_updated=False):
    """Advance ``budget`` over one whole iteration with the given events."""
    budget.start_iteration()
    budget.finish_iteration(fixed, conflict_or_aggregation, ig_updated)
    return budget


# -- applying one iteration ------------------------------------------------------


@dataclass
class IterationEvents:
    fixed: list = field(default_factory=list)
    conflicts: int = 0
    aggregations: int = 0
    ig_updates: int = 0


def _fix_global(ctx, state, k, value):
    tol = ctx.tol
    if ctx.prop.is_int[k]:
        r = round(value)
        if abs(r - value) > tol:
            raise ProvenInfeasible(f"x{k} must equal non-integral {value}")
        value = r
    if value < state.lb[k] - tol or value > state.ub[k] + tol:
        raise ProvenInfeasible(f"x{k} = {value} outside [{state.lb[k]}, {state.ub[k]}]")
    value = float(value) + 0.0
    state.lb[k] = state.ub[k] = value


def add_aggregation(ctx, state, k, j, a, b):
    """Store ``x_k = a*x_j + b`` in the worker state; contradictions become fixings."""
    if state.is_fixed(j):
        _fix_global(ctx, state, k, a * state.lb[j] + b)
        return False
    if state.is_fixed(k):
        _fix_global(ctx, state, j, (state.lb[k] - b) / a)
        return False
    try:
        return state.store.af_add(k, j, a, b)
    except AggregationContradiction as exc:
        if exc.value is None:
            raise ProvenInfeasible(f"contradicting aggregations of x{exc.var}") from None
        _fix_global(ctx, state, exc.root, exc.value)
        return False


def apply_outcome(ctx, state, outcome):
    """Fold one probe outcome into the worker state; returns the iteration's events."""
    tol = ctx.tol
    lb, ub = state.lb, state.ub
    events = IterationEvents(conflicts=len(outcome.conflicts))
    ded = derive_fixings(outcome)
    comb = combine_bounds(outcome, lb, ub, tol)
    pair_imps = derive_pair_implications(outcome, comb, state.store, lb, ub, tol)

    touched = set(comb.lower) | set(comb.upper) | set(ded.fixings)
    was_fixed = {k for k in touched if lb[k] == ub[k]}
    for k, v in comb.upper.items():
        ub[k] = v
    for k, v in comb.lower.items():
        lb[k] = v
    for k in sorted(touched):
        if lb[k] > ub[k] + tol:
            raise ProvenInfeasible(f"probing: bounds of x{k} cross")
    for k, v in sorted(ded.fixings.items()):
        _fix_global(ctx, state, k, v)

    aggs = ([ded.aggregation] if ded.aggregation else []) + comb.aggregations
    for k, j, a, b in aggs:
        watch = {k, j}
        before = {x for x in watch if state.is_fixed(x)}
        if add_aggregation(ctx, state, k, j, a, b):
            events.aggregations += 1
        touched |= {x for x in watch if state.is_fixed(x)} - before

    for premise, target, kind, bound in comb.implications + pair_imps:
        if state.is_fixed(target):
            continue
        if state.store.ig_add(premise, target, kind, bound):
            events.ig_updates += 1

    events.fixed = sorted(k for k in touched if lb[k] == ub[k] and k not in was_fixed)
    return events


def probe_candidates(ctx, state, pairs, budget):
    """Run the probing loop over ordered ``pairs`` until a stopping rule fires."""
    reason = None
    for pair in pairs:
        i, j = (pair.i, pair.j) if isinstance(pair, CandidatePair) else pair
        if budget.pairs_done >= budget.max_pairs:
            reason = "pair_limit"
            break
        if time.monotonic() > budget.deadline:
            reason = "time_limit"
            break
        if (i in state.probed and j in state.probed) or state.is_fixed(i) or state.is_fixed(j):
            continue
        budget.start_iteration()
        outcome = probe_pair(ctx, state, i, j)
        events = apply_outcome(ctx, state, outcome)
        state.probed.update((i, j))
        budget.finish_iteration(
            len(events.fixed), bool(events.conflicts or events.aggregations), events.ig_updates > 0
        )
        state.pairs_done = budget.pairs_done
        if budget.effort_exceeded:
            reason = "effort"
            break
    if reason is None:
        reason = "pair_limit" if budget.pairs_done >= budget.max_pairs else "exhausted"
    state.terminated_by = reason
    return state


# -- assembling results ----------------------------------------------------------


def resolve_aggregations(ctx, state):
    """Drop aggregations touching fixed variables, fixing their partners."""
    store = state.store
    changed = True
    while changed:
        changed = False
        for k, j, a, b in store.aggregations():
            if state.is_fixed(j):
                _fix_global(ctx, state, k, a * state.lb[j] + b)
            elif state.is_fixed(k):
                _fix_global(ctx, state, j, (state.lb[k] - b) / a)
            else:
                continue
            store.af_remove(k)
            changed = True


def assemble_reductions(ctx, state):
    """Express the worker state as :class:`Reductions` relative to the presolved model."""
    resolve_aggregations(ctx, state)
    inst = ctx.instance
    red = Reductions(probed=frozenset(state.probed))
    for k in range(inst.num_cols):
        lo0, up0 = float(inst.lower[k]), float(inst.upper[k])
        lo, up = state.lb[k], state.ub[k]
        if lo == up and lo0 != up0:
            red.fixings[k] = lo
            continue
        if lo > lo0:
            red.lower[k] = lo
        if up < up0:
            red.upper[k] = up
    red.aggregations = state.store.aggregations()
    red.new_conflicts = list(state.conflicts)
    # implications on or from fixed variables carry no information
    fixed = state.is_fixed
    red.single_implications = [
        e for e in state.store.single_implications() if not (fixed(e[0][0]) or fixed(e[1]))
    ]
    red.pair_implications = [
        e for e in state.store.pair_implications()
        if not (fixed(e[0][0][0]) or fixed(e[0][1][0]) or fixed(e[1]))
    ]
    return red


@dataclass
class ProbingResult:
    """Output of a probing run.

    ``instance`` is the presolved model the reductions refer to;
    ``reduced()`` applies them.
    """

    instance: object
    reductions: Reductions
    metrics: MetricsReport
    context: ProbingContext | None = None
    state: ProbingState | None = None

    def reduced(self):
        return apply_reductions(self.instance, self.reductions)


def metrics_for(reductions, pairs, threads, terminated_by, seconds, status="ok", note="",
                cm_truncated=False):
    return MetricsReport(
        status=status,
        pre_time_seconds=seconds,
        pairs_probed=pairs,
        fixings=len(reductions.fixings),
        aggregations=len(reductions.aggregations),
        new_conflicts=len(reductions.new_conflicts),
        bound_changes=reductions.bound_changes,
        threads=threads,
        terminated_by=terminated_by,
        cm_truncated=cm_truncated,
        note=note,
    )


def run_serial(instance, config=None, candidates=None, ctx=None):
    """Presolve, build CM/CT, rank pairs and probe them one after another.

    ``candidates`` overrides pair selection with an explicit list of
    ``(i, j)`` pairs.  Raises :class:`ProvenInfeasible` when probing proves
    the model infeasible.
    """
    config = config or Config()
    if ctx is None:
        presolved = run_simple_presolve(instance, config.tol, config.complemented_cliques)
        start = time.monotonic()
        ctx = ProbingContext(presolved, config)
    else:
        start = time.monotonic()
    state = ProbingState.initial(ctx)
    if candidates is None:
        pairs = rank_pairs(ctx, ctx.cm)
    else:
        pairs = [(min(i, j), max(i, j)) for i, j in candidates]
    if not pairs:
        red = assemble_reductions(ctx, state)
        metrics = metrics_for(red, 0, 1, "exhausted", time.monotonic() - start,
                              status="no_pairs", note="no pairs",
                              cm_truncated=ctx.cm.truncated)
        return ProbingResult(ctx.instance, red, metrics, ctx, state)
    budget = ProbingBudget(
        max_pairs=config.max_probe_number,
        deadline=start + config.time_limit_seconds,
        eff_threshold=config.eff_threshold,
    )
    probe_candidates(ctx, state, pairs, budget)
    red = assemble_reductions(ctx, state)
    metrics = metrics_for(red, budget.pairs_done, 1, state.terminated_by,
                          time.monotonic() - start, cm_truncated=ctx.cm.truncated)
    return ProbingResult(ctx.instance, red, metrics, ctx, state)
