"""Clique-aware partitioning, fork-join local probing, merging and implication analysis."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .config import Config, thread_pair_cap
from .errors import ProvenInfeasible
from .prepresolve import run_simple_presolve
from .probing import (
    ProbingBudget,
    ProbingContext,
    ProbingResult,
    ProbingState,
    _fix_global,
    add_aggregation,
    assemble_reductions,
    metrics_for,
    probe_candidates,
    rank_pairs,
)
from .propagation import propagate_to_fixpoint
from .structures import LOWER, UPPER

log = logging.getLogger(__name__)

# Most informative reason first when workers stopped for different reasons.
_TERMINATION_PRIORITY = ("time_limit", "pair_limit", "effort", "exhausted")


# -- partitioning ---------------------------------------------------------------


@dataclass
class Partition:
    """``groups[t]`` lists the variables of thread ``t``; ``assignment`` maps back."""

    groups: list
    assignment: dict

    @property
    def k(self):
        return len(self.groups)

    def members(self, t):
        return frozenset(self.groups[t])


def partition_variables(binaries, cliques, k, per_variable_increment=False):
    """Split ``binaries`` into ``k`` groups keeping cliques together.

    Cliques are visited in order; a clique none of whose variables is placed
    yet goes whole to the current thread, which then advances round-robin.
    A second pass places the unassigned rest of partially placed cliques the
    same way.  Leftover variables go one by one to the smallest group (lowest
    thread id on ties).

    ``per_variable_increment=True`` instead advances the thread after every
    placed variable in a single pass over the cliques.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    binaries = list(binaries)
    bset = set(binaries)
    groups = [[] for _ in range(k)]
    assignment = {}
    t = 0

    def place(var, thread):
        assignment[var] = thread
        groups[thread].append(var)

    if per_variable_increment:
        for clique in cliques:
            for var in clique:
                if var in bset and var not in assignment:
                    place(var, t)
                    t = (t + 1) % k
    else:
        for whole in (True, False):
            for clique in cliques:
                free = [v for v in clique if v in bset and v not in assignment]
                if not free or (whole and len(free) != len(clique)):
                    continue
                for var in free:
                    place(var, t)
                t = (t + 1) % k
    for var in binaries:
        if var not in assignment:
            smallest = min(range(k), key=lambda s: (len(groups[s]), s))
            place(var, smallest)
    return Partition([sorted(g) for g in groups], assignment)


# -- local probing -----------------------------------------------------------------


@dataclass
class LocalResult:
    thread: int
    state: ProbingState | None = None
    pairs_done: int = 0
    terminated_by: str = "exhausted"
    infeasible: ProvenInfeasible | None = None


def run_local_probing(ctx, partition, t, deadline, k=None):
    """Probe the candidate pairs with both ends in thread ``t``'s group."""
    k = partition.k if k is None else k
    members = partition.members(t)
    state = ProbingState.initial(ctx)
    result = LocalResult(t, state)
    if len(members) < 2:
        return result
    pairs = rank_pairs(ctx, ctx.cm.restricted(members))
    if not pairs:
        return result
    cfg = ctx.config
    budget = ProbingBudget(
        max_pairs=thread_pair_cap(cfg.max_probe_number, k),
        deadline=deadline,
        eff_threshold=cfg.eff_threshold,
    )
    try:
        probe_candidates(ctx, state, pairs, budget)
    except ProvenInfeasible as exc:
        result.infeasible = exc
    result.pairs_done = budget.pairs_done
    result.terminated_by = state.terminated_by
    return result


# -- merging ---------------------------------------------------------------------


def merge_bounds(ctx, locals_):
    """Combine worker results, in thread order, into one global state.

    Bounds take the tightest value over threads; conflicts, aggregations and
    implications are re-added through the usual duplicate checks.
    """
    tol = ctx.tol
    state = ProbingState.initial(ctx)
    lb, ub = state.lb, state.ub
    for res in locals_:
        for k in range(len(lb)):
            lb[k] = max(lb[k], res.state.lb[k])
            ub[k] = min(ub[k], res.state.ub[k])
    for k in range(len(lb)):
        if lb[k] > ub[k] + tol:
            raise ProvenInfeasible(f"merge: bounds of x{k} cross across threads")
        if lb[k] > ub[k]:
            lb[k] = ub[k]
    for res in locals_:
        for a, b in res.state.conflicts:
            if not state.ct.contains_pair(a, b):
                state.ct.add((a, b))
                state.conflicts.append((a, b))
    for res in locals_:
        for k, j, a, b in res.state.store.aggregations():
            add_aggregation(ctx, state, k, j, a, b)
    for res in locals_:
        store = res.state.store
        for premise, target, kind, bound in store.single_implications() + store.pair_implications():
            if not state.is_fixed(target):
                state.store.ig_add(premise, target, kind, bound)
    for res in locals_:
        state.probed |= res.state.probed
        state.pairs_done += res.pairs_done
    return state


# -- implication analysis -----------------------------------------------------------


@dataclass
class AnalysisEvents:
    fixed: list = field(default_factory=list)
    aggregations: int = 0
    implications: int = 0


def _branch(ctx, state, i, v):
    dom = state.domains(ctx)
    propagate_to_fixpoint(ctx.prop, dom, state.ct, state.store, seeds=((i, v),), rows=False)
    return dom


def implication_analysis(ctx, state, probed=None):
    """Propagate both values of each probed variable through structures only.

    Cliques, aggregations and implications are followed; rows are not.  A
    branch that fails fixes the variable to the other value.  Bounds common
    to both branches tighten the global ones, variables fixed to different
    values in the two branches are aggregated, and one-sided tightenings are
    kept as implications.
    """
    tol = ctx.tol
    lb, ub = state.lb, state.ub
    events = AnalysisEvents()
    probed = sorted(state.probed if probed is None else probed)
    for i in probed:
        if state.is_fixed(i):
            continue
        d0, d1 = _branch(ctx, state, i, 0), _branch(ctx, state, i, 1)
        if d0.infeasible and d1.infeasible:
            raise ProvenInfeasible(f"implication analysis: both values of x{i} fail")
        if d0.infeasible or d1.infeasible:
            _fix_global(ctx, state, i, 0 if d1.infeasible else 1)
            events.fixed.append(i)
            continue
        moved = sorted((set(d0.log) | set(d1.log)) - {i})
        for k in moved:
            if state.is_fixed(k):
                continue
            lo0, up0, lo1, up1 = d0.lb[k], d0.ub[k], d1.lb[k], d1.ub[k]
            if lo0 == up0 and lo1 == up1 and abs(lo1 - lo0) > tol:
                if add_aggregation(ctx, state, k, i, lo1 - lo0, lo0):
                    events.aggregations += 1
                continue
            new_lo, new_up = min(lo0, lo1), max(up0, up1)
            before = (lb[k], ub[k])
            if new_up < ub[k] - tol:
                ub[k] = new_up
            if new_lo > lb[k] + tol:
                lb[k] = min(new_lo, ub[k])
            if lb[k] > ub[k] + tol:
                raise ProvenInfeasible(f"implication analysis: bounds of x{k} cross")
            if lb[k] == ub[k] and before[0] != before[1]:
                events.fixed.append(k)
                continue
            for val, lo, up in ((0, lo0, up0), (1, lo1, up1)):
                if lo > lb[k] + tol and state.store.ig_add((i, val), k, LOWER, lo):
                    events.implications += 1
                if up < ub[k] - tol and state.store.ig_add((i, val), k, UPPER, up):
                    events.implications += 1
    return events


# -- orchestration ---------------------------------------------------------------


def _overall_termination(locals_):
    reasons = {r.terminated_by for r in locals_ if r.pairs_done}
    for reason in _TERMINATION_PRIORITY:
        if reason in reasons:
            return reason
    return "exhausted"


def run_parallel(instance, k=None, config=None, ctx=None):
    """Partition, probe the groups concurrently, merge and run implication analysis.

    Workers only read the shared context; results are merged in thread-id
    order, so the output does not depend on scheduling.
    """
    config = config or Config()
    k = config.threads if k is None else k
    if ctx is None:
        presolved = run_simple_presolve(instance, config.tol, config.complemented_cliques)
        start = time.monotonic()
        ctx = ProbingContext(presolved, config)
    else:
        start = time.monotonic()
    deadline = start + config.time_limit_seconds
    partition = partition_variables(ctx.presolved.binaries, ctx.presolved.cliques, k)

    if not len(ctx.cm):
        state = ProbingState.initial(ctx)
        red = assemble_reductions(ctx, state)
        metrics = metrics_for(red, 0, k, "exhausted", time.monotonic() - start,
                              status="no_pairs", note="no pairs",
                              cm_truncated=ctx.cm.truncated)
        return ProbingResult(ctx.instance, red, metrics, ctx, state)

    if k == 1:
        locals_ = [run_local_probing(ctx, partition, 0, deadline, k)]
    else:
        with ThreadPoolExecutor(max_workers=k) as pool:
            futures = [pool.submit(run_local_probing, ctx, partition, t, deadline, k)
                       for t in range(k)]
            locals_ = [f.result() for f in futures]
    for res in locals_:
        if res.infeasible is not None:
            raise res.infeasible

    state = merge_bounds(ctx, locals_)
    implication_analysis(ctx, state)
    red = assemble_reductions(ctx, state)
    metrics = metrics_for(red, state.pairs_done, k, _overall_termination(locals_),
                          time.monotonic() - start, cm_truncated=ctx.cm.truncated)
    log.info("parallel probing: k=%d pairs=%d", k, state.pairs_done)
    return ProbingResult(ctx.instance, red, metrics, ctx, state)


def local_pair_counts(ctx, k, deadline=None):
    """Pairs probed by each worker for ``k`` threads (no merge)."""
    if deadline is None:
        deadline = time.monotonic() + ctx.config.time_limit_seconds
    partition = partition_variables(ctx.presolved.binaries, ctx.presolved.cliques, k)
    return [run_local_probing(ctx, partition, t, deadline, k).pairs_done for t in range(k)]

