import math

import pytest

from twocolprobe.config import Config
from twocolprobe.errors import ProvenInfeasible
from twocolprobe.model import EQ, LE, Literal, build_instance
from twocolprobe.probing import (
    CandidatePair,
    ProbeOutcome,
    ProbingBudget,
    ProbingState,
    combine_bounds,
    conflict_literals,
    derive_fixings,
    derive_pair_implications,
    order_pairs,
    prepare,
    probe_pair,
    run_serial,
    score_pair,
    select_candidates,
    update_budget,
)
from twocolprobe.reductions import Reductions, apply_reductions, conflict_row
from twocolprobe.structures import LOWER, CliqueTable, CouplingMatrix

from conftest import T, W, X, Y, Z


def _cm(cells):
    cm = CouplingMatrix()
    for (i, j), c in cells.items():
        cm.add(i, j, c)
    return cm


class _Cols:
    def __init__(self, nnz):
        self.nnz = nnz

    def col_nnz(self, j):
        return self.nnz[j]


# -- selection ---------------------------------------------------------------


def test_threshold_keeps_three_cells():
    cm = _cm({(0, 1): 5, (0, 2): 3, (1, 2): 3, (2, 3): 1})
    assert select_candidates(cm, 3) == [(0, 1), (0, 2), (1, 2)]


def test_threshold_generous_cap_keeps_all():
    cm = _cm({(0, 1): 5, (0, 2): 3, (1, 2): 3, (2, 3): 1})
    assert len(select_candidates(cm, 10)) == 4


def test_threshold_tight_cap():
    cm = _cm({(0, 1): 5, (0, 2): 3, (1, 2): 3, (2, 3): 1})
    assert select_candidates(cm, 1) == [(0, 1)]
    # no threshold isolates fewer cells than a tie block
    assert select_candidates(_cm({(0, 1): 2, (0, 2): 2}), 1) == []


def test_empty_cm():
    assert select_candidates(CouplingMatrix(), 5) == []


def test_score_without_shared_clique():
    cm = _cm({(0, 1): 3})
    assert score_pair(0, 1, cm, CliqueTable(), {0: 5, 1: 3}, _Cols({0: 4, 1: 5})) == 63


def test_score_with_shared_clique():
    cm = _cm({(0, 1): 3})
    ct = CliqueTable()
    ct.add([Literal(0), Literal(1)])
    score = score_pair(0, 1, cm, ct, {0: 5, 1: 3}, _Cols({0: 4, 1: 5}))
    assert score == pytest.approx(6.3)


def test_score_isolated_pair():
    assert score_pair(0, 1, _cm({(0, 1): 1}), CliqueTable(), {}, _Cols({0: 1, 1: 1})) == 12


def test_union_penalty_mode():
    ct = CliqueTable()
    ct.add([Literal(0), Literal(7)])
    cm = _cm({(0, 1): 1})
    cols = _Cols({0: 1, 1: 1})
    assert score_pair(0, 1, cm, ct, {}, cols) == 12
    assert score_pair(0, 1, cm, ct, {}, cols, mode="union") == pytest.approx(1.2)


def test_order_pairs_top_and_ties():
    cands = [CandidatePair(0, 1, 1, 2.0), CandidatePair(0, 2, 1, 5.0), CandidatePair(1, 2, 1, 5.0),
             CandidatePair(2, 3, 1, 1.0), CandidatePair(3, 4, 1, 4.0)]
    top = order_pairs(cands, 3)
    assert [(c.i, c.j) for c in top] == [(0, 2), (1, 2), (3, 4)]
    assert [(c.i, c.j) for c in order_pairs(cands[:2], 10)] == [(0, 2), (0, 1)]


# -- probing one pair ----------------------------------------------------------


def test_reference_pair_all_feasible(reference):
    ctx = prepare(reference)
    state = ProbingState.initial(ctx)
    out = probe_pair(ctx, state, X, W)
    assert out.infeasible == []
    assert out.lower[(1, 0)][T] == -1 and out.lower[(1, 1)][T] == -1


def test_pair_inside_clique_rediscovers_conflict(reference):
    ctx = prepare(reference)
    state = ProbingState.initial(ctx)
    out = probe_pair(ctx, state, W, Y)
    assert out.infeasible == [(1, 1)]
    assert out.conflicts == [] and state.conflicts == []


def test_all_assignments_infeasible():
    # x0 + x1 = 1 and x0 = x1
    inst = build_instance([{0: 1, 1: 1}, {0: 1, 1: -1}], [EQ, EQ], [1, 0],
                          [0] * 2, [1] * 2, is_integer=[True] * 2)
    ctx = prepare(inst)
    out = probe_pair(ctx, ProbingState.initial(ctx), 0, 1)
    assert len(out.infeasible) == 4
    with pytest.raises(ProvenInfeasible):
        derive_fixings(out)


def _outcome(bad):
    out = ProbeOutcome(3, 7)
    for v in ((0, 0), (1, 0), (0, 1), (1, 1)):
        out.feasible[v] = v not in bad
        if v not in bad:
            out.lower[v], out.upper[v] = {}, {}
    return out


@pytest.mark.parametrize(
    "bad, fixings",
    [
        ({(0, 0), (0, 1)}, {3: 1}),
        ({(1, 0), (1, 1)}, {3: 0}),
        ({(0, 0), (1, 0)}, {7: 1}),
        ({(0, 1), (1, 1)}, {7: 0}),
        ({(0, 0), (1, 0), (0, 1)}, {3: 1, 7: 1}),
    ],
)
def test_fixing_rules(bad, fixings):
    assert derive_fixings(_outcome(bad)).fixings == fixings


def test_aggregation_rules():
    assert derive_fixings(_outcome({(0, 1), (1, 0)})).aggregation == (7, 3, 1.0, 0.0)
    assert derive_fixings(_outcome({(0, 0), (1, 1)})).aggregation == (7, 3, -1.0, 1.0)
    assert derive_fixings(_outcome({(1, 1)})).fixings == {}


def test_reference_branch_bounds(reference):
    ctx = prepare(reference)
    state = ProbingState.initial(ctx)
    out = probe_pair(ctx, state, X, W)
    comb = combine_bounds(out, state.lb, state.ub)
    assert comb.branches[(X, 1)].lower[T] == -1
    assert ((X, 1), T, LOWER, -1.0) in comb.implications
    pairs = derive_pair_implications(out, comb, state.store, state.lb, state.ub)
    assert not [p for p in pairs if p[1] == T and p[0] == ((X, 1), (W, 1))]


def test_identity_combination():
    out = _outcome(set())
    comb = combine_bounds(out, [0] * 8, [1] * 8)
    assert not (comb.lower or comb.upper or comb.aggregations or comb.implications)


def test_branch_fixings_become_aggregation():
    out = _outcome(set())
    for v in out.feasible:
        out.lower[v] = {5: 1} if v[0] == 1 else {}
        out.upper[v] = {} if v[0] == 1 else {5: 0}
    comb = combine_bounds(out, [0] * 8, [1] * 8)
    assert comb.aggregations == [(5, 3, 1, 0)]


def test_pair_implication_tighter_than_branches():
    out = _outcome(set())
    out.upper[(1, 1)] = {5: 0}
    comb = combine_bounds(out, [0] * 8, [1] * 8)
    from twocolprobe.structures import ImplicationStore

    imps = derive_pair_implications(out, comb, ImplicationStore(), [0] * 8, [1] * 8)
    assert imps == [(((3, 1), (7, 1)), 5, "upper", 0)]


# -- conflicts ---------------------------------------------------------------


@pytest.mark.parametrize("v", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_conflict_row_excludes_only_probed_point(v):
    coefs, rhs = conflict_row(*conflict_literals(0, 1, v))
    for p in ((0, 0), (1, 0), (0, 1), (1, 1)):
        assert (coefs[0] * p[0] + coefs[1] * p[1] <= rhs) == (p != v)


def test_conflict_row_shapes():
    assert conflict_row(Literal(0), Literal(1)) == ({0: 1.0, 1: 1.0}, 1.0)
    assert conflict_row(Literal(0, True), Literal(1, True)) == ({0: -1.0, 1: -1.0}, -1.0)


# -- budget -----------------------------------------------------------------


def test_barren_sequence():
    b = ProbingBudget()
    seen = [update_budget(b).eff for _ in range(3)]
    assert seen == pytest.approx([110, 209, 298.1])


def test_barren_run_stops_after_23():
    b = ProbingBudget()
    n = 0
    while not b.effort_exceeded:
        update_budget(b)
        n += 1
    assert n == 23


def test_two_fixings_reset():
    b = ProbingBudget(eff=900)
    assert update_budget(b, fixed=2).eff == 110


def test_multiplier_order():
    b = ProbingBudget(eff=100)
    update_budget(b, fixed=1, conflict_or_aggregation=True, ig_updated=True)
    assert b.eff == pytest.approx(100 * 0.9 * 0.5 * 0.8 * 0.9 + 110)


# -- serial driver ---------------------------------------------------------------


def test_serial_reference(reference):
    res = run_serial(reference, candidates=[(X, W)])
    red = res.reductions
    assert ((X, 1), T, LOWER, -1.0) in red.single_implications
    assert red.fixings == {}
    assert res.metrics.pairs_probed == 1


def test_serial_no_pairs():
    inst = build_instance([{0: 1, 1: 1}], [LE], [1], [0, 0], [1, 1], is_integer=[True, True])
    res = run_serial(inst)
    assert res.reductions.is_empty()
    assert res.metrics.terminated_by == "exhausted" and res.metrics.status == "no_pairs"


def test_serial_pair_limit(reference):
    res = run_serial(reference, Config(max_probe_number=1))
    assert res.metrics.pairs_probed == 1 and res.metrics.terminated_by == "pair_limit"


def test_serial_skips_fixed_and_probed(reference):
    res = run_serial(reference, candidates=[(X, W), (W, X), (X, Y), (Y, W)])
    assert res.metrics.pairs_probed == 2


# -- applying ---------------------------------------------------------------------


def test_apply_empty(reference):
    assert apply_reductions(reference, Reductions()) is reference


def test_apply_conflict_and_aggregation(reference):
    red = Reductions(new_conflicts=[(Literal(X), Literal(Z))], aggregations=[(Z, X, 1.0, 0.0)])
    out = apply_reductions(reference, red)
    assert out.matrix.rows[3] == ((X, Z), (1.0, 1.0)) and out.rhs[3] == 1
    assert out.matrix.rows[4] == ((X, Z), (-1.0, 1.0)) and out.sense[4] == EQ


def test_apply_bad_fixing(reference):
    with pytest.raises(ProvenInfeasible):
        apply_reductions(reference, Reductions(fixings={T: 7.0}))


def test_apply_keeps_inf(reference):
    inst = reference.replace(upper=[math.inf, 1, 1, 1, 1])
    out = apply_reductions(inst, Reductions(lower={T: -1.0}))
    assert out.lower[T] == -1 and out.upper[T] == math.inf
