import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from maxmin_pb.core import Instance, maxmin_value, minimax_disutility_value
from maxmin_pb.exact import brute_force
from maxmin_pb.relax import (
    MINIMAX,
    additive_bound_certificate,
    compute_lo_ho,
    lp_solve,
    minimax_bound_check,
    ordered_fill,
    ordered_relax,
    verify_lp_solution,
)
from maxmin_pb.simplex import LPInfeasibleError

from sweeps import sweep, sweep_instance


def scipy_q_star(inst, minimax=False):
    m = inst.m
    c = np.zeros(m + 1)
    c[0] = 1.0 if minimax else -1.0
    rows, rhs = [], []
    for v in inst.votes:
        row = np.zeros(m + 1)
        row[0] = -1.0 if minimax else 1.0
        for pid in v:
            row[1 + inst.index[pid]] = -inst.cost_of[pid]
        rows.append(row)
        rhs.append(-inst.budget if minimax else 0.0)
    rows.append(np.concatenate([[0.0], np.array(inst.costs, dtype=float)]))
    rhs.append(inst.budget)
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(0, None)] + [(0, 1)] * m, method="highs")
    assert res.status == 0
    return res.fun if minimax else -res.fun


def test_narrow_top_lp(narrow_top):
    sol = lp_solve(narrow_top)
    assert sol.q_star == Fraction(7, 2)
    assert sol.x_star == {"p1": 1, "p2": Fraction(5, 6), "p3": Fraction(5, 6)}
    assert verify_lp_solution(narrow_top, sol)
    assert scipy_q_star(narrow_top) == pytest.approx(3.5)


def test_single_voter_lp(single_voter):
    assert lp_solve(single_voter([2, 3, 4], 5)).q_star == 5
    assert lp_solve(single_voter([2, 3, 4], 20)).q_star == 9


def test_lp_fixings(narrow_top):
    sol = lp_solve(narrow_top, fixed_in={"p1"}, fixed_out={"p3"})
    assert sol.x_star["p1"] == 1 and sol.x_star["p3"] == 0
    assert sol.q_star == 1
    assert verify_lp_solution(narrow_top, sol)
    with pytest.raises(LPInfeasibleError):
        lp_solve(Instance.build([4, 4], 5, [{"p1"}]), fixed_in={"p1", "p2"})
    with pytest.raises(ValueError):
        lp_solve(narrow_top, fixed_in={"p1"}, fixed_out={"p1"})


def test_ordered_fill_examples(example1):
    res = ordered_fill(example1, ["p1", "p2", "p3"])
    assert res.selected.selected == {"p1"}
    assert res.stop_project == "p2"
    roomy = example1.with_budget(100)
    assert ordered_fill(roomy, ["p3", "p1", "p2"]).selected.selected == set(roomy.ids)
    tight = example1.with_budget(1)
    assert ordered_fill(tight, ["p1", "p2", "p3"]).selected.selected == frozenset()
    with pytest.raises(ValueError):
        ordered_fill(example1, ["p1", "p2"])


def test_lo_ho_examples(example1):
    assert compute_lo_ho(example1) == (1, 2)
    sizes = {len(ordered_fill(example1, order).selected) for order in itertools.permutations(example1.ids)}
    assert (min(sizes), max(sizes)) == (1, 2)
    unit = Instance.build([1] * 5, 3, [{"p1"}])
    assert compute_lo_ho(unit) == (3, 3)
    assert compute_lo_ho(unit.with_budget(9)) == (5, 5)


def test_ordered_relax_narrow_top(narrow_top):
    outcome, sol = ordered_relax(narrow_top)
    assert outcome.selected == {"p2", "p3"}
    assert maxmin_value(narrow_top, outcome) == 3


def test_ordered_relax_integral_lp(single_voter):
    inst = single_voter([1, 1, 1, 1], 2)
    outcome, sol = ordered_relax(inst)
    assert maxmin_value(inst, outcome) == sol.q_star == 2


def test_certificate_narrow_top(narrow_top):
    outcome, _ = ordered_relax(narrow_top)
    cert = additive_bound_certificate(narrow_top, outcome, 3)
    assert cert.worst_voter in (0, 1)
    assert cert.eta == 1 and cert.bound_rhs == 0 and cert.holds


def test_certificate_eta_undefined():
    inst = Instance.build([2, 2], 3, [{"p1", "p2"}])
    cert = additive_bound_certificate(inst, inst.outcome({"p1"}), 2)
    assert cert.eta_undefined and cert.holds and cert.eta is None


def test_certificate_rejects_low_opt(narrow_top):
    with pytest.raises(ValueError):
        additive_bound_certificate(narrow_top, narrow_top.outcome({"p2", "p3"}), 2)


def test_minimax_bound_applicability():
    hcbp = Instance.build([1] * 5, 3, [{"p1"}, {"p2", "p3"}, {"p4", "p5"}])
    rep = minimax_bound_check(hcbp)
    assert rep.applicable and rep.holds
    assert rep.alg_disutility <= rep.bound
    full = Instance.build([2, 2, 2], 5, [{"p1", "p2", "p3"}])
    assert not minimax_bound_check(full).applicable


def test_minimax_lp(narrow_top):
    sol = lp_solve(narrow_top, objective=MINIMAX)
    assert sol.q_star == Fraction(5, 2)
    assert verify_lp_solution(narrow_top, sol)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_lp_matches_scipy_and_bounds_optimum(seed):
    inst = sweep_instance(seed, m_max=10)
    sol = lp_solve(inst)
    assert verify_lp_solution(inst, sol)
    assert float(sol.q_star) == pytest.approx(scipy_q_star(inst), abs=1e-7)
    assert sol.q_star >= brute_force(inst).value
    mm = lp_solve(inst, objective=MINIMAX)
    assert verify_lp_solution(inst, mm)
    assert float(mm.q_star) == pytest.approx(scipy_q_star(inst, minimax=True), abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_lp_with_random_fixings(seed):
    inst = sweep_instance(seed, m_max=8)
    rng = random.Random(seed)
    fin = {pid for pid in inst.ids if rng.random() < 0.2}
    fout = {pid for pid in inst.ids if pid not in fin and rng.random() < 0.3}
    if inst.cost(fin) > inst.budget:
        with pytest.raises(LPInfeasibleError):
            lp_solve(inst, fin, fout)
        return
    sol = lp_solve(inst, fin, fout)
    assert verify_lp_solution(inst, sol)
    # bound soundness under fixings: no integral completion beats q*
    free = [pid for pid in inst.ids if pid not in fin and pid not in fout]
    best = 0
    for k in range(len(free) + 1):
        for extra in itertools.combinations(free, k):
            s = fin | set(extra)
            if inst.cost(s) <= inst.budget:
                best = max(best, maxmin_value(inst, s))
    assert sol.q_star >= best


def test_relax_outputs_prefix_and_feasible():
    for _, inst in sweep(60, start=500):
        outcome, sol = ordered_relax(inst)
        assert outcome.total_cost <= inst.budget
        order = sorted(inst.ids, key=lambda p: (-sol.weight(inst, p), inst.cost_of[p], p))
        k = len(outcome.selected)
        assert set(order[:k]) == outcome.selected
        assert k == len(order) or outcome.total_cost + inst.cost_of[order[k]] > inst.budget


def test_minimax_family_equals_maxmin_family():
    for _, inst in sweep(60, start=900, m_max=10):
        a = brute_force(inst, want_all=True)
        b = brute_force(inst, want_all=True, objective=MINIMAX)
        assert b.value == inst.budget - a.value
        assert a.zero_optimum == b.zero_optimum
        assert a.all_optimal == b.all_optimal
        assert a.winners == b.winners


def test_disutility_of_relax_matches_definition():
    inst = Instance.build([1] * 5, 3, [{"p1"}, {"p2", "p3"}, {"p4", "p5"}])
    outcome, _ = ordered_relax(inst, MINIMAX)
    rep = minimax_bound_check(inst)
    assert rep.alg_disutility == minimax_disutility_value(inst, outcome)
