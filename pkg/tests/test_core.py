import warnings

import pytest
from hypothesis import given, settings, strategies as st

from maxmin_pb.core import (
    EmptyVoteWarning,
    Instance,
    InstanceError,
    Project,
    deduplicate,
    distinct_profile,
    hcbp_check,
    maxmin_value,
    minimax_disutility_value,
    scalable_limit,
    scale_down,
    unanimous_projects,
    utility,
)
from maxmin_pb.exact import brute_force

from sweeps import sweep_instance


def test_utility_narrow_top(narrow_top):
    assert utility(narrow_top, 0, {"p2", "p3"}) == 3
    assert utility(narrow_top, 1, {"p2", "p3"}) == 3
    assert utility(narrow_top, 0, set()) == 0


def test_utility_full_approval(single_voter):
    inst = single_voter([2, 3, 4], 9)
    assert utility(inst, 0, inst.ids) == 9


def test_utility_bad_voter(narrow_top):
    with pytest.raises(IndexError):
        utility(narrow_top, 2, set())
    with pytest.raises(IndexError):
        utility(narrow_top, -1, set())


def test_maxmin_value_examples(discount, narrow_top):
    assert maxmin_value(discount, {"p1", "p3", "p4"}) == 4
    assert maxmin_value(discount, {"p1", "p2"}) == 0
    assert maxmin_value(narrow_top, {"p2", "p3"}) == 3


def test_minimax_disutility_examples(narrow_top, single_voter):
    assert minimax_disutility_value(narrow_top, {"p2", "p3"}) == 3
    assert minimax_disutility_value(narrow_top, set()) == 6
    inst = single_voter([2, 3], 5)
    assert minimax_disutility_value(inst, {"p1", "p2"}) == 0


def test_distinct_profile_order_and_counts():
    inst = Instance.build([1, 1], 2, [{"p1"}, {"p1"}, {"p2"}])
    prof = distinct_profile(inst)
    assert prof.distinct_votes == ((frozenset({"p1"}), 2), (frozenset({"p2"}), 1))
    assert prof.num_voters == 3
    same = Instance.build([1], 1, [{"p1"}] * 4)
    assert distinct_profile(same).distinct_votes == ((frozenset({"p1"}), 4),)
    distinct = Instance.build([1, 1], 2, [{"p2"}, {"p1"}])
    assert distinct_profile(distinct).votes == (frozenset({"p2"}), frozenset({"p1"}))


def test_scale_down_examples():
    inst = Instance.build([100, 300, 300], 600, [{"p1", "p2"}, {"p1", "p3"}])
    scaled, g = scale_down(inst)
    assert g == 100 and scaled.costs == (1, 3, 3) and scaled.budget == 6
    assert scalable_limit(inst) == 3
    coprime = Instance.build([2, 3], 5, [{"p1"}])
    assert scale_down(coprime) == (coprime, 1)
    one = Instance.build([7], 7, [{"p1"}])
    scaled, g = scale_down(one)
    assert (scaled.costs, scaled.budget, g) == ((1,), 1, 7)


def test_scalable_limit_examples():
    assert scalable_limit(Instance.build([1, 1, 1], 2, [{"p1"}])) == 1
    # multiples of 100M with a 900M maximum under a 10B budget
    inst = Instance.build([100, 400, 900], 10_000, [{"p1"}])
    assert scalable_limit(inst) == 9


def test_hcbp_examples(example1):
    unit = Instance.build([1] * 4, 4, [{"p1", "p2"}, {"p3"}])
    assert hcbp_check(unit)
    full = Instance.build([2, 2, 2], 5, [{"p1", "p2", "p3"}])
    assert not hcbp_check(full)
    assert not hcbp_check(example1)


def test_instance_validation():
    with pytest.raises(InstanceError):
        Instance.build([1], 0, [{"p1"}])
    with pytest.raises(InstanceError):
        Instance.build([0], 1, [{"p1"}])
    with pytest.raises(InstanceError):
        Instance.build([1.5], 2, [{"p1"}])
    with pytest.raises(InstanceError):
        Instance.build([1], 1, [])
    with pytest.raises(InstanceError):
        Instance.build([], 1, [set()])
    with pytest.raises(InstanceError):
        Instance.build([1], 1, [{"p9"}])
    with pytest.raises(InstanceError):
        Instance((Project("a", 1), Project("a", 2)), 3, ({"a"},))
    with pytest.raises(InstanceError):
        Instance.build([True], 1, [{"p1"}])


def test_empty_vote_warns_and_forces_zero():
    with pytest.warns(EmptyVoteWarning):
        inst = Instance.build([1, 2], 3, [{"p1"}, set()])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert brute_force(inst).value == 0


def test_outcome_feasibility(narrow_top):
    assert narrow_top.outcome({"p2", "p3"}).total_cost == 6
    with pytest.raises(InstanceError):
        narrow_top.outcome({"p1", "p2", "p3"})
    with pytest.raises(InstanceError):
        narrow_top.outcome({"zz"})


def test_unanimous(narrow_top, discount):
    assert unanimous_projects(narrow_top) == {"p1"}
    assert unanimous_projects(discount) == frozenset()


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_utility_bounds_and_disutility_identity(seed, data):
    inst = sweep_instance(seed, m_max=8)
    chosen = data.draw(st.sets(st.sampled_from(inst.ids)))
    selected = frozenset(chosen)
    if inst.cost(selected) > inst.budget:
        return
    for i, vote in enumerate(inst.votes):
        u = utility(inst, i, selected)
        assert 0 <= u <= min(inst.cost(selected), inst.cost(vote))
    assert minimax_disutility_value(inst, selected) == inst.budget - maxmin_value(inst, selected)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_distinct_profile_idempotent(seed):
    inst = sweep_instance(seed, m_max=6)
    prof = distinct_profile(inst)
    assert prof.num_voters == inst.n
    assert len(set(prof.votes)) == prof.n_distinct
    again = distinct_profile(deduplicate(inst))
    assert again.votes == prof.votes
    assert all(mult == 1 for _, mult in again.distinct_votes)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), g=st.sampled_from([2, 3, 5, 10]))
def test_scaling_commutes_with_brute_force(seed, g):
    base = sweep_instance(seed, m_max=10)
    inst = Instance(tuple(Project(p.id, p.cost * g) for p in base.projects), base.budget * g, base.votes)
    scaled, h = scale_down(inst)
    assert h % g == 0
    big = brute_force(inst, want_all=True)
    small = brute_force(scaled, want_all=True)
    assert big.value == h * small.value
    assert big.zero_optimum == small.zero_optimum
    if not big.zero_optimum:
        assert big.all_optimal and [o.selected for o in big.all_optimal] == [o.selected for o in small.all_optimal]
