from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mmsgraph.treealloc as ta
from conftest import coarse, generated, path_instance
from mmsgraph.core import ChoreGraph, Instance, InstanceError, UnsupportedGraph, certificate, mms_split
from mmsgraph.oracle import oracle_mms, verify_allocation
from mmsgraph.treealloc import (
    allocate_depth3,
    allocate_path,
    allocate_spider,
    classify_subtree,
    depth3_root,
    is_spider,
    is_star,
    few_bundles_touched,
    padded_mms,
    rooted_subtree,
    run_group_satisfied,
    verify_group_satisfied,
)


def assert_mms(inst, alloc):
    mms = [oracle_mms(inst, a) for a in range(inst.n)]
    rep = verify_allocation(inst, alloc, 1, mms)
    assert rep.passed, rep


def binary_tree() -> Instance:
    # v1 at the top, v2 and v3 below it, v4 v5 under v2, v6 v7 under v3
    g = ChoreGraph.tree(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)])
    return Instance.build(g, [[Fraction(-1)] * 7] * 3)


class TestClassification:
    def test_plus_split_and_perfect_subtree(self):
        inst = binary_tree()
        split = certificate(inst, 0, [{0, 1, 3}, {4}, {2, 5, 6}])
        at_v2 = classify_subtree(inst, [split], 1)
        assert at_v2.vertices == {1, 3, 4}
        assert at_v2.records == ((2, True),)
        assert at_v2.summary == ("super", 2) and at_v2.dominators == {0}
        at_v3 = classify_subtree(inst, [split], 2)
        assert at_v3.records == ((1, False),) and at_v3.summary == ("perfect", 1)

    def test_whole_tree_is_split_n_ways(self):
        inst = generated("depth3", 8, 3, 5)
        splits = [mms_split(inst, a) for a in range(3)]
        cls = classify_subtree(inst, splits, 0, root=0)
        assert cls.records == ((3, False),) * 3 and cls.summary == ("perfect", 3)

    def test_bad_vertex(self):
        with pytest.raises(InstanceError):
            classify_subtree(binary_tree(), [], 9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(3, 8))
    def test_records_match_direct_intersection(self, seed, m):
        inst = generated("depth3", m, 2, seed)
        splits = [mms_split(inst, a) for a in range(2)]
        for v in range(m):
            t = rooted_subtree(inst, 0, v)
            cls = classify_subtree(inst, splits, v)
            for s, (y, plus) in zip(splits, cls.records):
                meet = [b for b in s.bundles if b & t]
                inside = [b for b in meet if b <= t]
                assert y == len(meet) and plus == (len(meet) == len(inside) + 1)
            assert cls.summary[0] in ("perfect", "super")


class TestGroupSatisfied:
    inst = path_instance((-3, -1, -1, -3), (-3, -1, -1, -3))

    def test_first_half(self):
        assert verify_group_satisfied(self.inst, {0: frozenset({0, 1})})

    def test_bundle_worse_than_share(self):
        assert not verify_group_satisfied(self.inst, {0: frozenset({0, 1, 2})})

    def test_zero_leaf(self):
        inst = path_instance((0, 0, -1), (-1, -1, -1))
        assert padded_mms(inst, 0, 2) == -1
        assert verify_group_satisfied(inst, {0: frozenset({0})})

    def test_remaining_share_drops(self):
        inst = path_instance((-1, -1, -1, -1), (-1, -2, -2, -1))
        assert not verify_group_satisfied(inst, {0: frozenset({0})})

    def test_padded_share_with_more_agents_than_chores(self):
        inst = path_instance((-2, -1))
        assert padded_mms(inst, 0, 3) == -2

    def test_sufficient_condition(self):
        splits = [mms_split(self.inst, a) for a in range(2)]
        assert few_bundles_touched(self.inst, {0: frozenset({0, 1})}, splits)

    def test_rejects_goods(self):
        goods = path_instance((1, 1), kind="goods")
        with pytest.raises(InstanceError):
            run_group_satisfied(goods, lambda sub, splits: {})


class TestPath:
    def test_two_agents(self):
        inst = path_instance((-3, -1, -1, -3), (-1, -3, -3, -1))
        trace = []
        alloc = allocate_path(inst, check=True, trace=trace)
        # both first bundles are {c1, c2}; the lower agent id takes it
        assert trace[0] == {0: frozenset({0, 1})}
        assert alloc == {0: frozenset({0, 1}), 1: frozenset({2, 3})}
        assert_mms(inst, alloc)

    def test_single_agent(self):
        inst = path_instance((-1, -2, -3))
        assert allocate_path(inst) == {0: frozenset({0, 1, 2})}

    def test_one_chore_each(self):
        inst = path_instance(*[(-1,) * 4] * 4)
        alloc = allocate_path(inst)
        assert sorted(len(b) for b in alloc.values()) == [1, 1, 1, 1]
        assert_mms(inst, alloc)

    def test_not_a_path(self):
        with pytest.raises(UnsupportedGraph):
            allocate_path(binary_tree())

    def test_too_many_agents(self):
        with pytest.raises(InstanceError):
            allocate_path(path_instance((-1,), (-1,)))

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 9), st.integers(1, 3))
    def test_mms_on_random_paths(self, seed, m, n):
        inst = generated("path", m, min(n, m), seed)
        assert_mms(inst, allocate_path(inst, check=True))


class TestDepth3:
    def test_star_uses_first_split(self):
        g = ChoreGraph.tree(4, [(0, 1), (0, 2), (0, 3)])
        inst = Instance.build(g, [[Fraction(-3), Fraction(-1), Fraction(-1), Fraction(-1)]] * 4)
        assert is_star(inst)
        assert mms_split(inst, 0).bundles == ({0}, {1}, {2}, {3})
        alloc = allocate_depth3(inst)
        assert alloc[0] == {0}
        assert sorted(map(min, (alloc[1], alloc[2], alloc[3]))) == [1, 2, 3]
        assert_mms(inst, alloc)

    def test_star_centre_needs_a_leaf(self):
        g = ChoreGraph.tree(4, [(0, 1), (0, 2), (0, 3)])
        inst = Instance.build(g, [[Fraction(-3), Fraction(-1), Fraction(-1), Fraction(-1)]] * 3)
        assert mms_split(inst, 0).value == -4
        assert_mms(inst, allocate_depth3(inst))

    def test_root_choice(self):
        assert depth3_root(binary_tree()) == 0
        deep = Instance.build(ChoreGraph.path(range(6)), [[Fraction(-1)] * 6])
        assert depth3_root(deep) is None

    def test_rejects_deep_trees(self):
        deep = Instance.build(ChoreGraph.tree(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 7)]), [[Fraction(-1)] * 8] * 2)
        with pytest.raises(UnsupportedGraph):
            allocate_depth3(deep)

    def test_crown_case(self, monkeypatch):
        calls = []
        real = ta.find_crown
        monkeypatch.setattr(ta, "find_crown", lambda h, m: calls.append(h) or real(h, m))
        inst = coarse("depth3", 9, 3, 13)
        assert_mms(inst, allocate_depth3(inst, check=True))
        assert calls

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 9), st.integers(1, 3))
    def test_mms_on_random_depth3(self, seed, m, n):
        inst = generated("depth3", m, min(n, m), seed)
        trace = []
        alloc = allocate_depth3(inst, check=True, trace=trace)
        assert_mms(inst, alloc)
        assert sum(len(p) for p in trace) <= inst.n

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 12), st.integers(2, 5))
    def test_coarse_values(self, seed, m, n):
        inst = coarse("depth3", m, min(n, m), seed)
        assert_mms(inst, allocate_depth3(inst, check=True))


class TestSpider:
    def test_path_is_delegated(self):
        inst = generated("path", 6, 2, 3)
        assert not is_spider(inst)
        assert allocate_spider(inst) == allocate_path(inst)

    def test_longest_ending_bundle_goes_first(self):
        # centre 0 with legs 1-2-3, 4, 5; agent 1's bundle ending at leaf 3 is the longer one
        g = ChoreGraph.tree(6, [(0, 1), (1, 2), (2, 3), (0, 4), (0, 5)])
        u0 = [Fraction(v) for v in (-1, -1, -1, -4, -1, -1)]
        u1 = [Fraction(v) for v in (-1, -4, -1, -1, -1, -1)]
        inst = Instance.build(g, [u0, u1])
        trace = []
        alloc = allocate_spider(inst, check=True, trace=trace)
        assert mms_split(inst, 1).bundle_of(3) == {1, 2, 3}
        assert len(mms_split(inst, 0).bundle_of(3)) < 3
        assert trace[0] == {1: frozenset({1, 2, 3})}
        assert verify_group_satisfied(inst, trace[0])
        assert_mms(inst, alloc)

    def test_two_centres_rejected(self):
        g = ChoreGraph.tree(8, [(0, 1), (0, 2), (0, 3), (3, 4), (4, 5), (4, 6), (6, 7)])
        with pytest.raises(UnsupportedGraph):
            allocate_spider(Instance.build(g, [[Fraction(-1)] * 8]))

    def test_crown_case(self, monkeypatch):
        calls = []
        real = ta.find_crown
        monkeypatch.setattr(ta, "find_crown", lambda h, m: calls.append(h) or real(h, m))
        inst = coarse("spider", 10, 3, 2)
        assert_mms(inst, allocate_spider(inst, check=True))
        assert calls

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10**6), st.integers(4, 9), st.integers(1, 3))
    def test_mms_on_random_spiders(self, seed, m, n):
        inst = generated("spider", m, n, seed)
        assert_mms(inst, allocate_spider(inst, check=True))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.integers(4, 12), st.integers(2, 5))
    def test_coarse_values(self, seed, m, n):
        inst = coarse("spider", m, min(n, m), seed)
        assert_mms(inst, allocate_spider(inst, check=True))
