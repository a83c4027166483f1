from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cycle_instance, instances, path_instance, random_cycle, random_tree
from mmsgraph.core import CHORES, GOODS, ChoreGraph, InstanceError, is_valid_partition
from mmsgraph.oracle import (
    BudgetExceeded,
    StructuralError,
    count_valid_partitions,
    enumerate_valid_partitions,
    oracle_best_alpha,
    oracle_mms,
    verify_allocation,
)

F = Fraction


class TestEnumeration:
    def test_nine_cycle_into_three(self):
        assert len(list(enumerate_valid_partitions(ChoreGraph.cycle(range(9)), 3))) == 84

    def test_five_path_into_two(self):
        assert len(list(enumerate_valid_partitions(ChoreGraph.path(range(5)), 2))) == 4

    def test_cycle_single_bundle(self):
        assert list(enumerate_valid_partitions(ChoreGraph.cycle(range(4)), 1)) == [(frozenset(range(4)),)]

    def test_k_too_large(self):
        with pytest.raises(InstanceError):
            list(enumerate_valid_partitions(ChoreGraph.path(range(3)), 4))

    @settings(max_examples=80)
    @given(st.one_of(random_tree(), random_cycle()), st.data())
    def test_counts_valid_and_distinct(self, g, data):
        k = data.draw(st.integers(1, min(4, g.m)))
        parts = list(enumerate_valid_partitions(g, k))
        assert len(parts) == count_valid_partitions(g, k)
        assert len(set(parts)) == len(parts)
        assert all(len(p) == k and is_valid_partition(g, p) for p in parts)

    def test_deterministic(self):
        g = ChoreGraph.tree(6, [(0, 1), (0, 2), (2, 3), (2, 4), (4, 5)])
        assert list(enumerate_valid_partitions(g, 3)) == list(enumerate_valid_partitions(g, 3))

    def test_count_formula(self):
        assert count_valid_partitions(ChoreGraph.cycle(range(10)), 4) == comb(10, 4)
        assert count_valid_partitions(ChoreGraph.path(range(10)), 4) == comb(9, 3)


class TestBestAlpha:
    def test_table2_is_five_sixths(self, table2):
        best, witness = oracle_best_alpha(table2)
        assert best == F(5, 6)
        assert verify_allocation(table2, witness, F(5, 6)).aggregate == F(5, 6)

    def test_table1_admits_an_exact_allocation(self, table1):
        # the published table is not tight: agent 0's run c2..c5 sums to -1
        best, witness = oracle_best_alpha(table1)
        assert best == 1
        alloc = {0: frozenset({1, 2, 3, 4}), 1: frozenset({7, 8, 0}), 2: frozenset({5, 6})}
        rep = verify_allocation(table1, alloc, 1)
        assert rep.passed and rep.values == (-1, -1, F(-2, 3))

    def test_table1_first_split_handout(self, table1):
        alloc = {1: frozenset({0, 1, 2}), 2: frozenset({3, 4, 5}), 0: frozenset({6, 7, 8})}
        rep = verify_allocation(table1, alloc, F(7, 6))
        assert rep.passed
        assert rep.values == (-1, F(-2, 3), F(-7, 6))
        assert rep.aggregate == F(7, 6)
        assert not verify_allocation(table1, alloc, F(8, 7)).passed

    def test_budget(self, table1):
        with pytest.raises(BudgetExceeded):
            oracle_best_alpha(table1, max_partitions=83)
        assert oracle_best_alpha(table1, max_partitions=84)[0] == 1

    @settings(max_examples=60, deadline=None)
    @given(instances(st.one_of(random_tree(m_max=7), random_cycle(m_max=7)), n_max=3, kinds=(CHORES,)))
    def test_chores_ratio_never_below_one_when_shares_negative(self, inst):
        mms = [oracle_mms(inst, a) for a in range(inst.n)]
        best, witness = oracle_best_alpha(inst, mms)
        rep = verify_allocation(inst, witness, best, mms)
        assert rep.passed and rep.aggregate == best

    def test_small_cycle_frozen(self):
        inst = cycle_instance((-2, -1, -1, -2, -1, -1), (-1, -1, -2, -1, -1, -2), (-1, -2, -1, -1, -2, -1))
        assert [oracle_mms(inst, a) for a in range(3)] == [-3, -3, -3]
        assert oracle_best_alpha(inst)[0] == F(2, 3)


class TestVerify:
    inst = path_instance((-3, -1, -1, -3), (-1, -3, -3, -1))

    def test_ratios(self):
        rep = verify_allocation(self.inst, {0: frozenset({0, 1}), 1: frozenset({2, 3})}, 1)
        assert rep.mms == (-4, -4)
        assert rep.ratios == (1, 1) and rep.passed

    def test_missing_chore(self):
        with pytest.raises(StructuralError, match="not allocated"):
            verify_allocation(self.inst, {0: frozenset({0, 1}), 1: frozenset({2})}, 1)

    def test_disconnected(self):
        with pytest.raises(StructuralError, match="disconnected"):
            verify_allocation(self.inst, {0: frozenset({0, 2}), 1: frozenset({1, 3})}, 1)

    def test_overlap(self):
        with pytest.raises(StructuralError, match="overlap"):
            verify_allocation(self.inst, {0: frozenset({0, 1, 2}), 1: frozenset({2, 3})}, 1)

    def test_empty_bundle(self):
        with pytest.raises(StructuralError, match="empty"):
            verify_allocation(self.inst, {0: frozenset(range(4)), 1: frozenset()}, 1)

    def test_zero_share_is_a_predicate(self):
        inst = path_instance((0, 0, 0), (-1, -1, -1))
        alloc = {0: frozenset({0, 1}), 1: frozenset({2})}
        rep = verify_allocation(inst, alloc, 1)
        assert rep.mms == (0, -2) and rep.ratios == (None, F(1, 2))
        assert rep.zero_mms == (0,) and rep.passed

    def test_goods_direction(self):
        inst = path_instance((1, 1, 1, 1), (2, 0, 0, 2), kind=GOODS)
        rep = verify_allocation(inst, {0: frozenset({0}), 1: frozenset({1, 2, 3})}, F(1, 2))
        assert rep.ratios == (F(1, 2), 1) and rep.passed
        assert not verify_allocation(inst, {0: frozenset({0}), 1: frozenset({1, 2, 3})}, F(2, 3)).passed
