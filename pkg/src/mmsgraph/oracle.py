"""Brute-force ground truth at desk scale.

Everything here enumerates: every valid connected partition, every
bundle-to-agent map.  Nothing is clever, on purpose.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from math import comb
from typing import Iterator, Mapping

from .core import CHORES, CYCLE, ChoreGraph, Instance, InstanceError, format_rational


class StructuralError(ValueError):
    """An allocation whose bundles overlap, miss chores, or are disconnected."""


class BudgetExceeded(RuntimeError):
    pass


def count_valid_partitions(graph: ChoreGraph, k: int) -> int:
    if graph.kind == CYCLE and k >= 2:
        return comb(graph.m, k)
    return comb(graph.m - 1, k - 1)


def enumerate_valid_partitions(graph: ChoreGraph, k: int) -> Iterator[tuple[frozenset[int], ...]]:
    """All valid k-partitions, lexicographic over the index sets of deleted edges."""
    if not 1 <= k <= graph.m:
        raise InstanceError(f"k={k} outside 1..{graph.m}")
    everything = frozenset(range(graph.m))
    if k == 1:
        yield (everything,)
        return
    if graph.kind == CYCLE:
        m, order = graph.m, graph.order
        for cuts in combinations(range(m), k):
            # cut p removes the edge order[p] -- order[p+1]
            bundles = []
            for a, b in zip(cuts, cuts[1:] + (cuts[0] + m,)):
                bundles.append(frozenset(order[(p + 1) % m] for p in range(a, b)))
            yield tuple(sorted(bundles, key=min))
        return
    edges = graph.edges
    for cuts in combinations(range(len(edges)), k - 1):
        cut = set(cuts)
        kept = [e for i, e in enumerate(edges) if i not in cut]
        # union-find over kept edges
        parent = list(range(graph.m))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in kept:
            parent[find(u)] = find(v)
        groups: dict[int, set[int]] = {}
        for v in range(graph.m):
            groups.setdefault(find(v), set()).add(v)
        yield tuple(sorted((frozenset(g) for g in groups.values()), key=min))


def _budget(graph, k, max_partitions):
    if max_partitions is not None and count_valid_partitions(graph, k) > max_partitions:
        raise BudgetExceeded(
            f"{count_valid_partitions(graph, k)} partitions exceed the budget of {max_partitions}"
        )


def oracle_mms(instance: Instance, agent: int, k: int | None = None, max_partitions: int | None = None) -> Fraction:
    """max over valid k-partitions of the worst bundle, by full enumeration."""
    k = instance.n if k is None else k
    _budget(instance.graph, k, max_partitions)
    row = instance.utilities[agent]
    best = None
    for p in enumerate_valid_partitions(instance.graph, k):
        worst = min(sum((row[c] for c in b), Fraction(0)) for b in p)
        if best is None or worst > best:
            best = worst
    return best


def satisfied(value: Fraction, mms: Fraction, alpha: Fraction) -> bool:
    """``value >= alpha * mms``; with mms = 0 this is simply ``value >= 0``."""
    return value >= alpha * mms


def ratio(value: Fraction, mms: Fraction) -> Fraction | None:
    return None if mms == 0 else Fraction(value) / mms


def _aggregate(kind, ratios):
    finite = [r for r in ratios if r is not None]
    if not finite:
        return Fraction(1)
    return max(finite) if kind == CHORES else min(finite)


def _better(kind, a, b) -> bool:
    return a < b if kind == CHORES else a > b


@dataclass(frozen=True)
class RatioReport:
    """Per-agent ratios ``u_i(bundle) / mms_i``.

    For chores an agent is satisfied at alpha when the ratio is <= alpha, for
    goods when it is >= alpha.  Agents with mms 0 have no ratio; they are
    judged by ``value >= 0`` alone and left out of ``aggregate``.
    """

    kind: str
    alpha: Fraction
    values: tuple[Fraction, ...]
    mms: tuple[Fraction, ...]
    ratios: tuple[Fraction | None, ...]
    zero_mms: tuple[int, ...]
    aggregate: Fraction
    passed: bool

    def to_json(self) -> dict:
        fmt = lambda q: None if q is None else format_rational(q)  # noqa: E731
        return {
            "kind": self.kind,
            "alpha": fmt(self.alpha),
            "values": [fmt(q) for q in self.values],
            "mms": [fmt(q) for q in self.mms],
            "ratios": [fmt(q) for q in self.ratios],
            "zero_mms_agents": list(self.zero_mms),
            "aggregate": fmt(self.aggregate),
            "passed": self.passed,
        }


def check_structure(instance: Instance, allocation: Mapping[int, frozenset[int]]) -> None:
    if sorted(allocation) != list(range(instance.n)):
        raise StructuralError(f"allocation must give every agent 0..{instance.n - 1} one bundle")
    seen: set[int] = set()
    for agent in sorted(allocation):
        b = set(allocation[agent])
        if not b:
            raise StructuralError(f"agent {agent} received an empty bundle")
        if not b <= set(range(instance.m)):
            raise StructuralError(f"agent {agent} received unknown chores {sorted(b - set(range(instance.m)))}")
        if seen & b:
            raise StructuralError(f"bundles overlap on {sorted(seen & b)}")
        if not instance.graph.is_connected(b):
            raise StructuralError(f"bundle of agent {agent} is disconnected: {sorted(b)}")
        seen |= b
    if len(seen) != instance.m:
        raise StructuralError(f"chores {sorted(set(range(instance.m)) - seen)} are not allocated")


def verify_allocation(
    instance: Instance,
    allocation: Mapping[int, frozenset[int]],
    alpha: Fraction,
    mms: list[Fraction] | None = None,
) -> RatioReport:
    """Exact per-agent ratios of a structurally valid allocation at ``alpha``."""
    check_structure(instance, allocation)
    if mms is None:
        mms = [oracle_mms(instance, i) for i in range(instance.n)]
    alpha = Fraction(alpha)
    values = tuple(instance.value(i, allocation[i]) for i in range(instance.n))
    ratios = tuple(ratio(v, s) for v, s in zip(values, mms))
    ok = all(satisfied(v, s, alpha) for v, s in zip(values, mms))
    return RatioReport(
        instance.kind,
        alpha,
        values,
        tuple(mms),
        ratios,
        tuple(i for i, s in enumerate(mms) if s == 0),
        _aggregate(instance.kind, ratios),
        ok,
    )


def oracle_best_alpha(
    instance: Instance, mms: list[Fraction] | None = None, max_partitions: int | None = None
) -> tuple[Fraction, dict[int, frozenset[int]]]:
    """Best achievable alpha and a witness allocation, by exhaustive search.

    Chores minimise the largest ratio, goods maximise the smallest.  Agents
    with mms 0 must get a bundle worth >= 0 and are otherwise ignored.
    """
    n, kind = instance.n, instance.kind
    _budget(instance.graph, n, max_partitions)
    if mms is None:
        mms = [oracle_mms(instance, i) for i in range(n)]
    best = None
    witness = None
    for p in enumerate_valid_partitions(instance.graph, n):
        vals = [[instance.value(i, b) for b in p] for i in range(n)]
        for perm in permutations(range(n)):
            if any(mms[i] == 0 and vals[i][perm[i]] < 0 for i in range(n)):
                continue
            agg = _aggregate(kind, [ratio(vals[i][perm[i]], mms[i]) for i in range(n)])
            if best is None or _better(kind, agg, best):
                best = agg
                witness = {i: p[perm[i]] for i in range(n)}
    if best is None:
        raise ValueError("no finite ratio: a zero-mms agent cannot be given a bundle worth 0")
    return best, witness
