"""Allocations on a cycle: 3/2-MMS for chores with any number of agents,
7/6-MMS (chores) and 5/6-MMS (goods) for three agents.

For three agents the allocator fixes one MMS split per agent and looks at
their nine cut edges.  Shared edges or badly ordered edges give a bundle of
one agent inside a bundle of another, which is enough for an exact MMS
allocation.  Otherwise the edges cut the cycle into nine segments and
either a short run of segments already satisfies someone, or one of the
three splits can be handed out as it is.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from .core import (
    CHORES,
    CYCLE,
    ChoreGraph,
    Instance,
    InstanceError,
    SplitCertificate,
    UnsupportedGraph,
    mms_split,
    mms_value,
)
from .oracle import check_structure, oracle_best_alpha, ratio, satisfied
from .treealloc import AllocationError, _fill_idle, allocate_path

CHORES_TARGET = Fraction(7, 6)
GOODS_TARGET = Fraction(5, 6)
ORACLE_FALLBACK_MAX_M = 12


def _require_cycle(instance: Instance, agents: int | None = None):
    if instance.graph.kind != CYCLE:
        raise UnsupportedGraph("not a cycle")
    if agents is not None and instance.n != agents:
        raise InstanceError(f"needs exactly {agents} agents, got {instance.n}")


def allocate_cycle_threehalves(instance: Instance, check: bool = False) -> dict[int, frozenset[int]]:
    """Delete the edge closing the cycle order and allocate the path exactly.

    Every agent then gets at least 3/2 times their cycle maximin share.
    """
    _require_cycle(instance)
    if instance.kind != CHORES:
        raise InstanceError("the 3/2 allocator handles chores")
    order = list(instance.graph.order)
    rows = tuple(tuple(row[v] for v in order) for row in instance.utilities)
    path = Instance(instance.n, ChoreGraph.path(range(len(order))), rows, instance.kind)
    allocation = allocate_path(path, check=check)
    return {a: frozenset(order[v] for v in b) for a, b in allocation.items()}


# --- segment machinery -----------------------------------------------------


@dataclass(frozen=True)
class Containment:
    """``inner_bundle`` (from ``inner_split``) lies inside ``outer_bundle`` (from ``outer_split``)."""

    inner_agent: int
    inner_bundle: frozenset[int]
    inner_split: tuple[frozenset[int], ...]
    outer_agent: int
    outer_bundle: frozenset[int]
    outer_split: tuple[frozenset[int], ...]


@dataclass(frozen=True)
class SharedCut:
    agents: tuple[int, int]
    edge: tuple[int, int]


@dataclass(frozen=True)
class OrderFailure:
    containment: Containment


@dataclass(frozen=True)
class SegmentDecomposition:
    """Nine segments in cyclic order.

    ``roles[r]`` is the agent whose split cuts right before segments
    ``r, r+3, r+6``; that agent's bundles are the segment windows
    ``{r, r+1, r+2}``, ``{r+3, r+4, r+5}``, ``{r+6, r+7, r+8}`` (mod 9).
    """

    segments: tuple[frozenset[int], ...]
    cuts: tuple[tuple[int, int], ...]
    roles: tuple[int, int, int]

    def union(self, idx) -> frozenset[int]:
        return frozenset().union(*(self.segments[i % 9] for i in idx))

    def role_of(self, agent: int) -> int:
        return self.roles.index(agent)

    def bundle_windows(self, agent: int) -> list[tuple[int, ...]]:
        r = self.role_of(agent)
        return [tuple((r + 3 * t + d) % 9 for d in range(3)) for t in range(3)]

    def bundle(self, role: int, t: int) -> frozenset[int]:
        """B_{role+1, t+1} as a vertex set."""
        return self.union(range(role + 3 * t, role + 3 * t + 3))


def _containment(instance: Instance, splits: list[SplitCertificate]) -> Containment | None:
    for i, si in enumerate(splits):
        for j, sj in enumerate(splits):
            if i == j:
                continue
            for b in si.bundles:
                for c in sj.bundles:
                    if b <= c:
                        return Containment(i, b, si.bundles, j, c, sj.bundles)
    return None


def _shared_containment(instance: Instance, splits, shared: SharedCut) -> Containment:
    """With a common cut edge, the two bundles first after it are nested."""
    g = instance.graph
    i, j = shared.agents
    pos = g.cycle_position[shared.edge]
    first = g.order[(pos + 1) % g.m]
    bi, bj = splits[i].bundle_of(first), splits[j].bundle_of(first)
    if bi <= bj:
        return Containment(i, bi, splits[i].bundles, j, bj, splits[j].bundles)
    if bj <= bi:
        return Containment(j, bj, splits[j].bundles, i, bi, splits[i].bundles)
    raise AllocationError("bundles after a shared cut are not nested")


def segments_from_splits(instance: Instance, splits: list[SplitCertificate]):
    """SegmentDecomposition, or a SharedCut / OrderFailure report."""
    _require_cycle(instance, 3)
    owner = {}
    for s in splits:
        for e in s.cut_edges:
            if e in owner:
                return SharedCut((owner[e], s.agent), e)
            owner[e] = s.agent
    g = instance.graph
    cuts = sorted(owner, key=lambda e: g.cycle_position[e])
    labels = [owner[e] for e in cuts]
    periodic = len(cuts) == 9 and len(set(labels[:3])) == 3 and all(labels[t] == labels[t % 3] for t in range(9))
    if not periodic:
        c = _containment(instance, splits)
        if c is None:
            raise AllocationError("cut edges are out of order yet no bundle is nested in another")
        return OrderFailure(c)
    segs = []
    for t in range(9):
        a = g.cycle_position[cuts[t]]
        b = g.cycle_position[cuts[(t + 1) % 9]]
        if b <= a:
            b += g.m
        segs.append(frozenset(g.order[(p + 1) % g.m] for p in range(a, b)))
    # canonical start: the lowest agent's bundle holding vertex 0 is S1 S2 S3
    first = min(labels)
    s = next(t for t in range(9) if labels[t] == first and 0 in segs[t] | segs[(t + 1) % 9] | segs[(t + 2) % 9])
    segs = segs[s:] + segs[:s]
    cuts = cuts[s:] + cuts[:s]
    labels = labels[s:] + labels[:s]
    return SegmentDecomposition(tuple(segs), tuple(cuts), (labels[0], labels[1], labels[2]))


# --- the nested-bundle case ------------------------------------------------


def subset_case_allocation(instance: Instance, containment: Containment, alpha) -> dict[int, frozenset[int]]:
    """alpha-MMS allocation from two splits with one bundle nested in another.

    The splits in ``containment`` must be alpha-MMS splits of their agents
    (alpha >= 1 for chores, alpha <= 1 for goods).
    """
    _require_cycle(instance, 3)
    c = containment
    alpha = Fraction(alpha)
    if c.inner_agent == c.outer_agent or not c.inner_bundle <= c.outer_bundle:
        raise InstanceError("containment precondition is false")
    if c.inner_bundle not in c.inner_split or c.outer_bundle not in c.outer_split:
        raise InstanceError("contained bundles must come from the given splits")
    third = 3 - c.inner_agent - c.outer_agent
    mms_third = mms_value(instance, third)
    if instance.kind == CHORES:
        big = c.outer_bundle
        parts = [q - big for q in c.inner_split if q != c.inner_bundle]
        if instance.value(third, big) <= mms_third:
            taker, chooser = c.outer_agent, third
        else:
            taker, chooser = third, c.outer_agent
        pick = max(range(2), key=lambda p: (instance.value(chooser, parts[p]), -p))
        alloc = {taker: big, chooser: parts[pick], c.inner_agent: parts[1 - pick]}
        idle = [a for a, b in alloc.items() if not b]
        alloc = {a: b for a, b in alloc.items() if b}
        _fill_idle(instance, alloc, idle)
        return alloc

    small = c.inner_bundle
    if instance.value(third, small) <= mms_third:
        taker, splitter, chooser = c.inner_agent, c.outer_agent, third
    else:
        taker, splitter, chooser = third, c.inner_agent, c.outer_agent
    rest = [v for v in _arc_after(instance, small)]
    sub = instance.restrict(rest, [splitter, chooser])
    halves = [frozenset(rest[v] for v in b) for b in mms_split(sub, 0, 2).bundles]
    pick = max(range(2), key=lambda p: (instance.value(chooser, halves[p]), -p))
    return {taker: small, chooser: halves[pick], splitter: halves[1 - pick]}


def _arc_after(instance: Instance, bundle: frozenset[int]) -> list[int]:
    """Vertices outside an arc, in cycle order."""
    order = instance.graph.order
    m = len(order)
    start = next(p for p in range(m) if order[p] in bundle and order[(p + 1) % m] not in bundle)
    return [order[(start + 1 + i) % m] for i in range(m) if order[(start + 1 + i) % m] not in bundle]


# --- three agents ------------------------------------------------------------


@dataclass(frozen=True)
class CycleAllocation:
    allocation: dict[int, frozenset[int]]
    ratio: Fraction
    target: Fraction
    route: str
    mms: tuple[Fraction, ...]


def _is_sub(a, b) -> bool:
    return set(a) <= set(b)


def _window_allocation(instance, dec: SegmentDecomposition, splits, agent, start, width, alpha, mms):
    kind = instance.kind
    idx = [(start + d) % 9 for d in range(width)]
    w = dec.union(idx)
    own = [dec.union(b) for b in dec.bundle_windows(agent)]
    others = [a for a in range(3) if a != agent]
    if kind == CHORES:
        inside = [b for b in own if b <= w]
        if inside:
            new_split = (w,) + tuple(b - w for b in own if b not in inside)
            for s in (start, start + 1):
                j = dec.roles[s % 3]
                if j != agent:
                    inner = dec.union(range(s, s + 3))
                    c = Containment(j, inner, splits[j].bundles, agent, w, new_split)
                    return "window-nested", subset_case_allocation(instance, c, alpha)
    else:
        holder = [b for b in own if w <= b]
        if holder:
            spare = holder[0] - w
            new_split = [w] + [b | spare if instance.graph.is_connected(b | spare) else b for b in own if b != holder[0]]
            if set().union(*new_split) != set(range(instance.m)):
                raise AllocationError("could not rebuild a split around the window")
            for s in (start - 1, start):
                j = dec.roles[s % 3]
                if j != agent:
                    outer = dec.union(range(s, s + 3))
                    c = Containment(agent, w, tuple(new_split), j, outer, splits[j].bundles)
                    return "window-nested", subset_case_allocation(instance, c, alpha)
    rest = [(start + width + d) % 9 for d in range(9 - width)]
    for cut in range(1, len(rest)):
        head, tail = dec.union(rest[:cut]), dec.union(rest[cut:])
        for j1, j2 in (others, others[::-1]):
            bj1 = [dec.union(b) for b in dec.bundle_windows(j1)]
            bj2 = [dec.union(b) for b in dec.bundle_windows(j2)]
            if kind == CHORES:
                ok = any(head <= b for b in bj1) and any(tail <= b for b in bj2)
            else:
                ok = any(b <= head for b in bj1) and any(b <= tail for b in bj2)
            if ok:
                return "window-split", {agent: w, j1: head, j2: tail}
    raise AllocationError("window satisfies an agent but no matching split of the rest exists")


def _split_as_allocation(instance, splits, alpha, mms):
    for i in range(3):
        bundles = splits[i].bundles
        for perm in permutations(range(3)):
            alloc = {a: bundles[perm[a]] for a in range(3)}
            if all(satisfied(instance.value(a, alloc[a]), mms[a], alpha) for a in range(3)):
                return alloc
    return None


def allocate_cycle3(instance: Instance) -> CycleAllocation:
    """alpha-MMS allocation for three agents on a cycle: 7/6 for chores, 5/6 for goods.

    The returned ``ratio`` is measured on the final allocation, not implied
    by the route taken.
    """
    _require_cycle(instance, 3)
    kind = instance.kind
    target = CHORES_TARGET if kind == CHORES else GOODS_TARGET
    mms = tuple(mms_value(instance, i) for i in range(3))
    if any(s == 0 for s in mms):
        if instance.m > ORACLE_FALLBACK_MAX_M:
            raise UnsupportedGraph("an agent with maximin share 0 needs exhaustive search, too large here")
        best, alloc = oracle_best_alpha(instance, list(mms))
        return _finish(instance, alloc, target, "oracle-fallback", mms)

    splits = [mms_split(instance, i) for i in range(3)]
    found = segments_from_splits(instance, splits)
    if isinstance(found, SharedCut):
        c = _shared_containment(instance, splits, found)
        return _finish(instance, subset_case_allocation(instance, c, 1), target, "shared-cut", mms)
    if isinstance(found, OrderFailure):
        return _finish(instance, subset_case_allocation(instance, found.containment, 1), target, "nested", mms)

    dec = found
    width = 4 if kind == CHORES else 2
    for start in range(9):
        for agent in range(3):
            w = dec.union((start + d) % 9 for d in range(width))
            if satisfied(instance.value(agent, w), mms[agent], target):
                route, alloc = _window_allocation(instance, dec, splits, agent, start, width, target, mms)
                return _finish(instance, alloc, target, route, mms)

    alloc = _split_as_allocation(instance, splits, target, mms)
    if alloc is None:
        raise AllocationError("no window fires and no split works: contradicts the threshold")
    return _finish(instance, alloc, target, "split", mms)


def _finish(instance, alloc, target, route, mms) -> CycleAllocation:
    check_structure(instance, alloc)
    if not all(satisfied(instance.value(a, alloc[a]), mms[a], target) for a in range(instance.n)):
        raise AllocationError(f"route {route!r} missed the {target} guarantee")
    ratios = [ratio(instance.value(a, alloc[a]), mms[a]) for a in range(instance.n)]
    finite = [r for r in ratios if r is not None]
    agg = Fraction(1) if not finite else (max(finite) if instance.kind == CHORES else min(finite))
    return CycleAllocation(alloc, agg, target, route, tuple(mms))
