"""MMS allocations of chores on paths, stars, depth-3 trees and spiders.

Every allocator here is an instance of the same loop: hand a few connected
bundles to a few agents so that nobody left behind sees their maximin share
drop, delete those chores, and start over on what remains.  The per-class
code only decides which bundles to hand out in one round.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .core import (
    CHORES,
    TREE,
    Instance,
    InstanceError,
    SplitCertificate,
    UnsupportedGraph,
    mms_split,
    mms_value,
    tree_height,
)
from .matching import auxiliary_graph, find_crown, max_matching

PartialAllocation = Mapping[int, frozenset]


class AllocationError(RuntimeError):
    """An allocator produced a step that violates its own guarantee (a bug)."""


# --- classification ---------------------------------------------------------


@dataclass(frozen=True)
class SubtreeClassification:
    """How each agent's fixed split meets the subtree rooted at ``subtree_root``.

    ``records[i] = (y, plus)``: ``y`` bundles of agent i meet the subtree; with
    ``plus`` one of them also reaches outside it, otherwise all ``y`` lie
    inside.  ``summary`` is ``("perfect", x)`` or ``("super", x)``; every
    non-empty subtree is exactly one of the two.
    """

    subtree_root: int
    vertices: frozenset[int]
    records: tuple[tuple[int, bool], ...]
    summary: tuple[str, int]
    dominators: frozenset[int]

    @property
    def x(self) -> int:
        return self.summary[1]

    @property
    def perfect(self) -> bool:
        return self.summary[0] == "perfect"


def rooted_subtree(instance: Instance, root: int, v: int) -> frozenset[int]:
    adj = instance.graph.adjacency
    parent = {root: None}
    todo = [root]
    for u in todo:
        for w in adj[u]:
            if w not in parent:
                parent[w] = u
                todo.append(w)
    out = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if parent.get(w) == u:
                out.add(w)
                stack.append(w)
    return frozenset(out)


def classify_subtree(
    instance: Instance, fixed_splits: list[SplitCertificate], v: int, root: int = 0
) -> SubtreeClassification:
    if not 0 <= v < instance.m:
        raise InstanceError(f"{v} is not a vertex")
    t = rooted_subtree(instance, root, v)
    records = []
    for split in fixed_splits:
        contained = sum(1 for b in split.bundles if b <= t)
        meeting = sum(1 for b in split.bundles if b & t)
        records.append((meeting, meeting == contained + 1))
    plain = [y for y, plus in records if not plus]
    plus = [y for y, p in records if p]
    if plain and (not plus or min(plain) < min(plus)):
        summary = ("perfect", min(plain))
        dominators = frozenset()
    else:
        x = min(plus)
        summary = ("super", x)
        dominators = frozenset(i for i, (y, p) in enumerate(records) if p and y == x)
    return SubtreeClassification(v, t, tuple(records), summary, dominators)


# --- group satisfaction -----------------------------------------------------


def padded_mms(instance: Instance, agent: int, k: int) -> Fraction:
    """MMS with ``k`` bundles, letting bundles be empty once ``k`` exceeds the chore count."""
    if k <= instance.m:
        return mms_value(instance, agent, k)
    row = instance.utilities[agent]
    return min(row) if row else Fraction(0)


def _remaining(instance: Instance, partial: PartialAllocation) -> list[int]:
    used = set().union(*partial.values()) if partial else set()
    return [v for v in range(instance.m) if v not in used]


def _check_partial(instance: Instance, partial: PartialAllocation):
    seen: set[int] = set()
    for agent, b in partial.items():
        if not 0 <= agent < instance.n:
            raise InstanceError(f"unknown agent {agent}")
        if not b or seen & b or not instance.graph.is_connected(b):
            raise InstanceError(f"invalid partial allocation at agent {agent}")
        seen |= b


def verify_group_satisfied(instance: Instance, partial: PartialAllocation, mms: list[Fraction] | None = None) -> bool:
    """Exact check that every agent is satisfied with ``partial``.

    Assigned agents need a bundle at least as good as their maximin share;
    everyone else needs their maximin share on the remaining chores, with the
    remaining agents, to be no worse than before.  Both are recomputed.
    """
    _check_partial(instance, partial)
    if mms is None:
        mms = [mms_value(instance, i) for i in range(instance.n)]
    for agent, b in partial.items():
        if instance.value(agent, b) < mms[agent]:
            return False
    rest = _remaining(instance, partial)
    left = [i for i in range(instance.n) if i not in partial]
    if not left:
        return not rest
    if not rest:
        return all(Fraction(0) >= mms[i] for i in left)
    sub = instance.restrict(rest)
    k = len(left)
    return all(padded_mms(sub, i, k) >= mms[i] for i in left)


def few_bundles_touched(instance: Instance, partial: PartialAllocation, splits: list[SplitCertificate]) -> bool:
    """Fast sufficient test for the agents left out of ``partial``.

    Holds when, for each of them, the remaining chores meet at most
    ``n - |assigned|`` of that agent's split bundles and each such bundle
    stays connected after the deletion.
    """
    rest = set(_remaining(instance, partial))
    k = instance.n - len(partial)
    for i in range(instance.n):
        if i in partial:
            continue
        pieces = [b & rest for b in splits[i].bundles if b & rest]
        if len(pieces) > k or not all(instance.graph.is_connected(p) for p in pieces):
            return False
    return True


# --- the shared loop ---------------------------------------------------------


Step = Callable[[Instance, list[SplitCertificate]], dict[int, frozenset[int]]]


def _fill_idle(instance: Instance, assignment: dict[int, frozenset[int]], idle: list[int]):
    """Give each idle agent a single chore peeled off the end of a larger bundle.

    A single chore never costs more than an agent's share, and the bundle it
    came from only gets lighter.
    """
    adj = instance.graph.adjacency
    for agent in idle:
        donor = next((a for a in sorted(assignment) if len(assignment[a]) >= 2), None)
        if donor is None:
            raise AllocationError("more agents than chores")
        b = assignment[donor]
        ends = [v for v in b if sum(1 for w in adj[v] if w in b) <= 1]
        leaf = max(ends) if ends else max(b)
        assignment[donor] = b - {leaf}
        assignment[agent] = frozenset({leaf})


def run_group_satisfied(
    instance: Instance, step: Step, check: bool = False, trace: list | None = None
) -> dict[int, frozenset[int]]:
    """Apply ``step`` round by round until every chore is assigned.

    With ``check`` each round is verified exactly (remaining maximin shares are
    recomputed) and a failure raises :class:`AllocationError`.  ``trace``
    collects each round's partial allocation in original ids.
    """
    if instance.kind != CHORES:
        raise InstanceError("tree allocators handle chores only")
    if instance.n > instance.m:
        raise InstanceError(f"{instance.n} agents but only {instance.m} chores")
    assignment: dict[int, frozenset[int]] = {}
    chores = list(range(instance.m))
    agents = list(range(instance.n))
    while chores and agents:
        sub = instance.restrict(chores, agents)
        if sub.n == 1:
            partial = {0: frozenset(range(sub.m))}
        elif sub.n > sub.m:
            partial = {a: frozenset({a}) for a in range(sub.m)}
        else:
            splits = [mms_split(sub, a) for a in range(sub.n)]
            partial = step(sub, splits)
        if not partial:
            raise AllocationError("a round assigned nothing")
        if check and not verify_group_satisfied(sub, partial, _padded_shares(sub)):
            raise AllocationError(f"round is not group-satisfied: {partial}")
        mapped = {agents[a]: frozenset(chores[v] for v in b) for a, b in partial.items()}
        if trace is not None:
            trace.append(mapped)
        assignment.update(mapped)
        taken = set().union(*mapped.values())
        chores = [v for v in chores if v not in taken]
        agents = [a for a in agents if a not in mapped]
    if chores:
        raise AllocationError("chores left over with no agents")
    _fill_idle(instance, assignment, agents)
    return assignment


def _padded_shares(sub: Instance) -> list[Fraction]:
    return [padded_mms(sub, i, sub.n) for i in range(sub.n)]


# --- paths -------------------------------------------------------------------


def path_order(instance: Instance) -> list[int]:
    """Vertices of a path from its lower-numbered end."""
    g = instance.graph
    if not g.is_path():
        raise UnsupportedGraph("not a path")
    if g.m == 1:
        return [0]
    start = min(v for v in range(g.m) if g.degree(v) == 1)
    order = [start]
    prev = None
    while len(order) < g.m:
        nxt = next(w for w in g.adjacency[order[-1]] if w != prev)
        prev = order[-1]
        order.append(nxt)
    return order


def _path_step(sub: Instance, splits: list[SplitCertificate]) -> dict[int, frozenset[int]]:
    left = path_order(sub)[0]
    firsts = [s.bundle_of(left) for s in splits]
    winner = max(range(sub.n), key=lambda a: (len(firsts[a]), -a))
    return {winner: firsts[winner]}


def allocate_path(instance: Instance, check: bool = False, trace: list | None = None) -> dict[int, frozenset[int]]:
    """MMS allocation of chores on a path.

    Each round, the agent whose first bundle (the one holding the left end)
    is longest takes it; every other first bundle lies inside it.
    """
    if instance.graph.kind != TREE or not instance.graph.is_path():
        raise UnsupportedGraph("not a path")
    return run_group_satisfied(instance, _path_step, check, trace)


# --- trees of depth at most 3 -----------------------------------------------


def depth3_root(instance: Instance) -> int | None:
    """A root of least height, if some root gives height <= 2 (three vertex levels)."""
    g = instance.graph
    if g.kind != TREE:
        return None
    best = min(range(g.m), key=lambda v: (tree_height(g, v), v))
    return best if tree_height(g, best) <= 2 else None


def is_star(instance: Instance) -> bool:
    r = depth3_root(instance)
    return r is not None and tree_height(instance.graph, r) <= 1


def _pieces_inside(split: SplitCertificate, t: frozenset[int], top: int):
    """(piece holding ``top``, other bundles inside ``t``) of a split."""
    center = split.bundle_of(top) & t
    others = [b for b in split.bundles if b <= t and top not in b]
    return center, others


def _depth3_step(sub: Instance, splits: list[SplitCertificate]) -> dict[int, frozenset[int]]:
    root = depth3_root(sub)
    if root is None:
        raise UnsupportedGraph("tree has more than three levels")
    n = sub.n
    owner = 0
    p_r = splits[owner].bundle_of(root)
    if tree_height(sub.graph, root) <= 1:
        partial = {owner: p_r}
        rest = [b for b in splits[owner].bundles if b != p_r]
        for agent, b in zip((a for a in range(n) if a != owner), rest):
            partial[agent] = b
        return partial
    comps = sub.graph.components(set(range(sub.m)) - p_r)
    stars, singles = [], []
    for comp in comps:
        if len(comp) == 1:
            singles.append(comp)
            continue
        top = next(v for v in comp if any(w in p_r for w in sub.graph.adjacency[v]))
        cls = classify_subtree(sub, splits, top, root)
        if cls.vertices != comp:
            raise AllocationError("star component is not a rooted subtree")
        stars.append(cls)

    # Case 1: some star is x-perfect
    for cls in stars:
        if cls.perfect:
            x = cls.x
            agent = min(i for i, rec in enumerate(cls.records) if rec == (x, False))
            center, others = _pieces_inside(splits[agent], cls.vertices, cls.subtree_root)
            partial = {agent: center}
            helpers = [a for a in range(n) if a != agent]
            for a, b in zip(helpers, others):
                partial[a] = b
            return partial

    # Case 2: every star is super
    h = auxiliary_graph([c.dominators for c in stars], owner, n)
    matching = max_matching(h)
    if len(matching) == h.n_left:
        partial = {owner: p_r}
        leftovers = list(singles)
        for j, cls in enumerate(stars):
            agent = matching[j]
            center, others = _pieces_inside(splits[agent], cls.vertices, cls.subtree_root)
            partial[agent] = center
            leftovers.extend(others)
        free = [a for a in range(n) if a not in partial]
        if len(leftovers) > len(free):
            raise AllocationError("more leftover chores than agents in the saturated case")
        for a, b in zip(free, leftovers):
            partial[a] = frozenset(b)
        return partial

    crown = find_crown(h, matching)
    partial = {}
    singles_out = []
    for j in sorted(crown.witness):
        if j == len(stars):
            raise AllocationError("root bundle fell inside the crown")
        cls = stars[j]
        agent = crown.witness[j]
        center, others = _pieces_inside(splits[agent], cls.vertices, cls.subtree_root)
        partial[agent] = center
        singles_out.extend(others)
    free = [a for a in range(n) if a not in crown.right]
    for a, b in zip(free, singles_out):
        partial[a] = b
    if len(singles_out) > len(free):
        raise AllocationError("not enough agents for the crown stars")
    return partial


def allocate_depth3(instance: Instance, check: bool = False, trace: list | None = None) -> dict[int, frozenset[int]]:
    """MMS allocation of chores on a tree with at most three vertex levels (stars included)."""
    if depth3_root(instance) is None:
        raise UnsupportedGraph("tree has more than three levels")
    return run_group_satisfied(instance, _depth3_step, check, trace)


# --- spiders -----------------------------------------------------------------


def spider_center(instance: Instance) -> int | None:
    """The unique vertex of degree >= 3, None for a path; raises if there are several."""
    g = instance.graph
    if g.kind != TREE:
        raise UnsupportedGraph("not a tree")
    big = [v for v in range(g.m) if g.degree(v) >= 3]
    if len(big) > 1:
        raise UnsupportedGraph("not a spider: several vertices of degree >= 3")
    return big[0] if big else None


def is_spider(instance: Instance) -> bool:
    try:
        return spider_center(instance) is not None
    except UnsupportedGraph:
        return False


def _legs(instance: Instance, center: int) -> list[list[int]]:
    adj = instance.graph.adjacency
    legs = []
    for w in adj[center]:
        leg = [w]
        prev = center
        while len(adj[leg[-1]]) == 2:
            nxt = next(u for u in adj[leg[-1]] if u != prev)
            prev = leg[-1]
            leg.append(nxt)
        legs.append(leg)
    return sorted(legs, key=lambda leg: leg[-1])


def _spider_step(sub: Instance, splits: list[SplitCertificate]) -> dict[int, frozenset[int]]:
    center = spider_center(sub)
    if center is None:
        return _path_step(sub, splits)
    n = sub.n
    for leg in _legs(sub, center):
        branch = frozenset(leg) | {center}
        if any(any(branch <= b for b in s.bundles) for s in splits):
            continue
        leaf = leg[-1]
        ending = [s.bundle_of(leaf) for s in splits]
        winner = max(range(n), key=lambda a: (len(ending[a]), -a))
        if not ending[winner] <= frozenset(leg):
            raise AllocationError("ending bundle leaves its branch")
        return {winner: ending[winner]}

    owner = 0
    p_r = splits[owner].bundle_of(center)
    paths = []
    for comp in sub.graph.components(set(range(sub.m)) - p_r):
        top = next(v for v in comp if any(w in p_r for w in sub.graph.adjacency[v]))
        cls = classify_subtree(sub, splits, top, center)
        if cls.vertices != comp or cls.summary != ("super", 1):
            raise AllocationError("branch remainder is not 1-super")
        paths.append(cls)
    h = auxiliary_graph([c.dominators for c in paths], owner, n)
    matching = max_matching(h)
    if len(matching) == h.n_left:
        partial = {owner: p_r}
        for j, cls in enumerate(paths):
            partial[matching[j]] = cls.vertices
        return partial
    crown = find_crown(h, matching)
    partial = {}
    for j in sorted(crown.witness):
        if j == len(paths):
            raise AllocationError("root bundle fell inside the crown")
        partial[crown.witness[j]] = paths[j].vertices
    return partial


def allocate_spider(instance: Instance, check: bool = False, trace: list | None = None) -> dict[int, frozenset[int]]:
    """MMS allocation of chores on a spider (a path is handled as a degenerate spider)."""
    spider_center(instance)
    return run_group_satisfied(instance, _spider_step, check, trace)
