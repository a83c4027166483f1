"""Bipartite matching and crowns.

Left vertices ``0..n_left-1`` stand for bundles (stars, paths, the root
bundle), right vertices ``0..n_right-1`` for agents.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Sequence


@dataclass(frozen=True)
class BipartiteGraph:
    n_left: int
    n_right: int
    edges: tuple[tuple[int, int], ...]
    left_labels: tuple[Hashable, ...] = ()

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < self.n_left and 0 <= v < self.n_right):
                raise ValueError(f"edge {(u, v)} outside {self.n_left}x{self.n_right}")

    def adj_left(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_left)]
        for u, v in self.edges:
            if v not in adj[u]:
                adj[u].append(v)
        return adj


def auxiliary_graph(dominators: Sequence[set[int]], owner: int, n_agents: int, labels=None) -> BipartiteGraph:
    """One left vertex per subtree (adjacent to its dominators) plus a last one for the root bundle.

    The root bundle is adjacent only to ``owner``, the agent whose split it came from.
    """
    edges = [(j, a) for j, dom in enumerate(dominators) for a in sorted(dom)]
    edges.append((len(dominators), owner))
    labels = tuple(labels) if labels is not None else tuple(range(len(dominators))) + ("root",)
    return BipartiteGraph(len(dominators) + 1, n_agents, tuple(edges), labels)


def max_matching(h: BipartiteGraph) -> dict[int, int]:
    """Maximum matching as ``{left: right}``, by repeated augmenting paths.

    Left vertices are tried in index order and neighbours in edge order, so
    the result is a deterministic function of the input.
    """
    adj = h.adj_left()
    match_right: dict[int, int] = {}

    def augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_right or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in range(h.n_left):
        augment(u, set())
    return {u: v for v, u in match_right.items()}


def has_augmenting_path(h: BipartiteGraph, matching: dict[int, int]) -> bool:
    """One alternating BFS from every unsaturated left vertex."""
    adj = h.adj_left()
    match_right = {v: u for u, v in matching.items()}
    frontier = deque(u for u in range(h.n_left) if u not in matching)
    seen_left = set(frontier)
    seen_right = set()
    while frontier:
        u = frontier.popleft()
        for v in adj[u]:
            if v in seen_right:
                continue
            seen_right.add(v)
            if v not in match_right:
                return True
            w = match_right[v]
            if w not in seen_left:
                seen_left.add(w)
                frontier.append(w)
    return False


@dataclass(frozen=True)
class Crown:
    left: frozenset[int]
    right: frozenset[int]
    witness: dict[int, int]


class NoCrown(ValueError):
    pass


def find_crown(h: BipartiteGraph, matching: dict[int, int]) -> Crown:
    """Crown from a maximum matching that leaves some left vertex unmatched.

    Left side: left vertices reachable from an unmatched left vertex by an
    alternating path (length 0 allowed); right side: right vertices so
    reachable; witness: the matching edges inside.
    """
    if len(matching) >= h.n_left:
        raise NoCrown("the matching saturates the left side; no crown is guaranteed")
    adj = h.adj_left()
    match_right = {v: u for u, v in matching.items()}
    frontier = deque(u for u in range(h.n_left) if u not in matching)
    left = set(frontier)
    right = set()
    while frontier:
        u = frontier.popleft()
        for v in adj[u]:
            if v in right:
                continue
            right.add(v)
            if v not in match_right:
                raise ValueError("matching is not maximum: found an augmenting path")
            w = match_right[v]
            if w not in left:
                left.add(w)
                frontier.append(w)
    witness = {u: v for u, v in matching.items() if u in left and v in right}
    return Crown(frozenset(left), frozenset(right), witness)


def crown_violations(h: BipartiteGraph, crown: Crown) -> list[str]:
    """Which of the crown conditions fail (empty list means it is a crown)."""
    problems = []
    if not crown.left or not crown.right:
        problems.append("empty side")
    if not (crown.left <= set(range(h.n_left)) and crown.right <= set(range(h.n_right))):
        problems.append("containment")
    if any(u in crown.left and v not in crown.right for u, v in h.edges):
        problems.append("left side has a neighbour outside the right side")
    w = crown.witness
    edges = set(h.edges)
    if (
        len(w) != len(crown.right)
        or len(set(w.values())) != len(w)
        or any((u, v) not in edges or u not in crown.left or v not in crown.right for u, v in w.items())
    ):
        problems.append("witness matching does not saturate the right side")
    return problems
