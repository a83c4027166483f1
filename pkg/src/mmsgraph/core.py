"""Instances, graphs and exact maximin-share values on trees and cycles.

All (dis)utilities are :class:`fractions.Fraction`; nothing in the package
rounds.  Chores carry values ``<= 0``, goods values ``>= 0``.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

CHORES = "chores"
GOODS = "goods"
TREE = "tree"
CYCLE = "cycle"


class InstanceError(ValueError):
    """Malformed or contract-violating instance data."""


class UnsupportedGraph(ValueError):
    """The graph is outside the class an operation handles."""


def edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def parse_rational(raw) -> Fraction:
    """Parse ``"p/q"``, an integer string, or a JSON integer exactly."""
    if isinstance(raw, bool) or isinstance(raw, float):
        raise InstanceError(f"not an exact rational: {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if not isinstance(raw, str):
        raise InstanceError(f"not an exact rational: {raw!r}")
    text = raw.strip()
    if "." in text or "e" in text.lower():
        raise InstanceError(f"not an exact rational: {raw!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"not an exact rational: {raw!r}") from exc


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class ChoreGraph:
    """A tree or a simple cycle on vertices ``0..m-1``.

    Trees are given by their edge list; cycles by the cyclic vertex order,
    from which the edge list is derived.
    """

    kind: str
    m: int
    edges: tuple[tuple[int, int], ...]
    order: tuple[int, ...] | None = None

    @classmethod
    def tree(cls, m: int, edges: Iterable[Sequence[int]]) -> ChoreGraph:
        es = []
        for e in edges:
            if len(e) != 2:
                raise InstanceError(f"bad edge {e!r}")
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < m and 0 <= v < m) or u == v:
                raise InstanceError(f"bad edge {e!r} for {m} vertices")
            es.append(edge(u, v))
        if m < 1:
            raise InstanceError("a graph needs at least one vertex")
        if len(set(es)) != len(es):
            raise InstanceError("duplicate edge")
        if len(es) != m - 1:
            raise InstanceError(f"not a tree: {len(es)} edges for {m} vertices")
        g = cls(TREE, m, tuple(sorted(es)))
        if len(g.component(range(m), 0)) != m:
            raise InstanceError("not a tree: graph is disconnected")
        return g

    @classmethod
    def path(cls, order: Sequence[int]) -> ChoreGraph:
        return cls.tree(len(order), [(order[i], order[i + 1]) for i in range(len(order) - 1)])

    @classmethod
    def cycle(cls, order: Sequence[int]) -> ChoreGraph:
        order = tuple(int(v) for v in order)
        m = len(order)
        if sorted(order) != list(range(m)):
            raise InstanceError("cycle order must list every vertex 0..m-1 exactly once")
        if m < 3:
            raise InstanceError("a simple cycle needs at least 3 vertices")
        es = tuple(sorted(edge(order[i], order[(i + 1) % m]) for i in range(m)))
        return cls(CYCLE, m, es, order)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def component(self, vertices: Iterable[int], start: int) -> set[int]:
        """Vertices of ``vertices`` reachable from ``start`` inside them."""
        allowed = set(vertices)
        seen = {start}
        todo = [start]
        while todo:
            u = todo.pop()
            for w in self.adjacency[u]:
                if w in allowed and w not in seen:
                    seen.add(w)
                    todo.append(w)
        return seen

    def components(self, vertices: Iterable[int]) -> list[frozenset[int]]:
        """Connected components of the induced subgraph, ordered by least vertex."""
        left = set(vertices)
        out = []
        for v in sorted(left):
            if v in left:
                comp = self.component(left, v)
                left -= comp
                out.append(frozenset(comp))
        return out

    def is_connected(self, vertices: Iterable[int]) -> bool:
        vs = set(vertices)
        if not vs:
            return False
        return len(self.component(vs, min(vs))) == len(vs)

    def is_path(self) -> bool:
        return self.kind == TREE and all(len(a) <= 2 for a in self.adjacency)

    def cycle_edge_at(self, pos: int) -> tuple[int, int]:
        """Edge between ``order[pos]`` and its successor."""
        assert self.order is not None
        return edge(self.order[pos % self.m], self.order[(pos + 1) % self.m])

    @cached_property
    def cycle_position(self) -> dict[tuple[int, int], int]:
        assert self.order is not None
        return {self.cycle_edge_at(p): p for p in range(self.m)}

    def to_json(self) -> dict:
        if self.kind == CYCLE:
            return {"type": CYCLE, "order": list(self.order)}
        return {"type": TREE, "edges": [list(e) for e in self.edges]}


@dataclass(frozen=True)
class Instance:
    """``n`` agents with additive values over the vertices of a tree or cycle."""

    n: int
    graph: ChoreGraph
    utilities: tuple[tuple[Fraction, ...], ...]
    kind: str = CHORES

    def __post_init__(self):
        if self.kind not in (CHORES, GOODS):
            raise InstanceError(f"unknown kind {self.kind!r}")
        if self.n < 1:
            raise InstanceError("need at least one agent")
        if len(self.utilities) != self.n:
            raise InstanceError(f"dimension mismatch: {len(self.utilities)} rows for {self.n} agents")
        for row in self.utilities:
            if len(row) != self.graph.m:
                raise InstanceError(f"dimension mismatch: row of length {len(row)} for {self.graph.m} chores")
            for q in row:
                if (self.kind == CHORES and q > 0) or (self.kind == GOODS and q < 0):
                    raise InstanceError(f"sign violation: {format_rational(q)} in a {self.kind} instance")

    @classmethod
    def build(cls, graph: ChoreGraph, utilities, kind: str = CHORES) -> Instance:
        rows = tuple(tuple(parse_rational(q) if not isinstance(q, Fraction) else q for q in r) for r in utilities)
        return cls(len(rows), graph, rows, kind)

    @property
    def m(self) -> int:
        return self.graph.m

    def value(self, agent: int, bundle: Iterable[int]) -> Fraction:
        row = self.utilities[agent]
        return sum((row[c] for c in bundle), Fraction(0))

    def total(self, agent: int) -> Fraction:
        return sum(self.utilities[agent], Fraction(0))

    def restrict(self, vertices: Sequence[int], agents: Sequence[int] | None = None) -> Instance:
        """Sub-instance induced by ``vertices`` (relabelled ``0..len-1`` in the given order).

        The induced subgraph must be connected.  A proper subset of a cycle
        becomes a path (a tree).
        """
        vertices = list(vertices)
        agents = list(range(self.n)) if agents is None else list(agents)
        index = {v: i for i, v in enumerate(vertices)}
        if len(index) != len(vertices) or not vertices:
            raise InstanceError("restriction needs distinct, non-empty vertices")
        if not self.graph.is_connected(vertices):
            raise UnsupportedGraph("remaining chores do not induce a connected graph")
        if self.graph.kind == CYCLE and len(vertices) == self.m:
            g = ChoreGraph.cycle([index[v] for v in self.graph.order])
        else:
            es = [(index[u], index[v]) for u, v in self.graph.edges if u in index and v in index]
            g = ChoreGraph.tree(len(vertices), es)
        rows = tuple(tuple(self.utilities[a][v] for v in vertices) for a in agents)
        return Instance(len(agents), g, rows, self.kind)

    def negated(self) -> Instance:
        flip = GOODS if self.kind == CHORES else CHORES
        return Instance(self.n, self.graph, tuple(tuple(-q for q in r) for r in self.utilities), flip)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "agents": self.n,
            "graph": self.graph.to_json(),
            "utilities": [[format_rational(q) for q in row] for row in self.utilities],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def parse_instance(raw_text: bytes | str) -> Instance:
    """Parse and validate the JSON instance format."""
    try:
        data = json.loads(raw_text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object")
    try:
        kind = data["kind"]
        n = data["agents"]
        graph = data["graph"]
        utilities = data["utilities"]
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r}") from exc
    if not isinstance(n, int) or isinstance(n, bool):
        raise InstanceError("'agents' must be an integer")
    if not isinstance(utilities, list) or not all(isinstance(r, list) for r in utilities):
        raise InstanceError("'utilities' must be a list of rows")
    if len(utilities) != n:
        raise InstanceError(f"dimension mismatch: {len(utilities)} rows for {n} agents")
    m = len(utilities[0]) if utilities else 0
    if not isinstance(graph, dict) or graph.get("type") not in (TREE, CYCLE):
        raise InstanceError("graph type must be 'tree' or 'cycle'")
    if graph["type"] == TREE:
        edges = graph.get("edges")
        if not isinstance(edges, list):
            raise InstanceError("tree graph needs an 'edges' list")
        g = ChoreGraph.tree(m, edges)
    else:
        order = graph.get("order")
        if not isinstance(order, list):
            raise InstanceError("cycle graph needs an 'order' list")
        if len(order) != m:
            raise InstanceError(f"dimension mismatch: cycle of {len(order)} for {m} chores")
        g = ChoreGraph.cycle(order)
    rows = tuple(tuple(parse_rational(q) for q in row) for row in utilities)
    return Instance(n, g, rows, kind)


@dataclass(frozen=True)
class SplitCertificate:
    """An MMS split: ``k`` connected bundles, none worse than ``value`` for ``agent``."""

    agent: int
    bundles: tuple[frozenset[int], ...]
    value: Fraction
    cut_edges: tuple[tuple[int, int], ...] = field(default=())

    def bundle_of(self, v: int) -> frozenset[int]:
        for b in self.bundles:
            if v in b:
                return b
        raise KeyError(v)


# --- tree carving -----------------------------------------------------------


def _rooted(adj, vertices: set[int], root: int):
    """Parent map and a top-down vertex order of the subtree spanned by ``vertices``."""
    parent = {root: None}
    order = [root]
    for u in order:
        for w in adj[u]:
            if w in vertices and w not in parent:
                parent[w] = u
                order.append(w)
    return parent, order


def _subtree_sums(adj, vertices, root, values):
    parent, order = _rooted(adj, vertices, root)
    children = {u: [] for u in order}
    for u in order[1:]:
        children[parent[u]].append(u)
    sums = {}
    for u in reversed(order):
        sums[u] = values[u] + sum(sums[c] for c in children[u])
    return children, sums


def _subtree(children, v) -> set[int]:
    out = {v}
    todo = [v]
    while todo:
        for c in children[todo.pop()]:
            out.add(c)
            todo.append(c)
    return out


def _carve_chores(adj, vertices: set[int], values, n: int, x, root: int):
    """Constructive Check for chores: bundles with value >= x, at most n of them, or None."""
    remaining = set(vertices)
    bundles = []
    while True:
        total = sum(values[v] for v in remaining)
        if total >= x:
            bundles.append(frozenset(remaining))
            return bundles
        if n <= 1:
            return None
        children, sums = _subtree_sums(adj, remaining, root, values)
        c = root
        while True:
            worse = [w for w in children[c] if sums[w] < x]
            if not worse:
                break
            c = min(worse)
        if not children[c]:
            return None
        cut = min(children[c], key=lambda w: (sums[w], w))
        piece = _subtree(children, cut)
        bundles.append(frozenset(piece))
        remaining -= piece
        n -= 1


def _carve_goods(adj, vertices: set[int], values, n: int, x, root: int):
    """Goods counterpart: exactly n bundles each with value >= x, or None."""
    remaining = set(vertices)
    bundles = []
    while True:
        total = sum(values[v] for v in remaining)
        if n <= 1:
            if total >= x and remaining:
                bundles.append(frozenset(remaining))
                return bundles
            return None
        if total < x:
            return None
        children, sums = _subtree_sums(adj, remaining, root, values)
        c = root
        while True:
            rich = [w for w in children[c] if sums[w] >= x]
            if not rich:
                break
            c = min(rich)
        if c == root:
            return None
        piece = _subtree(children, c)
        bundles.append(frozenset(piece))
        remaining -= piece
        n -= 1


def _require_tree(graph: ChoreGraph):
    if graph.kind != TREE:
        raise UnsupportedGraph("check_feasible runs on trees; cut a cycle edge first")


def check_feasible(tree: ChoreGraph, agent_utilities: Sequence[Fraction], n: int, x) -> bool:
    """Is there a valid n-partition of the tree with every bundle worth at least ``x``?

    Chores only.  Roots the tree at vertex 0 and repeatedly cuts off the
    lightest-burden child subtree below the topmost overloaded vertex.
    """
    _require_tree(tree)
    if any(q > 0 for q in agent_utilities):
        raise InstanceError("check_feasible takes chores values (all <= 0)")
    return _carve_chores(tree.adjacency, set(range(tree.m)), agent_utilities, n, x, 0) is not None


def check_feasible_goods(tree: ChoreGraph, agent_utilities: Sequence[Fraction], n: int, x) -> bool:
    """Goods decision counterpart of :func:`check_feasible`."""
    _require_tree(tree)
    if any(q < 0 for q in agent_utilities):
        raise InstanceError("check_feasible_goods takes goods values (all >= 0)")
    return _carve_goods(tree.adjacency, set(range(tree.m)), agent_utilities, n, x, 0) is not None


def _scaled(values: Sequence[Fraction]) -> tuple[int, list[int]]:
    scale = 1
    for q in values:
        scale = math.lcm(scale, Fraction(q).denominator)
    return scale, [int(q * scale) for q in values]


def _refine(adj, bundles: list[frozenset[int]], k: int) -> list[frozenset[int]]:
    """Split bundles until there are ``k``; peeled pieces are single leaves."""
    bundles = list(bundles)
    while len(bundles) < k:
        i = next(i for i, b in enumerate(bundles) if len(b) >= 2)
        b = bundles[i]
        leaf = max(v for v in b if sum(1 for w in adj[v] if w in b) <= 1)
        bundles[i] = b - {leaf}
        bundles.append(frozenset({leaf}))
    return bundles


def _tree_split(graph: ChoreGraph, values: Sequence[Fraction], k: int, kind: str):
    """(scaled-free value, bundles) of an optimal k-partition of a tree."""
    scale, ints = _scaled(values)
    adj = graph.adjacency
    everything = set(range(graph.m))
    carve = _carve_chores if kind == CHORES else _carve_goods
    total = sum(ints)
    lo, hi = (total, 0) if kind == CHORES else (0, total)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if carve(adj, everything, ints, k, mid, 0) is not None:
            lo = mid
        else:
            hi = mid - 1
    bundles = carve(adj, everything, ints, k, lo, 0)
    bundles = _refine(adj, bundles, k)
    return Fraction(lo, scale), bundles


def _check_k(instance: Instance, k: int):
    if not 1 <= k <= instance.m:
        raise InstanceError(f"k={k} outside 1..{instance.m}: no partition into non-empty connected bundles")


def _cycle_cut_edges(graph: ChoreGraph, bundles) -> tuple[tuple[int, int], ...]:
    owner = {v: i for i, b in enumerate(bundles) for v in b}
    return tuple(sorted(e for e in graph.edges if owner[e[0]] != owner[e[1]]))


def _best_split(instance: Instance, agent: int, k: int):
    _check_k(instance, k)
    values = instance.utilities[agent]
    g = instance.graph
    if g.kind == TREE:
        return _tree_split(g, values, k, instance.kind)
    if k == 1:
        return instance.total(agent), [frozenset(range(g.m))]
    best = None
    for pos in range(g.m):
        # path obtained by deleting the edge after order[pos]
        order = [g.order[(pos + 1 + i) % g.m] for i in range(g.m)]
        path = ChoreGraph.path(range(g.m))
        val, bundles = _tree_split(path, [values[v] for v in order], k, instance.kind)
        if best is None or val > best[0]:
            best = (val, [frozenset(order[i] for i in b) for b in bundles])
    return best


def mms_value(instance: Instance, agent: int, k: int | None = None) -> Fraction:
    """Exact maximin share of ``agent`` when splitting into ``k`` (default ``n``) connected bundles."""
    k = instance.n if k is None else k
    return _best_split(instance, agent, k)[0]


def mms_split(instance: Instance, agent: int, k: int | None = None) -> SplitCertificate:
    """An MMS split for ``agent``: ``k`` connected bundles each worth at least the MMS value."""
    k = instance.n if k is None else k
    value, bundles = _best_split(instance, agent, k)
    bundles = tuple(sorted(bundles, key=min))
    cuts = _cycle_cut_edges(instance.graph, bundles) if instance.graph.kind == CYCLE and k >= 2 else ()
    return SplitCertificate(agent, bundles, value, cuts)


def certificate(instance: Instance, agent: int, bundles: Iterable[Iterable[int]]) -> SplitCertificate:
    """Wrap a hand-made valid partition as a split for ``agent`` (its value is the worst bundle)."""
    bundles = tuple(sorted((frozenset(b) for b in bundles), key=min))
    if not is_valid_partition(instance.graph, bundles):
        raise InstanceError("bundles do not form a valid partition")
    value = min(instance.value(agent, b) for b in bundles)
    cuts = _cycle_cut_edges(instance.graph, bundles) if instance.graph.kind == CYCLE and len(bundles) >= 2 else ()
    return SplitCertificate(agent, bundles, value, cuts)


def mms_values(instance: Instance) -> list[Fraction]:
    return [mms_value(instance, i) for i in range(instance.n)]


def tree_height(graph: ChoreGraph, root: int) -> int:
    """Number of edges on the longest root-to-vertex path."""
    depth = {root: 0}
    todo = deque([root])
    while todo:
        u = todo.popleft()
        for w in graph.adjacency[u]:
            if w not in depth:
                depth[w] = depth[u] + 1
                todo.append(w)
    return max(depth.values())


def is_valid_partition(graph: ChoreGraph, bundles: Sequence[Iterable[int]]) -> bool:
    seen: set[int] = set()
    for b in bundles:
        b = set(b)
        if not b or seen & b or not graph.is_connected(b):
            return False
        seen |= b
    return seen == set(range(graph.m))
