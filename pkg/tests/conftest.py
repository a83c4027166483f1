import sys
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

from mmsgraph.cli import random_instance
from mmsgraph.core import CHORES, GOODS, ChoreGraph, Instance, parse_instance

DATA = Path(__file__).parent / "data"


def load(name: str) -> Instance:
    return parse_instance((DATA / name).read_bytes())


@pytest.fixture
def table1() -> Instance:
    return load("table1.json")


@pytest.fixture
def table2() -> Instance:
    return load("table2.json")


def row(*vals) -> list[Fraction]:
    return [Fraction(v) for v in vals]


def path_instance(*rows, kind=CHORES) -> Instance:
    return Instance.build(ChoreGraph.path(range(len(rows[0]))), [row(*r) for r in rows], kind)


def cycle_instance(*rows, kind=CHORES) -> Instance:
    return Instance.build(ChoreGraph.cycle(range(len(rows[0]))), [row(*r) for r in rows], kind)


values = st.builds(Fraction, st.integers(0, 12), st.integers(1, 12))


@st.composite
def random_tree(draw, m_min=1, m_max=9):
    m = draw(st.integers(m_min, m_max))
    parents = [draw(st.integers(0, v - 1)) for v in range(1, m)]
    perm = draw(st.permutations(range(m)))
    return ChoreGraph.tree(m, [(perm[p], perm[v]) for v, p in zip(range(1, m), parents)])


@st.composite
def random_cycle(draw, m_min=3, m_max=9):
    m = draw(st.integers(m_min, m_max))
    return ChoreGraph.cycle(draw(st.permutations(range(m))))


@st.composite
def instances(draw, graphs, n_max=4, kinds=(CHORES, GOODS), n_min=1):
    g = draw(graphs)
    kind = draw(st.sampled_from(kinds))
    n = draw(st.integers(n_min, min(n_max, g.m)))
    sign = -1 if kind == CHORES else 1
    rows = [[sign * draw(values) for _ in range(g.m)] for _ in range(n)]
    return Instance.build(g, rows, kind)


def generated(cls, m, n, seed, kind=CHORES) -> Instance:
    return random_instance(cls, m, n, seed, kind)


def coarse(cls, m, n, seed) -> Instance:
    """Random chores instance with values from a small pool, which makes ties and
    rarely seen allocator branches much more common."""
    rng = random.Random(seed)
    base = random_instance(cls, m, n, seed)
    rows = [[-Fraction(rng.choice((0, 1, 1, 1, 2, 3, 6))) for _ in range(m)] for _ in range(n)]
    return Instance.build(base.graph, rows, CHORES)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
