"""Linear programs behind the three-agent cycle thresholds.

Setting: three agents whose maximin splits interleave on a cycle, cutting
it into nine segments ``S_1..S_9``.  Variables ``x_j, y_j, z_j`` are the
values of segment ``j`` for agents 1, 2, 3 (maximin share normalised to -1
for chores, +1 for goods), plus ``alpha``.  The constraints describe an
instance on which the cycle allocator has nothing to offer at ratio
``alpha``: no run of consecutive segments satisfies anybody and none of
the three splits can be handed out.  The optimum of the closed relaxation
is the threshold for the case.

A case is a choice of one bundle in each split, the only bundle of that
split the two other agents may like.  There are 27 raw cases; fixing the
first agent's choice leaves 9, which fall into orbits under rotating and
reflecting the cycle.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import permutations, product

from . import simplex
from .core import CHORES, GOODS, ChoreGraph, Instance, InstanceError, format_rational, mms_split
from .cyclealloc import SegmentDecomposition, allocate_cycle3, segments_from_splits
from .oracle import oracle_best_alpha, oracle_mms

PREFIX = "xyz"
SEGMENTS = 9
# model counts after symmetry reduction as published for the two settings
PUBLISHED_MODEL_COUNTS = {CHORES: 3, GOODS: 5}
# runs of consecutive segments that must not satisfy an agent
WINDOW = {CHORES: 4, GOODS: 2}


def var(agent: int, segment: int) -> str:
    return f"{PREFIX[agent]}{segment + 1}"


VARIABLES = ("alpha",) + tuple(var(a, j) for a in range(3) for j in range(SEGMENTS))


def bundle_segments(agent: int, t: int) -> tuple[int, ...]:
    """Segments of bundle ``t`` in the split of ``agent``."""
    start = agent + 3 * t
    return tuple((start + d) % SEGMENTS for d in range(3))


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str
    rhs: Fraction
    strict: bool
    label: str

    def lhs(self, values) -> Fraction:
        return sum((c * values[v] for v, c in self.coeffs), Fraction(0))

    def holds(self, values, closed: bool = False) -> bool:
        lhs = self.lhs(values)
        if self.sense == simplex.EQ:
            return lhs == self.rhs
        if self.sense == simplex.LE:
            return lhs <= self.rhs if closed or not self.strict else lhs < self.rhs
        return lhs >= self.rhs if closed or not self.strict else lhs > self.rhs

    def text(self) -> str:
        terms = []
        for v, c in self.coeffs:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            terms.append(f"{sign} {v}" if mag == 1 else f"{sign} {format_rational(mag)} {v}")
        body = " ".join(terms).lstrip("+ ")
        op = {simplex.LE: "<", simplex.GE: ">"}.get(self.sense, "=") if self.strict else self.sense
        return f"{self.label}: {body} {op} {format_rational(self.rhs)}"


def _row(kind, segments_by_agent, label, strict, against_alpha):
    """``sum <= -alpha`` (chores) / ``sum <= alpha`` (goods), or split rows when ``against_alpha`` is False."""
    coeffs = {}
    for agent, segs in segments_by_agent:
        for j in segs:
            coeffs[var(agent, j)] = coeffs.get(var(agent, j), 0) + Fraction(1)
    if against_alpha:
        coeffs["alpha"] = Fraction(1) if kind == CHORES else Fraction(-1)
        return Constraint(tuple(sorted(coeffs.items())), simplex.LE, Fraction(0), strict, label)
    rhs = Fraction(-1) if kind == CHORES else Fraction(1)
    return Constraint(tuple(sorted(coeffs.items())), simplex.GE, rhs, strict, label)


@dataclass(frozen=True)
class LPModel:
    """One case.  Chores maximise alpha with every segment value <= 0;
    goods minimise alpha with every segment value >= 0."""

    kind: str
    case: tuple[int, int, int]
    constraints: tuple[Constraint, ...]
    orbit: tuple[tuple[int, int, int], ...] = ()

    @property
    def objective(self) -> str:
        return "max" if self.kind == CHORES else "min"

    def window_count(self, agent: int) -> int:
        return sum(1 for c in self.constraints if c.label.startswith(f"window {PREFIX[agent]}"))

    def with_constraint(self, c: Constraint) -> LPModel:
        return replace(self, constraints=self.constraints + (c,))

    def violated(self, values, closed: bool = False) -> list[str]:
        return [c.label for c in self.constraints if not c.holds(values, closed)]

    def to_lp_text(self) -> str:
        sign = "<= 0" if self.kind == CHORES else ">= 0"
        lines = [
            f"\\ {self.kind}, case {self.case}, orbit {list(self.orbit)}",
            f"{'maximize' if self.kind == CHORES else 'minimize'}",
            " obj: alpha",
            "subject to",
        ]
        lines += [f" {c.text()}" for c in self.constraints]
        lines.append("bounds")
        lines.append(" alpha >= 0")
        lines += [f" {v} {sign}" for v in VARIABLES[1:]]
        lines.append("end")
        return "\n".join(lines) + "\n"


def raw_model(kind: str, case) -> LPModel:
    if kind not in (CHORES, GOODS):
        raise InstanceError(f"unknown kind {kind!r}")
    case = tuple(int(t) for t in case)
    if len(case) != 3 or any(t not in (0, 1, 2) for t in case):
        raise InstanceError(f"case must be three bundle indices in 0..2, got {case}")
    rows = []
    for a in range(3):
        for t in range(3):
            rows.append(_row(kind, [(a, bundle_segments(a, t))], f"split {PREFIX[a]} B{a + 1}{t + 1}", False, False))
    w = WINDOW[kind]
    for a in range(3):
        for i in range(SEGMENTS):
            segs = tuple((i + d) % SEGMENTS for d in range(w))
            rows.append(_row(kind, [(a, segs)], f"window {PREFIX[a]} from S{i + 1}", True, True))
    for owner in range(3):
        for t in range(3):
            if t == case[owner]:
                continue
            for a in range(3):
                if a != owner:
                    rows.append(
                        _row(kind, [(a, bundle_segments(owner, t))], f"refuse {PREFIX[a]} B{owner + 1}{t + 1}", True, True)
                    )
    return LPModel(kind, case, tuple(rows), (case,))


# --- symmetry ------------------------------------------------------------------


def _dihedral():
    for k in range(SEGMENTS):
        yield lambda j, k=k: (j + k) % SEGMENTS
        yield lambda j, k=k: (k - j) % SEGMENTS


def case_images(case) -> set[tuple[int, int, int]]:
    """Images of a case under rotations and reflections of the nine segments."""
    out = set()
    for g in _dihedral():
        starts = []
        for owner, t in enumerate(case):
            image = sorted(g(j) for j in bundle_segments(owner, t))
            # an arc of three segments, possibly wrapping; find its first segment
            first = next(s for s in image if (s - 1) % SEGMENTS not in image)
            starts.append(first)
        roles = {s % 3 for s in starts}
        if len(roles) != 3:
            continue
        img = [0, 0, 0]
        for s in starts:
            img[s % 3] = s // 3
        out.add(tuple(img))
    return out


def orbits(cases) -> list[tuple[tuple[int, int, int], ...]]:
    pending = sorted(cases)
    classes = []
    while pending:
        seed = pending[0]
        img = case_images(seed)
        group = tuple(c for c in pending if c in img)
        classes.append(group)
        pending = [c for c in pending if c not in img]
    return classes


def first_agent_cases() -> list[tuple[int, int, int]]:
    return [(0, s2, s3) for s2, s3 in product(range(3), repeat=2)]


def build_lp_models(kind: str) -> list[LPModel]:
    """One model per symmetry class of the nine cases with the first agent's choice fixed."""
    return [replace(raw_model(kind, group[0]), orbit=group) for group in orbits(first_agent_cases())]


# --- solving -----------------------------------------------------------------------


@dataclass(frozen=True)
class LPSolution:
    """Optimum of the closed relaxation.

    ``alpha`` is a supremum for chores and an infimum for goods: the strict
    system is feasible exactly for alpha below it (chores) or above it
    (goods), never at it.
    """

    status: str
    alpha: Fraction | None = None
    vertex: dict[str, Fraction] = field(default_factory=dict)
    tight: tuple[str, ...] = ()
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == simplex.OPTIMAL


class SolverInconsistency(RuntimeError):
    pass


def solve_lp_max_alpha(model: LPModel) -> LPSolution:
    """Exact optimum of alpha over the model with strict rows closed."""
    # chores variables are <= 0: substitute v = -v' so every column is >= 0
    sign = {v: (-1 if model.kind == CHORES and v != "alpha" else 1) for v in VARIABLES}
    col = {v: i for i, v in enumerate(VARIABLES)}
    rows, senses, rhs = [], [], []
    for c in model.constraints:
        r = [Fraction(0)] * len(VARIABLES)
        for v, q in c.coeffs:
            r[col[v]] += sign[v] * q
        rows.append(r)
        senses.append(c.sense)
        rhs.append(c.rhs)
    obj = [Fraction(0)] * len(VARIABLES)
    obj[0] = Fraction(1) if model.kind == CHORES else Fraction(-1)
    res = simplex.maximise(obj, rows, senses, rhs)
    if res.status == simplex.UNBOUNDED:
        raise SolverInconsistency(f"model {model.case} is unbounded")
    if res.status != simplex.OPTIMAL:
        return LPSolution(res.status, pivots=res.pivots)
    vertex = {v: sign[v] * x for v, x in zip(VARIABLES, res.x)}
    if any(c.lhs(vertex) != c.rhs if c.sense == simplex.EQ else not c.holds(vertex, closed=True) for c in model.constraints):
        raise SolverInconsistency("returned vertex violates the closed model")
    tight = tuple(c.label for c in model.constraints if c.lhs(vertex) == c.rhs)
    return LPSolution(res.status, vertex["alpha"], vertex, tight, res.pivots)


def threshold(kind: str, solutions) -> Fraction:
    """Ratio the allocator can always reach: worst case over the models."""
    alphas = [s.alpha for s in solutions if s.optimal]
    return max(alphas) if kind == CHORES else min(alphas)


@dataclass(frozen=True)
class SymmetryReport:
    kind: str
    orbits: tuple[tuple[tuple[int, int, int], ...], ...]
    alpha_by_case: dict[tuple[int, int, int], Fraction]
    consistent: bool
    published_count: int

    @property
    def count(self) -> int:
        return len(self.orbits)

    @property
    def matches_published(self) -> bool:
        return self.count == self.published_count

    @property
    def value_classes(self) -> dict[Fraction, tuple[tuple[int, int, int], ...]]:
        out: dict[Fraction, list] = {}
        for case, a in sorted(self.alpha_by_case.items()):
            out.setdefault(a, []).append(case)
        return {a: tuple(cs) for a, cs in out.items()}


def symmetry_report(kind: str) -> SymmetryReport:
    """Solve all nine cases and check that each orbit shares one optimum."""
    alphas = {case: solve_lp_max_alpha(raw_model(kind, case)).alpha for case in first_agent_cases()}
    groups = tuple(orbits(first_agent_cases()))
    consistent = all(len({alphas[c] for c in g}) == 1 for g in groups)
    return SymmetryReport(kind, groups, alphas, consistent, PUBLISHED_MODEL_COUNTS[kind])


# --- tight instances ----------------------------------------------------------------


class TightnessError(RuntimeError):
    pass


def vertex_instance(kind: str, vertex) -> Instance:
    """One chore per segment on a 9-cycle, in segment order."""
    rows = [[vertex[var(a, j)] for j in range(SEGMENTS)] for a in range(3)]
    return Instance.build(ChoreGraph.cycle(range(SEGMENTS)), rows, kind)


def extract_tight_instance(model: LPModel, solution: LPSolution, verify: bool = True) -> Instance:
    """Instance read off the optimal vertex; its best achievable ratio is exactly ``solution.alpha``."""
    if not solution.optimal:
        raise TightnessError(f"solution is {solution.status}")
    inst = vertex_instance(model.kind, solution.vertex)
    if verify:
        norm = Fraction(-1) if model.kind == CHORES else Fraction(1)
        mms = [oracle_mms(inst, a) for a in range(3)]
        if mms != [norm] * 3:
            raise TightnessError(f"vertex instance has maximin shares {mms}, expected {norm}")
        best, _ = oracle_best_alpha(inst, mms)
        if best != solution.alpha:
            raise TightnessError(f"vertex instance reaches {best}, not {solution.alpha}")
        got = allocate_cycle3(inst)
        if got.ratio != solution.alpha:
            raise TightnessError(f"allocator reached {got.ratio} on the vertex instance")
    return inst


def segment_values(instance: Instance) -> tuple[tuple[Fraction, ...], ...] | None:
    """Per-role segment values from the instance's own maximin splits, if they interleave."""
    splits = [mms_split(instance, a) for a in range(3)]
    dec = segments_from_splits(instance, splits)
    if not isinstance(dec, SegmentDecomposition):
        return None
    return tuple(tuple(instance.value(agent, seg) for seg in dec.segments) for agent in dec.roles)


def same_up_to_symmetry(a, b) -> bool:
    """Equal as 3x9 tables after some rotation or reflection of segments and relabelling of agents."""
    for g in _dihedral():
        cols = [g(j) for j in range(SEGMENTS)]
        for perm in permutations(range(3)):
            if all(a[perm[r]][cols[j]] == b[r][j] for r in range(3) for j in range(SEGMENTS)):
                return True
    return False
