"""Two-phase tableau simplex over ``Fraction`` with Bland's rule.

Small dense problems only.  Row updates skip zero entries of the pivot row,
which keeps the exact arithmetic affordable on tableaux of a few hundred
columns.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

LE, GE, EQ = "<=", ">=", "=="
OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

_ZERO = Fraction(0)


@dataclass(frozen=True)
class SimplexResult:
    status: str
    objective: Fraction | None = None
    x: tuple[Fraction, ...] = ()
    pivots: int = 0


class _Tableau:
    def __init__(self, rows, rhs, basis, n_cols):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.n_cols = n_cols
        self.pivots = 0

    def pivot(self, r, c, obj):
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv = 1 / p
            nz = [j for j in range(self.n_cols) if row[j]]
            for j in nz:
                row[j] *= inv
            self.rhs[r] *= inv
        nz = [j for j in range(self.n_cols) if row[j]]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
                self.rhs[i] -= f * self.rhs[r]
        f = obj[0][c]
        if f:
            for j in nz:
                obj[0][j] -= f * row[j]
            obj[1] -= f * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1

    def optimise(self, obj, allowed):
        """Maximise; ``obj = [reduced costs, -value]``.  Returns False when unbounded."""
        while True:
            enter = next((j for j in allowed if obj[0][j] > 0), None)
            if enter is None:
                return True
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return False
            self.pivot(best[1], enter, obj)


def _objective_row(tab: _Tableau, costs):
    d = list(costs)
    value = _ZERO
    for i, b in enumerate(tab.basis):
        cb = costs[b]
        if cb:
            row = tab.rows[i]
            for j in range(tab.n_cols):
                if row[j]:
                    d[j] -= cb * row[j]
            value += cb * tab.rhs[i]
    return [d, -value]


def maximise(
    c: Sequence,
    rows: Sequence[Sequence],
    senses: Sequence[str],
    rhs: Sequence,
) -> SimplexResult:
    """max ``c @ x`` subject to ``rows[i] @ x  senses[i]  rhs[i]`` and ``x >= 0``."""
    n = len(c)
    m = len(rows)
    a = [[Fraction(v) for v in r] for r in rows]
    b = [Fraction(v) for v in rhs]
    s = list(senses)
    for i in range(m):
        if len(a[i]) != n:
            raise ValueError(f"row {i} has {len(a[i])} coefficients, expected {n}")
        if s[i] not in (LE, GE, EQ):
            raise ValueError(f"unknown sense {s[i]!r}")
        if b[i] < 0:
            a[i] = [-v for v in a[i]]
            b[i] = -b[i]
            s[i] = {LE: GE, GE: LE, EQ: EQ}[s[i]]

    n_slack = sum(1 for x in s if x != EQ)
    n_art = sum(1 for x in s if x != LE)
    width = n + n_slack + n_art
    tab_rows, basis = [], []
    k_slack, k_art = n, n + n_slack
    for i in range(m):
        row = a[i] + [_ZERO] * (n_slack + n_art)
        if s[i] == LE:
            row[k_slack] = Fraction(1)
            basis.append(k_slack)
            k_slack += 1
        else:
            if s[i] == GE:
                row[k_slack] = Fraction(-1)
                k_slack += 1
            row[k_art] = Fraction(1)
            basis.append(k_art)
            k_art += 1
        tab_rows.append(row)
    tab = _Tableau(tab_rows, b, basis, width)
    real = range(n + n_slack)

    if n_art:
        phase1 = [_ZERO] * (n + n_slack) + [Fraction(-1)] * n_art
        obj = _objective_row(tab, phase1)
        tab.optimise(obj, range(width))
        if obj[1] != 0:
            return SimplexResult(INFEASIBLE, pivots=tab.pivots)
        # drive zero-level artificials out of the basis, dropping redundant rows
        for i in reversed(range(len(tab.rows))):
            if tab.basis[i] >= n + n_slack:
                col = next((j for j in real if tab.rows[i][j]), None)
                if col is None:
                    del tab.rows[i], tab.rhs[i], tab.basis[i]
                else:
                    tab.pivot(i, col, [[_ZERO] * width, _ZERO])

    costs = [Fraction(v) for v in c] + [_ZERO] * (n_slack + n_art)
    obj = _objective_row(tab, costs)
    if not tab.optimise(obj, real):
        return SimplexResult(UNBOUNDED, pivots=tab.pivots)
    x = [_ZERO] * n
    for i, bvar in enumerate(tab.basis):
        if bvar < n:
            x[bvar] = tab.rhs[i]
    return SimplexResult(OPTIMAL, -obj[1], tuple(x), tab.pivots)
