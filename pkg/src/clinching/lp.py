"""Exact two-phase simplex over :class:`fractions.Fraction`.

Solves ``maximize c.y  subject to  rows (<=, >=, =) rhs,  y >= 0`` with a
dense tableau and Bland's smallest-index rule, so it terminates on degenerate
problems.  Meant for the small LPs of the verification suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import UnsupportedSizeError
from .polymatroid import ZERO, rational

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, GE, EQ = "<=", ">=", "="
SENSES = (LE, GE, EQ)

MAX_VARIABLES = 64
MAX_CONSTRAINTS = (1 << 10) + 640


@dataclass(frozen=True)
class Constraint:
    row: tuple[Fraction, ...]
    sense: str
    rhs: Fraction


@dataclass
class LinearProgram:
    objective: tuple[Fraction, ...]
    constraints: list[Constraint] = field(default_factory=list)
    names: list[str] | None = None

    def __post_init__(self):
        self.objective = tuple(rational(c) for c in self.objective)
        if self.names is None:
            self.names = [f"y{j}" for j in range(len(self.objective))]
        if len(self.names) != len(self.objective):
            raise ValueError("one name per variable")

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add(self, row: Sequence, sense: str, rhs) -> None:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        row = tuple(rational(a) for a in row)
        if len(row) != self.num_vars:
            raise ValueError(f"row has {len(row)} entries, expected {self.num_vars}")
        self.constraints.append(Constraint(row, sense, rational(rhs)))

    def satisfied_by(self, point: Sequence[Fraction]) -> bool:
        if any(v < 0 for v in point):
            return False
        for con in self.constraints:
            lhs = sum((a * v for a, v in zip(con.row, point) if a), ZERO)
            if con.sense == LE and lhs > con.rhs:
                return False
            if con.sense == GE and lhs < con.rhs:
                return False
            if con.sense == EQ and lhs != con.rhs:
                return False
        return True


@dataclass(frozen=True)
class LPSolution:
    status: str
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None

    def named(self, names: Sequence[str]) -> dict[str, Fraction]:
        return dict(zip(names, self.point or ()))


class _Tableau:
    """Rows are lists of Fractions; the last entry of each row is its rhs."""

    def __init__(self, rows, basis, ncols):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r: int, c: int, obj: list[Fraction]) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            for j, a in enumerate(prow):
                if a:
                    prow[j] = a / piv
        nz = [j for j, a in enumerate(prow) if a]
        for i, row in enumerate(self.rows):
            if i != r:
                factor = row[c]
                if factor:
                    for j in nz:
                        row[j] -= factor * prow[j]
        factor = obj[c]
        if factor:
            for j in nz:
                obj[j] -= factor * prow[j]
        self.basis[r] = c

    def iterate(self, obj: list[Fraction], allowed: int) -> str:
        """Bland's rule on columns ``< allowed`` until optimal or unbounded."""
        while True:
            enter = next((j for j in range(allowed) if obj[j] > 0), None)
            if enter is None:
                return OPTIMAL
            leave, best = None, None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if (best is None or ratio < best
                            or (ratio == best and self.basis[i] < self.basis[leave])):
                        leave, best = i, ratio
            if leave is None:
                return UNBOUNDED
            self.pivot(leave, enter, obj)


def _reduced_costs(tab: _Tableau, costs: Sequence[Fraction]) -> list[Fraction]:
    obj = list(costs) + [ZERO]
    for i, b in enumerate(tab.basis):
        cb = costs[b]
        if cb:
            for j, a in enumerate(tab.rows[i]):
                if a:
                    obj[j] -= cb * a
    return obj


def solve(lp: LinearProgram) -> LPSolution:
    nv = lp.num_vars
    m = len(lp.constraints)
    if nv > MAX_VARIABLES or m > MAX_CONSTRAINTS:
        raise UnsupportedSizeError(
            f"LP with {nv} variables and {m} constraints exceeds the dense solver's limits"
        )

    # normalize to nonnegative right-hand sides
    norm = []
    for con in lp.constraints:
        row, sense, rhs = list(con.row), con.sense, con.rhs
        if rhs < 0:
            row = [-a for a in row]
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        norm.append((row, sense, rhs))

    n_slack = sum(1 for _, s, _ in norm if s != EQ)
    n_art = sum(1 for _, s, _ in norm if s != LE)
    first_slack = nv
    first_art = nv + n_slack
    ncols = first_art + n_art

    rows, basis = [], []
    si, ai = first_slack, first_art
    for row, sense, rhs in norm:
        full = row + [ZERO] * (ncols - nv) + [rhs]
        if sense == LE:
            full[si] = Fraction(1)
            basis.append(si)
            si += 1
        elif sense == GE:
            full[si] = Fraction(-1)
            si += 1
            full[ai] = Fraction(1)
            basis.append(ai)
            ai += 1
        else:
            full[ai] = Fraction(1)
            basis.append(ai)
            ai += 1
        rows.append(full)
    tab = _Tableau(rows, basis, ncols)

    if n_art:
        phase1 = [ZERO] * first_art + [Fraction(-1)] * n_art
        obj = _reduced_costs(tab, phase1)
        tab.iterate(obj, ncols)
        if -obj[-1] < 0:
            return LPSolution(INFEASIBLE)
        # drive zero-level artificials out of the basis; drop redundant rows
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] >= first_art:
                row = tab.rows[r]
                col = next((j for j in range(first_art) if row[j]), None)
                if col is None:
                    del tab.rows[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, col, obj)
            r += 1

    costs = list(lp.objective) + [ZERO] * (ncols - nv)
    obj = _reduced_costs(tab, costs)
    status = tab.iterate(obj, first_art)
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED)

    point = [ZERO] * nv
    for i, b in enumerate(tab.basis):
        if b < nv:
            point[b] = tab.rows[i][-1]
    point = tuple(point)
    value = sum((c * v for c, v in zip(lp.objective, point)), ZERO)
    if value != -obj[-1] or not lp.satisfied_by(point):
        raise AssertionError("simplex returned an inconsistent vertex")
    return LPSolution(OPTIMAL, value, point)
