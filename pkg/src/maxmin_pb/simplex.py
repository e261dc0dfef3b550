"""Exact rational simplex for small bounded LPs.

Solves ``max c.x  s.t.  A x <= b,  0 <= x <= u`` (``u[j] is None`` means no
upper bound) over :class:`fractions.Fraction`. Upper bounds are handled by
complementing variables (``x = u - x'``) rather than by extra rows, and
Bland's rule is used for both entering and leaving choices so the method
terminates and the returned vertex depends only on the column order.

Rows with a negative right-hand side get an artificial variable and a first
phase that minimises the sum of artificials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import PBError


class LPInfeasibleError(PBError):
    pass


class LPUnboundedError(PBError):
    pass


@dataclass(frozen=True)
class LPResult:
    objective: Fraction
    x: tuple[Fraction, ...]
    duals: tuple[Fraction, ...]
    basis: tuple[int, ...]
    pivots: int


class _Tableau:
    def __init__(self, rows, rhs, upper, basis):
        self.rows = rows
        self.rhs = rhs
        self.upper = upper
        self.basis = basis
        self.flipped = [False] * len(upper)
        self.d: list[Fraction] = []
        self.z = Fraction(0)
        self.pivots = 0

    def set_objective(self, cost):
        ncol = len(self.upper)
        c = [(-cost[j] if self.flipped[j] else cost[j]) for j in range(ncol)]
        z = sum(
            (cost[j] * self.upper[j] for j in range(ncol) if self.flipped[j]),
            Fraction(0),
        )
        d = list(c)
        for i, bj in enumerate(self.basis):
            cb = c[bj]
            if cb:
                row = self.rows[i]
                for j in range(ncol):
                    if row[j]:
                        d[j] -= cb * row[j]
                z += cb * self.rhs[i]
        self.d = d
        self.z = z

    def _flip_column(self, j):
        u = self.upper[j]
        for i, row in enumerate(self.rows):
            a = row[j]
            if a:
                self.rhs[i] -= a * u
                row[j] = -a
        self.z += self.d[j] * u
        self.d[j] = -self.d[j]
        self.flipped[j] = not self.flipped[j]

    def _flip_basic(self, i):
        # basic x_B at its upper bound leaves: substitute x_B = u - x'_B first
        bj = self.basis[i]
        row = self.rows[i]
        for j in range(len(row)):
            if j != bj and row[j]:
                row[j] = -row[j]
        self.rhs[i] = self.upper[bj] - self.rhs[i]
        self.flipped[bj] = not self.flipped[bj]
        # d[bj] is zero for a basic column, objective constant unchanged

    def _pivot(self, r, j):
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in range(len(row)):
                if row[k]:
                    row[k] *= inv
            self.rhs[r] *= inv
        nz = [k for k in range(len(row)) if row[k]]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
                self.rhs[i] -= f * self.rhs[r]
        f = self.d[j]
        if f:
            for k in nz:
                self.d[k] -= f * row[k]
            self.z += f * self.rhs[r]
        self.basis[r] = j
        self.pivots += 1

    def run(self, allowed: Optional[set] = None):
        """Primal simplex with Bland's rule; returns when optimal."""
        while True:
            in_basis = set(self.basis)
            entering = None
            for j, dj in enumerate(self.d):
                if dj > 0 and j not in in_basis and (allowed is None or j in allowed):
                    entering = j
                    break
            if entering is None:
                return
            j = entering
            best = None  # (ratio, basic var index, row, leaves at upper)
            for i, row in enumerate(self.rows):
                a = row[j]
                if a > 0:
                    cand = (self.rhs[i] / a, self.basis[i], i, False)
                elif a < 0 and self.upper[self.basis[i]] is not None:
                    cand = ((self.rhs[i] - self.upper[self.basis[i]]) / a, self.basis[i], i, True)
                else:
                    continue
                if best is None or cand[:2] < best[:2]:
                    best = cand
            uj = self.upper[j]
            if uj is not None and (best is None or uj < best[0]):
                self._flip_column(j)
                continue
            if best is None:
                raise LPUnboundedError("LP is unbounded")
            _, _, r, at_upper = best
            if at_upper:
                self._flip_basic(r)
            self._pivot(r, j)


def solve_lp(
    c: Sequence,
    A: Sequence[Sequence],
    b: Sequence,
    upper: Optional[Sequence] = None,
) -> LPResult:
    """Maximise ``c.x`` subject to ``A x <= b`` and ``0 <= x <= upper``.

    ``duals`` holds one non-negative multiplier per row of ``A``.
    """
    nvar = len(c)
    nrow = len(A)
    if upper is None:
        upper = [None] * nvar
    F = Fraction
    cost = [F(v) for v in c]
    ub = [None if u is None else F(u) for u in upper]
    n_art = sum(1 for bi in b if bi < 0)
    ncol = nvar + nrow + n_art
    rows, rhs, basis = [], [], []
    art_cols = []
    a_next = nvar + nrow
    for i in range(nrow):
        row = [F(0)] * ncol
        for j in range(nvar):
            row[j] = F(A[i][j])
        row[nvar + i] = F(1)
        bi = F(b[i])
        if bi < 0:
            row = [-v for v in row]
            row[a_next] = F(1)
            basis.append(a_next)
            art_cols.append(a_next)
            a_next += 1
            bi = -bi
        else:
            basis.append(nvar + i)
        rows.append(row)
        rhs.append(bi)
    tab = _Tableau(rows, rhs, ub + [None] * (nrow + n_art), basis)

    if art_cols:
        phase1 = [F(0)] * ncol
        for j in art_cols:
            phase1[j] = F(-1)
        tab.set_objective(phase1)
        tab.run()
        if tab.z < 0:
            raise LPInfeasibleError("LP has no feasible point")
        art = set(art_cols)
        for i, bj in enumerate(tab.basis):
            if bj in art:
                for j in range(nvar + nrow):
                    if tab.rows[i][j] != 0:
                        tab._pivot(i, j)
                        break
        keep = [i for i, bj in enumerate(tab.basis) if bj not in art]
        tab.rows = [tab.rows[i][: nvar + nrow] for i in keep]
        tab.rhs = [tab.rhs[i] for i in keep]
        tab.basis = [tab.basis[i] for i in keep]
        tab.upper = tab.upper[: nvar + nrow]
        tab.flipped = tab.flipped[: nvar + nrow]

    tab.set_objective(cost + [F(0)] * nrow)
    tab.run()

    values = [F(0)] * (nvar + nrow)
    for i, bj in enumerate(tab.basis):
        values[bj] = tab.rhs[i]
    for j in range(nvar + nrow):
        if tab.flipped[j]:
            values[j] = tab.upper[j] - values[j]
    # reduced cost of slack i is -y_i (slacks are never complemented)
    duals = tuple(-tab.d[nvar + i] for i in range(nrow))
    x = tuple(values[:nvar])
    objective = sum((cost[j] * x[j] for j in range(nvar)), F(0))
    return LPResult(objective, x, duals, tuple(tab.basis), tab.pivots)


def dual_bound(c, A, b, upper, y) -> Optional[Fraction]:
    """Upper bound on ``max c.x`` certified by row multipliers ``y >= 0``.

    Returns ``None`` if ``y`` certifies nothing (negative entry, or a positive
    reduced cost on a variable without upper bound).
    """
    if any(v < 0 for v in y):
        return None
    total = sum((Fraction(bi) * yi for bi, yi in zip(b, y)), Fraction(0))
    for j in range(len(c)):
        red = Fraction(c[j]) - sum((Fraction(A[i][j]) * y[i] for i in range(len(A))), Fraction(0))
        if red > 0:
            if upper[j] is None:
                return None
            total += red * upper[j]
    return total
