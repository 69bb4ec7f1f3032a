"""Exact-rational simplex for small DoF polyhedra.

Maximizes c.x subject to A x <= b, x >= 0 with Fraction arithmetic and
Bland's anti-cycling rule.  Every right-hand side here is nonnegative, so
the all-slack basis is feasible and no phase-1 is needed.  Systems are a
couple of dozen rows by a handful of variables; clarity beats speed.
"""

from __future__ import annotations

from fractions import Fraction


class SimplexError(ValueError):
    pass


class Unbounded(SimplexError):
    """The objective increases without limit over the feasible set."""


def maximize(objective, rows, rhs):
    """Solve max c.x s.t. rows.x <= rhs, x >= 0 exactly.

    Returns (optimal value, x vector) as Fractions.
    """
    nv = len(objective)
    m = len(rows)
    if any(len(r) != nv for r in rows) or len(rhs) != m:
        raise SimplexError("inconsistent LP dimensions")
    c = [Fraction(v) for v in objective]
    b = [Fraction(v) for v in rhs]
    if any(v < 0 for v in b):
        raise SimplexError("negative right-hand side; shift the system first")

    # tableau: m constraint rows over [x | slacks | rhs], then the z-row
    # holding reduced costs (negated objective at start)
    width = nv + m + 1
    tab = []
    for r in range(m):
        row = [Fraction(v) for v in rows[r]] + [Fraction(0)] * m + [b[r]]
        row[nv + r] = Fraction(1)
        tab.append(row)
    zrow = [-v for v in c] + [Fraction(0)] * (m + 1)
    basis = list(range(nv, nv + m))

    while True:
        entering = next((j for j in range(width - 1) if zrow[j] < 0), None)
        if entering is None:
            break
        leaving_row = None
        best_ratio = None
        for r in range(m):
            a = tab[r][entering]
            if a > 0:
                ratio = tab[r][-1] / a
                if (best_ratio is None or ratio < best_ratio or
                        (ratio == best_ratio and basis[r] < basis[leaving_row])):
                    best_ratio = ratio
                    leaving_row = r
        if leaving_row is None:
            raise Unbounded("LP is unbounded")
        _pivot(tab, zrow, leaving_row, entering)
        basis[leaving_row] = entering

    x = [Fraction(0)] * nv
    for r, var in enumerate(basis):
        if var < nv:
            x[var] = tab[r][-1]
    return zrow[-1], x


def _pivot(tab, zrow, prow, pcol):
    pivot = tab[prow][pcol]
    tab[prow] = [v / pivot for v in tab[prow]]
    for r in range(len(tab)):
        if r != prow and tab[r][pcol] != 0:
            factor = tab[r][pcol]
            tab[r] = [v - factor * p for v, p in zip(tab[r], tab[prow])]
    if zrow[pcol] != 0:
        factor = zrow[pcol]
        for j, p in enumerate(tab[prow]):
            zrow[j] -= factor * p
