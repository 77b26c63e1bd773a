"""Exact phase-one simplex for small feasibility problems ``A w = b, w >= 0``.

Arithmetic is done on :class:`fractions.Fraction` so an infeasible verdict
comes with an exact Farkas certificate instead of a rounding-sensitive
guess.  Bland's rule is used for both the entering and leaving variable,
which rules out cycling on the degenerate vertices these problems have.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    x: tuple[Fraction, ...] | None  # primal point when feasible
    farkas: tuple[Fraction, ...] | None  # y with y.A >= 0 and y.b < 0 when infeasible
    pivots: int


def _pivot(tab: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    prow = tab[r]
    piv = prow[c]
    if piv != ONE:
        inv = ONE / piv
        prow[:] = [v * inv if v else v for v in prow]
    nz = [j for j, v in enumerate(prow) if v]
    for i, row in enumerate(tab):
        if i == r:
            continue
        f = row[c]
        if f:
            for j in nz:
                row[j] -= f * prow[j]
    f = obj[c]
    if f:
        for j in nz:
            obj[j] -= f * prow[j]


def solve_feasibility(A: Sequence[Sequence], b: Sequence) -> FeasibilityResult:
    """Find ``w >= 0`` with ``A w = b`` or prove none exists.

    Rows may be linearly dependent.  The returned Farkas vector ``y``
    satisfies ``y . A[:, j] >= 0`` for every column and ``y . b < 0``.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    signs = []
    tab: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        rhs = Fraction(b[i])
        s = -1 if rhs < 0 else 1
        if s < 0:
            row = [-v for v in row]
            rhs = -rhs
        signs.append(s)
        art = [ZERO] * m
        art[i] = ONE
        tab.append(row + art + [rhs])
    width = n + m + 1
    # reduced costs of the phase-one objective (sum of artificials)
    obj = [ZERO] * width
    for row in tab:
        for j in range(n):
            obj[j] -= row[j]
        obj[-1] -= row[-1]
    basis = list(range(n, n + m))

    pivots = 0
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        best = None
        for i, row in enumerate(tab):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:  # cannot happen: phase one is bounded below by 0
            raise RuntimeError("phase-one objective unbounded")
        r = best[1]
        _pivot(tab, obj, r, enter)
        basis[r] = enter
        pivots += 1

    if obj[-1] == 0:
        x = [ZERO] * n
        for i, var in enumerate(basis):
            if var < n:
                x[var] = tab[i][-1]
        return FeasibilityResult(True, tuple(x), None, pivots)

    # pi_i = 1 - reduced cost of artificial i; y = -pi undoes the row flips
    y = tuple(-(ONE - obj[n + i]) * signs[i] for i in range(m))
    return FeasibilityResult(False, None, y, pivots)
