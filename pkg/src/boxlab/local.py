"""CHSH functionals and locality tests for two-input/two-output boxes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .box import (
    BITS,
    Box,
    all_deterministic_boxes,
    correlators,
    default_tol,
    deterministic_box,
    mix,
    validate,
)
from .simplex import solve_feasibility

DETERMINISTIC_LABELS = tuple(itertools.product(BITS, repeat=4))
CHSH_LABELS = tuple(itertools.product(BITS, repeat=3))


def chsh_signed(box: Box, alpha: int, beta: int, gamma: int):
    """Signed Bell-CHSH expression B_{alpha beta gamma}; local boxes give <= 2."""
    e = correlators(box).e
    s = lambda k: -1 if k & 1 else 1  # noqa: E731
    return (
        s(gamma) * e[0, 0]
        + s(beta ^ gamma) * e[0, 1]
        + s(alpha ^ gamma) * e[1, 0]
        + s(alpha ^ beta ^ gamma ^ 1) * e[1, 1]
    )


def chsh_values(box: Box) -> dict[tuple[int, int, int], object]:
    """All eight signed CHSH values keyed by (alpha, beta, gamma)."""
    return {lab: chsh_signed(box, *lab) for lab in CHSH_LABELS}


def chsh_abs(box: Box, j: int):
    """Absolute Bell function B_j with j = 2*alpha + beta."""
    if j not in range(4):
        raise ValueError(f"j must be in 0..3, got {j}")
    alpha, beta = divmod(j, 2)
    return abs(chsh_signed(box, alpha, beta, 0))


def bell_functions(box: Box) -> list:
    """[B_0, B_1, B_2, B_3]."""
    return [chsh_abs(box, j) for j in range(4)]


def is_local_facets(box: Box, tol=None) -> bool:
    """True iff every signed CHSH value is at most 2 + tol (Fine's criterion)."""
    if tol is None:
        tol = default_tol(box)
    return all(v <= 2 + tol for v in chsh_values(box).values())


# --------------------------------------------------------------------------
# exact LP over the 16 deterministic vertices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalDecomposition:
    """Weights on the 16 deterministic boxes, keyed by (alpha, beta, gamma, epsilon)."""

    weights: dict[tuple[int, int, int, int], Fraction]

    def box(self) -> Box:
        labels = [lab for lab in DETERMINISTIC_LABELS if self.weights.get(lab, 0)]
        return mix([deterministic_box(*lab) for lab in labels], [self.weights[lab] for lab in labels])

    def support(self) -> list[tuple[int, int, int, int]]:
        return [lab for lab in DETERMINISTIC_LABELS if self.weights.get(lab, 0)]


@dataclass(frozen=True)
class Infeasible:
    """Certificate that a box is not a mixture of deterministic boxes.

    ``witness`` is a 4x4 functional F on box tables with F(D) >= 0 for all
    16 deterministic boxes and F(box) < 0.
    """

    witness: np.ndarray
    value: Fraction

    def check(self, box: Box) -> bool:
        if not all(_apply_functional(self.witness, d) >= 0 for d in all_deterministic_boxes()):
            return False
        return _apply_functional(self.witness, box) < 0


def _apply_functional(f: np.ndarray, box: Box):
    return sum(fv * pv for fv, pv in zip(f.flat, box.p.flat) if fv)


@lru_cache(maxsize=None)
def _lp_system() -> tuple[tuple[int, ...], tuple[tuple[Fraction, ...], ...]]:
    """Independent subset of the 16 entry equations and their coefficient rows.

    Column q of the full matrix is deterministic box q flattened.  On the
    nonsignaling subspace the 16 equations have rank 9; keeping a maximal
    independent subset makes every pivot cheaper.
    """
    cols = [list(d.p.flat) for d in all_deterministic_boxes()]
    full = [[cols[q][k] for q in range(16)] for k in range(16)]
    chosen: list[int] = []
    basis: list[list[Fraction]] = []  # echelon rows with pivot positions
    pivots: list[int] = []
    for k, row in enumerate(full):
        v = list(row)
        for prow, pc in zip(basis, pivots):
            if v[pc]:
                f = v[pc] / prow[pc]
                v = [a - f * b for a, b in zip(v, prow)]
        nz = next((j for j, a in enumerate(v) if a), None)
        if nz is not None:
            chosen.append(k)
            basis.append(v)
            pivots.append(nz)
    return tuple(chosen), tuple(tuple(full[k]) for k in chosen)


def decompose_local(box: Box) -> LocalDecomposition | Infeasible:
    """Exact decomposition into deterministic boxes, or a Farkas certificate.

    Float boxes are converted exactly to rationals first; the verdict is then
    exact for that rational box (up to the signaling residual of the float
    input, since only an independent subset of the entry equations is used).
    """
    if not validate(box).nonsignaling:
        raise ValueError("signaling box: the deterministic-mixture LP is not defined for it")
    exact = box.to_exact()
    rows, A = _lp_system()
    flat = list(exact.p.flat)
    b = [flat[k] for k in rows]
    res = solve_feasibility(A, b)
    if res.feasible:
        return LocalDecomposition({lab: res.x[q] for q, lab in enumerate(DETERMINISTIC_LABELS)})
    f = np.full(16, Fraction(0), dtype=object)
    for k, yk in zip(rows, res.farkas):
        f[k] = yk
    f = f.reshape(4, 4)
    return Infeasible(f, _apply_functional(f, exact))


def is_local_lp(box: Box) -> bool:
    return isinstance(decompose_local(box), LocalDecomposition)
