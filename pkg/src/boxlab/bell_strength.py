"""Bell strength: a PR-box fraction that does not depend on which PR box.

With B_0..B_3 the absolute Bell functions,

    tau(b0, b1, b2, b3) = | |b0 - b1| - |b2 - b3| |
    Gamma_1 = tau(B0, B1, B2, B3)
    Gamma_2 = tau(B0, B2, B1, B3)
    Gamma_3 = tau(B0, B3, B1, B2)
    Gamma   = min(Gamma_1, Gamma_2, Gamma_3)

Gamma is 4p on noisy PR boxes, 0 on deterministic boxes, and 4 on PR boxes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .box import Box, default_tol, deterministic_box, mix
from .local import DETERMINISTIC_LABELS, bell_functions
from .quantum import TwoQubitState, born_box


def tau(b0, b1, b2, b3):
    return abs(abs(b0 - b1) - abs(b2 - b3))


@dataclass(frozen=True)
class GammaTriple:
    g1: object
    g2: object
    g3: object

    def __iter__(self):
        return iter((self.g1, self.g2, self.g3))

    @property
    def gamma(self):
        return min(self.g1, self.g2, self.g3)


def gammas_from_bell(B) -> GammaTriple:
    b0, b1, b2, b3 = B
    return GammaTriple(tau(b0, b1, b2, b3), tau(b0, b2, b1, b3), tau(b0, b3, b1, b2))


def gammas(box: Box) -> GammaTriple:
    return gammas_from_bell(bell_functions(box))


def bell_strength(box: Box):
    return gammas(box).gamma


@dataclass(frozen=True)
class MonoandryReport:
    max_pair_sum: object
    pair: tuple[int, int]
    ok: bool


def monoandry_check(box: Box, tol=None) -> MonoandryReport:
    """Largest B_j + B_k over j != k; any nonsignaling box keeps it at most 4."""
    if tol is None:
        tol = default_tol(box)
    B = bell_functions(box)
    best = max(((B[j] + B[k], (j, k)) for j, k in itertools.combinations(range(4), 2)), key=lambda t: t[0])
    return MonoandryReport(best[0], best[1], bool(best[0] <= 4 + tol))


@dataclass(frozen=True)
class ConvexityFailure:
    labels: tuple[tuple[int, int, int, int], ...]
    weights: tuple[Fraction, ...]
    component_gammas: tuple[Fraction, ...]
    mixture: Box
    mixture_gamma: Fraction

    @property
    def weighted_sum(self) -> Fraction:
        return sum(w * g for w, g in zip(self.weights, self.component_gammas))


def _weight_grid(k: int, denominator: int):
    for parts in itertools.product(range(1, denominator), repeat=k):
        if sum(parts) == denominator:
            yield tuple(Fraction(v, denominator) for v in parts)


def convexity_failure_demo(max_terms: int = 3, max_denominator: int = 4) -> ConvexityFailure:
    """Smallest mixture of deterministic boxes whose Gamma is positive.

    Searches pairs, then triples, of deterministic boxes with weights on the
    grids 1/n (n <= ``max_denominator``).  Every component has Gamma = 0, so
    the mixture breaks Gamma(sum w_j P_j) <= sum w_j Gamma(P_j).
    """
    for k in range(2, max_terms + 1):
        for n in range(k, max_denominator + 1):
            for combo in itertools.combinations(DETERMINISTIC_LABELS, k):
                boxes = [deterministic_box(*lab) for lab in combo]
                for w in _weight_grid(k, n):
                    m = mix(boxes, w)
                    g = bell_strength(m)
                    if g > 0:
                        comp = tuple(bell_strength(b) for b in boxes)
                        return ConvexityFailure(combo, w, comp, m, g)
    raise RuntimeError("no convexity failure found within the search limits")


def verify_theorem1(state: TwoQubitState, a, b0, b1) -> float:
    """Gamma of the box where Alice measures the same direction for both inputs.

    Commuting (here identical) observables on Alice's side make B_0 = B_1 and
    B_2 = B_3, so every tau vanishes.
    """
    return float(bell_strength(born_box(state, a, a, b0, b1)))


def all_tau_permutations(B) -> dict[tuple[int, ...], object]:
    """tau over all 24 orderings of (B_0..B_3), keyed by the index permutation."""
    return {perm: tau(*(B[i] for i in perm)) for perm in itertools.permutations(range(4))}

