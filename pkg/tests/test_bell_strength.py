import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlab.bell_strength import (
    all_tau_permutations,
    bell_strength,
    convexity_failure_demo,
    gammas,
    gammas_from_bell,
    monoandry_check,
    tau,
    verify_theorem1,
)
from boxlab.box import (
    all_deterministic_boxes,
    all_pr_boxes,
    apply_lro,
    deterministic_box,
    extremal_boxes,
    lro_group,
    mix,
    noisy_pr,
    sample_ns_box,
    white_noise,
)
from boxlab.local import bell_functions, is_local_facets
from boxlab.quantum import (
    born_box,
    canonical_measurements,
    pure_family,
    random_direction,
    random_state,
    werner,
)

F = Fraction
vals = st.fractions(0, 4)
X, Y, Z = np.eye(3)


class TestTau:
    def test_examples(self):
        assert tau(4, 0, 0, 0) == 4
        assert tau(2, 2, 2, 2) == 0
        assert tau(3, 1, 2, 0) == 0
        assert tau(F(1, 2), 0, 0, 0) == F(1, 2)

    @settings(max_examples=200)
    @given(vals, vals, vals, vals)
    def test_symmetries(self, a, b, c, d):
        t = tau(a, b, c, d)
        assert t >= 0
        assert t == tau(b, a, c, d) == tau(a, b, d, c) == tau(c, d, a, b)

    @settings(max_examples=100)
    @given(vals, vals, vals, vals)
    def test_only_three_distinct_pairings(self, a, b, c, d):
        perms = all_tau_permutations((a, b, c, d))
        assert len(perms) == 24
        triple = set(gammas_from_bell((a, b, c, d)))
        assert set(perms.values()) == triple


class TestGammas:
    @pytest.mark.parametrize("p", [F(0), F(1, 10), F(1, 2), F(1)])
    def test_noisy_pr(self, p):
        assert tuple(gammas(noisy_pr(p))) == (4 * p, 4 * p, 4 * p)

    @pytest.mark.parametrize("b", all_pr_boxes())
    def test_pr_boxes(self, b):
        assert bell_strength(b) == 4

    @pytest.mark.parametrize("d", all_deterministic_boxes())
    def test_deterministic(self, d):
        assert bell_strength(d) == 0

    def test_white_noise(self):
        assert bell_strength(white_noise()) == 0

    def test_two_deterministic_mixture(self):
        m = mix([deterministic_box(0, 0, 0, 0), deterministic_box(0, 0, 1, 1)], [F(1, 2), F(1, 2)])
        assert bell_functions(m) == [0, 0, 2, 2]
        assert bell_strength(m) == 0

    @pytest.mark.parametrize("seed", range(15))
    def test_lro_invariance(self, seed):
        b = sample_ns_box(seed)
        g = bell_strength(b)
        assert all(bell_strength(apply_lro(b, t)) == g for t in lro_group())

    def test_range_and_nonlocality(self):
        for s in range(400):
            b = sample_ns_box(s)
            g = bell_strength(b)
            assert 0 <= g <= 4
            if not is_local_facets(b):
                assert g > 0


class TestMonoandry:
    @pytest.mark.parametrize("b", extremal_boxes())
    def test_extremal_saturate(self, b):
        rep = monoandry_check(b)
        assert rep.ok
        assert rep.max_pair_sum == 4

    def test_samples(self):
        for s in range(300):
            assert monoandry_check(sample_ns_box(s)).ok

    def test_white_noise(self):
        assert monoandry_check(white_noise()).max_pair_sum == 0


class TestConvexity:
    def test_demo(self):
        demo = convexity_failure_demo()
        assert all(g == 0 for g in demo.component_gammas)
        assert demo.weighted_sum == 0
        assert demo.mixture_gamma > 0
        assert bell_strength(demo.mixture) == demo.mixture_gamma
        assert is_local_facets(demo.mixture)
        assert sum(demo.weights) == 1


class TestCommutingAlice:
    def test_werner_examples(self):
        assert verify_theorem1(werner(0.8), Z, X, Y) <= 1e-12
        assert verify_theorem1(pure_family(math.pi / 4), X, X, Z) <= 1e-12

    def test_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            g = verify_theorem1(random_state(rng), *(random_direction(rng) for _ in range(3)))
            assert g <= 1e-10

    @pytest.mark.parametrize("theta", [math.pi / 16, math.pi / 8, math.pi / 4])
    def test_noncommuting_positive(self, theta):
        box = born_box(pure_family(theta), *canonical_measurements())
        assert float(bell_strength(box)) == pytest.approx(2 * math.sqrt(2) * math.sin(2 * theta), abs=1e-12)

    def test_product_state_noncommuting_gives_zero(self):
        box = born_box(pure_family(0), *canonical_measurements())
        assert float(bell_strength(box)) == pytest.approx(0, abs=1e-12)
