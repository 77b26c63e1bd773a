import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlab.box import (
    IDENTITY,
    Box,
    LocalOp,
    LROTransform,
    all_deterministic_boxes,
    all_pr_boxes,
    apply_lro,
    box_from_correlators,
    box_from_dict,
    box_to_dict,
    correlators,
    deterministic_box,
    dumps_box,
    extremal_boxes,
    loads_box,
    lro_group,
    mix,
    noisy_pr,
    pr_box,
    sample_ns_box,
    validate,
    white_noise,
)

F = Fraction
bits = st.integers(0, 1)
transforms = st.tuples(*[bits] * 6).map(LROTransform.from_bits)


class TestValidate:
    def test_white_noise(self):
        rep = validate(white_noise())
        assert rep.normalized and rep.in_range and rep.nonsignaling

    def test_pr_box(self):
        assert validate(pr_box(0, 0, 0)).valid

    def test_rescaled_row_breaks_normalization(self):
        p = np.array(white_noise().p)
        p[0] = p[0] * F(11, 10)
        rep = validate(Box(p))
        assert not rep.normalized
        assert rep.normalization_residual == F(1, 10)

    def test_signaling_box(self):
        # Alice outputs Bob's input: normalized, in range, signaling
        p = np.full((4, 4), F(0), dtype=object)
        for x, y in itertools.product((0, 1), repeat=2):
            p[2 * x + y, 2 * y] = F(1)
        rep = validate(Box(p))
        assert rep.normalized and rep.in_range and not rep.nonsignaling
        assert rep.signaling_residual == 1

    def test_negative_entry(self):
        p = np.array(white_noise().p)
        p[1, 0], p[1, 1] = F(-1, 4), F(3, 4)
        rep = validate(Box(p))
        assert rep.normalized and not rep.in_range

    def test_float_tolerance(self):
        b = Box(np.full((4, 4), 0.25 + 1e-11))
        assert validate(b).valid
        assert not validate(b, tol=1e-12).normalized

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            Box(np.zeros(15))


class TestExtremalBoxes:
    def test_pr_000_entries(self):
        b = pr_box(0, 0, 0)
        assert b.prob(0, 0, 0, 0) == F(1, 2)
        assert b.prob(0, 1, 0, 0) == 0
        assert b.prob(0, 1, 1, 1) == F(1, 2)

    def test_pr_gamma_flips_parity(self):
        b = pr_box(0, 0, 1)
        assert b.prob(0, 1, 0, 0) == F(1, 2)
        assert b.prob(0, 0, 0, 0) == 0

    @pytest.mark.parametrize("abc", list(itertools.product((0, 1), repeat=3)))
    def test_pr_against_rule(self, abc):
        al, be, ga = abc
        b = pr_box(*abc)
        for x, y, a, c in itertools.product((0, 1), repeat=4):
            want = F(1, 2) if a ^ c == (x & y) ^ (al & x) ^ (be & y) ^ ga else 0
            assert b.prob(a, c, x, y) == want
        c = correlators(b)
        assert all(v == 0 for v in list(c.ma) + list(c.mb))

    def test_box_antibox_average_is_noise(self):
        assert mix([pr_box(0, 0, 0), pr_box(0, 0, 1)], [F(1, 2), F(1, 2)]).equals(white_noise())

    def test_deterministic_examples(self):
        d = deterministic_box(0, 0, 0, 0)
        assert all(d.prob(0, 0, x, y) == 1 for x, y in itertools.product((0, 1), repeat=2))
        d = deterministic_box(1, 0, 0, 0)
        assert d.prob(0, 0, 0, 0) == 1 and d.prob(0, 0, 0, 1) == 1
        assert d.prob(1, 0, 1, 0) == 1 and d.prob(1, 0, 1, 1) == 1

    def test_sixteen_distinct_deterministic(self):
        tables = {tuple(d.p.flat) for d in all_deterministic_boxes()}
        assert len(tables) == 16

    @pytest.mark.parametrize("d", all_deterministic_boxes())
    def test_deterministic_factorizes(self, d):
        assert sum(1 for v in d.p.flat if v == 1) == 4
        for x, y, a, b in itertools.product((0, 1), repeat=4):
            pa = d.prob(a, 0, x, y) + d.prob(a, 1, x, y)
            pb = d.prob(0, b, x, y) + d.prob(1, b, x, y)
            assert d.prob(a, b, x, y) == pa * pb

    def test_white_noise_is_uniform_deterministic_mixture(self):
        m = mix(all_deterministic_boxes(), [F(1, 16)] * 16)
        assert m.equals(white_noise())

    def test_all_extremal_valid(self):
        assert len(extremal_boxes()) == 24
        assert all(validate(b, 0).valid for b in extremal_boxes())


class TestMixing:
    def test_single(self):
        b = sample_ns_box(3)
        assert mix([b], [1]).equals(b)

    @pytest.mark.parametrize("p", [F(0), F(1, 3), F(1, 2), F(1)])
    def test_noisy_pr_definition(self, p):
        assert mix([pr_box(), white_noise()], [p, 1 - p]).equals(noisy_pr(p))

    def test_noisy_pr_endpoints(self):
        assert noisy_pr(1).equals(pr_box())
        for bits3 in itertools.product((0, 1), repeat=3):
            assert noisy_pr(0, *bits3).equals(white_noise())

    def test_noisy_pr_correlators(self):
        c = correlators(noisy_pr(F(3, 10)))
        assert c.e.tolist() == [[F(3, 10), F(3, 10)], [F(3, 10), F(-3, 10)]]
        assert all(v == 0 for v in list(c.ma) + list(c.mb))

    def test_noisy_pr_float_correlators(self):
        c = correlators(noisy_pr(0.3))
        np.testing.assert_allclose(np.array(c.e, dtype=float), [[0.3, 0.3], [0.3, -0.3]], atol=1e-15)

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            mix([white_noise(), pr_box()], [F(1, 2), F(1, 3)])
        with pytest.raises(ValueError):
            noisy_pr(1.5)

    def test_backend_propagation(self):
        assert mix([pr_box(), white_noise()], [F(1, 3), F(2, 3)]).exact
        assert not mix([pr_box(), white_noise()], [0.3, 0.7]).exact


class TestCorrelators:
    def test_pr(self):
        c = correlators(pr_box())
        assert c.e.tolist() == [[1, 1], [1, -1]]

    def test_white_noise(self):
        c = correlators(white_noise())
        assert all(v == 0 for v in list(c.e.flat) + list(c.ma) + list(c.mb))

    @pytest.mark.parametrize("seed", range(20))
    def test_round_trip(self, seed):
        b = sample_ns_box(seed)
        c = correlators(b)
        assert box_from_correlators(c.e, c.ma, c.mb).equals(b)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6), st.integers(0, 10**6), st.fractions(0, 1))
    def test_linearity(self, s1, s2, w):
        b1, b2 = sample_ns_box(s1), sample_ns_box(s2)
        m = mix([b1, b2], [w, 1 - w])
        c1, c2, cm = correlators(b1), correlators(b2), correlators(m)
        assert (cm.e == w * c1.e + (1 - w) * c2.e).all()
        assert (cm.ma == w * c1.ma + (1 - w) * c2.ma).all()
        assert (cm.mb == w * c1.mb + (1 - w) * c2.mb).all()


class TestLRO:
    def test_group_order(self):
        assert len(set(lro_group())) == 64

    def test_identity(self):
        b = sample_ns_box(11)
        assert apply_lro(b, IDENTITY).equals(b)

    def test_alice_output_flip(self):
        t = LROTransform(alice=LocalOp(beta=1))
        assert apply_lro(deterministic_box(0, 0, 0, 0), t).equals(deterministic_box(0, 1, 0, 0))

    def test_pr_orbit(self):
        orbit = {tuple(apply_lro(pr_box(), t).p.flat) for t in lro_group()}
        assert orbit == {tuple(b.p.flat) for b in all_pr_boxes()}

    def test_deterministic_orbit_closed(self):
        dets = {tuple(b.p.flat) for b in all_deterministic_boxes()}
        for t in lro_group():
            for d in all_deterministic_boxes():
                assert tuple(apply_lro(d, t).p.flat) in dets

    @settings(max_examples=100, deadline=None)
    @given(transforms, transforms, st.integers(0, 10**6))
    def test_group_action(self, t1, t2, seed):
        b = sample_ns_box(seed)
        lhs = apply_lro(apply_lro(b, t1), t2)
        assert lhs.equals(apply_lro(b, t2.compose(t1)))
        assert validate(lhs, 0).valid

    @settings(max_examples=100, deadline=None)
    @given(transforms)
    def test_inverse(self, t):
        assert t.compose(t.inverse()) == IDENTITY
        assert t.inverse().compose(t) == IDENTITY

    def test_closure(self):
        group = set(lro_group())
        for t1 in lro_group()[::7]:
            for t2 in lro_group():
                assert t2.compose(t1) in group


class TestSampling:
    def test_valid(self):
        for s in range(200):
            assert validate(sample_ns_box(s), 0).valid
            assert validate(sample_ns_box(s, exact=False), 1e-12).valid

    def test_deterministic(self):
        assert sample_ns_box(42).equals(sample_ns_box(42))
        assert not sample_ns_box(42).equals(sample_ns_box(43))


class TestJson:
    def test_exact_round_trip(self):
        b = noisy_pr(F(3, 10))
        d = box_to_dict(b)
        assert d["format"] == "boxlab-box-v1"
        assert d["p"][0][0] == "13/40"
        assert box_from_dict(json.loads(json.dumps(d))).equals(b)

    def test_float_round_trip_bitwise(self):
        b = sample_ns_box(5, exact=False)
        back = loads_box(dumps_box(b))
        assert not back.exact
        assert np.array_equal(back.p, b.p)

    @pytest.mark.parametrize(
        "text",
        [
            '{"format": "other", "p": []}',
            '{"format": "boxlab-box-v1", "p": [[1,2,3]]}',
            '{"format": "boxlab-box-v1", "p": [["a","b","c","d"],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}',
            "[]",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            loads_box(text)
