"""Two-input/two-output bipartite boxes.

A box is stored as a 4x4 table ``p[row, col]`` with ``row = 2*x + y`` and
``col = 2*a + b``.  Entries are either :class:`fractions.Fraction` (exact
backend, numpy object array) or ``float64`` (float backend).  Every
operation in this module is generic over the two backends: combining exact
boxes with rational weights stays exact, anything touching a float drops to
the float backend.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

BITS = (0, 1)
INPUTS = tuple(itertools.product(BITS, BITS))  # (x, y) in row order
OUTPUTS = tuple(itertools.product(BITS, BITS))  # (a, b) in column order
FORMAT = "boxlab-box-v1"
DEFAULT_TOL = 1e-9

# (-1)^(a xor b), (-1)^a, (-1)^b indexed by column
_PARITY = np.array([1, -1, -1, 1])
_SIGN_A = np.array([1, 1, -1, -1])
_SIGN_B = np.array([1, -1, 1, -1])


def row_index(x: int, y: int) -> int:
    return 2 * x + y


def col_index(a: int, b: int) -> int:
    return 2 * a + b


def is_exact_scalar(v) -> bool:
    return isinstance(v, Rational) and not isinstance(v, bool)


def as_scalar(v, exact: bool):
    """Coerce ``v`` to the requested backend."""
    if exact:
        if isinstance(v, Fraction):
            return v
        if isinstance(v, (int, np.integer)):
            return Fraction(int(v))
        if isinstance(v, Rational):
            return Fraction(v.numerator, v.denominator)
        raise TypeError(f"cannot use {v!r} as an exact scalar")
    return float(v)


def _normalize_table(p) -> np.ndarray:
    raw = np.asarray(p, dtype=object)
    if raw.shape != (4, 4):
        raw = raw.reshape(4, 4) if raw.size == 16 else raw
    if raw.shape != (4, 4):
        raise ValueError(f"a box needs 16 entries, got shape {raw.shape}")
    if all(is_exact_scalar(v) for v in raw.flat):
        out = np.empty((4, 4), dtype=object)
        for idx, v in np.ndenumerate(raw):
            out[idx] = as_scalar(v, exact=True)
        return out
    return np.array(raw, dtype=float)


@dataclass(frozen=True, eq=False)
class Box:
    """The 16 conditional probabilities P(ab|xy)."""

    p: np.ndarray

    def __post_init__(self):
        table = _normalize_table(self.p)
        table.flags.writeable = False
        object.__setattr__(self, "p", table)

    @property
    def exact(self) -> bool:
        return self.p.dtype == object

    def prob(self, a: int, b: int, x: int, y: int):
        return self.p[row_index(x, y), col_index(a, b)]

    def to_float(self) -> Box:
        return Box(np.array(self.p, dtype=float))

    def to_exact(self, max_denominator: int | None = None) -> Box:
        """Exact copy; floats are converted exactly unless a denominator cap is given."""
        if self.exact:
            return self
        if max_denominator is None:
            conv = [Fraction(float(v)) for v in self.p.flat]
        else:
            conv = [Fraction(float(v)).limit_denominator(max_denominator) for v in self.p.flat]
        return Box(np.array(conv, dtype=object).reshape(4, 4))

    def equals(self, other: Box, tol: float = 0.0) -> bool:
        if self.exact and other.exact and tol == 0:
            return all(u == v for u, v in zip(self.p.flat, other.p.flat))
        diff = np.abs(np.array(self.p, dtype=float) - np.array(other.p, dtype=float))
        return bool(np.max(diff) <= tol)

    def max_abs_diff(self, other: Box):
        d = self.p - other.p
        return max(abs(v) for v in d.flat)

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        rows = ", ".join("[" + ", ".join(str(v) for v in r) + "]" for r in self.p)
        return f"Box<{kind}>([{rows}])"


@dataclass(frozen=True)
class ValidityReport:
    normalized: bool
    in_range: bool
    nonsignaling: bool
    normalization_residual: object
    range_residual: object
    signaling_residual: object

    @property
    def valid(self) -> bool:
        return self.normalized and self.in_range and self.nonsignaling

    def as_dict(self) -> dict:
        return {
            "valid": self.valid,
            "normalized": self.normalized,
            "in_range": self.in_range,
            "nonsignaling": self.nonsignaling,
            "residuals": {
                "normalization": self.normalization_residual,
                "range": self.range_residual,
                "signaling": self.signaling_residual,
            },
        }


def default_tol(box: Box):
    return 0 if box.exact else DEFAULT_TOL


def alice_marginals(box: Box) -> np.ndarray:
    """``m[x, y, a] = sum_b P(ab|xy)``."""
    out = np.empty((2, 2, 2), dtype=box.p.dtype)
    for x, y in INPUTS:
        r = box.p[row_index(x, y)]
        out[x, y, 0] = r[0] + r[1]
        out[x, y, 1] = r[2] + r[3]
    return out


def bob_marginals(box: Box) -> np.ndarray:
    """``m[x, y, b] = sum_a P(ab|xy)``."""
    out = np.empty((2, 2, 2), dtype=box.p.dtype)
    for x, y in INPUTS:
        r = box.p[row_index(x, y)]
        out[x, y, 0] = r[0] + r[2]
        out[x, y, 1] = r[1] + r[3]
    return out


def validate(box: Box, tol=None) -> ValidityReport:
    """Check range, normalization and the nonsignaling conditions.

    Residuals are the worst violations; each flag is ``residual <= tol``.
    The exact backend defaults to ``tol = 0``.
    """
    if tol is None:
        tol = default_tol(box)
    p = box.p
    zero = p.flat[0] * 0
    norm_res = max((abs(sum(p[i]) - 1) for i in range(4)), default=zero)
    range_res = max(max(-v, v - 1, zero) for v in p.flat)
    am, bm = alice_marginals(box), bob_marginals(box)
    sig = []
    for x in BITS:
        sig.append(abs(am[x, 0, 0] - am[x, 1, 0]))
        sig.append(abs(am[x, 0, 1] - am[x, 1, 1]))
    for y in BITS:
        sig.append(abs(bm[0, y, 0] - bm[1, y, 0]))
        sig.append(abs(bm[0, y, 1] - bm[1, y, 1]))
    sig_res = max(sig)
    return ValidityReport(
        normalized=bool(norm_res <= tol),
        in_range=bool(range_res <= tol),
        nonsignaling=bool(sig_res <= tol),
        normalization_residual=norm_res,
        range_residual=range_res,
        signaling_residual=sig_res,
    )


def is_valid(box: Box, tol=None) -> bool:
    return validate(box, tol).valid


# --------------------------------------------------------------------------
# extremal boxes and mixtures
# --------------------------------------------------------------------------

_HALF = Fraction(1, 2)


def _check_bits(*bits):
    for b in bits:
        if b not in BITS:
            raise ValueError(f"expected a bit, got {b!r}")


@lru_cache(maxsize=None)
def pr_box(alpha: int = 0, beta: int = 0, gamma: int = 0) -> Box:
    """PR box: 1/2 where a^b = xy ^ alpha*x ^ beta*y ^ gamma, else 0."""
    _check_bits(alpha, beta, gamma)
    p = np.full((4, 4), Fraction(0), dtype=object)
    for x, y in INPUTS:
        for a, b in OUTPUTS:
            if a ^ b == (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma:
                p[row_index(x, y), col_index(a, b)] = _HALF
    return Box(p)


@lru_cache(maxsize=None)
def deterministic_box(alpha: int, beta: int, gamma: int, epsilon: int) -> Box:
    """Local deterministic box with a = alpha*x ^ beta and b = gamma*y ^ epsilon."""
    _check_bits(alpha, beta, gamma, epsilon)
    p = np.full((4, 4), Fraction(0), dtype=object)
    for x, y in INPUTS:
        a = (alpha & x) ^ beta
        b = (gamma & y) ^ epsilon
        p[row_index(x, y), col_index(a, b)] = Fraction(1)
    return Box(p)


def white_noise() -> Box:
    return Box(np.full((4, 4), Fraction(1, 4), dtype=object))


def all_pr_boxes() -> list[Box]:
    return [pr_box(*bits) for bits in itertools.product(BITS, repeat=3)]


def all_deterministic_boxes() -> list[Box]:
    return [deterministic_box(*bits) for bits in itertools.product(BITS, repeat=4)]


def extremal_boxes() -> list[Box]:
    """The 24 vertices of the nonsignaling polytope: 8 PR boxes then 16 deterministic."""
    return all_pr_boxes() + all_deterministic_boxes()


def mix(boxes: Sequence[Box], weights: Sequence, tol=None) -> Box:
    """Convex combination of ``boxes``."""
    if len(boxes) != len(weights) or not boxes:
        raise ValueError("boxes and weights must be nonempty and of equal length")
    exact = all(b.exact for b in boxes) and all(is_exact_scalar(w) for w in weights)
    ws = [as_scalar(w, exact) for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("weights must be nonnegative")
    total = sum(ws)
    if tol is None:
        tol = 0 if exact else DEFAULT_TOL
    if abs(total - 1) > tol:
        raise ValueError(f"weights sum to {total}, not 1")
    if exact:
        acc = np.full((4, 4), Fraction(0), dtype=object)
        for b, w in zip(boxes, ws):
            if w:
                acc = acc + b.p * w
        return Box(acc)
    acc = np.zeros((4, 4))
    for b, w in zip(boxes, ws):
        acc += np.asarray(b.p, dtype=float) * w
    return Box(acc)


def noisy_pr(p, alpha: int = 0, beta: int = 0, gamma: int = 0) -> Box:
    """``p * PR^{alpha beta gamma} + (1 - p) * white noise``."""
    if not 0 <= p <= 1:
        raise ValueError(f"PR fraction must lie in [0, 1], got {p}")
    return mix([pr_box(alpha, beta, gamma), white_noise()], [p, 1 - p])


# --------------------------------------------------------------------------
# correlators
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Correlators:
    e: np.ndarray  # e[x, y] = <A_x B_y>
    ma: np.ndarray  # ma[x] = <A_x>
    mb: np.ndarray  # mb[y] = <B_y>


def correlators(box: Box) -> Correlators:
    p = box.p
    e = np.empty((2, 2), dtype=p.dtype)
    for x, y in INPUTS:
        e[x, y] = p[row_index(x, y)] @ _PARITY
    ma = np.array([p[row_index(x, 0)] @ _SIGN_A for x in BITS], dtype=p.dtype)
    mb = np.array([p[row_index(0, y)] @ _SIGN_B for y in BITS], dtype=p.dtype)
    return Correlators(e, ma, mb)


def box_from_correlators(e, ma, mb) -> Box:
    """Inverse of :func:`correlators` for nonsignaling boxes.

    P(ab|xy) = (1 + (-1)^a ma[x] + (-1)^b mb[y] + (-1)^(a^b) e[x, y]) / 4.
    """
    vals = list(np.ravel(e)) + list(ma) + list(mb)
    exact = all(is_exact_scalar(v) for v in vals)
    quarter = Fraction(1, 4) if exact else 0.25
    p = np.empty((4, 4), dtype=object if exact else float)
    for x, y in INPUTS:
        for a, b in OUTPUTS:
            sa, sb = (-1) ** a, (-1) ** b
            p[row_index(x, y), col_index(a, b)] = quarter * (
                1 + sa * ma[x] + sb * mb[y] + sa * sb * e[x][y]
            )
    return Box(p)


# --------------------------------------------------------------------------
# local reversible operations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalOp:
    """One party's relabeling: input x -> x^flip, output o -> o ^ alpha*x ^ beta.

    Acting on a box, the new response is ``P'(o|x) = P(o ^ alpha*x ^ beta | x ^ flip)``.
    """

    flip: int = 0
    alpha: int = 0
    beta: int = 0

    def __post_init__(self):
        _check_bits(self.flip, self.alpha, self.beta)

    def then(self, other: LocalOp) -> LocalOp:
        """The operation ``other after self``."""
        return LocalOp(
            self.flip ^ other.flip,
            self.alpha ^ other.alpha,
            self.beta ^ other.beta ^ (self.alpha & other.flip),
        )

    def inverse(self) -> LocalOp:
        return LocalOp(self.flip, self.alpha, self.beta ^ (self.alpha & self.flip))

    def source(self, o: int, x: int) -> tuple[int, int]:
        """(old output, old input) that feeds new (o, x)."""
        return o ^ (self.alpha & x) ^ self.beta, x ^ self.flip


@dataclass(frozen=True)
class LROTransform:
    alice: LocalOp = LocalOp()
    bob: LocalOp = LocalOp()

    def compose(self, first: LROTransform) -> LROTransform:
        """``self o first``: apply ``first``, then ``self``."""
        return LROTransform(first.alice.then(self.alice), first.bob.then(self.bob))

    def inverse(self) -> LROTransform:
        return LROTransform(self.alice.inverse(), self.bob.inverse())

    @property
    def bits(self) -> tuple[int, ...]:
        a, b = self.alice, self.bob
        return (a.flip, a.alpha, a.beta, b.flip, b.alpha, b.beta)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> LROTransform:
        f, al, be, g, ga, ep = bits
        return cls(LocalOp(f, al, be), LocalOp(g, ga, ep))


IDENTITY = LROTransform()


@lru_cache(maxsize=None)
def lro_group() -> tuple[LROTransform, ...]:
    """All 64 local relabelings."""
    return tuple(LROTransform.from_bits(bits) for bits in itertools.product(BITS, repeat=6))


@lru_cache(maxsize=None)
def _permutation(t: LROTransform) -> tuple[np.ndarray, np.ndarray]:
    rows = np.empty(16, dtype=int)
    cols = np.empty(16, dtype=int)
    k = 0
    for x, y in INPUTS:
        for a, b in OUTPUTS:
            a0, x0 = t.alice.source(a, x)
            b0, y0 = t.bob.source(b, y)
            rows[k], cols[k] = row_index(x0, y0), col_index(a0, b0)
            k += 1
    return rows, cols


def apply_lro(box: Box, t: LROTransform) -> Box:
    rows, cols = _permutation(t)
    return Box(box.p[rows, cols].reshape(4, 4))


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def sample_ns_box(seed: int, exact: bool = True, max_terms: int = 5, max_weight: int = 10) -> Box:
    """Pseudo-random nonsignaling box: a sparse mixture of the 24 vertices.

    Between 1 and ``max_terms`` vertices are drawn, with integer weights in
    ``[1, max_weight]`` normalized to sum to one.  Sparse mixtures land on
    both sides of the CHSH facets and often on faces of the polytope, which
    is what the locality sweeps need.
    """
    rng = np.random.default_rng(seed)
    verts = extremal_boxes()
    k = int(rng.integers(1, max_terms + 1))
    picks = rng.choice(len(verts), size=k, replace=False)
    raw = [int(w) for w in rng.integers(1, max_weight + 1, size=k)]
    total = sum(raw)
    weights = [Fraction(w, total) for w in raw]
    box = mix([verts[i] for i in picks], weights)
    return box if exact else box.to_float()


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def scalar_to_json(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return float(v)


def scalar_from_json(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"bad scalar {v!r}")
    return float(v)


def box_to_dict(box: Box) -> dict:
    return {"format": FORMAT, "p": [[scalar_to_json(v) for v in row] for row in box.p]}


def box_from_dict(data: dict) -> Box:
    if not isinstance(data, dict) or data.get("format") != FORMAT:
        raise ValueError(f"expected an object with format {FORMAT!r}")
    rows = data.get("p")
    if not isinstance(rows, list) or len(rows) != 4 or any(
        not isinstance(r, list) or len(r) != 4 for r in rows
    ):
        raise ValueError("'p' must be a 4x4 array")
    vals = [scalar_from_json(v) for r in rows for v in r]
    if not all(isinstance(v, Fraction) for v in vals):
        vals = [float(v) for v in vals]
    return Box(np.array(vals, dtype=object).reshape(4, 4))


def dumps_box(box: Box) -> str:
    return json.dumps(box_to_dict(box))


def loads_box(text: str) -> Box:
    return box_from_dict(json.loads(text))
