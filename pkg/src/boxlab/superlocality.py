"""Local hidden-variable models with a bounded number of shared values.

Includes the exact dimension-four model for noisy PR boxes, the symbolic
proof that two shared values never suffice for them, a numerical multistart
search for generic boxes, and the entropic cost of the five-symbol shared
source that drives the dimension-four protocol.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import sympy as sp
from scipy.optimize import least_squares

from .box import (
    INPUTS,
    LROTransform,
    Box,
    apply_lro,
    as_scalar,
    correlators,
    is_exact_scalar,
    lro_group,
    validate,
)

FOUND_THRESHOLD = 1e-12


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LhvModel:
    """d shared values; pa[l][x] = P_A,l(a=0|x) and pb[l][y] = P_B,l(b=0|y)."""

    d: int
    p_lambda: np.ndarray
    pa: np.ndarray
    pb: np.ndarray

    def __post_init__(self):
        vals = list(np.ravel(self.p_lambda)) + list(np.ravel(self.pa)) + list(np.ravel(self.pb))
        exact = all(is_exact_scalar(v) for v in vals)
        dtype = object if exact else float

        def conv(a, shape):
            arr = np.array([as_scalar(v, exact) for v in np.ravel(a)], dtype=dtype).reshape(shape)
            arr.flags.writeable = False
            return arr

        d = int(self.d)
        if d < 1:
            raise ValueError("d must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p_lambda", conv(self.p_lambda, (d,)))
        object.__setattr__(self, "pa", conv(self.pa, (d, 2)))
        object.__setattr__(self, "pb", conv(self.pb, (d, 2)))
        tol = 0 if exact else 1e-9
        if any(v < -tol for v in self.p_lambda) or abs(sum(self.p_lambda) - 1) > tol:
            raise ValueError("p_lambda must be a probability distribution")
        for v in list(self.pa.flat) + list(self.pb.flat):
            if v < -tol or v > 1 + tol:
                raise ValueError("response probabilities must lie in [0, 1]")

    @property
    def exact(self) -> bool:
        return self.p_lambda.dtype == object

    def as_dict(self) -> dict:
        from .box import scalar_to_json

        return {
            "d": self.d,
            "p_lambda": [scalar_to_json(v) for v in self.p_lambda],
            "pa": [[scalar_to_json(v) for v in row] for row in self.pa],
            "pb": [[scalar_to_json(v) for v in row] for row in self.pb],
        }

    @classmethod
    def from_dict(cls, data: dict) -> LhvModel:
        from .box import scalar_from_json

        conv = lambda rows: [[scalar_from_json(v) for v in r] for r in rows]  # noqa: E731
        return cls(
            data["d"],
            [scalar_from_json(v) for v in data["p_lambda"]],
            conv(data["pa"]),
            conv(data["pb"]),
        )


def evaluate_lhv(m: LhvModel) -> Box:
    """P(ab|xy) = sum_l p_l P_A,l(a|x) P_B,l(b|y)."""
    one = Fraction(1) if m.exact else 1.0
    p = np.empty((4, 4), dtype=object if m.exact else float)
    for x, y in INPUTS:
        for a in (0, 1):
            for b in (0, 1):
                acc = 0 * one
                for lam in range(m.d):
                    pa = m.pa[lam, x] if a == 0 else one - m.pa[lam, x]
                    pb = m.pb[lam, y] if b == 0 else one - m.pb[lam, y]
                    acc += m.p_lambda[lam] * pa * pb
                p[2 * x + y, 2 * a + b] = acc
    return Box(p)


def transform_model(m: LhvModel, t: LROTransform) -> LhvModel:
    """Relabel a model so that it evaluates to ``apply_lro(evaluate_lhv(m), t)``."""
    one = Fraction(1) if m.exact else 1.0

    def relabel(resp, op):
        out = []
        for row in resp:
            new = []
            for x in (0, 1):
                o_src, x_src = op.source(0, x)
                v = row[x_src]
                new.append(v if o_src == 0 else one - v)
            out.append(new)
        return out

    return LhvModel(m.d, list(m.p_lambda), relabel(m.pa, t.alice), relabel(m.pb, t.bob))


def pad_model(m: LhvModel, d: int) -> LhvModel:
    """Same box with ``d - m.d`` extra zero-weight shared values."""
    if d < m.d:
        raise ValueError("cannot shrink a model")
    zero = Fraction(0) if m.exact else 0.0
    half = Fraction(1, 2) if m.exact else 0.5
    extra = d - m.d
    return LhvModel(
        d,
        list(m.p_lambda) + [zero] * extra,
        [list(r) for r in m.pa] + [[half, half]] * extra,
        [list(r) for r in m.pb] + [[half, half]] * extra,
    )


def model_from_decomposition(dec) -> LhvModel:
    """The d = 16 deterministic model behind a :class:`~boxlab.local.LocalDecomposition`."""
    from .local import DETERMINISTIC_LABELS

    pl, pa, pb = [], [], []
    for alpha, beta, gamma, eps in DETERMINISTIC_LABELS:
        pl.append(dec.weights.get((alpha, beta, gamma, eps), Fraction(0)))
        pa.append([Fraction(v) for v in _det_response(alpha, beta)])
        pb.append([Fraction(v) for v in _det_response(gamma, eps)])
    return LhvModel(16, pl, pa, pb)


# single-party deterministic strategy o = alpha*x ^ beta as P(o=0|x) for x = 0, 1
def _det_response(alpha: int, beta: int) -> tuple[int, int]:
    return tuple(1 if ((alpha & x) ^ beta) == 0 else 0 for x in (0, 1))


def dim4_decomposition_noisy_pr(p) -> LhvModel:
    """Four-valued model for p*PR + (1-p)*noise, valid for 0 <= p <= 1/2.

    Alice mixes single-party deterministic strategies D^{alpha beta}
    (a = alpha*x ^ beta) as (D^{u} + 2p D^{v} + (1-2p) D^{w}) / 2 with
    (u, v, w) running over
    (00,10,01), (00,11,01), (01,11,00), (01,10,00);
    Bob answers deterministically with D^{00}, D^{10}, D^{01}, D^{11}.
    """
    if not 0 <= p <= Fraction(1, 2):
        raise ValueError(f"the four-valued model needs 0 <= p <= 1/2, got {p}")
    exact = is_exact_scalar(p)
    p = as_scalar(p, exact)
    one = as_scalar(1, exact)
    half = one / 2
    plans = [
        ((0, 0), (1, 0), (0, 1)),
        ((0, 0), (1, 1), (0, 1)),
        ((0, 1), (1, 1), (0, 0)),
        ((0, 1), (1, 0), (0, 0)),
    ]
    pa = []
    for u, v, w in plans:
        ru, rv, rw = _det_response(*u), _det_response(*v), _det_response(*w)
        pa.append([(ru[x] + 2 * p * rv[x] + (one - 2 * p) * rw[x]) * half for x in (0, 1)])
    pb = [list(_det_response(*s)) for s in ((0, 0), (1, 0), (0, 1), (1, 1))]
    if exact:
        pb = [[Fraction(v) for v in r] for r in pb]
    else:
        pb = [[float(v) for v in r] for r in pb]
    return LhvModel(4, [one / 4] * 4, pa, pb)


def canonical_noisy_pr(box: Box, tol=None) -> tuple[object, LROTransform] | None:
    """Find (p, t) with ``apply_lro(box, t) == noisy_pr(p, 0, 0, 0)``, if any.

    Returns the first transform in group order; ``None`` if the box is not a
    relabeled noisy PR box (within ``tol``; exact boxes use 0).
    """
    if tol is None:
        tol = 0 if box.exact else 1e-9
    for t in lro_group():
        c = correlators(apply_lro(box, t))
        q = c.e[0, 0]
        if max(abs(v) for v in list(c.ma) + list(c.mb)) > tol:
            return None  # marginals are LRO invariant up to sign
        if (
            abs(c.e[0, 1] - q) <= tol
            and abs(c.e[1, 0] - q) <= tol
            and abs(c.e[1, 1] + q) <= tol
            and q >= -tol
        ):
            return q, t
    return None


# --------------------------------------------------------------------------
# exact two-valued infeasibility for noisy PR boxes
# --------------------------------------------------------------------------


@dataclass
class TraceStep:
    label: str
    statement: str
    lhs: sp.Expr
    rhs: sp.Expr
    # "marginal" / "correlation": equations the box imposes on the model;
    # "derived": difference of two earlier equations; "forced": value pinned on the model;
    # "contradiction": the final clash
    kind: str
    check: Callable[[], bool] | None = field(default=None, repr=False)

    def residual(self, subs: dict) -> sp.Expr:
        return sp.simplify((self.lhs - self.rhs).subs(subs))


@dataclass
class InfeasibilityTrace:
    p: sp.Rational
    steps: list[TraceStep]
    forced: dict
    contradiction_residual: sp.Expr
    groebner_basis: list

    def verify(self) -> bool:
        """Re-check every step.

        Derived and forced steps are checked against the algebra that
        produces them.  Every marginal, derived or forced equality whose
        unknowns are all pinned by the forced values must then hold
        identically after substitution, and the contradiction step must
        leave exactly the residual ``p``.  Last, the Groebner basis of the
        full system must be {1}: no assignment of the nine unknowns, real or
        complex, solves it.  That covers the degenerate branches (a shared
        value with zero weight, or a response that ignores the input) which
        the elimination divides through.
        """
        pinned = set(self.forced) | {sp.Symbol("q0", nonnegative=True)}
        for st in self.steps:
            if st.check is not None and not st.check():
                return False
            if st.kind in ("marginal", "derived", "forced"):
                expr = (st.lhs - st.rhs).subs(self.forced)
                if expr.free_symbols <= pinned and sp.simplify(expr) != 0:
                    return False
            elif st.kind == "contradiction":
                if sp.simplify(st.residual(self.forced) + self.p) != 0:
                    return False
        return sp.simplify(self.contradiction_residual - self.p) == 0 and list(self.groebner_basis) == [1]

    def lines(self) -> list[str]:
        return [f"[{st.label}] {st.statement}" for st in self.steps]


def noisy_pr_dim2_witness(p) -> InfeasibilityTrace:
    """Symbolic proof that p*PR + (1-p)*noise has no model with two shared values, p > 0.

    Unknowns: weights q0, q1 and responses A_l(x) = P_A,l(0|x),
    B_l(y) = P_B,l(0|y).  The marginal and P(00|xy) equations are written
    out; subtracting pairs of them forces A_l(0) = B_l(0) = 1/2 for both l;
    substituting into the P(00|00) equation gives q0 + q1 = 1 + p, against
    normalization.  The responses to inputs x = 1 and y = 1 never enter that
    equation, so they are left free.
    """
    if isinstance(p, Fraction):
        p = sp.Rational(p.numerator, p.denominator)
    else:
        p = sp.nsimplify(p, rational=True)
    if not (0 < p <= 1):
        raise ValueError("the witness needs 0 < p <= 1 (p = 0 is white noise, simulable with one value)")
    q0, q1 = sp.symbols("q0 q1", nonnegative=True)
    A = {(lam, x): sp.Symbol(f"A{lam}({x})") for lam in (0, 1) for x in (0, 1)}
    B = {(lam, y): sp.Symbol(f"B{lam}({y})") for lam in (0, 1) for y in (0, 1)}
    half = sp.Rational(1, 2)

    steps: list[TraceStep] = []
    marg = {}
    for name, R in (("A", A), ("B", B)):
        for i in (0, 1):
            lhs = R[0, i] * q0 + R[1, i] * q1
            marg[name, i] = lhs
            steps.append(TraceStep(f"marginal {name}({i})", f"{lhs} = 1/2", lhs, half, "marginal"))
    corr = {}
    for x, y in INPUTS:
        lhs = A[0, x] * B[0, y] * q0 + A[1, x] * B[1, y] * q1
        rhs = (1 - p) / 4 if x * y else (1 + p) / 4
        corr[x, y] = (lhs, rhs)
        steps.append(TraceStep(f"P(00|{x}{y})", f"{lhs} = {rhs}", lhs, rhs, "correlation"))

    forced = {q1: 1 - q0}
    # (forced party, other party, correlation rows differing only in the other party's input)
    plan = [("B", B, A, ((0, 0), (1, 0))), ("A", A, B, ((0, 0), (0, 1)))]
    for name, R_t, R_o, (c0, c1) in plan:
        other = "A" if name == "B" else "B"
        diff_m = (R_o[0, 0] - R_o[0, 1]) * q0 + (R_o[1, 0] - R_o[1, 1]) * q1
        steps.append(
            TraceStep(
                f"{other}(0) - {other}(1) marginals",
                f"{diff_m} = 0",
                diff_m,
                sp.Integer(0),
                "derived",
                check=lambda d=diff_m, o=other: sp.expand(d - (marg[o, 0] - marg[o, 1])) == 0,
            )
        )
        diff_c = (R_o[0, 0] - R_o[0, 1]) * R_t[0, 0] * q0 + (R_o[1, 0] - R_o[1, 1]) * R_t[1, 0] * q1
        c_rhs = corr[c0][1] - corr[c1][1]
        steps.append(
            TraceStep(
                f"P(00|{c0[0]}{c0[1]}) - P(00|{c1[0]}{c1[1]})",
                f"{diff_c} = {c_rhs}",
                diff_c,
                c_rhs,
                "derived",
                check=lambda d=diff_c, a=c0, b=c1, r=c_rhs: (
                    sp.expand(d - (corr[a][0] - corr[b][0])) == 0 and r == 0
                ),
            )
        )
        # diff_c - R_t,1(0) * diff_m factors as (R_o,0(0) - R_o,0(1)) (R_t,0(0) - R_t,1(0)) q0
        factored = (R_o[0, 0] - R_o[0, 1]) * (R_t[0, 0] - R_t[1, 0]) * q0
        steps.append(
            TraceStep(
                f"{name}(0) does not depend on the shared value",
                f"{R_t[0, 0]} = {R_t[1, 0]}",
                R_t[0, 0],
                R_t[1, 0],
                "forced",
                check=lambda dc=diff_c, dm=diff_m, r=R_t[1, 0], f=factored: sp.expand(dc - r * dm - f) == 0,
            )
        )
        pinned_marg = marg[name, 0].subs({R_t[1, 0]: R_t[0, 0], q1: 1 - q0})
        steps.append(
            TraceStep(
                f"{name}(0) value",
                f"{R_t[0, 0]} = {R_t[1, 0]} = 1/2",
                R_t[0, 0],
                half,
                "forced",
                check=lambda e=pinned_marg, v=R_t[0, 0]: sp.solve(sp.Eq(e, half), v) == [half],
            )
        )
        forced[R_t[0, 0]] = half
        forced[R_t[1, 0]] = half

    first_lhs, first_rhs = corr[0, 0]
    sub = {k: v for k, v in forced.items() if k is not q1}
    reduced = sp.expand(first_lhs.subs(sub) * 4)
    steps.append(
        TraceStep(
            "substitute into P(00|00)",
            f"{reduced} = {sp.expand(first_rhs * 4)}",
            reduced,
            sp.expand(first_rhs * 4),
            "contradiction",
        )
    )
    residual = sp.simplify(sp.expand(first_rhs * 4) - reduced.subs(q1, 1 - q0))
    steps.append(
        TraceStep(
            "contradiction",
            f"q0 + q1 = {1 + p}, but q0 + q1 = 1 (residual {residual})",
            q0 + q1,
            1 + p,
            "contradiction",
        )
    )

    eqs = [sp.expand((st.lhs - st.rhs).subs(q1, 1 - q0)) for st in steps if st.kind in ("marginal", "correlation")]
    gens = [q0] + [A[k] for k in sorted(A)] + [B[k] for k in sorted(B)]
    G = sp.groebner(eqs, *gens, order="grevlex")
    return InfeasibilityTrace(p, steps, forced, residual, list(G.exprs))


# --------------------------------------------------------------------------
# numerical search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchOutcome:
    """Result of :func:`search_lhv`.

    ``found`` means a model reproduces the box with squared residual at most
    1e-12.  A negative outcome is evidence from a nonconvex search, not a
    proof that no model of dimension ``d`` exists.
    """

    found: bool
    d: int
    residual: float  # best squared residual seen
    budget: int
    restarts: int
    seed: int
    model: LhvModel | None

    @property
    def verdict(self) -> str:
        if self.found:
            return "found"
        return "not found (numerical evidence only; nonconvex search cannot certify infeasibility)"

    def as_dict(self) -> dict:
        out = {
            "found": self.found,
            "d": self.d,
            "best_residual": self.residual,
            "budget": self.budget,
            "restarts": self.restarts,
            "seed": self.seed,
            "verdict": self.verdict,
        }
        if self.model is not None:
            out["model"] = self.model.as_dict()
        return out


def _unpack(theta: np.ndarray, d: int):
    v = theta[:d]
    u = theta[d : 3 * d].reshape(d, 2)
    w = theta[3 * d :].reshape(d, 2)
    return v, u, w


def _model_arrays(theta: np.ndarray, d: int):
    v, u, w = _unpack(theta, d)
    S = v @ v
    pl = v * v / S
    pa = np.sin(u) ** 2
    pb = np.sin(w) ** 2
    return v, u, w, S, pl, pa, pb


def _responses(pa: np.ndarray) -> np.ndarray:
    """r[l, x, o] = P(o|x) for o in {0, 1}."""
    return np.stack([pa, 1 - pa], axis=-1)


def _residual_and_jac(theta: np.ndarray, d: int, target: np.ndarray):
    v, u, w, S, pl, pa, pb = _model_arrays(theta, d)
    RA, RB = _responses(pa), _responses(pb)
    # prod[l, x, y, a, b]
    prod = RA[:, :, None, :, None] * RB[:, None, :, None, :]
    P = np.einsum("l,lxyab->xyab", pl, prod)
    res = P.reshape(16) - target

    J = np.zeros((16, 5 * d))
    J[:, :d] = ((2 * v / S)[:, None] * (prod.reshape(d, 16) - P.reshape(16)[None, :])).T
    sgn = np.array([1.0, -1.0])
    dA = np.sin(2 * u)  # d pa / d u
    dB = np.sin(2 * w)
    for lam in range(d):
        for x in (0, 1):
            g = np.zeros((2, 2, 2, 2))
            g[x] = pl[lam] * dA[lam, x] * sgn[None, :, None] * RB[lam][:, None, :]
            J[:, d + 2 * lam + x] = g.reshape(16)
        for y in (0, 1):
            g = np.zeros((2, 2, 2, 2))
            g[:, y] = pl[lam] * dB[lam, y] * RA[lam][:, :, None] * sgn[None, None, :]
            J[:, 3 * d + 2 * lam + y] = g.reshape(16)
    return res, J


def _theta_to_model(theta: np.ndarray, d: int) -> LhvModel:
    *_, pl, pa, pb = _model_arrays(theta, d)
    return LhvModel(d, pl, pa, pb)


def _one_restart(target: np.ndarray, d: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    theta0 = np.concatenate(
        [rng.uniform(0.3, 1.0, size=d), rng.uniform(0, np.pi / 2, size=4 * d)]
    )
    cache = {}

    def fun(th):
        key = th.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = _residual_and_jac(th, d, target)
        return cache[key][0]

    def jac(th):
        fun(th)
        return cache[th.tobytes()][1]

    sol = least_squares(
        fun, theta0, jac=jac, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400
    )
    r = sol.fun
    return float(r @ r), sol.x


def search_lhv(box: Box, d: int, budget: int = 200, seed: int = 0) -> SearchOutcome:
    """Multistart least squares for a model with ``d`` shared values.

    Probabilities are parametrized without constraints: weights as
    normalized squares, responses as ``sin^2``.  Restart ``k`` draws its
    starting point from child ``k`` of ``SeedSequence(seed)``, so outcomes
    depend only on (box, d, budget, seed).  Stops at the first restart whose
    squared residual is at most 1e-12.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if budget < 1:
        raise ValueError("budget must be positive")
    if not validate(box).valid:
        raise ValueError("search_lhv needs a valid nonsignaling box")
    target = np.asarray(box.p, dtype=float).reshape(16)
    best = (math.inf, None)
    seqs = np.random.SeedSequence(seed).spawn(budget)
    for k, seq in enumerate(seqs):
        res, theta = _one_restart(target, d, seq)
        if res < best[0]:
            best = (res, theta)
        if res <= FOUND_THRESHOLD:
            return SearchOutcome(True, d, res, budget, k + 1, seed, _theta_to_model(theta, d))
    model = _theta_to_model(best[1], d) if best[1] is not None else None
    return SearchOutcome(False, d, best[0], budget, budget, seed, model)


def squared_residual(m: LhvModel, box: Box) -> float:
    diff = np.asarray(evaluate_lhv(m).p, dtype=float) - np.asarray(box.p, dtype=float)
    return float(np.sum(diff**2))


# --------------------------------------------------------------------------
# entropic cost
# --------------------------------------------------------------------------


def _xlog2x(v: float) -> float:
    return 0.0 if v == 0 else v * math.log2(v)


def entropic_cost(x: float) -> float:
    """Shannon entropy (bits) of the source (1-2x, x/2, x/2, x/2, x/2), 0 <= x <= 1/2."""
    if not 0 <= x <= 0.5:
        raise ValueError(f"x must lie in [0, 1/2], got {x}")
    return 0.0 - _xlog2x(1 - 2 * x) - 4 * _xlog2x(x / 2)


def entropic_threshold(tol: float = 1e-10, bracket: tuple[float, float] = (0.0, 0.4)) -> float:
    """Root of entropic_cost(x) = 1 by bisection.

    The cost increases on [0, 0.4] (from 0 to log2 5) and stays above 2 on
    [0.4, 0.5], so the root in (0, 1/2) is unique and any bracket around it
    converges to the same point.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = bracket
    flo, fhi = entropic_cost(lo) - 1, entropic_cost(hi) - 1
    if flo * fhi > 0:
        raise ValueError(f"bracket {bracket} does not straddle the root")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = entropic_cost(mid) - 1
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
