"""Two-qubit states in Bloch form and Born-rule boxes.

A state is kept as (r, s, C) with

    rho = (I + r.sigma x I + I x s.sigma + sum_ij C_ij sigma_i x sigma_j) / 4.

The 4x4 matrix is only built by :func:`density_matrix`, which together with
:func:`born_box_trace` is an independent route used to check
:func:`born_box`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .box import INPUTS, OUTPUTS, Box, col_index, row_index

POSITIVITY_TOL = 1e-10
UNIT_TOL = 1e-12

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    r: np.ndarray
    s: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name, shape in (("r", (3,)), ("s", (3,)), ("C", (3, 3))):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def purity_sum(self) -> float:
        """|r|^2 + |s|^2 + ||C||_F^2; at most 3, equal to 3 for pure states."""
        return float(self.r @ self.r + self.s @ self.s + np.sum(self.C**2))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(density_matrix(self))[0])

    def is_positive(self, tol: float = POSITIVITY_TOL) -> bool:
        return self.min_eigenvalue() >= -tol


def density_matrix(state: TwoQubitState) -> np.ndarray:
    rho = np.kron(I2, I2).astype(complex)
    for i in range(3):
        rho += state.r[i] * np.kron(PAULI[i], I2)
        rho += state.s[i] * np.kron(I2, PAULI[i])
        for j in range(3):
            rho += state.C[i, j] * np.kron(PAULI[i], PAULI[j])
    return rho / 4


def from_density_matrix(rho: np.ndarray) -> TwoQubitState:
    """Bloch coordinates of a 4x4 density matrix via Pauli expectations."""
    rho = np.asarray(rho, dtype=complex)
    r = [np.trace(rho @ np.kron(PAULI[i], I2)).real for i in range(3)]
    s = [np.trace(rho @ np.kron(I2, PAULI[i])).real for i in range(3)]
    C = [[np.trace(rho @ np.kron(PAULI[i], PAULI[j])).real for j in range(3)] for i in range(3)]
    return TwoQubitState(r, s, C)


def mix_states(states, weights) -> TwoQubitState:
    w = np.asarray(weights, dtype=float)
    return TwoQubitState(
        sum(wi * st.r for wi, st in zip(w, states)),
        sum(wi * st.s for wi, st in zip(w, states)),
        sum(wi * st.C for wi, st in zip(w, states)),
    )


# --------------------------------------------------------------------------
# named families
# --------------------------------------------------------------------------


def pure_family(theta: float) -> TwoQubitState:
    """cos(theta)|00> + sin(theta)|11>, 0 <= theta <= pi/4."""
    if not 0 <= theta <= math.pi / 4 + 1e-15:
        raise ValueError(f"theta must lie in [0, pi/4], got {theta}")
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    return TwoQubitState([0, 0, c2], [0, 0, c2], np.diag([s2, -s2, 1.0]))


def werner(W: float) -> TwoQubitState:
    """W |psi+><psi+| + (1 - W) I/4 with |psi+> = (|00> + |11>)/sqrt(2)."""
    if not 0 <= W <= 1:
        raise ValueError(f"W must lie in [0, 1], got {W}")
    return TwoQubitState(np.zeros(3), np.zeros(3), np.diag([W, -W, W]))


def concurrence_pure(theta: float) -> float:
    if not 0 <= theta <= math.pi / 4 + 1e-15:
        raise ValueError(f"theta must lie in [0, pi/4], got {theta}")
    return math.sin(2 * theta)


def classical_quantum(weights, bob_blochs, alice_basis=None) -> TwoQubitState:
    """sum_j p_j |j><j| x rho_j for j in {0, 1}.

    ``bob_blochs`` are the Bloch vectors of rho_0, rho_1.  ``alice_basis``
    is the Bloch direction n of |0> (|1> is -n); default is z.
    """
    p0, p1 = weights
    s0, s1 = (np.asarray(v, dtype=float) for v in bob_blochs)
    n = np.array([0.0, 0.0, 1.0]) if alice_basis is None else unit(alice_basis)
    return TwoQubitState((p0 - p1) * n, p0 * s0 + p1 * s1, np.outer(n, p0 * s0 - p1 * s1))


# --------------------------------------------------------------------------
# measurements and boxes
# --------------------------------------------------------------------------


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector has no direction")
    return v / n


def _check_direction(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > UNIT_TOL:
        raise ValueError(f"measurement direction must be a unit 3-vector, got {v}")
    return v


def canonical_measurements() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """A_0 = sigma_x, A_1 = sigma_y, B_0 = (sigma_x - sigma_y)/sqrt2, B_1 = (sigma_x + sigma_y)/sqrt2."""
    h = 1 / math.sqrt(2)
    return (
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([h, -h, 0.0]),
        np.array([h, h, 0.0]),
    )


def born_box(state: TwoQubitState, a0, a1, b0, b1, check: bool = True) -> Box:
    """Box of spin measurements along a_x (Alice) and b_y (Bob).

    P(ab|xy) = [1 + (-1)^a a_x.r + (-1)^b b_y.s + (-1)^(a^b) a_x.C.b_y] / 4
    """
    if check and not state.is_positive():
        raise ValueError(f"state is not positive (min eigenvalue {state.min_eigenvalue():.3g})")
    A = [_check_direction(a0), _check_direction(a1)]
    B = [_check_direction(b0), _check_direction(b1)]
    p = np.empty((4, 4))
    for x, y in INPUTS:
        ar, bs, corr = A[x] @ state.r, B[y] @ state.s, A[x] @ state.C @ B[y]
        for a, b in OUTPUTS:
            sa, sb = (-1) ** a, (-1) ** b
            p[row_index(x, y), col_index(a, b)] = 0.25 * (1 + sa * ar + sb * bs + sa * sb * corr)
    return Box(p)


def projector(direction, outcome: int) -> np.ndarray:
    """(I + (-1)^outcome n.sigma) / 2."""
    n = np.asarray(direction, dtype=float)
    return 0.5 * (I2 + (-1) ** outcome * np.einsum("i,ijk->jk", n, PAULI))


def born_box_trace(rho: np.ndarray, a0, a1, b0, b1) -> Box:
    """Born rule by explicit trace with projectors; the oracle for :func:`born_box`."""
    A, B = [a0, a1], [b0, b1]
    p = np.empty((4, 4))
    for x, y in INPUTS:
        for a, b in OUTPUTS:
            M = np.kron(projector(A[x], a), projector(B[y], b))
            p[row_index(x, y), col_index(a, b)] = np.trace(rho @ M).real
    return Box(p)


# --------------------------------------------------------------------------
# random sampling
# --------------------------------------------------------------------------


def random_direction(rng: np.random.Generator) -> np.ndarray:
    return unit(rng.normal(size=3))


def random_state(rng: np.random.Generator, depolarize: float | None = None) -> TwoQubitState:
    """Random pure two-qubit state, optionally mixed with white noise.

    ``depolarize`` is the noise weight; by default it is drawn uniformly from [0, 1).
    """
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    q = rng.uniform() if depolarize is None else depolarize
    rho = (1 - q) * rho + q * np.eye(4) / 4
    return from_density_matrix(rho)


def random_classical_quantum(rng: np.random.Generator) -> TwoQubitState:
    """Random classical-quantum state with Alice's classical basis along a random axis."""
    p0 = rng.uniform()
    blochs = [random_direction(rng) * rng.uniform() ** (1 / 3) for _ in range(2)]
    return classical_quantum((p0, 1 - p0), blochs, alice_basis=random_direction(rng))
