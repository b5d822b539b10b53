"""
--------------------------------------------------------
 Qutrit reference model
--------------------------------------------------------
Gell-Mann algebra, generalized Bloch coordinates for qutrit
states and effects, exact membership predicates and Haar
sampling of pure states.

Conventions:
 - state vector  s = (1, s_1, ..., s_8),  s_a = Tr[rho lambda_a]
 - effect vector e = (e_0, ..., e_8),     e_0 = Tr[Q]/3, e_a = Tr[Q lambda_a]/2
 - unit effect   u = (1, 0, ..., 0),  probability rule p = s . e
--------------------------------------------------------
"""

from __future__ import annotations
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import qr

from solver.errors import ArgumentError, DomainError, NumericalError

# ---------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------
HermitianOp3 = NDArray[np.complex128]        # 3x3 complex matrix
BlochStateVector = NDArray[np.float64]       # 9 components, s_0 = 1
BlochEffectVector = NDArray[np.float64]      # 9 components
StructureTensor = NDArray[np.float64]        # 8x8x8, fully symmetric

DIM = 3
BLOCH_DIM = 9
DEFAULT_TOL = 1e-9
PURE_NORM = 2.0 / np.sqrt(3.0)               # ||s~|| of every pure state
UNIT_EFFECT = np.eye(BLOCH_DIM)[0]


# ---------------------------------------------------------------------
# Gell-Mann algebra
# ---------------------------------------------------------------------
@lru_cache(maxsize=1)
def _gell_mann_stack() -> NDArray[np.complex128]:
    lam = np.zeros((BLOCH_DIM, DIM, DIM), dtype=np.complex128)
    lam[0] = np.eye(DIM)
    lam[1][0, 1] = lam[1][1, 0] = 1
    lam[2][0, 1], lam[2][1, 0] = -1j, 1j
    lam[3][0, 0], lam[3][1, 1] = 1, -1
    lam[4][0, 2] = lam[4][2, 0] = 1
    lam[5][0, 2], lam[5][2, 0] = -1j, 1j
    lam[6][1, 2] = lam[6][2, 1] = 1
    lam[7][1, 2], lam[7][2, 1] = -1j, 1j
    lam[8] = np.diag([1.0, 1.0, -2.0]) / np.sqrt(3.0)
    lam.setflags(write=False)
    return lam


def gell_mann(index: int) -> HermitianOp3:
    """Gell-Mann matrix lambda_index; index 0 is the identity."""
    if not isinstance(index, (int, np.integer)) or not 0 <= index < BLOCH_DIM:
        raise ArgumentError(f"Gell-Mann index must be in 0..8, got {index!r}")
    return _gell_mann_stack()[index].copy()


def gell_mann_basis() -> NDArray[np.complex128]:
    """All nine operators (I, lambda_1..lambda_8) stacked as a (9, 3, 3) array."""
    return _gell_mann_stack().copy()


@lru_cache(maxsize=1)
def _structure_tensor() -> StructureTensor:
    lam = _gell_mann_stack()[1:]
    anti = np.einsum("aij,bjk->abik", lam, lam) + np.einsum("bij,ajk->abik", lam, lam)
    # g_abc = Tr[{lambda_a, lambda_b} lambda_c] / 4
    g = np.einsum("abij,cji->abc", anti, lam).real / 4.0
    g.setflags(write=False)
    return g


def structure_constants() -> StructureTensor:
    """
    Completely symmetric SU(3) tensor g (indices 1..8 stored at 0..7),
    defined by {lambda_a, lambda_b} = 4/3 delta_ab I + 2 g_abc lambda_c.
    """
    return _structure_tensor().copy()


def _cubic(x: NDArray[np.float64]) -> float:
    return float(np.einsum("abc,a,b,c->", _structure_tensor(), x, x, x))


# ---------------------------------------------------------------------
# Operator <-> Bloch maps
# ---------------------------------------------------------------------
def _check_hermitian(op: NDArray, name: str) -> NDArray[np.complex128]:
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (DIM, DIM):
        raise ArgumentError(f"{name} must be 3x3, got shape {op.shape}")
    if not np.allclose(op, op.conj().T, rtol=0.0, atol=1e-12):
        raise ArgumentError(f"{name} is not Hermitian")
    return op


def state_to_bloch(rho: HermitianOp3, tol: float = DEFAULT_TOL) -> BlochStateVector:
    rho = _check_hermitian(rho, "rho")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise DomainError(f"state must have unit trace, got Tr[rho] = {tr:.12g}")
    s = np.einsum("ij,aji->a", rho, _gell_mann_stack()).real
    s[0] = 1.0
    return s


def effect_to_bloch(Q: HermitianOp3) -> BlochEffectVector:
    Q = _check_hermitian(Q, "Q")
    e = np.einsum("ij,aji->a", Q, _gell_mann_stack()).real / 2.0
    e[0] = np.trace(Q).real / 3.0
    return e


def bloch_to_state(s: BlochStateVector, tol: float = DEFAULT_TOL) -> HermitianOp3:
    """rho = I/3 + (1/2) sum_a s_a lambda_a."""
    s = np.asarray(s, dtype=float)
    if s.shape != (BLOCH_DIM,):
        raise ArgumentError(f"state vector must have 9 components, got {s.shape}")
    if abs(s[0] - 1.0) > tol:
        raise DomainError(f"state vector must have s_0 = 1, got {s[0]:.12g}")
    lam = _gell_mann_stack()
    return np.eye(DIM, dtype=np.complex128) / 3.0 + 0.5 * np.einsum("a,aij->ij", s[1:], lam[1:])


def bloch_to_effect(e: BlochEffectVector) -> HermitianOp3:
    """Q = e_0 I + sum_a e_a lambda_a (inverse of effect_to_bloch)."""
    e = np.asarray(e, dtype=float)
    if e.shape != (BLOCH_DIM,):
        raise ArgumentError(f"effect vector must have 9 components, got {e.shape}")
    return np.einsum("a,aij->ij", e.astype(np.complex128), _gell_mann_stack())


# ---------------------------------------------------------------------
# Membership predicates
# ---------------------------------------------------------------------
def is_valid_state_vector(s: BlochStateVector, tol: float = DEFAULT_TOL) -> bool:
    """
    Closed-form test that s is the Bloch vector of a density operator:
      ||s~|| <= 2/sqrt(3)
      2/9 - ||s~||^2/2 + (1/2) sum g_abc s_a s_b s_c >= 0
    (the second and third elementary symmetric polynomials of rho's
    eigenvalues are nonnegative; the first is Tr[rho] = 1).
    """
    s = np.asarray(s, dtype=float)
    if abs(s[0] - 1.0) > tol:
        raise DomainError(f"state vector must have s_0 = 1, got {s[0]:.12g}")
    x = s[1:]
    n2 = float(x @ x)
    if 4.0 / 3.0 - n2 < -tol:
        return False
    return 2.0 / 9.0 - 0.5 * n2 + 0.5 * _cubic(x) >= -tol


def is_valid_effect_vector(e: BlochEffectVector, tol: float = DEFAULT_TOL) -> bool:
    """
    Closed-form test that e is the Bloch vector of an effect 0 <= Q <= I:
      0 <= e_0 <= 1
      ||e~|| <= sqrt(3) min(e_0, 1 - e_0)
      e_0^3 - e_0 ||e~||^2 + (2/3) sum g e e e >= 0          (det Q >= 0)
      (1-e_0)^3 - (1-e_0) ||e~||^2 - (2/3) sum g e e e >= 0  (det (I-Q) >= 0)
    """
    e = np.asarray(e, dtype=float)
    e0, x = float(e[0]), e[1:]
    if e0 < -tol or e0 > 1.0 + tol:
        return False
    n2 = float(x @ x)
    c = 1.0 - e0
    if 3.0 * e0 * e0 - n2 < -tol or 3.0 * c * c - n2 < -tol:
        return False
    cub = (2.0 / 3.0) * _cubic(x)
    return e0 ** 3 - e0 * n2 + cub >= -tol and c ** 3 - c * n2 - cub >= -tol


def is_psd_state(s: BlochStateVector, tol: float = DEFAULT_TOL) -> bool:
    """Eigenvalue oracle: bloch_to_state(s) is positive semidefinite."""
    return bool(np.linalg.eigvalsh(bloch_to_state(s, tol=np.inf)).min() >= -tol)


def is_psd_effect(e: BlochEffectVector, tol: float = DEFAULT_TOL) -> bool:
    """Eigenvalue oracle: 0 <= Q <= I for Q = bloch_to_effect(e)."""
    w = np.linalg.eigvalsh(bloch_to_effect(e))
    return bool(w.min() >= -tol and w.max() <= 1.0 + tol)


# ---------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------
def sample_haar_unitary(rng: np.random.Generator, dim: int = DIM) -> NDArray[np.complex128]:
    """QR of a complex Ginibre matrix with the phases of diag(R) divided out."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_haar_ket(rng: np.random.Generator) -> NDArray[np.complex128]:
    return sample_haar_unitary(rng)[:, 0]


def projector(ket: NDArray[np.complex128]) -> HermitianOp3:
    ket = np.asarray(ket, dtype=np.complex128)
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def sample_haar_pure_state(rng: np.random.Generator) -> HermitianOp3:
    """|psi><psi| with |psi> the first column of a Haar-random unitary."""
    return projector(sample_haar_ket(rng))


# ---------------------------------------------------------------------
# Probabilities
# ---------------------------------------------------------------------
def predict_probability(rho: HermitianOp3, Q: HermitianOp3, tol: float = DEFAULT_TOL) -> float:
    p = float(np.einsum("ij,ji->", rho, Q).real)
    if p < -tol or p > 1.0 + tol:
        raise NumericalError(f"Tr[rho Q] = {p:.12g} is not a probability; inputs are not a valid state/effect pair")
    return p


def depolarize(rho: HermitianOp3, epsilon: float) -> HermitianOp3:
    """(1 - eps) rho + eps I/3."""
    if not 0.0 <= epsilon <= 1.0:
        raise ArgumentError(f"depolarizing level must lie in [0, 1], got {epsilon}")
    return (1.0 - epsilon) * np.asarray(rho) + epsilon * np.eye(DIM) / 3.0


def ideal_probability_matrix(
    preparations: Sequence[HermitianOp3] | NDArray,
    measurements: Sequence[HermitianOp3] | NDArray,
) -> NDArray[np.float64]:
    """
    D^qutrit with the unit column prepended:
      D[i, 0] = 1,  D[i, j+1] = Tr[rho_i Q_j]
    """
    rhos = np.asarray(preparations, dtype=np.complex128).reshape(-1, DIM, DIM)
    effs = np.asarray(measurements, dtype=np.complex128).reshape(-1, DIM, DIM)
    probs = np.einsum("iab,jba->ij", rhos, effs).real
    return np.hstack([np.ones((rhos.shape[0], 1)), probs])


def states_to_bloch_matrix(preparations: Sequence[HermitianOp3] | NDArray) -> NDArray[np.float64]:
    """Rows are the Bloch vectors of the given density operators."""
    return np.array([state_to_bloch(r) for r in preparations]).reshape(-1, BLOCH_DIM)


def effects_to_bloch_matrix(measurements: Sequence[HermitianOp3] | NDArray) -> NDArray[np.float64]:
    """Columns are the Bloch vectors of the given effects."""
    return np.array([effect_to_bloch(q) for q in measurements]).reshape(-1, BLOCH_DIM).T
