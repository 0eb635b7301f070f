"""Three-spin chirality, its eigensystem, and the chiral entanglement witness.

Local ordering: in an 8-dimensional three-spin vector, bit 0 of the index is
the first spin of the triple, bit 1 the second, bit 2 the third, and a set
bit means spin up.  The witness maximizes ``|tr(rho U^+ X U)|`` over local
unitaries ``U = U1 x U2 x U3``.  Because ``U^+ s_a U = sum_b R_ab s_b`` with
``R`` the SO(3) image of ``U``, only the 27 Pauli correlations
``T_abc = tr(rho s_a s_b s_c)`` enter, and each evaluation is a contraction
of three 3x3 rotations with ``T`` and the Levi-Civita symbol.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import minimize

from .hilbert import SectorState

SQRT3 = math.sqrt(3.0)
CHI_MAX = 2 * SQRT3
GHZ_BOUND = 3 * SQRT3 / 2
OMEGA = np.exp(2j * math.pi / 3)

# local basis ordered (down, up)
_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, 1j], [-1j, 0]], dtype=np.complex128)
_Z = np.array([[-1, 0], [0, 1]], dtype=np.complex128)
PAULI = (_X, _Y, _Z)

EPS = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_a, _b, _c] = 1.0
    EPS[_a, _c, _b] = -1.0


class DensityError(ValueError):
    pass


class EntanglementClass(enum.Enum):
    SEPARABLE_CONSISTENT = "Unclassified-Separable-Consistent"
    ENTANGLED = "Entangled"
    GENUINE_TRIPARTITE = "GenuineTripartite"
    BEYOND_GHZ_BOUND = "BeyondGHZBound"


def three_site(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``a`` on the first spin, ``b`` on the second, ``c`` on the third."""
    return np.kron(c, np.kron(b, a))


def chirality_matrix() -> np.ndarray:
    X = np.zeros((8, 8), dtype=np.complex128)
    for a in range(3):
        for b in range(3):
            for c in range(3):
                if EPS[a, b, c]:
                    X += EPS[a, b, c] * three_site(PAULI[a], PAULI[b], PAULI[c])
    return X


CHIRALITY = chirality_matrix()


def total_spin_squared() -> np.ndarray:
    """``(s_1 + s_2 + s_3)^2`` in Pauli normalization."""
    out = np.zeros((8, 8), dtype=np.complex128)
    for P in PAULI:
        S = three_site(P, _I2, _I2) + three_site(_I2, P, _I2) + three_site(_I2, _I2, P)
        out += S @ S
    return out


def basis_ket(bits: str) -> np.ndarray:
    """Ket from a string like ``'udd'`` (first character is the first spin)."""
    v = np.zeros(8, dtype=np.complex128)
    v[sum(1 << n for n, ch in enumerate(bits) if ch in "u1")] = 1.0
    return v


def table_states() -> dict[str, np.ndarray]:
    """The S_z >= 1/2 eigenstates built by flipping one spin of |uuu> with phases."""
    up = basis_ket("uuu")
    flips = [three_site(_X, _I2, _I2), three_site(_I2, _X, _I2), three_site(_I2, _I2, _X)]

    def combo(w1, w2):
        return (flips[0] @ up + w1 * (flips[1] @ up) + w2 * (flips[2] @ up)) / SQRT3

    return {
        "3/2,3/2": up,
        "3/2,1/2": combo(1, 1),
        "1/2,1/2,+": combo(OMEGA, OMEGA ** 2),
        "1/2,1/2,-": combo(OMEGA.conjugate(), OMEGA.conjugate() ** 2),
    }


def flip_all(v: np.ndarray) -> np.ndarray:
    """Global spin flip of a three-spin ket (index complement)."""
    return v[::-1].copy()


def chirality_eigensystem(tol: float = 1e-9) -> list[tuple[float, int, np.ndarray]]:
    """``(eigenvalue, multiplicity, eigenvectors as columns)`` sorted by eigenvalue."""
    w, V = np.linalg.eigh(CHIRALITY)
    out = []
    start = 0
    while start < len(w):
        stop = start
        while stop < len(w) and abs(w[stop] - w[start]) < tol:
            stop += 1
        out.append((float(np.mean(w[start:stop])), stop - start, V[:, start:stop]))
        start = stop
    return out


def as_density(rho, tol: float = 1e-8) -> np.ndarray:
    """Validate a three-spin density; an 8-vector is taken as a pure state."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape == (8,):
        norm = np.vdot(rho, rho).real
        if abs(norm - 1) > tol:
            raise DensityError(f"state norm^2 is {norm}, expected 1")
        return np.outer(rho, rho.conj())
    if rho.shape != (8, 8):
        raise DensityError(f"expected an 8-vector or an 8x8 matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise DensityError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise DensityError(f"trace is {tr}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-10:
        raise DensityError("density matrix is not positive semidefinite")
    return rho


def chi(rho) -> float:
    """Chirality ``tr(rho X)`` of a three-spin state or density."""
    rho = as_density(rho)
    return float(np.real(np.trace(rho @ CHIRALITY)))


def reduced_density(state: Union[SectorState, np.ndarray], triple) -> np.ndarray:
    """Reduced density of the spins ``(i, j, k)`` in that order.

    ``state`` is a sector state or a full ``2^N`` amplitude vector whose index
    bit ``n`` is site ``n``.
    """
    i, j, k = triple
    if len({i, j, k}) != 3:
        raise ValueError(f"triple {triple} repeats a site")
    if isinstance(state, SectorState):
        states, amps, n = state.basis.states, state.vec, state.n_sites
    else:
        amps = np.asarray(state, dtype=np.complex128)
        n = int(round(math.log2(len(amps))))
        if 1 << n != len(amps):
            raise ValueError("full vector length must be a power of two")
        states = np.arange(len(amps), dtype=np.int64)
    if max(i, j, k) >= n or min(i, j, k) < 0:
        raise ValueError(f"triple {triple} outside the {n}-site system")
    local = ((states >> i) & 1) | (((states >> j) & 1) << 1) | (((states >> k) & 1) << 2)
    env = states & ~((1 << i) | (1 << j) | (1 << k))
    _, env_idx = np.unique(env, return_inverse=True)
    M = np.zeros((env_idx.max() + 1, 8), dtype=np.complex128)
    M[env_idx, local] = amps
    rho = M.T @ M.conj()
    return rho / np.trace(rho).real


def pauli_tensor(rho: np.ndarray) -> np.ndarray:
    """``T[a, b, c] = tr(rho s_a s_b s_c)`` over x, y, z."""
    T = np.empty((3, 3, 3))
    for a in range(3):
        for b in range(3):
            for c in range(3):
                T[a, b, c] = np.real(np.trace(rho @ three_site(PAULI[a], PAULI[b], PAULI[c])))
    return T


def rotation(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """SO(3) image of ``Rz(alpha) Ry(beta) Rz(gamma)``."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return np.array([
        [ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb],
        [sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb],
        [-sb * cg, sb * sg, cb],
    ])


def su2(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """``exp(-i alpha Z/2) exp(-i beta Y/2) exp(-i gamma Z/2)`` in the (down, up) basis."""
    def rz(t):
        return np.diag([np.exp(1j * t / 2), np.exp(-1j * t / 2)])

    def ry(t):
        return math.cos(t / 2) * _I2 - 1j * math.sin(t / 2) * _Y

    return rz(alpha) @ ry(beta) @ rz(gamma)


def local_unitary(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=float)
    return three_site(su2(*a[0:3]), su2(*a[3:6]), su2(*a[6:9]))


def rotated_chi(T: np.ndarray, angles) -> float:
    """``tr(rho U^+ X U)`` from the Pauli tensor of ``rho``."""
    R1, R2, R3 = rotation(*angles[0:3]), rotation(*angles[3:6]), rotation(*angles[6:9])
    # M[a] = R2 (R1 T)[a] R3^T, then contract with the Levi-Civita symbol
    M = R2 @ np.tensordot(R1, T, axes=(1, 0)) @ R3.T
    return float(M[0, 1, 2] - M[0, 2, 1] + M[1, 2, 0] - M[1, 0, 2] + M[2, 0, 1] - M[2, 1, 0])


def classify(chi_max: float, tol: float = 1e-6) -> EntanglementClass:
    """Smallest entanglement class consistent with the optimized chirality."""
    if chi_max < 0:
        raise ValueError("chi_max must be non-negative")
    if chi_max <= 1 + tol:
        return EntanglementClass.SEPARABLE_CONSISTENT
    if chi_max <= 2 + tol:
        return EntanglementClass.ENTANGLED
    if chi_max <= GHZ_BOUND + tol:
        return EntanglementClass.GENUINE_TRIPARTITE
    return EntanglementClass.BEYOND_GHZ_BOUND


@dataclass
class WitnessResult:
    chi_raw: float
    chi_max: float
    e_x: float
    unitary_params: np.ndarray
    entanglement_class: EntanglementClass


def witness_ex(rho, restarts: int = 50, seed: int = 0, round_size: int = 10,
               max_starts: int = 200, maxiter: int = 4000) -> WitnessResult:
    """Maximize ``|chi|`` over local unitaries by multi-start Nelder-Mead on 9 Euler angles.

    Starts are run in rounds; after at least ``restarts`` starts the search
    stops as soon as a full round improves the best value by less than 1e-8.
    """
    rho = as_density(rho)
    T = pauli_tensor(rho)
    chi_raw = float(np.real(np.trace(rho @ CHIRALITY)))
    rng = np.random.default_rng(seed)

    def neg(x):
        return -abs(rotated_chi(T, x))

    best_x = np.zeros(9)
    best = abs(chi_raw)
    opts = dict(xatol=1e-10, fatol=1e-13, maxiter=maxiter, maxfev=2 * maxiter)
    round_size = max(1, min(round_size, restarts))
    starts = 0
    while starts < max_starts:
        before = best
        for _ in range(round_size):
            x0 = rng.uniform(0, 2 * math.pi, 9)
            res = minimize(neg, x0, method="Nelder-Mead", options=opts)
            starts += 1
            if -res.fun > best:
                best, best_x = -res.fun, res.x
        if starts >= restarts and best - before < 1e-8:
            break
    # polish from the best point
    res = minimize(neg, best_x, method="Nelder-Mead", options=opts)
    if -res.fun > best:
        best, best_x = -res.fun, res.x
    best = float(best)
    return WitnessResult(chi_raw, best, best - 1.0, np.mod(best_x, 2 * math.pi), classify(best))
