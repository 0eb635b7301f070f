"""Expectation values and correlators on sector states and ground manifolds.

Every state handled here lives in one magnetization sector, so the x and y
components of a single-site spin have vanishing expectation (they change
the number of up spins) and only ``<Z_i>`` survives in ``<s_i>``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .eigensolver import GroundManifold
from .hamiltonian import build_operator, chirality_operator
from .hilbert import SectorState, enumerate_sector
from .lattice import Geometry, LatticeError, LatticeSpec, site_distance


class NotSpinEigenstateError(ValueError):
    def __init__(self, s2: float):
        super().__init__(f"<S^2> = {s2:.10f} is not S(S+1) for a half-integer S")
        self.s2 = s2


class CorrelationKind(enum.Enum):
    SPIN_SPIN = "SpinSpin"
    CHIRAL_CHIRAL = "ChiralChiral"
    DIMER_DIMER = "DimerDimer"


@dataclass
class CorrelationMap:
    kind: CorrelationKind
    reference: tuple
    # (target, distance, value); value is None where a correlator is undefined
    values: list[tuple[tuple, int, Optional[float]]]


def _real(z: complex, what: str) -> float:
    scale = max(1.0, abs(z))
    if abs(np.imag(z)) > 1e-10 * scale:
        raise ArithmeticError(f"{what} has imaginary part {np.imag(z):.3e}")
    return float(np.real(z))


def _swapped(state: SectorState, i: int, j: int) -> np.ndarray:
    """Amplitudes of SWAP_ij |state>."""
    s = state.basis.states
    anti = ((s >> i) ^ (s >> j)) & 1
    partner = s ^ (anti * ((1 << i) | (1 << j)))
    return state.vec[state.basis.rank(partner)]


def z_expectation(state: SectorState, i: int) -> float:
    z = 2 * ((state.basis.states >> i) & 1) - 1
    return float(np.sum(np.abs(state.vec) ** 2 * z))


def spin_vector(state: SectorState, i: int) -> np.ndarray:
    """``(<X_i>, <Y_i>, <Z_i>)``; the transverse parts are zero on a sector state."""
    return np.array([0.0, 0.0, z_expectation(state, i)])


def exchange_expectation(state: SectorState, i: int, j: int) -> float:
    if i == j:
        return 3.0
    swap = np.vdot(state.vec, _swapped(state, i, j))
    return _real(2 * swap - 1, "<s_i.s_j>")


def spin_correlator(state: SectorState, i: int, j: int) -> float:
    """Connected ``<s_i.s_j> - <s_i>.<s_j>``."""
    return exchange_expectation(state, i, j) - float(spin_vector(state, i) @ spin_vector(state, j))


def _plaquette_vector(state: SectorState, plaquette) -> np.ndarray:
    i, j, k = plaquette[:3]
    return build_operator(state.basis, (), [(i, j, k, 1.0)]).matvec(state.vec)


def chirality_expectation(state: SectorState, plaquette) -> float:
    """``<s_i.(s_j x s_k)>`` for the ordered triple; a fourth (sign) entry is ignored."""
    return _real(np.vdot(state.vec, _plaquette_vector(state, plaquette)), "chirality")


def chiral_correlator(state: SectorState, plaquette_a, plaquette_b) -> float:
    """Connected ``<X_a X_b> - <X_a><X_b>``.

    When the two plaquettes share sites the product is not Hermitian; the
    symmetrized (real) part is returned.
    """
    va = _plaquette_vector(state, plaquette_a)
    vb = va if tuple(plaquette_a[:3]) == tuple(plaquette_b[:3]) else _plaquette_vector(state, plaquette_b)
    xa = _real(np.vdot(state.vec, va), "chirality")
    xb = _real(np.vdot(state.vec, vb), "chirality")
    return float(np.real(np.vdot(va, vb))) - xa * xb


def dimer_expectation(state: SectorState, i: int, j: int) -> float:
    """``<d_ij>`` with ``d_ij = (1 - s_i.s_j)/4``, the singlet projector."""
    return (1.0 - exchange_expectation(state, i, j)) / 4.0


def dimer_correlator(state: SectorState, bond_ref, bond) -> Optional[float]:
    """Normalized connected dimer correlation; ``None`` where undefined.

    ``(<d_b d_r> - <d_b><d_r>) / (<d_r> (1 - <d_b>))`` with ``r`` the
    reference bond.  Because ``d`` is a projector the value for ``b = r`` is
    exactly 1 whenever ``<d_r> > 0``.
    """
    k, l = bond_ref[:2]
    i, j = bond[:2]
    d_ref = dimer_expectation(state, k, l)
    if abs(d_ref) < 1e-12:
        return None
    if {i, j} == {k, l}:
        return 1.0
    d_b = dimer_expectation(state, i, j)
    denom = d_ref * (1.0 - d_b)
    if abs(denom) < 1e-12:
        return None
    # d = (1 - SWAP) / 2
    sb = _swapped(state, i, j)
    sr = _swapped(state, k, l)
    v = state.vec
    both = np.vdot(sb, sr).real
    joint = (1.0 - np.vdot(v, sb).real - np.vdot(v, sr).real + both) / 4.0
    return (joint - d_b * d_ref) / denom


def _raise_total(state: SectorState) -> np.ndarray:
    """Amplitudes of S+ |state> in sector n_up + 1."""
    N, n_up = state.n_sites, state.n_up
    target = enumerate_sector(N, n_up + 1)
    s = state.basis.states
    out = np.zeros(target.dim, dtype=np.complex128)
    for i in range(N):
        down = np.nonzero(((s >> i) & 1) == 0)[0]
        if len(down) == 0:
            continue
        idx = target.rank(s[down] | (1 << i))
        out += np.bincount(idx, weights=state.vec[down].real, minlength=target.dim)
        out += 1j * np.bincount(idx, weights=state.vec[down].imag, minlength=target.dim)
    return out


def s2_gram(states: Sequence[SectorState]) -> np.ndarray:
    """Matrix of ``S_tot^2`` between states of one sector (``S_tot = sum s/2``)."""
    sz = states[0].basis.sz
    if any(s.basis.n_up != states[0].n_up for s in states):
        raise ValueError("states must share a sector")
    if states[0].n_up == states[0].n_sites:
        raised = [np.zeros(1) for _ in states]
    else:
        raised = [_raise_total(s) for s in states]
    # S^2 = Sz (Sz + 1) + S- S+
    R = np.array(raised)
    V = np.array([s.vec for s in states])
    return sz * (sz + 1) * (V.conj() @ V.T) + R.conj() @ R.T


def _spin_from_s2(s2: float, tol: float = 1e-6) -> float:
    S = round(2 * (-0.5 + math.sqrt(0.25 + max(s2, 0.0)))) / 2
    if abs(S * (S + 1) - s2) > tol:
        raise NotSpinEigenstateError(s2)
    return S


def total_spin(state: SectorState) -> tuple[float, float]:
    """``(S, <S_tot^2>)``; raises if the state mixes total-spin multiplets."""
    s2 = float(np.real(s2_gram([state])[0, 0]))
    return _spin_from_s2(s2), s2


def manifold_spins(manifold: GroundManifold) -> list[tuple[float, float]]:
    """``(S, S_z)`` for every ground state after diagonalizing S^2 sector by sector."""
    out = []
    for n_up in manifold.sectors:
        group = manifold.in_sector(n_up)
        w = np.linalg.eigvalsh(s2_gram(group))
        sz = group[0].basis.sz
        out.extend((_spin_from_s2(x), sz) for x in w)
    return out


def chirality_resolved(manifold: GroundManifold, n_up: Optional[int] = None):
    """Eigenpairs ``(value, state)`` of the total oriented chirality inside the manifold.

    Restricted to one sector when ``n_up`` is given, otherwise over all of them.
    """
    spec = manifold.spec
    out = []
    for sector in ([n_up] if n_up is not None else manifold.sectors):
        group = manifold.in_sector(sector)
        if not group:
            continue
        op = chirality_operator(spec, group[0].basis)
        V = np.array([s.vec for s in group]).T
        M = V.conj().T @ op.matvec(V)
        w, U = np.linalg.eigh(0.5 * (M + M.conj().T))
        for c in range(len(w)):
            out.append((float(w[c]), SectorState(group[0].basis, V @ U[:, c])))
    return out


def mean_chirality(manifold: GroundManifold) -> float:
    """Largest |total chirality| reachable inside the ground manifold, per plaquette."""
    n_plaq = len(manifold.spec.plaquettes)
    if n_plaq == 0:
        return 0.0
    # flipped sectors repeat the spectrum, so the scanned half suffices
    N = manifold.spec.n_sites
    sectors = sorted({min(n, N - n) for n in manifold.sectors})
    best = 0.0
    for n_up in sectors:
        for value, _ in chirality_resolved(manifold, n_up):
            best = max(best, abs(value))
    return best / n_plaq


def representative_state(manifold: GroundManifold) -> SectorState:
    """One ground state: the most polarized sector present, rotated to the
    eigenvector of total chirality with the largest magnitude."""
    n_up = min(manifold.sectors)
    pairs = chirality_resolved(manifold, n_up)
    best = max(range(len(pairs)), key=lambda c: (round(abs(pairs[c][0]), 9), -c))
    return pairs[best][1]


def translate_states(spec: LatticeSpec, states: np.ndarray, axis: int) -> np.ndarray:
    """Image of basis states under a one-step torus translation (axis 0: rows, 1: columns)."""
    if spec.geometry is not Geometry.TORUS:
        raise LatticeError("translations are defined only on the torus")
    rows, cols = spec.shape
    out = np.zeros_like(states)
    for site in range(spec.n_sites):
        r, c = spec.grid(site)
        dest = spec.site_index(r + 1, c) if axis == 0 else spec.site_index(r, c + 1)
        out |= ((states >> site) & 1) << dest
    return out


def translate(spec: LatticeSpec, state: SectorState, axis: int) -> SectorState:
    basis = state.basis
    moved = translate_states(spec, basis.states, axis)
    vec = np.empty_like(state.vec)
    vec[basis.rank(moved)] = state.vec
    return SectorState(basis, vec)


def _snap_angle(z: complex, tol: float = 1e-6) -> float:
    k = float(np.angle(z)) % (2 * math.pi)
    for target in (0.0, math.pi, 2 * math.pi):
        if abs(k - target) < tol:
            return target % (2 * math.pi)
    return k


def momentum_numbers(manifold: GroundManifold) -> list[tuple[float, float]]:
    """Crystal momenta ``(k_row, k_col)`` of the ground states on a torus.

    The two translations are diagonalized jointly inside each sector block of
    the manifold.  Angles within 1e-6 of 0 or pi are snapped; others are
    returned as they are, in ``[0, 2 pi)``.
    """
    spec = manifold.spec
    if spec.geometry is not Geometry.TORUS:
        raise LatticeError("momentum_numbers needs a torus")
    out = []
    for n_up in manifold.sectors:
        group = manifold.in_sector(n_up)
        V = np.array([s.vec for s in group]).T
        Ms = []
        for axis in (0, 1):
            moved = np.array([translate(spec, s, axis).vec for s in group]).T
            Ms.append(V.conj().T @ moved)
        # commuting unitaries: a generic combination separates joint eigenspaces
        _, U = np.linalg.eig(Ms[0] + (math.sqrt(2) / 3) * Ms[1])
        for c in range(U.shape[1]):
            u = U[:, c] / np.linalg.norm(U[:, c])
            out.append(tuple(_snap_angle(np.vdot(u, M @ u)) for M in Ms))
    return out


def _distance(spec: LatticeSpec, a: Sequence[int], b: Sequence[int]) -> int:
    return min(site_distance(spec, x, y) for x in a for y in b)


def spin_correlation_map(state: SectorState, spec: LatticeSpec, site: int) -> CorrelationMap:
    values = [((j,), site_distance(spec, site, j), spin_correlator(state, site, j))
              for j in range(spec.n_sites)]
    return CorrelationMap(CorrelationKind.SPIN_SPIN, (site,), values)


def chiral_correlation_map(state: SectorState, spec: LatticeSpec, plaquette) -> CorrelationMap:
    ref = tuple(plaquette[:3])
    values = []
    for p in spec.plaquettes:
        tgt = tuple(p[:3])
        values.append((tgt, _distance(spec, ref, tgt), chiral_correlator(state, ref, tgt)))
    return CorrelationMap(CorrelationKind.CHIRAL_CHIRAL, ref, values)


def dimer_correlation_map(state: SectorState, spec: LatticeSpec, bond) -> CorrelationMap:
    ref = tuple(bond[:2])
    values = []
    for b in spec.bonds:
        tgt = tuple(b[:2])
        values.append((tgt, _distance(spec, ref, tgt), dimer_correlator(state, ref, tgt)))
    return CorrelationMap(CorrelationKind.DIMER_DIMER, ref, values)


def adjacent_plaquettes(spec: LatticeSpec, plaquette) -> list[tuple]:
    """Plaquettes other than ``plaquette`` that share a bond (two sites) with it."""
    ref = set(plaquette[:3])
    return [tuple(p[:3]) for p in spec.plaquettes
            if len(ref & set(p[:3])) == 2]
