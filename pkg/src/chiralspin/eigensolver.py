"""Lowest eigenpairs per sector and the ground manifold across sectors.

Small sectors are diagonalized densely.  Larger ones use a block Lanczos
iteration with full reorthogonalization and thick restarts: the Krylov basis
``Q`` and its image ``HQ`` are kept together, the projected matrix is
``Q^H (HQ)``, and at every restart the lowest Ritz vectors are retained
together with the next Krylov block so that the Lanczos relation survives
the restart.  A block of several start vectors is what lets degenerate
eigenvalues show up with their full multiplicity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .hamiltonian import AssemblyRequest, SparseOperator, assemble
from .hilbert import SectorState, enumerate_sector
from .lattice import LatticeSpec

log = logging.getLogger(__name__)

DENSE_DIM = 600
MEMORY_BUDGET = 1.5e9  # bytes for the Krylov basis and its image


class EigensolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.residual = residual


def _dense(op) -> np.ndarray:
    if isinstance(op, SparseOperator):
        return op.to_dense()
    if hasattr(op, "toarray"):
        return op.toarray()
    return np.asarray(op)


def _apply(op, X: np.ndarray) -> np.ndarray:
    if isinstance(op, SparseOperator):
        return op.matvec(X)
    return op @ X


def _orthonormalize(W: np.ndarray, Q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Columns of W made orthonormal and orthogonal to Q; collapsed directions are
    replaced by fresh random ones."""
    scale = max(np.linalg.norm(W, axis=0).max(initial=0.0), 1.0)
    for _ in range(2):
        if Q.shape[1]:
            W -= Q @ (Q.conj().T @ W)
    W, R = np.linalg.qr(W)
    weak = np.abs(np.diag(R)) < 1e-12 * scale
    if weak.any():
        for c in np.nonzero(weak)[0]:
            w = rng.standard_normal(W.shape[0]) + 1j * rng.standard_normal(W.shape[0])
            for _ in range(2):
                w -= Q @ (Q.conj().T @ w)
                w -= W[:, :c] @ (W[:, :c].conj().T @ w)
            W[:, c] = w / np.linalg.norm(w)
    return W


def lowest_eigenpairs(op, k: int, tol: float = 1e-10, *, block: Optional[int] = None,
                      max_basis: Optional[int] = None, max_restarts: int = 500,
                      seed: int = 0, dense_dim: int = DENSE_DIM):
    """``k`` smallest eigenvalues (ascending) and orthonormal eigenvectors (columns).

    Convergence means ``||H v - E v|| <= tol * max(1, |E|)`` for every returned pair.
    """
    n = op.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={n}")
    if n <= dense_dim:
        w, v = np.linalg.eigh(_dense(op))
        return w[:k], v[:, :k]

    rng = np.random.default_rng(seed)
    b = block or min(max(k, 2), 4)
    m = max_basis or max(3 * (k + b), 40)
    m = min(m, int(MEMORY_BUDGET // (32 * n)), n)
    if m < k + 2 * b:
        raise ValueError(f"Krylov basis of {m} vectors is too small for k={k}, block={b}")

    Q = np.empty((n, m), dtype=np.complex128)
    HQ = np.empty((n, m), dtype=np.complex128)
    V = _orthonormalize(rng.standard_normal((n, b)) + 1j * rng.standard_normal((n, b)),
                        Q[:, :0], rng)
    Q[:, :b] = V
    HQ[:, :b] = _apply(op, V)
    cur, last = b, slice(0, b)
    best = math.inf
    for restart in range(max_restarts):
        while cur + b <= m:
            W = _orthonormalize(HQ[:, last].copy(), Q[:, :cur], rng)
            Q[:, cur:cur + b] = W
            HQ[:, cur:cur + b] = _apply(op, W)
            last = slice(cur, cur + b)
            cur += b
        T = Q[:, :cur].conj().T @ HQ[:, :cur]
        theta, Y = np.linalg.eigh(0.5 * (T + T.conj().T))
        keep = min(cur - b, k + b)
        X = Q[:, :cur] @ Y[:, :keep]
        HX = HQ[:, :cur] @ Y[:, :keep]
        res = np.linalg.norm(HX[:, :k] - X[:, :k] * theta[:k], axis=0)
        scaled = res / np.maximum(1.0, np.abs(theta[:k]))
        best = min(best, scaled.max())
        if np.all(scaled <= tol):
            log.debug("converged after %d restarts, basis %d", restart, m)
            return theta[:k], X[:, :k]
        W = _orthonormalize(HQ[:, last].copy(), Q[:, :cur], rng)
        Q[:, :keep] = X
        HQ[:, :keep] = HX
        Q[:, keep:keep + b] = W
        HQ[:, keep:keep + b] = _apply(op, W)
        last = slice(keep, keep + b)
        cur = keep + b
    raise EigensolverError(f"no convergence after {max_restarts} restarts", best)


@dataclass
class GroundManifold:
    spec: LatticeSpec
    lam: float
    e0: float
    states: list[SectorState]
    degeneracy: int
    gap: float
    per_sector_spectra: dict[int, np.ndarray] = field(repr=False)
    tol_deg: float = 0.0

    @property
    def vectors(self) -> list[tuple[int, np.ndarray]]:
        return [(s.n_up, s.vec) for s in self.states]

    @property
    def sectors(self) -> list[int]:
        return sorted({s.n_up for s in self.states})

    def in_sector(self, n_up: int) -> list[SectorState]:
        return [s for s in self.states if s.n_up == n_up]


def ground_manifold(spec: LatticeSpec, lam: float, k_per_sector: int = 6,
                    tol_deg: Optional[float] = None, *, tol: float = 1e-10,
                    sectors: Optional[Iterable[int]] = None, seed: int = 0) -> GroundManifold:
    """Scan sectors ``n_up = 0 .. N//2`` and gather the degenerate ground states.

    Sectors above half filling are the spin-flipped images of the scanned
    ones; their spectra and vectors are produced by the flip rather than
    solved again.  ``sectors`` restricts the scan (the manifold is then
    only complete relative to those sectors).
    """
    N = spec.n_sites
    scan = sorted(set(sectors)) if sectors is not None else list(range(N // 2 + 1))
    if any(not 0 <= s <= N for s in scan):
        raise ValueError(f"sector outside [0, {N}]")
    scan = sorted({min(s, N - s) for s in scan})

    solved: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def solve(n_up, k):
        op = assemble(AssemblyRequest(spec, lam, n_up))
        kk = min(k, op.dim)
        return lowest_eigenpairs(op, kk, tol, seed=seed + n_up)

    for n_up in scan:
        solved[n_up] = solve(n_up, k_per_sector)
    e0 = min(vals[0] for vals, _ in solved.values())
    tdeg = tol_deg if tol_deg is not None else 1e-8 * max(1.0, abs(e0))

    # a sector whose every computed level is degenerate may hide more copies
    for n_up in scan:
        k = len(solved[n_up][0])
        dim = math.comb(N, n_up)
        while k < dim and np.all(solved[n_up][0] <= e0 + tdeg):
            k = min(2 * k, dim)
            solved[n_up] = solve(n_up, k)

    states: list[SectorState] = []
    spectra: dict[int, np.ndarray] = {}
    degeneracy = 0
    above = []
    for n_up in scan:
        vals, vecs = solved[n_up]
        basis = enumerate_sector(N, n_up)
        spectra[n_up] = vals
        mirrored = N - n_up != n_up
        if mirrored:
            spectra[N - n_up] = vals
        hit = np.nonzero(np.abs(vals - e0) <= tdeg)[0]
        for c in hit:
            st = SectorState(basis, vecs[:, c].copy())
            states.append(st)
            if mirrored:
                states.append(st.flipped())
        degeneracy += len(hit) * (2 if mirrored else 1)
        above.extend(vals[vals > e0 + tdeg].tolist())
    gap = min(above) - e0 if above else math.nan
    states.sort(key=lambda s: s.n_up)
    return GroundManifold(spec, lam, float(e0), states, degeneracy, gap, spectra, tdeg)
