"""Sector-restricted Heisenberg plus scalar-chirality Hamiltonians.

Conventions: bit ``i`` set means spin ``i`` up; Pauli matrices are not
halved.  Two identities carry the whole construction:

* ``s_i . s_j = 2 SWAP_ij - 1`` for the Pauli vectors ``s``;
* ``s_i . (s_j x s_k) = Z_i A_jk - Z_j A_ik + Z_k A_ij`` with
  ``A_ab = X_a Y_b - Y_a X_b = 2i (up_a down_b - down_a up_b)``, where
  ``up``/``down`` raise and lower a single spin.

Every term therefore swaps two antiparallel spins on an edge and leaves the
number of up spins unchanged.  Terms are grouped per edge: an edge carries an
exchange coefficient and a list of ``(third site, coefficient)`` pairs from
the plaquettes containing it.  A basis state ``s`` whose bits on edge
``(p, q)``, ``p < q``, differ is sent to ``s ^ (1<<p | 1<<q)`` with amplitude

    2 c_exchange + 2i * (+1 if bit p is down else -1) * sum_t c_t z_t(s)

where ``z_t = +1`` if the third site is up and ``-1`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np
import scipy.sparse as sp

from .hilbert import SectorBasis, enumerate_sector
from .lattice import LatticeSpec

MAX_EXPLICIT_NNZ = 2 ** 26


def heisenberg_apply(bond, state: int) -> list[tuple[int, complex]]:
    """Action of ``s_i . s_j`` on one basis state: ``[(state', amplitude), ...]``."""
    i, j = bond[0], bond[1]
    bi, bj = (state >> i) & 1, (state >> j) & 1
    if bi == bj:
        return [(state, 1.0 + 0j)]
    return [(state, -1.0 + 0j), (state ^ (1 << i) ^ (1 << j), 2.0 + 0j)]


def chiral_apply(plaquette, state: int) -> list[tuple[int, complex]]:
    """Action of ``s_i . (s_j x s_k)`` on one basis state."""
    i, j, k = plaquette[0], plaquette[1], plaquette[2]
    out: dict[int, complex] = {}
    for third, (a, b), sign in ((i, (j, k), 1), (j, (i, k), -1), (k, (i, j), 1)):
        ba, bb = (state >> a) & 1, (state >> b) & 1
        if ba == bb:
            continue
        z = 1 if (state >> third) & 1 else -1
        # A_ab: a down, b up -> +2i ; a up, b down -> -2i
        amp = 2j * (1 if ba == 0 else -1) * z * sign
        target = state ^ (1 << a) ^ (1 << b)
        out[target] = out.get(target, 0) + amp
    return [(s, a) for s, a in out.items() if a != 0]


@dataclass(frozen=True)
class EdgeTable:
    """Operator terms grouped by edge, ready for vectorized or compiled application."""

    n_sites: int
    p: np.ndarray
    q: np.ndarray
    exchange: np.ndarray
    chiral_ptr: np.ndarray
    chiral_site: np.ndarray
    chiral_coef: np.ndarray
    diag_pairs: np.ndarray  # (n, 2) site pairs with nonzero exchange
    diag_coef: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.p)

    @classmethod
    def build(cls, n_sites, exchange_terms, chiral_terms) -> "EdgeTable":
        """``exchange_terms``: (i, j, c) for ``c s_i.s_j``; ``chiral_terms``: (i, j, k, c)."""
        edges: dict[tuple[int, int], list] = {}

        def slot(a, b):
            key = (min(a, b), max(a, b))
            if key not in edges:
                edges[key] = [0.0, []]
            return edges[key]

        for i, j, c in exchange_terms:
            if i == j:
                raise ValueError(f"exchange term on a single site {i}")
            slot(i, j)[0] += float(c)
        for i, j, k, c in chiral_terms:
            if len({i, j, k}) != 3:
                raise ValueError(f"chiral term on repeated sites ({i},{j},{k})")
            for third, (a, b), sign in ((i, (j, k), 1), (j, (i, k), -1), (k, (i, j), 1)):
                orient = 1 if a < b else -1
                slot(a, b)[1].append((third, float(c) * sign * orient))

        keys = sorted(edges)
        p = np.array([a for a, _ in keys], dtype=np.int64)
        q = np.array([b for _, b in keys], dtype=np.int64)
        exch = np.array([edges[k][0] for k in keys], dtype=np.float64)
        ptr = [0]
        sites, coefs = [], []
        for k in keys:
            for third, c in edges[k][1]:
                sites.append(third)
                coefs.append(c)
            ptr.append(len(sites))
        nz = exch != 0
        return cls(
            n_sites,
            p, q, exch,
            np.array(ptr, dtype=np.int64),
            np.array(sites, dtype=np.int64),
            np.array(coefs, dtype=np.float64),
            np.stack([p[nz], q[nz]], axis=1) if nz.any() else np.zeros((0, 2), np.int64),
            exch[nz],
        )

    def diagonal(self, states: np.ndarray) -> np.ndarray:
        d = np.zeros(len(states), dtype=np.float64)
        for (i, j), c in zip(self.diag_pairs, self.diag_coef):
            anti = ((states >> i) ^ (states >> j)) & 1
            d += c * (1 - 2 * anti)
        return d

    def estimated_nnz(self, n_up: int) -> int:
        N = self.n_sites
        dim = math.comb(N, n_up)
        if N < 2 or n_up == 0 or n_up == N:
            return dim
        return dim + self.n_edges * 2 * math.comb(N - 2, n_up - 1)


@numba.njit(parallel=True, cache=True)
def _matvec_kernel(states, low_bits, low_rank, high_offset, diag,
                   ep, eq, exch, cptr, csite, ccoef, v, out):
    low_mask = (np.int64(1) << low_bits) - 1
    for r in numba.prange(states.shape[0]):
        s = states[r]
        acc = diag[r] * v[r]
        for e in range(ep.shape[0]):
            p = ep[e]
            q = eq[e]
            bp = (s >> p) & 1
            if bp == ((s >> q) & 1):
                continue
            chi = 0.0
            for t in range(cptr[e], cptr[e + 1]):
                if (s >> csite[t]) & 1:
                    chi += ccoef[t]
                else:
                    chi -= ccoef[t]
            sgn = 1.0 if bp == 0 else -1.0
            s2 = s ^ ((np.int64(1) << p) | (np.int64(1) << q))
            c = high_offset[s2 >> low_bits] + low_rank[s2 & low_mask]
            # H[r, c] = conj(<s2|H|s>)
            acc += complex(2.0 * exch[e], -2.0 * sgn * chi) * v[c]
        out[r] = acc


class SparseOperator:
    """Hermitian operator restricted to one magnetization sector.

    Stored as a CSR matrix when it fits the nonzero budget, otherwise applied
    term by term on the fly with identical results.
    """

    hermitian = True

    def __init__(self, basis: SectorBasis, table: EdgeTable,
                 matrix: Optional[sp.csr_matrix] = None, diag: Optional[np.ndarray] = None):
        self.basis = basis
        self.table = table
        self.matrix = matrix
        self._diag = diag

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def matrix_free(self) -> bool:
        return self.matrix is None

    @property
    def nnz(self) -> int:
        if self.matrix is not None:
            return self.matrix.nnz
        return self.table.estimated_nnz(self.basis.n_up)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.dim:
            raise ValueError(f"vector of length {v.shape[0]} for operator of dim {self.dim}")
        if self.matrix is not None:
            return self.matrix @ v
        if v.ndim == 2:
            return np.stack([self.matvec(v[:, c]) for c in range(v.shape[1])], axis=1)
        v = np.ascontiguousarray(v, dtype=np.complex128)
        out = np.empty(self.dim, dtype=np.complex128)
        t, b = self.table, self.basis
        _matvec_kernel(b.states, b._low_bits, b._low_rank, b._high_offset, self._diag,
                       t.p, t.q, t.exchange, t.chiral_ptr, t.chiral_site, t.chiral_coef,
                       v, out)
        return out

    __matmul__ = matvec

    def expectation(self, v: np.ndarray) -> complex:
        return np.vdot(v, self.matvec(v))

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.toarray()
        return self.matvec(np.eye(self.dim, dtype=np.complex128))

    def row(self, r: int) -> list[tuple[int, complex]]:
        """Nonzero entries ``(column, value)`` of row ``r``."""
        if self.matrix is not None:
            lo, hi = self.matrix.indptr[r], self.matrix.indptr[r + 1]
            return list(zip(self.matrix.indices[lo:hi].tolist(), self.matrix.data[lo:hi].tolist()))
        e = np.zeros(self.dim, dtype=np.complex128)
        e[r] = 1.0
        # Hermitian: row r is the conjugate of column r
        col = np.conj(self.matvec(e))
        nz = np.nonzero(col)[0]
        return list(zip(nz.tolist(), col[nz].tolist()))


def build_operator(basis: SectorBasis, exchange_terms: Sequence = (), chiral_terms: Sequence = (),
                   max_nnz: int = MAX_EXPLICIT_NNZ) -> SparseOperator:
    """Sector matrix of ``sum c s_i.s_j + sum c s_i.(s_j x s_k)``."""
    table = EdgeTable.build(basis.n_sites, exchange_terms, chiral_terms)
    states = basis.states
    diag = table.diagonal(states)
    if table.estimated_nnz(basis.n_up) > max_nnz:
        return SparseOperator(basis, table, None, diag)

    rows, cols, vals = [], [], []
    nzd = np.nonzero(diag)[0]
    rows.append(nzd)
    cols.append(nzd)
    vals.append(diag[nzd].astype(np.complex128))
    for e in range(table.n_edges):
        p, q = table.p[e], table.q[e]
        src_idx = np.nonzero(((states >> p) ^ (states >> q)) & 1)[0]
        if len(src_idx) == 0:
            continue
        src = states[src_idx]
        chi = np.zeros(len(src))
        for t in range(table.chiral_ptr[e], table.chiral_ptr[e + 1]):
            chi += table.chiral_coef[t] * (2 * ((src >> table.chiral_site[t]) & 1) - 1)
        sgn = 1 - 2 * ((src >> p) & 1)
        amp = 2.0 * table.exchange[e] + 2j * sgn * chi
        dst = src ^ ((1 << int(p)) | (1 << int(q)))
        dst_idx = basis.rank(dst)
        # a swap keeps the popcount; this also guards the rank tables
        assert np.array_equal(states[dst_idx], dst), "term left the magnetization sector"
        keep = amp != 0
        rows.append(dst_idx[keep])
        cols.append(src_idx[keep])
        vals.append(amp[keep])
    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim), dtype=np.complex128,
    )
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return SparseOperator(basis, table, matrix, diag)


@dataclass(frozen=True)
class AssemblyRequest:
    spec: LatticeSpec
    lam: float
    n_up: int

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError(f"coupling must be finite, got {self.lam}")


def hamiltonian_terms(spec: LatticeSpec, lam: float):
    """Exchange and chiral term lists of ``-sum J s.s + lam sum X s.(s x s)``."""
    exchange = [(i, j, -J) for i, j, J in spec.bonds]
    chiral = [(i, j, k, lam * X) for i, j, k, X in spec.plaquettes] if lam != 0 else []
    return exchange, chiral


def assemble(req: AssemblyRequest, max_nnz: int = MAX_EXPLICIT_NNZ) -> SparseOperator:
    basis = enumerate_sector(req.spec.n_sites, req.n_up)
    if basis.dim == 0:
        raise ValueError("empty sector")
    exchange, chiral = hamiltonian_terms(req.spec, req.lam)
    return build_operator(basis, exchange, chiral, max_nnz=max_nnz)


def chirality_operator(spec: LatticeSpec, basis: SectorBasis, plaquettes=None) -> SparseOperator:
    """Oriented total chirality ``sum X_p s_i.(s_j x s_k)`` over the given plaquettes."""
    plaqs = spec.plaquettes if plaquettes is None else plaquettes
    return build_operator(basis, (), [(i, j, k, X) for i, j, k, X in plaqs])


def matvec(op: SparseOperator, v: np.ndarray) -> np.ndarray:
    return op.matvec(v)
