import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import dense_oracle as oracle
from chiralspin.hamiltonian import (AssemblyRequest, EdgeTable, assemble, build_operator,
                                    chiral_apply, heisenberg_apply, matvec)
from chiralspin.hilbert import enumerate_sector
from chiralspin.lattice import (build_ladder_a, build_ladder_b, build_ladder_c, build_ring,
                                build_torus)

SQ3 = math.sqrt(3)

SMALL = {
    "ladder-a:8": lambda: build_ladder_a(8),
    "ladder-b:10": lambda: build_ladder_b(10),
    "ladder-c:9": lambda: build_ladder_c(9),
    "ring:9": lambda: build_ring(9),
    "torus:3x3": lambda: build_torus(3, 3),
    "torus:2x4": lambda: build_torus(2, 4),
    "ladder-a:7:open": lambda: build_ladder_a(7, periodic=False),
}


def dense_from_apply(fn, term, n):
    M = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for s in range(2 ** n):
        for t, a in fn(term, s):
            M[t, s] += a
    return M


def sector_spectra(spec, lam, **kw):
    out = []
    for n_up in range(spec.n_sites + 1):
        op = assemble(AssemblyRequest(spec, lam, n_up), **kw)
        out.append(np.linalg.eigvalsh(op.to_dense()))
    return np.sort(np.concatenate(out))


def test_bond_action():
    assert heisenberg_apply((0, 1), 0b11) == [(0b11, 1)]
    assert sorted(heisenberg_apply((0, 1), 0b01)) == [(0b01, -1), (0b10, 2)]
    w = np.linalg.eigvalsh(dense_from_apply(heisenberg_apply, (0, 1), 2))
    assert np.allclose(w, [-3, 1, 1, 1])


def test_single_terms_match_pauli_strings():
    assert np.allclose(dense_from_apply(heisenberg_apply, (0, 2), 3), oracle.dot(0, 2, 3).toarray())
    for tri in [(0, 1, 2), (2, 0, 1), (1, 0, 2), (3, 1, 0)]:
        assert np.allclose(dense_from_apply(chiral_apply, tri, 4),
                           oracle.triple(*tri, 4).toarray(), atol=1e-14)


def test_chirality_eigensystem_and_square():
    X = dense_from_apply(chiral_apply, (0, 1, 2), 3)
    assert chiral_apply((0, 1, 2), 0b111) == []
    w = np.linalg.eigvalsh(X)
    assert np.allclose(w, [-2 * SQ3] * 2 + [0] * 4 + [2 * SQ3] * 2, atol=1e-12)
    S = sum(sum(oracle.string({x: P}, 3) for x in range(3)).toarray() @
            sum(oracle.string({x: P}, 3) for x in range(3)).toarray() for P in oracle.PAULIS)
    assert np.abs(X @ X - (15 * np.eye(8) - S)).max() < 1e-12


def test_orientation_sign():
    cyc = dense_from_apply(chiral_apply, (1, 2, 0), 3)
    swapped = dense_from_apply(chiral_apply, (1, 0, 2), 3)
    base = dense_from_apply(chiral_apply, (0, 1, 2), 3)
    assert np.allclose(cyc, base) and np.allclose(swapped, -base)


def test_single_triangle():
    spec = build_ladder_c(3, periodic=False)
    op = assemble(AssemblyRequest(spec, 0.0, 3))
    assert op.to_dense().tolist() == [[-3]]
    lam = 0.7
    w = sector_spectra(spec, lam)
    expect = sorted([-3] * 4 + [3 - 2 * SQ3 * lam] * 2 + [3 + 2 * SQ3 * lam] * 2)
    assert np.allclose(w, expect, atol=1e-12)


@pytest.mark.parametrize("name", sorted(SMALL))
@pytest.mark.parametrize("max_nnz", [2 ** 26, 0], ids=["explicit", "matrix-free"])
def test_sector_blocks_match_oracle(name, max_nnz):
    spec = SMALL[name]()
    lam = -1.37
    H = oracle.hamiltonian(spec.n_sites, spec.bonds, spec.plaquettes, lam)
    for n_up in range(spec.n_sites + 1):
        idx = oracle.sector_indices(spec.n_sites, n_up)
        op = assemble(AssemblyRequest(spec, lam, n_up), max_nnz=max_nnz)
        assert op.matrix_free == (max_nnz == 0 and op.nnz > 0)
        assert np.abs(op.to_dense() - H[np.ix_(idx, idx)]).max() < 1e-12


@pytest.mark.parametrize("name", ["ladder-a:8", "torus:3x3"])
def test_sz_conserved(name):
    spec = SMALL[name]()
    H = oracle.hamiltonian(spec.n_sites, spec.bonds, spec.plaquettes, 2.1)
    pop = np.array([bin(s).count("1") for s in range(2 ** spec.n_sites)])
    assert np.abs(H[pop[:, None] != pop[None, :]]).max() == 0


def test_hermitian_and_no_explicit_zeros():
    op = assemble(AssemblyRequest(build_torus(3, 3), 3.3, 4))
    D = op.to_dense()
    assert np.abs(D - D.conj().T).max() < 1e-14
    assert np.all(op.matrix.data != 0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(SMALL)), st.floats(-5, 5), st.integers(0, 2 ** 31 - 1))
def test_matvec_random(name, lam, seed):
    spec = SMALL[name]()
    n_up = spec.n_sites // 2
    op = assemble(AssemblyRequest(spec, lam, n_up))
    free = assemble(AssemblyRequest(spec, lam, n_up), max_nnz=0)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=op.dim) + 1j * rng.normal(size=op.dim)
    assert np.allclose(matvec(op, v), op.to_dense() @ v)
    assert np.allclose(free.matvec(v), matvec(op, v))
    assert abs(np.vdot(v, op.matvec(v)).imag) < 1e-9 * np.linalg.norm(v) ** 2
    assert not np.any(op.matvec(np.zeros(op.dim)))


def test_block_matvec():
    op = assemble(AssemblyRequest(build_ladder_a(10), 1.5, 5), max_nnz=0)
    V = np.random.default_rng(1).normal(size=(op.dim, 3)) + 0j
    assert np.allclose(op.matvec(V), np.stack([op.matvec(V[:, c]) for c in range(3)], axis=1))


def test_row_access():
    op = assemble(AssemblyRequest(build_ring(6), 0.4, 3))
    free = assemble(AssemblyRequest(build_ring(6), 0.4, 3), max_nnz=0)
    D = op.to_dense()
    for r in (0, 7, op.dim - 1):
        for o in (op, free):
            got = np.zeros(op.dim, dtype=complex)
            for c, v in o.row(r):
                got[c] = v
            assert np.allclose(got, D[r])


@pytest.mark.parametrize("name", sorted(SMALL))
def test_lambda_sign_invariance(name):
    spec = SMALL[name]()
    assert np.abs(sector_spectra(spec, 2.3) - sector_spectra(spec, -2.3)).max() < 1e-10


@pytest.mark.parametrize("name", ["ladder-a:8", "ladder-c:9", "torus:3x3", "ring:9"])
def test_commutes_with_total_spin(name):
    spec = SMALL[name]()
    n = spec.n_sites
    H = oracle.hamiltonian(n, spec.bonds, spec.plaquettes, 0.9)
    S2 = oracle.total_s2(n)
    # package operator embedded sector by sector
    P = np.zeros_like(H)
    for n_up in range(n + 1):
        idx = oracle.sector_indices(n, n_up)
        P[np.ix_(idx, idx)] = assemble(AssemblyRequest(spec, 0.9, n_up)).to_dense()
    assert np.abs(P @ S2 - S2 @ P).max() < 1e-12


def test_edge_table_estimate_bounds_nnz():
    spec = build_torus(3, 3)
    for n_up in range(10):
        op = assemble(AssemblyRequest(spec, 1.0, n_up))
        assert op.matrix.nnz <= op.table.estimated_nnz(n_up)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        AssemblyRequest(build_ring(5), float("nan"), 2)
    with pytest.raises(ValueError):
        EdgeTable.build(3, [(1, 1, 1.0)], [])
    with pytest.raises(ValueError):
        build_operator(enumerate_sector(3, 1), [], [(0, 1, 1, 1.0)])
