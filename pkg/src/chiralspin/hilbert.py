"""Fixed-magnetization sectors of the spin-1/2 Hilbert space.

A basis state is an integer whose bit ``i`` is 1 when spin ``i`` points up.
Within a sector (fixed number of up spins) the states are stored in
increasing numeric order.  For words of fixed popcount numeric order is the
colexicographic order of their set-bit positions, so the rank of a state is
given by the combinatorial number system

    rank(s) = sum_t C(c_t, t),   c_1 < c_2 < ... positions of set bits.

The vectorized rank used by the Hamiltonian splits a word into a high and a
low half and looks both up in precomputed tables, which is two gathers per
state regardless of N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

MAX_SITES = 32


class SectorError(ValueError):
    pass


def popcount(x):
    """Number of set bits, elementwise for arrays."""
    if isinstance(x, np.ndarray):
        return np.bitwise_count(x).astype(np.int64)
    return int(x).bit_count()


@dataclass(frozen=True, eq=False)
class SectorBasis:
    n_sites: int
    n_up: int
    states: np.ndarray = field(repr=False)
    _low_bits: int = field(repr=False)
    _low_rank: np.ndarray = field(repr=False)
    _high_offset: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def sz(self) -> float:
        return self.n_up - self.n_sites / 2

    def rank(self, states) -> np.ndarray:
        """Vectorized index lookup; assumes every input lies in this sector."""
        states = np.asarray(states, dtype=np.int64)
        low = states & ((1 << self._low_bits) - 1)
        high = states >> self._low_bits
        return self._high_offset[high] + self._low_rank[low]

    def contains(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        ok = (states >= 0) & (states < (1 << self.n_sites)) & (popcount(states) == self.n_up)
        return ok


@lru_cache(maxsize=64)
def enumerate_sector(n_sites: int, n_up: int) -> SectorBasis:
    """All basis states of ``n_sites`` spins with ``n_up`` spins up, sorted."""
    if not 1 <= n_sites <= MAX_SITES:
        raise SectorError(f"n_sites must lie in [1, {MAX_SITES}], got {n_sites}")
    if not 0 <= n_up <= n_sites:
        raise SectorError(f"n_up must lie in [0, {n_sites}], got {n_up}")
    low_bits = n_sites // 2
    high_bits = n_sites - low_bits

    low_words = np.arange(1 << low_bits, dtype=np.int64)
    low_pop = popcount(low_words)
    order = np.argsort(low_pop, kind="stable")
    starts = np.searchsorted(low_pop[order], np.arange(low_bits + 2))
    low_rank = np.empty_like(low_words)
    low_rank[order] = np.arange(len(order)) - starts[low_pop[order]]

    high_words = np.arange(1 << high_bits, dtype=np.int64)
    need = n_up - popcount(high_words)
    block = np.array([comb(low_bits, w) if 0 <= w <= low_bits else 0 for w in need],
                     dtype=np.int64)
    high_offset = np.concatenate(([0], np.cumsum(block)[:-1]))

    lows_by_weight = {w: low_words[order[starts[w]:starts[w + 1]]] for w in range(low_bits + 1)}
    pieces = [(int(high) << low_bits) | lows_by_weight[int(need[high])]
              for high in np.nonzero(block)[0]]
    states = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.int64)
    for arr in (states, low_rank, high_offset):
        arr.flags.writeable = False
    return SectorBasis(n_sites, n_up, states, low_bits, low_rank, high_offset)


def rank_of(basis: SectorBasis, state: int) -> int:
    """Index of ``state`` in ``basis.states`` via the combinatorial number system."""
    state = int(state)
    if state < 0 or state >> basis.n_sites:
        raise SectorError(f"state {state:#b} has bits beyond site {basis.n_sites - 1}")
    if state.bit_count() != basis.n_up:
        raise SectorError(
            f"state {state:0{basis.n_sites}b} has {state.bit_count()} up spins, "
            f"sector holds {basis.n_up}"
        )
    r, t, pos = 0, 0, 0
    while state:
        if state & 1:
            t += 1
            r += comb(pos, t)
        state >>= 1
        pos += 1
    return r


def spin_flip(basis: SectorBasis, vec: np.ndarray) -> tuple[SectorBasis, np.ndarray]:
    """Apply the global flip (product of X on every site).

    Complementing all bits maps the sorted sector n_up onto the sorted sector
    N - n_up in reverse order, so the flipped amplitudes are just reversed.
    """
    mirror = enumerate_sector(basis.n_sites, basis.n_sites - basis.n_up)
    return mirror, np.ascontiguousarray(vec[::-1])


@dataclass(frozen=True, eq=False)
class SectorState:
    """Amplitudes of a state that lives in a single magnetization sector."""

    basis: SectorBasis
    vec: np.ndarray = field(repr=False)

    @property
    def n_up(self) -> int:
        return self.basis.n_up

    @property
    def n_sites(self) -> int:
        return self.basis.n_sites

    def flipped(self) -> "SectorState":
        return SectorState(*spin_flip(self.basis, self.vec))

    def full_vector(self) -> np.ndarray:
        """Embed into the 2^N-dimensional space (index bit i = site i)."""
        out = np.zeros(1 << self.n_sites, dtype=np.complex128)
        out[self.basis.states] = self.vec
        return out


def product_state(n_sites: int, up_sites) -> SectorState:
    """Computational basis state with the listed sites up."""
    bits = 0
    for i in up_sites:
        bits |= 1 << i
    basis = enumerate_sector(n_sites, bits.bit_count())
    vec = np.zeros(basis.dim, dtype=np.complex128)
    vec[rank_of(basis, bits)] = 1.0
    return SectorState(basis, vec)
