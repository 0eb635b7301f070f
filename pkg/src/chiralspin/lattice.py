"""Coupling tables for the quasi-1D ladders, the hub ring and the periodic torus.

A lattice is a list of Heisenberg bonds ``(i, j, J)`` and oriented chiral
plaquettes ``(i, j, k, X)`` with ``J, X`` in ``{+1, -1}``.  Absent couplings
are simply not listed.  The vertex order of a plaquette matters: the chirality
operator is invariant under cyclic rotation of ``(i, j, k)`` and changes sign
under a transposition.

Sites are 0-based.  Torus sites are numbered row-major, so grid position
``(n, m)`` (0-based) is site ``n * cols + m``.  The 1-based position ``(2, 2)``
on the 4x4 torus is therefore site 5.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional


class Geometry(enum.Enum):
    LADDER_A = "ladder-a"
    LADDER_B = "ladder-b"
    LADDER_C = "ladder-c"
    RING = "ring"
    TORUS = "torus"


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    n_sites: int
    bonds: tuple[tuple[int, int, int], ...]
    plaquettes: tuple[tuple[int, int, int, int], ...]
    geometry: Geometry
    periodic: bool = True
    shape: Optional[tuple[int, int]] = None
    _edges: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_edges", frozenset(frozenset((i, j)) for i, j, _ in self.bonds)
        )

    @property
    def tag(self) -> str:
        if self.geometry is Geometry.TORUS:
            return f"torus:{self.shape[0]}x{self.shape[1]}"
        suffix = "" if self.periodic or self.geometry is Geometry.RING else ":open"
        return f"{self.geometry.value}:{self.n_sites}{suffix}"

    def has_bond(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self._edges

    def grid(self, site: int) -> tuple[int, int]:
        """(row, col) of a torus site."""
        if self.shape is None:
            raise LatticeError("grid coordinates exist only for the torus")
        return divmod(site, self.shape[1])

    def site_index(self, row: int, col: int) -> int:
        rows, cols = self.shape
        return (row % rows) * cols + (col % cols)


def _dedup_bonds(raw):
    seen = set()
    out = []
    for i, j, J in raw:
        key = frozenset((i, j))
        if key in seen:
            continue
        seen.add(key)
        out.append((i, j, J))
    return tuple(out)


def _dedup_plaquettes(raw):
    seen = set()
    out = []
    for i, j, k, X in raw:
        key = frozenset((i, j, k))
        if key in seen:
            continue
        seen.add(key)
        out.append((i, j, k, X))
    return tuple(out)


def build_ladder_a(n_sites: int, periodic: bool = True) -> LatticeSpec:
    """Zigzag ladder: bonds (i, i+1), (i, i+2); triangles (i, i+1, i+2) with sign (-1)^i."""
    if n_sites < 3:
        raise LatticeError("ladder A needs at least 3 sites")
    if periodic:
        if n_sites % 2:
            raise LatticeError(
                "periodic ladder A needs an even number of sites: the (-1)^i "
                "orientation alternation does not close around an odd cycle"
            )
        if n_sites < 6:
            raise LatticeError("periodic ladder A needs at least 6 sites")
    N = n_sites
    bonds, plaqs = [], []
    for i in range(N):
        for step in (1, 2):
            if periodic or i + step < N:
                bonds.append((i, (i + step) % N, 1))
        if periodic or i + 2 < N:
            plaqs.append((i, (i + 1) % N, (i + 2) % N, (-1) ** i))
    return LatticeSpec(N, _dedup_bonds(bonds), _dedup_plaquettes(plaqs),
                       Geometry.LADDER_A, periodic)


def build_ladder_b(n_sites: int, periodic: bool = True) -> LatticeSpec:
    """Sawtooth ladder: ladder A without the upper row and without every other triangle.

    Bonds (i, i+1) for all i and (2i, 2i+2) along the lower row; triangles
    (2i, 2i+1, 2i+2), all with X = +1.
    """
    if n_sites < 3:
        raise LatticeError("ladder B needs at least 3 sites")
    if periodic and (n_sites % 2 or n_sites < 6):
        raise LatticeError("periodic ladder B needs an even number of sites >= 6")
    N = n_sites
    bonds, plaqs = [], []
    for i in range(N):
        if periodic or i + 1 < N:
            bonds.append((i, (i + 1) % N, 1))
    for a in range(0, N, 2):
        if periodic or a + 2 < N:
            bonds.append((a, (a + 2) % N, 1))
            plaqs.append((a, (a + 1) % N, (a + 2) % N, 1))
    return LatticeSpec(N, _dedup_bonds(bonds), _dedup_plaquettes(plaqs),
                       Geometry.LADDER_B, periodic)


def build_ladder_c(n_sites: int, periodic: bool = True) -> LatticeSpec:
    """Triangles {3t, 3t+1, 3t+2} joined by single links (3t+1, 3t+4)."""
    if n_sites < 3 or n_sites % 3:
        raise LatticeError("ladder C needs a positive multiple of 3 sites")
    N = n_sites
    bonds, plaqs = [], []
    for a in range(0, N, 3):
        bonds += [(a, a + 1, 1), (a + 1, a + 2, 1), (a, a + 2, 1)]
        plaqs.append((a, a + 1, a + 2, 1))
    for a in range(0, N, 3):
        nxt = a + 4
        if nxt < N:
            bonds.append((a + 1, nxt, 1))
        elif periodic and N > 3:
            bonds.append((a + 1, nxt % N, 1))
    return LatticeSpec(N, _dedup_bonds(bonds), _dedup_plaquettes(plaqs),
                       Geometry.LADDER_C, periodic)


def build_ring(n_sites: int) -> LatticeSpec:
    """Hub site 0 bonded to rim sites 1..N-1; the rim is an open chain 1-2-...-(N-1)."""
    if n_sites < 4:
        raise LatticeError("ring needs at least 4 sites")
    N = n_sites
    bonds = [(0, i, 1) for i in range(1, N)]
    bonds += [(i, i + 1, 1) for i in range(1, N - 1)]
    plaqs = [(0, i, i + 1, 1) for i in range(1, N - 1)]
    return LatticeSpec(N, tuple(bonds), tuple(plaqs), Geometry.RING, periodic=False)


def build_torus(rows: int, cols: int) -> LatticeSpec:
    """Triangular lattice on a rows x cols torus (square grid plus down-right diagonals).

    Every plaquette is stored with the same rotational sense: the cell at
    (n, m) contributes (n,m) -> (n,m+1) -> (n+1,m+1) and
    (n,m) -> (n+1,m+1) -> (n+1,m).  Bonds or triangles that coincide after
    wrap-around (2-wide tori) are kept once.
    """
    if rows < 2 or cols < 2:
        raise LatticeError("torus needs rows >= 2 and cols >= 2")

    def idx(n, m):
        return (n % rows) * cols + (m % cols)

    bonds, plaqs = [], []
    for n in range(rows):
        for m in range(cols):
            s = idx(n, m)
            bonds.append((s, idx(n, m + 1), 1))
            bonds.append((s, idx(n + 1, m), 1))
            bonds.append((s, idx(n + 1, m + 1), 1))
    for n in range(rows):
        for m in range(cols):
            plaqs.append((idx(n, m), idx(n, m + 1), idx(n + 1, m + 1), 1))
            plaqs.append((idx(n, m), idx(n + 1, m + 1), idx(n + 1, m), 1))
    return LatticeSpec(rows * cols, _dedup_bonds(bonds), _dedup_plaquettes(plaqs),
                       Geometry.TORUS, True, (rows, cols))


def validate(spec: LatticeSpec) -> list[str]:
    """Return human-readable invariant violations; empty means the lattice is sound."""
    problems = []
    N = spec.n_sites
    if N < 1:
        problems.append(f"n_sites must be positive, got {N}")
    seen_bonds = set()
    for i, j, J in spec.bonds:
        if not (0 <= i < N and 0 <= j < N):
            problems.append(f"bond ({i},{j}) has a site outside [0,{N})")
        if i == j:
            problems.append(f"bond ({i},{j}) is a self-loop")
        if J not in (1, -1):
            problems.append(f"bond ({i},{j}) has coupling {J}, expected +1 or -1")
        key = frozenset((i, j))
        if key in seen_bonds:
            problems.append(f"bond ({i},{j}) is duplicated")
        seen_bonds.add(key)
    seen_plaqs = set()
    for i, j, k, X in spec.plaquettes:
        if not all(0 <= s < N for s in (i, j, k)):
            problems.append(f"plaquette ({i},{j},{k}) has a site outside [0,{N})")
        if len({i, j, k}) != 3:
            problems.append(f"plaquette ({i},{j},{k}) repeats a site")
        if X not in (1, -1):
            problems.append(f"plaquette ({i},{j},{k}) has sign {X}, expected +1 or -1")
        key = frozenset((i, j, k))
        if key in seen_plaqs:
            problems.append(f"plaquette ({i},{j},{k}) is duplicated")
        seen_plaqs.add(key)
        for a, b in ((i, j), (j, k), (i, k)):
            if not spec.has_bond(a, b):
                problems.append(f"plaquette ({i},{j},{k}) edge ({a},{b}) is not a bond")
    return problems


def site_distance(spec: LatticeSpec, i: int, j: int) -> int:
    """Graph-like separation used to order correlator targets."""
    N = spec.n_sites
    g = spec.geometry
    if g is Geometry.TORUS:
        rows, cols = spec.shape
        (r1, c1), (r2, c2) = spec.grid(i), spec.grid(j)
        best = None
        for dr in ((r2 - r1) % rows, (r2 - r1) % rows - rows):
            for dc in ((c2 - c1) % cols, (c2 - c1) % cols - cols):
                # the (1, 1) diagonal is a bond, so same-sign steps merge
                d = max(abs(dr), abs(dc)) if dr * dc >= 0 else abs(dr) + abs(dc)
                best = d if best is None else min(best, d)
        return best
    if g is Geometry.RING:
        if i == j:
            return 0
        if i == 0 or j == 0:
            return 1
        # the rim is an open chain, but every rim site is one step from the hub
        return min(abs(i - j), 2)
    d = abs(i - j)
    return min(d, N - d) if spec.periodic else d


_TAG = re.compile(r"^(ladder-a|ladder-b|ladder-c|ring|torus):(\d+)(?:x(\d+))?(:open)?$")


def parse_geometry(tag: str) -> LatticeSpec:
    """Build a lattice from ``ladder-a:N[:open]``, ``ladder-b:N[:open]``,
    ``ladder-c:N``, ``ring:N`` or ``torus:RxC``."""
    m = _TAG.match(tag.strip().lower())
    if not m:
        raise LatticeError(f"unrecognised geometry tag {tag!r}")
    kind, a, b, open_flag = m.groups()
    a = int(a)
    periodic = open_flag is None
    if kind == "torus":
        if b is None or open_flag:
            raise LatticeError("torus tag must look like torus:RxC")
        return build_torus(a, int(b))
    if b is not None:
        raise LatticeError(f"{kind} takes a single size, got {tag!r}")
    if kind == "ladder-a":
        return build_ladder_a(a, periodic)
    if kind == "ladder-b":
        return build_ladder_b(a, periodic)
    if kind == "ladder-c":
        return build_ladder_c(a, periodic)
    if open_flag:
        raise LatticeError("ring has no open variant")
    return build_ring(a)
