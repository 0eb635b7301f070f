import pytest

from chiralspin.lattice import (Geometry, LatticeError, LatticeSpec, build_ladder_a, build_ladder_b,
                                build_ladder_c, build_ring, build_torus, parse_geometry,
                                site_distance, validate)

BUILDERS = [
    lambda: build_ladder_a(6), lambda: build_ladder_a(10), lambda: build_ladder_a(7, periodic=False),
    lambda: build_ladder_b(8), lambda: build_ladder_b(9, periodic=False),
    lambda: build_ladder_c(9), lambda: build_ladder_c(6, periodic=False),
    lambda: build_ring(9), lambda: build_ring(4),
    lambda: build_torus(3, 3), lambda: build_torus(4, 4), lambda: build_torus(2, 4),
]


def edges(spec):
    return {frozenset(b[:2]) for b in spec.bonds}


def test_ladder_a_six():
    spec = build_ladder_a(6)
    assert len(spec.bonds) == 12 and len(spec.plaquettes) == 6
    signs = {p[:3]: p[3] for p in spec.plaquettes}
    assert signs[(0, 1, 2)] == 1
    assert signs[(1, 2, 3)] == -1
    assert signs[(5, 0, 1)] == -1


def test_ladder_a_counts():
    spec = build_ladder_a(24)
    assert (len(spec.bonds), len(spec.plaquettes)) == (48, 24)


@pytest.mark.parametrize("n", [7, 9, 4])
def test_ladder_a_rejects_bad_periodic(n):
    with pytest.raises(LatticeError):
        build_ladder_a(n)


def test_ladder_a_open_odd_allowed():
    spec = build_ladder_a(7, periodic=False)
    assert len(spec.plaquettes) == 5
    assert validate(spec) == []


def test_ladder_b():
    assert len(build_ladder_b(8).plaquettes) == 4
    spec = build_ladder_b(9, periodic=False)
    assert [p for p in spec.plaquettes] == [(0, 1, 2, 1), (2, 3, 4, 1), (4, 5, 6, 1), (6, 7, 8, 1)]
    # odd sites are the apexes and carry only two bonds each
    assert all(sum(s in b[:2] for b in spec.bonds) == 2 for s in (1, 3, 5, 7))


def test_ladder_b_rejects_odd_periodic():
    with pytest.raises(LatticeError):
        build_ladder_b(9)


def test_ladder_c():
    spec = build_ladder_c(9)
    assert [p[:3] for p in spec.plaquettes] == [(0, 1, 2), (3, 4, 5), (6, 7, 8)]
    assert all(p[3] == 1 for p in spec.plaquettes)
    assert {frozenset((1, 4)), frozenset((4, 7)), frozenset((7, 1))} <= edges(spec)
    assert len(spec.bonds) == 12
    assert len(build_ladder_c(9, periodic=False).bonds) == 11
    with pytest.raises(LatticeError):
        build_ladder_c(8)


def test_ring():
    spec = build_ring(9)
    hub = [b for b in spec.bonds if 0 in b[:2]]
    assert len(hub) == 8 and len(spec.bonds) - len(hub) == 7
    assert len(spec.plaquettes) == 7
    assert not spec.has_bond(8, 1)
    assert [p[:3] for p in build_ring(4).plaquettes] == [(0, 1, 2), (0, 2, 3)]


@pytest.mark.parametrize("shape,counts", [((4, 4), (16, 48, 32)), ((3, 3), (9, 27, 18)),
                                          ((3, 5), (15, 45, 30))])
def test_torus_counts(shape, counts):
    spec = build_torus(*shape)
    assert (spec.n_sites, len(spec.bonds), len(spec.plaquettes)) == counts


def test_torus_two_rows_dedup():
    spec = build_torus(2, 4)
    assert validate(spec) == []
    assert len(edges(spec)) == len(spec.bonds)
    # each column pair is joined once, not twice
    assert sum(1 for b in spec.bonds if {b[0], b[1]} == {0, 4}) == 1


def test_torus_orientation_consistent():
    spec = build_torus(4, 4)
    # every bond shared by two triangles is traversed in opposite directions
    directed = {}
    for i, j, k, _ in spec.plaquettes:
        for a, b in ((i, j), (j, k), (k, i)):
            directed[(a, b)] = directed.get((a, b), 0) + 1
    assert all(v == 1 for v in directed.values())
    assert all((b, a) in directed for a, b in directed)


@pytest.mark.parametrize("make", BUILDERS)
def test_builders_validate(make):
    assert validate(make()) == []


def test_validate_flags_problems():
    spec = LatticeSpec(3, ((0, 1, 1), (1, 2, 1)), ((0, 1, 2, 1),), Geometry.RING)
    assert len(validate(spec)) == 1
    spec = LatticeSpec(2, ((0, 1, 0),), (), Geometry.RING)
    assert len(validate(spec)) == 1


def test_distances():
    t = build_torus(4, 4)
    assert site_distance(t, 0, 5) == 1  # diagonal bond
    assert site_distance(t, 0, 3) == 1  # wraps
    assert site_distance(t, 1, 4) == 2  # anti-diagonal needs two steps
    assert site_distance(t, 0, 10) == 2
    a = build_ladder_a(16)
    assert [site_distance(a, 0, j) for j in (1, 8, 15)] == [1, 8, 1]
    r = build_ring(9)
    assert site_distance(r, 0, 5) == 1 and site_distance(r, 1, 2) == 1 and site_distance(r, 1, 8) == 2


@pytest.mark.parametrize("tag,n", [("ladder-a:8", 8), ("ladder-b:10", 10), ("ladder-c:9", 9),
                                   ("ring:9", 9), ("torus:3x4", 12), ("ladder-a:9:open", 9)])
def test_parse_geometry(tag, n):
    spec = parse_geometry(tag)
    assert spec.n_sites == n
    assert parse_geometry(spec.tag) == spec


@pytest.mark.parametrize("tag", ["ladder-a:9", "torus:3", "hexagon:6", "ring:9:open", "ladder-c:8"])
def test_parse_geometry_rejects(tag):
    with pytest.raises(LatticeError):
        parse_geometry(tag)
