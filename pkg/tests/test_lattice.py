import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonlab import lattice
from bosonlab.errors import InvalidArgumentError, UnsupportedSizeError


def test_build_box_counts():
    assert lattice.build_box((2, 2)).nsites == 4
    assert lattice.build_box((2, 3), periodic=False).nsites == 6
    with pytest.raises(InvalidArgumentError):
        lattice.build_box(())
    with pytest.raises(InvalidArgumentError):
        lattice.build_box((2, 0))


def test_single_site_box_has_no_neighbors():
    box = lattice.build_box((1,))
    assert lattice.neighbors(box, (0,)) == set()


def test_open_corner_has_two_neighbors():
    box = lattice.build_box((2, 3), periodic=False)
    assert len(lattice.neighbors(box, (0, 0))) == 2


def test_distance_examples():
    box = lattice.build_box((4, 4), periodic=False)
    assert lattice.distance(box, (0, 0), (1, 0)) == 1
    assert lattice.distance(box, (0, 0), (1, 1)) == pytest.approx(math.sqrt(2))
    ring = lattice.build_box((4,))
    assert lattice.distance(ring, (0,), (3,)) == 1


def test_distance_rejects_out_of_box():
    box = lattice.build_box((3, 3), periodic=False)
    with pytest.raises(InvalidArgumentError):
        lattice.distance(box, (0, 0), (3, 0))


def test_neighbor_examples():
    t44 = lattice.build_box((4, 4))
    assert all(len(lattice.neighbors(t44, x)) == 4 for x in t44.sites())
    t22 = lattice.build_box((2, 2))
    assert all(len(lattice.neighbors(t22, x)) == 2 for x in t22.sites())
    chain = lattice.build_box((3,), periodic=False)
    assert len(lattice.neighbors(chain, (1,))) == 2


def test_staggered_sign():
    assert lattice.staggered_sign((0, 0)) == 1
    assert lattice.staggered_sign((1, 0)) == -1
    assert lattice.staggered_sign((1, 1)) == 1


@pytest.mark.parametrize("dims,periodic", [((5, 5), False), ((4, 4), True), ((2, 3), True)])
def test_distance_symmetry_exhaustive(dims, periodic):
    box = lattice.build_box(dims, periodic)
    for x in box.sites():
        for y in box.sites():
            assert lattice.distance(box, x, y) == pytest.approx(
                lattice.distance(box, y, x))


@pytest.mark.parametrize("dims,periodic", [((4, 3), False), ((4, 4), True), ((2, 2), True)])
def test_neighbor_reciprocity(dims, periodic):
    box = lattice.build_box(dims, periodic)
    for x in box.sites():
        for y in lattice.neighbors(box, x):
            assert x in lattice.neighbors(box, y)


def test_staggered_alternation_on_bipartite_torus():
    box = lattice.build_box((4, 6))
    for x in box.sites():
        for y in lattice.neighbors(box, x):
            assert lattice.staggered_sign(x) == -lattice.staggered_sign(y)


def test_span_examples():
    box = lattice.build_box((5, 5), periodic=False)
    assert lattice.connected_span_size(box, [(2, 2)]) == 1
    assert lattice.connected_span_size(box, [(1, 1), (1, 2)]) == 2
    assert lattice.connected_span_size(box, [(0, 0), (2, 0)]) == 3
    assert lattice.connected_span_size(box, [(0, 0), (1, 1)]) == 3
    assert lattice.connected_span_size(box, [(0, 0), (2, 2)]) == 5


def test_span_uses_periodic_shortcuts():
    ring = lattice.build_box((6,))
    assert lattice.connected_span_size(ring, [(0,), (5,)]) == 2


def test_span_errors():
    box = lattice.build_box((3, 3), periodic=False)
    with pytest.raises(InvalidArgumentError):
        lattice.connected_span_size(box, [])
    many = [(i, j) for i in range(3) for j in range(3)][:7]
    with pytest.raises(UnsupportedSizeError):
        lattice.connected_span_size(box, many)


def test_span_lower_bound_and_connected_equality():
    box = lattice.build_box((3, 3), periodic=False)
    import itertools

    sites = box.sites()
    for r in (1, 2, 3):
        for sub in itertools.combinations(sites, r):
            span = lattice.connected_span_size(box, sub)
            assert span >= len(sub)
            assert (span == len(sub)) == lattice.is_connected(box, sub)


@settings(max_examples=60, deadline=None)
@given(
    dims=st.lists(st.integers(1, 4), min_size=1, max_size=3),
    periodic=st.booleans(),
    data=st.data(),
)
def test_distance_and_neighbors_random(dims, periodic, data):
    box = lattice.build_box(tuple(dims), periodic)
    i = data.draw(st.integers(0, box.nsites - 1))
    j = data.draw(st.integers(0, box.nsites - 1))
    x, y = box.site_coord(i), box.site_coord(j)
    assert lattice.distance(box, x, y) == pytest.approx(lattice.distance(box, y, x))
    assert (y in lattice.neighbors(box, x)) == (x in lattice.neighbors(box, y))
    if x == y:
        assert lattice.distance(box, x, y) == 0


def test_odd_periodic_flag():
    assert lattice.has_odd_periodic_dims(lattice.build_box((2, 3)))
    assert not lattice.has_odd_periodic_dims(lattice.build_box((2, 4)))
    assert not lattice.has_odd_periodic_dims(lattice.build_box((3, 3), periodic=False))
