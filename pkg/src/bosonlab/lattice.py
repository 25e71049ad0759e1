"""Finite boxes in Z^d: geometry, adjacency and connected-span sizes.

Sites are enumerated row-major (last axis fastest) and addressed either by
integer index or by coordinate tuple.  Distances use the minimal-image
convention on periodic axes.
"""

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError, UnsupportedSizeError

SPAN_SEARCH_LIMIT = 6  # exact Steiner search is only attempted up to this |A|


@dataclass(frozen=True)
class LatticeBox:
    """A finite box in Z^d with per-axis boundary conditions.

    dims : tuple of positive ints, one per axis
    periodic : tuple of bools, one per axis
    """

    dims: tuple
    periodic: tuple

    def __post_init__(self):
        if len(self.dims) == 0:
            raise InvalidArgumentError("box needs at least one axis")
        if any(int(l) < 1 for l in self.dims):
            raise InvalidArgumentError(f"all dims must be >= 1, got {self.dims}")
        if len(self.periodic) != len(self.dims):
            raise InvalidArgumentError("periodic flags must match number of axes")
        object.__setattr__(self, "dims", tuple(int(l) for l in self.dims))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def nsites(self):
        return int(np.prod(self.dims))

    def site_index(self, coord):
        """Row-major index of a coordinate tuple."""
        coord = self.canonical(coord)
        idx = 0
        for l, c in zip(self.dims, coord):
            idx = idx * l + c
        return idx

    def site_coord(self, index):
        """Coordinate tuple of a row-major index."""
        if not 0 <= index < self.nsites:
            raise InvalidArgumentError(f"site index {index} out of range")
        out = []
        for l in reversed(self.dims):
            out.append(index % l)
            index //= l
        return tuple(reversed(out))

    def sites(self):
        """All coordinates in enumeration order."""
        return [self.site_coord(i) for i in range(self.nsites)]

    def canonical(self, coord):
        """Reduce a coordinate into the box, wrapping periodic axes.

        Out-of-range coordinates on open axes are rejected.
        """
        if len(coord) != self.ndim:
            raise InvalidArgumentError(
                f"coordinate {coord} has wrong dimension for box {self.dims}"
            )
        out = []
        for c, l, per in zip(coord, self.dims, self.periodic):
            c = int(c)
            if per:
                c %= l
            elif not 0 <= c < l:
                raise InvalidArgumentError(f"site {tuple(coord)} outside open box {self.dims}")
            out.append(c)
        return tuple(out)

    def contains(self, coord):
        try:
            self.canonical(coord)
            return True
        except InvalidArgumentError:
            return False


def build_box(dims, periodic=True):
    """Create a LatticeBox; `periodic` may be a single flag or one per axis."""
    dims = tuple(dims)
    if isinstance(periodic, bool):
        periodic = (periodic,) * len(dims)
    return LatticeBox(dims, tuple(periodic))


def axis_delta(box, a, b, axis):
    """Signed displacement b-a along one axis, minimal image on periodic axes."""
    d = b[axis] - a[axis]
    l = box.dims[axis]
    if box.periodic[axis]:
        d %= l
        if d > l / 2:  # exact half-period keeps the positive representative
            d -= l
    return d


def displacement(box, x, y):
    """Minimal-image displacement vector y-x."""
    x = box.canonical(x)
    y = box.canonical(y)
    return tuple(axis_delta(box, x, y, ax) for ax in range(box.ndim))


def distance(box, x, y):
    """Euclidean distance under the minimal-image convention."""
    return float(np.sqrt(sum(d * d for d in displacement(box, x, y))))


def neighbors(box, x):
    """Distinct sites at distance exactly 1 from x.

    On small periodic boxes opposite images can coincide; the result is a
    deduplicated set, so e.g. every site of a 2x2 torus has two neighbours.
    """
    x = box.canonical(x)
    out = set()
    for ax in range(box.ndim):
        for step in (+1, -1):
            c = list(x)
            c[ax] += step
            if box.periodic[ax]:
                c[ax] %= box.dims[ax]
            elif not 0 <= c[ax] < box.dims[ax]:
                continue
            y = tuple(c)
            if y != x:
                out.add(y)
    return out

def bonds(box):
    """All unordered nearest-neighbour pairs (by coordinates)."""
    seen = set()
    for x in box.sites():
        for y in neighbors(box, x):
            seen.add(frozenset((x, y)))
    return sorted(tuple(sorted(b)) for b in seen)


def staggered_sign(x):
    """(-1) raised to the 1-norm of the coordinates."""
    return 1 if sum(abs(int(c)) for c in x) % 2 == 0 else -1


def has_odd_periodic_dims(box):
    """True when some periodic axis has odd length (chessboards frustrate)."""
    return any(p and l % 2 == 1 for l, p in zip(box.dims, box.periodic))


@lru_cache(maxsize=64)
def _graph_distances(box):
    """All-pairs nearest-neighbour graph distances as an (n, n) int array."""
    n = box.nsites
    dist = np.full((n, n), -1, dtype=np.int64)
    adj = [[box.site_index(y) for y in neighbors(box, box.site_coord(i))] for i in range(n)]
    for s in range(n):
        dist[s, s] = 0
        frontier = [s]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if dist[s, v] < 0:
                        dist[s, v] = d
                        nxt.append(v)
            frontier = nxt
    return dist


def graph_distance(box, x, y):
    """Nearest-neighbour hop distance between two sites."""
    return int(_graph_distances(box)[box.site_index(x), box.site_index(y)])


def is_connected(box, sites_):
    """Whether a site set induces a connected nearest-neighbour subgraph."""
    idx = {box.site_index(s) for s in sites_}
    if not idx:
        return False
    start = next(iter(idx))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for y in neighbors(box, box.site_coord(u)):
            v = box.site_index(y)
            if v in idx and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == idx


def connected_span_size(box, sites_, limit=SPAN_SEARCH_LIMIT):
    """Cardinality of the smallest connected set containing `sites_`.

    Exact Steiner search (Dreyfus-Wagner with unit edge weights on the box
    graph).  Minimal connected supersets are Steiner trees, so the answer is
    (minimum tree edge count) + 1.
    """
    terms = sorted({box.site_index(s) for s in (box.canonical(s) for s in sites_)})
    if not terms:
        raise InvalidArgumentError("span of an empty set is undefined")
    t = len(terms)
    if t > limit:
        raise UnsupportedSizeError(
            f"connected span search limited to {limit} terminals, got {t}"
        )
    if t == 1:
        return 1
    dist = _graph_distances(box)
    n = box.nsites

    # dp[S][v] = min edges of a tree spanning terminal subset S plus vertex v
    full = (1 << t) - 1
    inf = 10 ** 9
    dp = np.full((full + 1, n), inf, dtype=np.int64)
    for i, term in enumerate(terms):
        dp[1 << i, :] = dist[term, :]
    for s in range(1, full + 1):
        if s.bit_count() < 2:
            continue
        # merge two sub-trees at the same vertex
        sub = (s - 1) & s
        while sub:
            if sub <= (s ^ sub):  # symmetric split, visit once
                np.minimum(dp[s], dp[sub] + dp[s ^ sub], out=dp[s])
            sub = (sub - 1) & s
        # grow: attach a shortest path from the best meeting vertex
        dp[s] = np.min(dp[s][:, None] + dist, axis=0)
    edges = int(dp[full][terms[0]])
    return edges + 1
