"""Contour geometry of the discretized space-time.

The time direction [0, beta] is cut into M slices, giving cells
(site, slice) on a (d+1)-dimensional lattice that is always periodic in
time.  A cell is in a reference state when the configuration agrees with
that reference on the whole ball |y-x| <= 1 throughout the slice's open time
window; all other cells are excited.  Contours are the face-connected
components of the excited set, labelled by the references seen across their
boundaries.  Extraction is diagnostic only: geometry and labels, no weights.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from . import lattice
from .errors import InvalidArgumentError
from .model import REFERENCE_NAMES, reference_configuration

EXCITED = -1
LABEL_CODES = {name: i for i, name in enumerate(REFERENCE_NAMES)}


@dataclass
class SpaceTimeConfig:
    """A closed worldline together with a time discretization."""

    worldline: object
    slices: int

    def __post_init__(self):
        if self.slices < 1:
            raise InvalidArgumentError("need at least one time slice")
        if not self.worldline.closed:
            raise InvalidArgumentError(
                "space-time classification assumes a closed (trace) worldline"
            )

    @property
    def beta_tilde(self):
        return self.worldline.beta / self.slices

    def window_values(self, nsites):
        """For each site and slice: occupation if constant on the open window,
        else None."""
        beta = self.worldline.beta
        m = self.slices
        # per-site piecewise profile: times and values
        times = [[0.0] for _ in range(nsites)]
        values = [[int(self.worldline.initial[x])] for x in range(nsites)]
        for tau, frm, to in self.worldline.jumps:
            for site, delta in ((frm, -1), (to, +1)):
                times[site].append(tau)
                values[site].append(values[site][-1] + delta)
        out = [[None] * m for _ in range(nsites)]
        for x in range(nsites):
            ts = times[x]
            vs = values[x]
            for s in range(m):
                a = s * beta / m
                b = (s + 1) * beta / m
                seen = set()
                for i, t0 in enumerate(ts):
                    t1 = ts[i + 1] if i + 1 < len(ts) else beta
                    if t0 < b and t1 > a:  # segment overlaps the open window
                        seen.add(vs[i])
                    if t0 >= b:
                        break
                out[x][s] = seen.pop() if len(seen) == 1 else None
        return out


def classify_cells(stc, box):
    """Per-cell label index into REFERENCE_NAMES, or -1 for excited cells."""
    if box.ndim != 2:
        raise InvalidArgumentError("the reference set is defined for d = 2")
    n = box.nsites
    m = stc.slices
    window = stc.window_values(n)
    refs = {name: reference_configuration(box, name) for name in REFERENCE_NAMES}
    balls = []
    for i in range(n):
        x = box.site_coord(i)
        ball = {i} | {box.site_index(y) for y in lattice.neighbors(box, x)}
        balls.append(sorted(ball))
    labels = np.full((n, m), EXCITED, dtype=np.int64)
    for i in range(n):
        for s in range(m):
            for name in REFERENCE_NAMES:
                ref = refs[name]
                if all(window[y][s] is not None and window[y][s] == ref[y]
                       for y in balls[i]):
                    labels[i, s] = LABEL_CODES[name]
                    break
    return labels


# ---------------------------------------------------------------------------
# cell and face geometry on the space-time torus
# ---------------------------------------------------------------------------


def _cell_neighbors(cell, box, m):
    """Face-sharing neighbours of a cell, with the axis step that reaches them.

    Yields (neighbor, axis, step); axis == box.ndim is the time axis (always
    periodic); open spatial axes clip.
    """
    site, s = cell
    x = box.site_coord(site)
    for ax in range(box.ndim):
        for step in (+1, -1):
            c = list(x)
            c[ax] += step
            if box.periodic[ax]:
                c[ax] %= box.dims[ax]
            elif not 0 <= c[ax] < box.dims[ax]:
                continue
            yield (box.site_index(tuple(c)), s), ax, step
    for step in (+1, -1):
        yield (site, (s + step) % m), box.ndim, step


def _face_vertices(cell, box, m, axis, step):
    """Corner vertices of the face crossed when leaving `cell` along axis/step.

    Vertices are integer tuples on the (d+1)-dimensional vertex torus.
    """
    site, s = cell
    coords = list(box.site_coord(site)) + [s]
    dims = list(box.dims) + [m]
    periodic = list(box.periodic) + [True]
    base = []
    for ax in range(len(coords)):
        if ax == axis:
            base.append((coords[ax] + (1 if step > 0 else 0),))
        else:
            base.append((coords[ax], coords[ax] + 1))
    verts = set()
    for combo in itertools.product(*base):
        v = tuple(
            c % dims[ax] if periodic[ax] else c for ax, c in enumerate(combo)
        )
        verts.add(v)
    return frozenset(verts)


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def boundary_components(cells, box, m):
    """Faces between `cells` and the complement, grouped into components.

    Returns a list of face lists; each face is (inside_cell, outside_cell).
    Faces belong to one component when (as closed geometric faces) they
    share a vertex.
    """
    cells = set(cells)
    if not cells:
        raise InvalidArgumentError("boundary of an empty set is undefined")
    faces = []
    verts = []
    for cell in cells:
        for nb, ax, step in _cell_neighbors(cell, box, m):
            if nb not in cells:
                faces.append((cell, nb))
                verts.append(_face_vertices(cell, box, m, ax, step))
    uf = _UnionFind(range(len(faces)))
    by_vertex = {}
    for i, vs in enumerate(verts):
        for v in vs:
            if v in by_vertex:
                uf.union(i, by_vertex[v])
            else:
                by_vertex[v] = i
    groups = {}
    for i, face in enumerate(faces):
        groups.setdefault(uf.find(i), []).append(face)
    return list(groups.values())


def _components(cells, box, m):
    cells = set(cells)
    comps = []
    while cells:
        seed = cells.pop()
        comp = {seed}
        stack = [seed]
        while stack:
            cur = stack.pop()
            for nb, _, _ in _cell_neighbors(cur, box, m):
                if nb in cells:
                    cells.remove(nb)
                    comp.add(nb)
                    stack.append(nb)
        comps.append(comp)
    return comps


@dataclass
class Contour:
    support: frozenset           # cells (site, slice)
    boundary: list               # list of face lists
    labels: list                 # per boundary component: set of label codes

    @property
    def thin(self):
        """A boundary component sees several labels (one-cell-thick support)."""
        return any(len(ls) != 1 for ls in self.labels)


@dataclass
class ContourSet:
    contours: list
    admissible: bool
    conflicts: list              # human-readable conflict descriptions
    cell_labels: np.ndarray


def extract_contours(stc, box):
    """Connected excited components with boundary labels and admissibility.

    Admissibility follows the matching-label rule: every face-connected
    component of the non-excited complement must carry a single label.  A
    conflict is reported, never repaired.
    """
    labels = classify_cells(stc, box)
    n, m = labels.shape
    excited = [(i, s) for i in range(n) for s in range(m) if labels[i, s] == EXCITED]
    conflicts = []
    contours = []
    for comp in _components(excited, box, m):
        bcomps = boundary_components(comp, box, m)
        blabels = [{int(labels[f[1]]) for f in faces} for faces in bcomps]
        contours.append(Contour(support=frozenset(comp), boundary=bcomps,
                                labels=blabels))
    labelled = [(i, s) for i in range(n) for s in range(m) if labels[i, s] != EXCITED]
    for comp in _components(labelled, box, m):
        seen = {int(labels[c]) for c in comp}
        if len(seen) != 1:
            names = sorted(REFERENCE_NAMES[i] for i in seen)
            conflicts.append(f"complement component mixes labels {names}")
    return ContourSet(
        contours=contours,
        admissible=not conflicts,
        conflicts=conflicts,
        cell_labels=labels,
    )


def detect_winding(contour, box, m):
    """Per-axis homology flags via a covering-space unwrap of the support.

    Axes 0..d-1 are the spatial axes (open axes never wind); axis "time" is
    the periodic slice direction.
    """
    support = set(contour.support if isinstance(contour, Contour) else contour)
    if not support:
        raise InvalidArgumentError("winding of an empty contour is undefined")
    naxes = box.ndim + 1
    winding = [False] * naxes
    lift = {}
    for seed in sorted(support):
        if seed in lift:
            continue
        lift[seed] = tuple([0] * naxes)
        stack = [seed]
        while stack:
            cur = stack.pop()
            for nb, ax, step in _cell_neighbors(cur, box, m):
                if nb not in support:
                    continue
                moved = list(lift[cur])
                moved[ax] += step
                moved = tuple(moved)
                if nb not in lift:
                    lift[nb] = moved
                    stack.append(nb)
                else:
                    # a revisit with a different lift closes a nontrivial loop
                    for a2 in range(naxes):
                        period = box.dims[a2] if a2 < box.ndim else m
                        delta = lift[nb][a2] - moved[a2]
                        if delta % period != 0:
                            raise AssertionError("inconsistent unwrap bookkeeping")
                        if delta != 0:
                            winding[a2] = True
    axes = {ax: winding[ax] for ax in range(box.ndim)}
    axes["time"] = winding[box.ndim]
    return axes
