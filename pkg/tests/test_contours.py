import numpy as np
import pytest

from bosonlab import lattice
from bosonlab.contours import (
    EXCITED,
    LABEL_CODES,
    SpaceTimeConfig,
    boundary_components,
    classify_cells,
    detect_winding,
    extract_contours,
)
from bosonlab.errors import InvalidArgumentError
from bosonlab.model import REFERENCE_NAMES, reference_configuration
from bosonlab.stochastic import Worldline


def _static(box, occ, beta=2.0):
    occ = np.asarray(occ, dtype=int)
    return Worldline(beta=beta, initial=occ.copy(), jumps=[], final=occ.copy())


def _occupation_profile(wl, nsites):
    """Step function per site: list of (start_time, value) segments."""
    times = [[0.0] for _ in range(nsites)]
    vals = [[int(wl.initial[x])] for x in range(nsites)]
    for tau, frm, to in wl.jumps:
        for site, d in ((frm, -1), (to, +1)):
            times[site].append(tau)
            vals[site].append(vals[site][-1] + d)
    return times, vals


def _classify_by_definition(wl, box, m):
    """Literal transcription of the cell-state definition, as an oracle."""
    beta = wl.beta
    n = box.nsites
    times, vals = _occupation_profile(wl, n)
    refs = {name: reference_configuration(box, name) for name in REFERENCE_NAMES}

    def values_on_window(site, a, b):
        out = set()
        ts = times[site] + [beta]
        for i in range(len(times[site])):
            if ts[i] < b and ts[i + 1] > a:
                out.add(vals[site][i])
        return out

    labels = np.full((n, m), EXCITED, dtype=int)
    for i in range(n):
        x = box.site_coord(i)
        ball = [i] + [box.site_index(y) for y in lattice.neighbors(box, x)]
        for s in range(m):
            a, b = s * beta / m, (s + 1) * beta / m
            for name in REFERENCE_NAMES:
                ok = True
                for y in ball:
                    seen = values_on_window(y, a, b)
                    if seen != {int(refs[name][y])}:
                        ok = False
                        break
                if ok:
                    labels[i, s] = LABEL_CODES[name]
                    break
    return labels


@pytest.mark.parametrize("name", REFERENCE_NAMES)
def test_static_references_fully_labelled(name):
    box = lattice.build_box((4, 4))
    wl = _static(box, reference_configuration(box, name))
    stc = SpaceTimeConfig(wl, 4)
    labels = classify_cells(stc, box)
    assert (labels == LABEL_CODES[name]).all()
    cs = extract_contours(stc, box)
    assert cs.contours == [] and cs.admissible


def test_classification_matches_literal_definition():
    box = lattice.build_box((3, 4))
    occ = np.zeros(12, dtype=int)
    occ[5] = 1
    occ[8] = 1
    jumps = [(0.37, 5, 4), (0.9, 8, 9), (1.31, 4, 5), (1.8, 9, 8)]
    wl = Worldline(beta=2.0, initial=occ.copy(), jumps=jumps, final=occ.copy())
    for m in (1, 3, 5):
        stc = SpaceTimeConfig(wl, m)
        assert np.array_equal(classify_cells(stc, box),
                              _classify_by_definition(wl, box, m))


def test_localized_excitation_single_contour_background_labels():
    # 4x5 box so the ball of the two visited sites does not wrap the torus
    box = lattice.build_box((4, 5))
    a, b = box.site_index((1, 1)), box.site_index((1, 2))
    occ = np.zeros(20, dtype=int)
    occ[a] = 1
    wl = Worldline(beta=2.0, initial=occ.copy(), jumps=[(0.7, a, b), (1.1, b, a)],
                   final=occ.copy())
    cs = extract_contours(SpaceTimeConfig(wl, 1), box)
    assert len(cs.contours) == 1
    assert cs.admissible
    assert all(s == {LABEL_CODES["empty"]} for s in cs.contours[0].labels)
    w = detect_winding(cs.contours[0], box, 1)
    assert not any(w[ax] for ax in range(2))


def test_sheet_interface_two_side_labels():
    # full rows 0..2, empty rows 3..5 on an open-axis box: a two-cell-thick
    # band separates the references, with one label on each side
    box = lattice.build_box((6, 4), periodic=(False, True))
    occ = np.array([1 if x[0] <= 2 else 0 for x in box.sites()])
    cs = extract_contours(SpaceTimeConfig(_static(box, occ), 5), box)
    assert cs.admissible
    assert len(cs.contours) == 1
    sheet = cs.contours[0]
    assert len(sheet.boundary) == 2
    assert sorted(sheet.labels, key=sorted) == sorted(
        [{LABEL_CODES["full"]}, {LABEL_CODES["empty"]}], key=sorted)
    w = detect_winding(sheet, box, 5)
    assert w[1] and w["time"] and not w[0]


def test_chessboard_interface_is_admissible_but_fragmented():
    box = lattice.build_box((6, 4), periodic=(False, True))
    occ = np.array([
        1 if x[0] <= 2 and lattice.staggered_sign(x) > 0 else 0 for x in box.sites()
    ])
    cs = extract_contours(SpaceTimeConfig(_static(box, occ), 4), box)
    assert cs.admissible
    assert len(cs.contours) >= 2  # checkered thin tubes, not one sheet


def test_constant_particle_time_winding():
    box = lattice.build_box((4, 4))
    occ = np.zeros(16, dtype=int)
    occ[5] = 1
    cs = extract_contours(SpaceTimeConfig(_static(box, occ), 6), box)
    assert cs.contours
    for c in cs.contours:
        assert detect_winding(c, box, 6)["time"]


def test_particle_number_mismatch_forces_time_winding():
    # actual N differs from every reference patch around the walker: some
    # contour must wrap the time torus (generic jump times; jumps placed
    # exactly on slice boundaries are invisible per-window and evade this)
    box = lattice.build_box((4, 4))
    occ = np.zeros(16, dtype=int)
    occ[0] = 1
    wl = Worldline(beta=2.0, initial=occ.copy(),
                   jumps=[(0.45, 0, 1), (1.55, 1, 0)], final=occ.copy())
    cs = extract_contours(SpaceTimeConfig(wl, 4), box)
    assert any(detect_winding(c, box, 4)["time"] for c in cs.contours)


def test_classification_is_local():
    box = lattice.build_box((4, 4))
    occ1 = np.zeros(16, dtype=int)
    occ2 = occ1.copy()
    occ2[10] = 1  # far from cell (0, 0): graph distance > 1
    l1 = classify_cells(SpaceTimeConfig(_static(box, occ1), 3), box)
    l2 = classify_cells(SpaceTimeConfig(_static(box, occ2), 3), box)
    assert l1[0, :].tolist() == l2[0, :].tolist()


def test_every_excited_cell_in_exactly_one_contour():
    box = lattice.build_box((4, 4))
    occ = np.zeros(16, dtype=int)
    occ[5] = 1
    wl = Worldline(beta=2.0, initial=occ.copy(), jumps=[(0.6, 5, 9), (1.4, 9, 5)],
                   final=occ.copy())
    stc = SpaceTimeConfig(wl, 4)
    cs = extract_contours(stc, box)
    excited = {(i, s) for i in range(16) for s in range(4)
               if cs.cell_labels[i, s] == EXCITED}
    claimed = [c for contour in cs.contours for c in contour.support]
    assert len(claimed) == len(set(claimed))
    assert set(claimed) == excited
    # supports are pairwise non-adjacent by maximality of components
    for i, a in enumerate(cs.contours):
        for b in cs.contours[i + 1:]:
            for cell in a.support:
                from bosonlab.contours import _cell_neighbors

                for nb, _, _ in _cell_neighbors(cell, box, 4):
                    assert nb not in b.support


def test_boundary_component_examples():
    box = lattice.build_box((4, 4))
    single = boundary_components({(5, 1)}, box, 4)
    assert len(single) == 1 and len(single[0]) == 6
    two = boundary_components({(0, 0), (10, 2)}, box, 4)
    assert len(two) == 2
    # a slab spanning the box: rows 1 and 2 at all slices
    slab = {(box.site_index((i, j)), s)
            for i in (1, 2) for j in range(4) for s in range(4)}
    comps = boundary_components(slab, box, 4)
    assert len(comps) == 2
    assert detect_winding(slab, box, 4)[1] and detect_winding(slab, box, 4)["time"]


def test_open_worldline_rejected():
    box = lattice.build_box((2, 2))
    occ = np.zeros(4, dtype=int)
    occ[0] = 1
    final = np.zeros(4, dtype=int)
    final[1] = 1
    wl = Worldline(beta=1.0, initial=occ, jumps=[(0.5, 0, 1)], final=final)
    with pytest.raises(InvalidArgumentError):
        SpaceTimeConfig(wl, 2)
