"""Model construction: hopping, pair potentials, fields, and their norms.

The Hamiltonian is kept as an interaction — a list of local hermitian blocks
indexed by their support — and only assembled into a full matrix when a basis
is supplied.  Families:

    T : -t (c+_x c_y + c+_y c_x) on nearest-neighbour pairs
    V : U(|x-y|) n_x n_y on pairs within the cutoff, plus the on-site
        pair term (U(0)/2) n(n-1) when U(0) is finite
    N : -mu n_x per site
    P : -h (-1)^x n_x per site (staggered field)
    Q : hq (e^{i alpha} c+_x + e^{-i alpha} c_x) per site (gauge breaking)
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import lattice
from .errors import InvalidArgumentError, UnsupportedSizeError
from .hilbert import OperatorMatrix, embed_local, zero_operator

DIST_TOL = 1e-9
BRUTEFORCE_SITE_LIMIT = 20

ALL_FAMILIES = ("T", "V", "N", "P", "Q")


@dataclass(frozen=True)
class PotentialSpec:
    """Two-body potential by distance: U(0), U(1), U(sqrt 2) and a tail."""

    onsite: float = math.inf
    u1: float = 0.0
    usqrt2: float = 0.0
    tail: tuple = ()          # ((distance, value), ...) for distances >= 2
    cutoff: float = 1.5

    def __post_init__(self):
        for d, v in self.tail:
            if not math.isfinite(v):
                raise InvalidArgumentError("tail entries must be finite")
            if d < 2 - DIST_TOL:
                raise InvalidArgumentError("tail entries start at distance 2")

    def pair_value(self, dist):
        """U at a strictly positive distance (0 when nothing matches)."""
        if abs(dist - 1.0) < DIST_TOL:
            return self.u1
        if abs(dist - math.sqrt(2.0)) < DIST_TOL:
            return self.usqrt2
        for d, v in self.tail:
            if abs(dist - d) < DIST_TOL:
                return v
        return 0.0

    @property
    def hard_core(self):
        return math.isinf(self.onsite)


@dataclass(frozen=True)
class ModelParams:
    t: float = 0.0
    mu: float = 0.0
    h: float = 0.0
    alpha: float = 0.0
    hq: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise InvalidArgumentError("beta must be positive")
        if not 0 <= self.alpha < 2 * math.pi:
            raise InvalidArgumentError("alpha must lie in [0, 2 pi)")


@dataclass(frozen=True)
class NormSettings:
    r: float = 0.0
    mode: str = "full"  # "full" or "star" (|A| >= 2 only)

    def __post_init__(self):
        if self.r < 0:
            raise InvalidArgumentError("norm rate r must be >= 0")
        if self.mode not in ("full", "star"):
            raise InvalidArgumentError(f"unknown norm mode {self.mode!r}")


@dataclass(frozen=True)
class InteractionTerm:
    support: tuple      # sorted site indices
    block: np.ndarray   # hermitian block on the support's local basis
    family: str


@dataclass
class InteractionSpec:
    """Collection of local terms plus the parameters that generated them."""

    box: object
    nmax: int
    terms: list
    params: ModelParams = None
    potential: PotentialSpec = None

    def merged_blocks(self):
        """Sum the blocks of terms sharing a support; returns {support: block}."""
        merged = {}
        for term in self.terms:
            if term.support in merged:
                merged[term.support] = merged[term.support] + term.block
            else:
                merged[term.support] = term.block.copy()
        return merged

    def families_present(self):
        return sorted({t.family for t in self.terms})


def _local_ops(nmax):
    """Single-site matrices on the (nmax+1)-dimensional local space."""
    dim = nmax + 1
    c = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    cdag = c.conj().T
    n = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return c, cdag, n


def build_interaction(box, basis, params, pot, families=ALL_FAMILIES, nmax=None):
    """Build the interaction terms and (when a basis is given) assemble them.

    Returns (InteractionSpec, OperatorMatrix or None).  Terms whose
    coefficient is exactly zero are omitted so that supports reflect the
    model actually in force.
    """
    families = set(families)
    unknown = families - set(ALL_FAMILIES)
    if unknown:
        raise InvalidArgumentError(f"unknown interaction families {sorted(unknown)}")
    if nmax is None:
        nmax = basis.nmax if basis is not None else 1
    if pot.hard_core and nmax != 1:
        raise InvalidArgumentError("U(0)=inf requires nmax=1 (hard-core)")
    c, cdag, nop = _local_ops(nmax)
    terms = []
    site_idx = {s: box.site_index(s) for s in box.sites()}

    if "T" in families and params.t != 0.0:
        hop = -params.t * (np.kron(cdag, c) + np.kron(c, cdag))
        for x, y in lattice.bonds(box):
            support = tuple(sorted((site_idx[x], site_idx[y])))
            terms.append(InteractionTerm(support, hop, "T"))

    if "V" in families:
        if not pot.hard_core and pot.onsite != 0.0:
            onsite = 0.5 * pot.onsite * (nop @ nop - nop)
            for x in box.sites():
                terms.append(InteractionTerm((site_idx[x],), onsite, "V"))
        nn = np.kron(nop, nop)
        sites = box.sites()
        for i, x in enumerate(sites):
            for y in sites[i + 1:]:
                d = lattice.distance(box, x, y)
                if d < DIST_TOL or d > pot.cutoff + DIST_TOL:
                    continue
                u = pot.pair_value(d)
                if u != 0.0:
                    support = tuple(sorted((site_idx[x], site_idx[y])))
                    terms.append(InteractionTerm(support, u * nn, "V"))

    if "N" in families and params.mu != 0.0:
        for x in box.sites():
            terms.append(InteractionTerm((site_idx[x],), -params.mu * nop, "N"))

    if "P" in families and params.h != 0.0:
        for x in box.sites():
            sgn = lattice.staggered_sign(x)
            terms.append(InteractionTerm((site_idx[x],), -params.h * sgn * nop, "P"))

    if "Q" in families and params.hq != 0.0:
        q = params.hq * (np.exp(1j * params.alpha) * cdag + np.exp(-1j * params.alpha) * c)
        for x in box.sites():
            terms.append(InteractionTerm((site_idx[x],), q, "Q"))

    spec = InteractionSpec(box=box, nmax=nmax, terms=terms, params=params, potential=pot)
    if basis is None:
        return spec, None
    return spec, assemble(spec, basis)


def assemble(spec, basis):
    """Sum of all embedded terms as one hermitian matrix over the basis."""
    if basis.nmax != spec.nmax:
        raise InvalidArgumentError("basis nmax does not match interaction nmax")
    total = zero_operator(basis.size)
    for support, block in spec.merged_blocks().items():
        coords = [basis.box.site_coord(i) for i in support]
        total = total + embed_local(basis, coords, block, hermitian=True)
    return OperatorMatrix(total.matrix, hermitian=True)


def interaction_norm(spec, settings, box=None):
    """sup_x sum_{A contains x} ||H_A|| e^{r ||A||}; star mode keeps |A| >= 2.

    ||A|| is the connected-span size, computed exactly.
    """
    box = box or spec.box
    merged = spec.merged_blocks()
    per_site = np.zeros(box.nsites)
    for support, block in merged.items():
        if settings.mode == "star" and len(support) < 2:
            continue
        bnorm = float(np.max(np.abs(np.linalg.eigvalsh(block))))
        if bnorm == 0.0:
            continue
        span = lattice.connected_span_size(box, [box.site_coord(i) for i in support])
        weight = bnorm * math.exp(settings.r * span)
        for s in support:
            per_site[s] += weight
    return float(per_site.max()) if len(per_site) else 0.0


def pair_coupling_matrix(box, pot):
    """Symmetric U(|x-y|) matrix over site pairs within the cutoff.

    The classical diagonal of V on a configuration n is 0.5 n.Jp.n.
    """
    n = box.nsites
    jp = np.zeros((n, n))
    sites = box.sites()
    for i in range(n):
        for j in range(i + 1, n):
            d = lattice.distance(box, sites[i], sites[j])
            if d > pot.cutoff + DIST_TOL:
                continue
            u = pot.pair_value(d)
            jp[i, j] = u
            jp[j, i] = u
    return jp


def diagonal_energies(box, pot, params, occupations, families=("V", "N", "P")):
    """Classical diagonal of the selected families on occupation rows."""
    occ = np.asarray(occupations, dtype=float)
    out = np.zeros(occ.shape[0])
    if "V" in families:
        jp = pair_coupling_matrix(box, pot)
        out += 0.5 * np.einsum("ia,ab,ib->i", occ, jp, occ)
        if not pot.hard_core and pot.onsite != 0.0:
            out += 0.5 * pot.onsite * (occ * (occ - 1)).sum(axis=1)
    if "N" in families:
        out -= params.mu * occ.sum(axis=1)
    if "P" in families and params.h != 0.0:
        signs = np.array([lattice.staggered_sign(x) for x in box.sites()], dtype=float)
        out -= params.h * occ @ signs
    return out


def tail_weight(pot, r, ndim):
    """u_r = sum over lattice vectors 2 <= |y| <= cutoff of |U(|y|)| e^{r|y|}."""
    if not math.isfinite(pot.cutoff):
        raise InvalidArgumentError("tail weight needs a finite cutoff")
    if not pot.tail:
        return 0.0
    rad = int(math.floor(pot.cutoff + DIST_TOL))
    total = 0.0
    for y in itertools.product(range(-rad, rad + 1), repeat=ndim):
        norm = math.sqrt(sum(c * c for c in y))
        if norm < 2 - DIST_TOL or norm > pot.cutoff + DIST_TOL:
            continue
        u = 0.0
        for d, v in pot.tail:
            if abs(norm - d) < DIST_TOL:
                u = v
                break
        total += abs(u) * math.exp(r * norm)
    return total


# ---------------------------------------------------------------------------
# classical (t = 0, binary occupations) square-sum Hamiltonian
# ---------------------------------------------------------------------------

REFERENCE_NAMES = ("empty", "chessboard_a", "chessboard_b", "full")


@dataclass(frozen=True)
class ReferenceEnergies:
    """Per-square energies of the four reference configurations."""

    values: dict
    argmin: tuple
    atol: float

    @property
    def minimum(self):
        return min(self.values.values())


def reference_energies(mu, h, u1, usqrt2, atol=1e-9):
    """Closed-form energies; chessboard_a occupies the even sublattice."""
    values = {
        "empty": 0.0,
        "chessboard_a": usqrt2 - mu / 2.0 - h / 2.0,
        "chessboard_b": usqrt2 - mu / 2.0 + h / 2.0,
        "full": 2.0 * u1 + 2.0 * usqrt2 - mu,
    }
    emin = min(values.values())
    argmin = tuple(name for name in REFERENCE_NAMES if values[name] <= emin + atol)
    return ReferenceEnergies(values=values, argmin=argmin, atol=atol)


def reference_configuration(box, name):
    """Occupation vector of a named reference configuration on the box."""
    occ = np.zeros(box.nsites, dtype=np.int64)
    for i, x in enumerate(box.sites()):
        sgn = lattice.staggered_sign(x)
        occ[i] = {
            "empty": 0,
            "full": 1,
            "chessboard_a": 1 if sgn > 0 else 0,
            "chessboard_b": 1 if sgn < 0 else 0,
        }[name]
    return occ


def _squares(box):
    """Anchors of the 2x2 squares entering the classical sum."""
    if box.ndim != 2:
        raise UnsupportedSizeError("the square decomposition is specific to d=2")
    l0, l1 = box.dims
    r0 = range(l0) if box.periodic[0] else range(l0 - 1)
    r1 = range(l1) if box.periodic[1] else range(l1 - 1)
    return [(i, j) for i in r0 for j in r1]


def _square_couplings(box, mu, h, pot):
    """Accumulate J (pair) and w (field) coefficients from the square sum."""
    n = box.nsites
    J = np.zeros((n, n))
    w = np.zeros(n)
    for anchor in _squares(box):
        i, j = anchor
        corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
        idx = [box.site_index(box.canonical(c)) for c in corners]
        nn_pairs = [(0, 1), (0, 2), (1, 3), (2, 3)]
        diag_pairs = [(0, 3), (1, 2)]
        for a, b in nn_pairs:
            J[idx[a], idx[b]] += pot.u1 / 2.0  # U(1) / (2 (d-1)) with d = 2
            J[idx[b], idx[a]] += pot.u1 / 2.0
        for a, b in diag_pairs:
            J[idx[a], idx[b]] += pot.usqrt2
            J[idx[b], idx[a]] += pot.usqrt2
        for k, c in zip(idx, corners):
            w[k] += 0.25 * (mu + h * lattice.staggered_sign(c))
    return J, w


def classical_energy(box, config, mu, h, pot):
    """Square-sum classical energy of a binary configuration."""
    occ = np.asarray(config, dtype=float)
    if occ.shape != (box.nsites,):
        raise InvalidArgumentError("configuration length must equal the site count")
    J, w = _square_couplings(box, mu, h, pot)
    return float(0.5 * occ @ J @ occ - w @ occ)


def classical_ground_bruteforce(box, mu, h, pot, atol=1e-9):
    """Exhaustive minimum of the classical energy over all 2^|box| configs.

    Returns (minimal energy, list of minimizing occupation arrays); ties
    within `atol` are all reported.
    """
    n = box.nsites
    if n > BRUTEFORCE_SITE_LIMIT:
        raise UnsupportedSizeError(
            f"brute force limited to {BRUTEFORCE_SITE_LIMIT} sites, got {n}"
        )
    J, w = _square_couplings(box, mu, h, pot)
    from ._kernels import classical_energies

    energies = classical_energies(J, w, n)
    emin = float(energies.min())
    masks = np.nonzero(energies <= emin + atol)[0]
    configs = [((m >> np.arange(n)) & 1).astype(np.int64) for m in masks]
    return emin, configs
