"""High-temperature polymer model and its cluster expansion.

Polymer weights are obtained by inclusion-exclusion over exact sub-traces:
for a connected region A, the trace identity

    Z(A) * exp(beta * F_A) = sum over families of non-touching connected
                             polymers inside A of the product of weights

is solved bottom-up in |A|.  Families are sets of connected supports at
graph distance >= 2 from each other (touching supports would merge into one
polymer).  The free energy per site follows from the cluster sum over
multisets of polymers anchored at the origin.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lattice
from .errors import (
    DivergenceWarning,
    InvalidArgumentError,
    MissingWeightError,
    UnsupportedSizeError,
)
from .hilbert import embed_positions
from .model import build_interaction, interaction_norm, NormSettings
from .stochastic import duhamel_series_Z

WEIGHT_SIZE_LIMIT = 5
IM_TOL = 1e-12


# ---------------------------------------------------------------------------
# region enumeration
# ---------------------------------------------------------------------------


def _site_adjacency(box):
    return [
        sorted(box.site_index(y) for y in lattice.neighbors(box, box.site_coord(i)))
        for i in range(box.nsites)
    ]


def connected_subsets(box, max_size, within=None):
    """All connected site-index sets up to `max_size` (optionally inside a set)."""
    adj = _site_adjacency(box)
    allowed = set(range(box.nsites)) if within is None else set(within)
    out = []
    frontier = {frozenset([i]) for i in allowed}
    out.extend(frontier)
    for _ in range(max_size - 1):
        new = set()
        for s in frontier:
            for u in s:
                for v in adj[u]:
                    if v in allowed and v not in s:
                        new.add(s | {v})
        out.extend(new)
        frontier = new
    return [tuple(sorted(s)) for s in sorted(out, key=lambda s: (len(s), sorted(s)))]


def _set_distance(box, a, b):
    dist = lattice._graph_distances(box)
    return min(int(dist[i, j]) for i in a for j in b)


def _compatible(box, a, b):
    """Polymers are compatible iff their supports are at graph distance >= 2."""
    return _set_distance(box, a, b) >= 2


# ---------------------------------------------------------------------------
# weight table
# ---------------------------------------------------------------------------


@dataclass
class PolymerWeightTable:
    box: object
    beta: float
    nmax: int
    f0: np.ndarray               # per-site single-site free energies
    weights: dict                # support tuple -> complex weight
    size_cutoff: int
    background_energies: dict = field(default_factory=dict)  # reserved (p = 1 unused)

    def weight(self, support):
        key = tuple(sorted(support))
        if key not in self.weights:
            raise MissingWeightError(key)
        return self.weights[key]

    @property
    def f0_total(self):
        return float(self.f0.sum())


def single_site_F0(box, x, params, pot, beta, nmax=1):
    """F with exp(-beta F) = Tr exp(-beta H_x) in the single-site space."""
    spec, _ = build_interaction(box, None, params, pot, nmax=nmax)
    blocks = spec.merged_blocks()
    idx = box.site_index(x)
    dim = nmax + 1
    block = blocks.get((idx,), np.zeros((dim, dim), dtype=complex))
    vals = np.linalg.eigvalsh(block)
    return -_logsumexp(-beta * vals) / beta


def _logsumexp(a):
    m = float(np.max(a))
    return m + math.log(float(np.exp(a - m).sum()))


def _region_log_trace(merged, sites, beta, nmax):
    """log Tr over the region's local space of exp(-beta sum_{B subset} H_B)."""
    sites = tuple(sorted(sites))
    pos = {s: i for i, s in enumerate(sites)}
    dim = (nmax + 1) ** len(sites)
    h = np.zeros((dim, dim), dtype=complex)
    site_set = set(sites)
    for support, block in merged.items():
        if set(support) <= site_set:
            h += embed_positions(nmax, len(sites), [pos[s] for s in support], block)
    vals = np.linalg.eigvalsh(h)
    return _logsumexp(-beta * vals)


def _family_sum(cands, weights, compat, skip=None):
    """Sum of weight products over families of pairwise-compatible supports.

    Includes the empty family (contributing 1).  `skip` removes one support
    (used to exclude the trivial family {A} in the recursion).
    """
    order = [c for c in cands if c != skip]

    def families(current_ok):
        total = 1.0
        for i, c in enumerate(current_ok):
            w = weights.get(c, 0.0)
            if w == 0.0:
                continue
            ok = [d for d in current_ok[i + 1:] if compat(c, d)]
            total += w * families(ok)
        return total

    return families(order)


def build_weight_table(box, params, pot, beta, size_cutoff=WEIGHT_SIZE_LIMIT, nmax=1):
    """Tabulate w(A) for every connected support with |A| <= size_cutoff."""
    if size_cutoff > box.nsites:
        size_cutoff = box.nsites
    spec, _ = build_interaction(box, None, params, pot, nmax=nmax)
    merged = spec.merged_blocks()
    for support in merged:
        coords = [box.site_coord(i) for i in support]
        if len(support) >= 2 and not lattice.is_connected(box, coords):
            raise InvalidArgumentError(
                f"interaction support {support} is not connected; the polymer "
                "factorization requires connected supports (drop usqrt2/tail)"
            )
    f0 = np.empty(box.nsites)
    for i in range(box.nsites):
        dim = nmax + 1
        block = merged.get((i,), np.zeros((dim, dim), dtype=complex))
        f0[i] = -_logsumexp(-beta * np.linalg.eigvalsh(block)) / beta

    weights = {}
    supports = [s for s in connected_subsets(box, size_cutoff) if len(s) >= 2]
    compat = lambda a, b: _compatible(box, a, b)
    for support in supports:  # sorted by size, so sub-weights exist
        phi = math.exp(
            _region_log_trace(merged, support, beta, nmax)
            + beta * float(f0[list(support)].sum())
        )
        cands = [
            s for s in connected_subsets(box, len(support), within=support)
            if len(s) >= 2
        ]
        lower = _family_sum(cands, weights, compat, skip=support)
        weights[support] = phi - lower
    return PolymerWeightTable(
        box=box, beta=beta, nmax=nmax, f0=f0, weights=weights, size_cutoff=size_cutoff
    )


def polymer_weight(box, support, params, pot, beta, nmax=1, size_cutoff=None):
    """Weight of one connected support (tabulates everything below it).

    Singletons have weight 0: every term of the expansion needs |A_j| >= 2.
    """
    key = tuple(sorted(box.site_index(s) if isinstance(s, tuple) else s for s in support))
    if len(key) == 1:
        return 0.0
    coords = [box.site_coord(i) for i in key]
    if not lattice.is_connected(box, coords):
        raise InvalidArgumentError(f"support {key} is not connected")
    if len(key) > (size_cutoff or WEIGHT_SIZE_LIMIT):
        raise UnsupportedSizeError(
            f"support size {len(key)} above cutoff {size_cutoff or WEIGHT_SIZE_LIMIT}"
        )
    table = build_weight_table(box, params, pot, beta, size_cutoff=len(key), nmax=nmax)
    return table.weight(key)


def polymer_weight_duhamel(box, support, params, pot, beta, m_max=3, nmax=1):
    """Duhamel-series route to a pair weight (cross-check of the recursion).

    Restricted to two-site supports and alpha-free models, where the
    single-site part is diagonal.
    """
    key = tuple(sorted(support))
    if len(key) != 2:
        raise UnsupportedSizeError("the Duhamel cross-check is kept to pairs")
    if params.hq != 0.0:
        raise InvalidArgumentError("cross-check requires diagonal single-site terms")
    spec, _ = build_interaction(box, None, params, pot, nmax=nmax)
    merged = spec.merged_blocks()
    pos = {s: i for i, s in enumerate(key)}
    dim = (nmax + 1) ** 2
    diag_part = np.zeros((dim, dim), dtype=complex)
    for s in key:
        if (s,) in merged:
            diag_part += embed_positions(nmax, 2, [pos[s]], merged[(s,)])
    pair_block = merged.get(key)
    if pair_block is None:
        return 0.0
    bmat = embed_positions(nmax, 2, [0, 1], pair_block)
    res = duhamel_series_Z(np.real(np.diag(diag_part)), bmat, beta, m_max)
    f_a = single_site_F0(box, box.site_coord(key[0]), params, pot, beta, nmax) + \
        single_site_F0(box, box.site_coord(key[1]), params, pot, beta, nmax)
    return math.exp(beta * f_a) * float(res.partial_sums[-1] - res.terms[0])


def reconstruct_Z(box, table, beta=None):
    """exp(-beta F_box) * sum over admissible polymer families; must equal Z."""
    beta = table.beta if beta is None else beta
    if beta != table.beta:
        raise InvalidArgumentError("table was built at a different beta")
    required = [s for s in connected_subsets(box, box.nsites) if len(s) >= 2]
    for s in required:
        if s not in table.weights:
            raise MissingWeightError(s)
    compat = lambda a, b: _compatible(box, a, b)
    total = _family_sum(required, table.weights, compat)
    return math.exp(-beta * table.f0_total) * total


# ---------------------------------------------------------------------------
# Ursell factors and the cluster sum
# ---------------------------------------------------------------------------


def _incompat_edges(box, cluster):
    k = len(cluster)
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            if not _compatible(box, cluster[i], cluster[j]):
                edges.append((i, j))
    return edges


def _phi_connected(k, edges):
    """sum over connected spanning subgraphs of (-1)^{#edges}; 0 if disconnected."""
    if k == 1:
        return 1.0
    total = 0.0
    for mask in range(1 << len(edges)):
        parent = list(range(k))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        nedges = 0
        for e, (i, j) in enumerate(edges):
            if mask >> e & 1:
                nedges += 1
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
        root = find(0)
        if all(find(v) == root for v in range(k)):
            total += (-1.0) ** nedges
    return total


def ursell_factor(cluster, box):
    """(1/k!) * sum over connected spanning subgraphs of (-1)^{#edges}.

    Zero whenever the incompatibility graph of the tuple is disconnected.
    The 1/k! normalization matches a cluster sum over ordered tuples.
    """
    cluster = [tuple(sorted(c)) for c in cluster]
    k = len(cluster)
    edges = _incompat_edges(box, cluster)
    return _phi_connected(k, edges) / math.factorial(k)


@dataclass
class ClusterFreeEnergy:
    f: float
    shells: dict                 # total polymer size -> |contribution|
    tail_indicator: float
    diverging: bool
    cluster_count: int


def cluster_free_energy(box, table, beta=None, k_cutoff=4, weight_floor=1e-14):
    """F0 minus (1/beta) * cluster sum per site, anchored at the origin.

    Multisets of polymers with connected incompatibility graph and support
    containing site 0 contribute phi * prod(w) / |support|, where phi folds
    the ordered-tuple 1/k! against the multiset multiplicities.  The shell
    ledger is indexed by total polymer size; the tail indicator is the last
    shell's magnitude.
    """
    beta = table.beta if beta is None else beta
    if beta != table.beta:
        raise InvalidArgumentError("table was built at a different beta")
    supports = [s for s, w in table.weights.items() if abs(w) > weight_floor]
    supports.sort(key=lambda s: (len(s), s))
    sid = {s: i for i, s in enumerate(supports)}
    origin = 0
    seeds = [s for s in supports if origin in s]
    incompat = {
        i: [j for j, s2 in enumerate(supports) if not _compatible(box, supports[i], s2)]
        for i in range(len(supports))
    }

    phi_cache = {}

    def phi_over_mult(ids):
        cluster = [supports[i] for i in ids]
        edges = tuple(_incompat_edges(box, cluster))
        key = (len(ids), edges)
        if key not in phi_cache:
            phi_cache[key] = _phi_connected(len(ids), list(edges))
        mult = 1.0
        for _, g in itertools.groupby(ids):
            mult *= math.factorial(len(list(g)))
        return phi_cache[key] / mult

    shells = {}
    total_sum = 0.0
    count = 0
    seen = set()
    stack = [(tuple([sid[s]]), abs(table.weights[s])) for s in seeds]
    for ids, _ in stack:
        seen.add(ids)
    while stack:
        ids, wprod = stack.pop()
        cluster = [supports[i] for i in ids]
        union = set().union(*cluster)
        if origin in union:
            phi = phi_over_mult(list(ids))
            if phi != 0.0:
                contrib = phi
                for i in ids:
                    contrib *= table.weights[supports[i]]
                contrib /= len(union)
                val = _require_real(contrib)
                total_sum += val
                size = sum(len(c) for c in cluster)
                shells[size] = shells.get(size, 0.0) + abs(val)
                count += 1
        if len(ids) >= k_cutoff:
            continue
        grow = set()
        for i in ids:
            grow.update(incompat[i])
        for j in sorted(grow):
            w2 = wprod * abs(table.weights[supports[j]])
            if w2 < weight_floor:
                continue
            new = tuple(sorted(ids + (j,)))
            if new not in seen:
                seen.add(new)
                stack.append((new, w2))

    sizes = sorted(shells)
    mags = [shells[s] for s in sizes]
    diverging = any(
        mags[i] <= mags[i + 1] <= mags[i + 2] for i in range(len(mags) - 2)
    )
    if diverging:
        warnings.warn("cluster shells stopped decreasing", DivergenceWarning)
    tail = mags[-1] if mags else 0.0
    f = float(table.f0[origin]) - total_sum / beta
    return ClusterFreeEnergy(
        f=f, shells=shells, tail_indicator=tail, diverging=diverging,
        cluster_count=count,
    )


def _require_real(z):
    if abs(z.imag if isinstance(z, complex) else 0.0) > IM_TOL:
        raise InvalidArgumentError(f"cluster contribution has imaginary part {z.imag:.2e}")
    return float(z.real if isinstance(z, complex) else z)


# ---------------------------------------------------------------------------
# Theorem-style condition report
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    condition_value: float       # beta * ||H||*_r
    condition_ok: bool
    bound_violations: list       # supports whose weight exceeds the bound
    max_bound_ratio: float
    star_norm: float
    r: float


def weight_and_condition_check(box, params, pot, beta, r, table=None,
                               size_cutoff=WEIGHT_SIZE_LIMIT, nmax=1):
    """Check |w(A)| <= (N+1)^|A| e^{-r|A|} e^{|A| ||H||*_r} and the smallness
    condition beta ||H||*_r < 1.  Report-only; nothing is raised."""
    if table is None:
        table = build_weight_table(box, params, pot, beta, size_cutoff, nmax=nmax)
    spec, _ = build_interaction(box, None, params, pot, nmax=nmax)
    star = interaction_norm(spec, NormSettings(r=r, mode="star"), box)
    violations = []
    max_ratio = 0.0
    for support, w in table.weights.items():
        a = len(support)
        bound = (nmax + 1) ** a * math.exp(-r * a) * math.exp(a * star)
        ratio = abs(w) / bound if bound > 0 else math.inf
        max_ratio = max(max_ratio, ratio)
        if ratio > 1.0:
            violations.append(support)
    return ConditionReport(
        condition_value=beta * star,
        condition_ok=beta * star < 1.0,
        bound_violations=violations,
        max_bound_ratio=max_ratio,
        star_norm=star,
        r=r,
    )
