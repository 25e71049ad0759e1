"""Space-time representation: configuration graph, Duhamel series, worldlines.

The trace of exp(-beta H) for a hard-core model equals the trace of
exp(beta (t A - V)) where A is the adjacency of the configuration graph (one
particle moved across one bond) and V the classical diagonal.  The worldline
sampler draws closed trajectories of the uniformized jump chain and reweights
them so that weighted averages estimate trace ratios; the endpoint
permutation of the particle lines is extracted for cycle statistics.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import lattice
from ._kernels import worldline_chunk
from .errors import InvalidArgumentError, SamplingError, SubcriticalityError, UnsupportedSizeError
from .hilbert import FockBasis
from .model import build_interaction, diagonal_energies
from .exactdiag import spectrum, thermodynamics

DUHAMEL_DIM_LIMIT = 4000


def neighbor_configs(occ, box, nmax=1):
    """States reachable by moving one particle across one bond (deduplicated)."""
    occ = tuple(int(v) for v in occ)
    out = set()
    for x, y in lattice.bonds(box):
        a, b = box.site_index(x), box.site_index(y)
        for frm, to in ((a, b), (b, a)):
            if occ[frm] > 0 and occ[to] < nmax:
                new = list(occ)
                new[frm] -= 1
                new[to] += 1
                out.add(tuple(new))
    return out


@dataclass
class ConfigGraph:
    """Configuration adjacency and unit-rate generator over a state set."""

    occupations: np.ndarray      # (S, nsites)
    adjacency: np.ndarray        # (S, S) 0/1
    generator: np.ndarray        # adjacency - diag(degree)
    neigh_state: np.ndarray      # (S, maxdeg) padded neighbour state indices
    neigh_from: np.ndarray
    neigh_to: np.ndarray
    degree: np.ndarray

    @property
    def size(self):
        return self.occupations.shape[0]


def _state_table(box, nmax, sector=None):
    basis = FockBasis(box, nmax)
    occ = basis.states()
    if sector is not None:
        occ = occ[occ.sum(axis=1) == sector]
        if len(occ) == 0:
            raise InvalidArgumentError(f"empty particle-number sector {sector}")
    return occ


def build_generator(box, nmax=1, sector=None, occupations=None):
    """Generator G: 1 on neighbour pairs, -|N(n)| on the diagonal."""
    occ = occupations if occupations is not None else _state_table(box, nmax, sector)
    codes = {tuple(int(v) for v in row): i for i, row in enumerate(occ)}
    size = len(occ)
    bond_idx = [(box.site_index(a), box.site_index(b)) for a, b in lattice.bonds(box)]
    lists = [[] for _ in range(size)]
    for i, row in enumerate(occ):
        state = tuple(int(v) for v in row)
        for a, b in bond_idx:
            for frm, to in ((a, b), (b, a)):
                if state[frm] > 0 and state[to] < nmax:
                    new = list(state)
                    new[frm] -= 1
                    new[to] += 1
                    j = codes.get(tuple(new))
                    if j is not None:
                        lists[i].append((j, frm, to))
    degree = np.array([len(l) for l in lists], dtype=np.int64)
    maxdeg = int(degree.max()) if size else 0
    neigh_state = np.zeros((size, max(maxdeg, 1)), dtype=np.int64)
    neigh_from = np.zeros_like(neigh_state)
    neigh_to = np.zeros_like(neigh_state)
    adjacency = np.zeros((size, size))
    for i, l in enumerate(lists):
        for slot, (j, frm, to) in enumerate(l):
            neigh_state[i, slot] = j
            neigh_from[i, slot] = frm
            neigh_to[i, slot] = to
            adjacency[i, j] = 1.0
    generator = adjacency - np.diag(degree.astype(float))
    return ConfigGraph(
        occupations=np.asarray(occ),
        adjacency=adjacency,
        generator=generator,
        neigh_state=neigh_state,
        neigh_from=neigh_from,
        neigh_to=neigh_to,
        degree=degree,
    )


def fk_identity_check(box, params, pot, beta):
    """Relative gap between Tr e^{-beta H} and Tr e^{beta (tA - V)}.

    Exact for hard-core states because every hopping matrix element is t.
    """
    if pot is not None and not pot.hard_core:
        raise UnsupportedSizeError("the identity is implemented for nmax = 1")
    if params.hq != 0.0:
        raise InvalidArgumentError("gauge-breaking terms are not diagonal")
    basis = FockBasis(box, nmax=1)
    _, H = build_interaction(box, basis, params, pot, families=("T", "V", "N", "P"))
    z_spec = thermodynamics(H, beta, box).Z

    graph = build_generator(box, nmax=1)
    vhat = diagonal_energies(box, pot, params, graph.occupations)
    m = params.t * graph.adjacency - np.diag(vhat)
    z_graph = float(np.exp(beta * np.linalg.eigvalsh(m)).sum())
    return abs(z_spec - z_graph) / z_spec


# ---------------------------------------------------------------------------
# Duhamel series with certified truncation
# ---------------------------------------------------------------------------


@dataclass
class DuhamelResult:
    terms: np.ndarray          # per-order contributions to Z
    partial_sums: np.ndarray
    bounds: np.ndarray         # a priori remainder bound after each order
    beta: float

    @property
    def Z(self):
        return float(self.partial_sums[-1])


def duhamel_series_Z(diag, T, beta, m_max):
    """Partial sums of Tr e^{-beta(D+T)} expanded in powers of T.

    Each order is evaluated exactly via one matrix exponential of the
    block-bidiagonal (Van Loan) matrix whose (0, m) block is the m-fold
    time-ordered integral.  The remainder after order m is bounded by
    (beta ||T||)^{m+1} / (m+1)! * e^{beta ||T||} * Tr e^{-beta D}.
    """
    if m_max < 0:
        raise InvalidArgumentError("m_max must be >= 0")
    diag = np.asarray(diag, dtype=float)
    tmat = np.asarray(T, dtype=complex)
    s = len(diag)
    if tmat.shape != (s, s):
        raise InvalidArgumentError("diag and T sizes disagree")
    if (m_max + 1) * s > DUHAMEL_DIM_LIMIT:
        raise UnsupportedSizeError("Van Loan block matrix would be too large")
    blocks = m_max + 1
    big = np.zeros((blocks * s, blocks * s), dtype=complex)
    a = -beta * np.diag(diag)
    b = -beta * tmat
    for i in range(blocks):
        big[i * s:(i + 1) * s, i * s:(i + 1) * s] = a
        if i + 1 < blocks:
            big[i * s:(i + 1) * s, (i + 1) * s:(i + 2) * s] = b
    exp_big = scipy.linalg.expm(big)
    terms = np.empty(blocks)
    for m in range(blocks):
        val = np.trace(exp_big[0:s, m * s:(m + 1) * s])
        terms[m] = val.real
    partial = np.cumsum(terms)
    tnorm = float(np.linalg.norm(tmat, 2))
    z_diag = float(np.exp(-beta * diag).sum())
    bounds = np.array([
        (beta * tnorm) ** (m + 1) / math.factorial(m + 1)
        * math.exp(beta * tnorm) * z_diag
        for m in range(blocks)
    ])
    return DuhamelResult(terms=terms, partial_sums=partial, bounds=bounds, beta=beta)


def duhamel_from_model(box, params, pot, beta, m_max, nmax=1):
    """Split H into classical diagonal + hopping and run the Duhamel series."""
    basis = FockBasis(box, nmax)
    graph = build_generator(box, nmax=nmax)
    if nmax != 1:
        raise UnsupportedSizeError("hopping off-diagonal is unit only for nmax = 1")
    diag = diagonal_energies(box, pot, params, graph.occupations)
    tmat = -params.t * graph.adjacency
    return duhamel_series_Z(diag, tmat, beta, m_max)


# ---------------------------------------------------------------------------
# worldline sampling
# ---------------------------------------------------------------------------


@dataclass
class Worldline:
    """Piecewise-constant trajectory on [0, beta] with jump records."""

    beta: float
    initial: np.ndarray
    jumps: list                  # (time, from_site, to_site), times increasing
    final: np.ndarray

    @property
    def closed(self):
        return bool(np.array_equal(self.initial, self.final))

    def occupation_at(self, site, tau):
        occ = int(self.initial[site])
        for time, frm, to in self.jumps:
            if time > tau:
                break
            if frm == site:
                occ -= 1
            if to == site:
                occ += 1
        return occ


@dataclass
class WorldlineSample:
    weights: np.ndarray
    permutations: np.ndarray     # (nsamples, nsites), -1 on unoccupied sites
    cycle_hist: np.ndarray       # weight-summed number of cycles per length
    z_ratio: float               # mean weight = Z e^{-beta shift} / nstates
    z_ratio_stderr: float
    z_estimate: float
    shift: float
    gamma: float
    nstates: int
    worldlines: list = field(default_factory=list)

    def weighted_fraction(self, mask):
        """Weighted frequency of samples selected by a boolean mask."""
        tot = self.weights.sum()
        return float(self.weights[mask].sum() / tot) if tot > 0 else 0.0


def sample_worldlines(box, params, pot, beta, seed, nsamples, sector=None, keep=0):
    """Closed trajectories of the rate-t jump chain, importance reweighted.

    Each trajectory is weighted by exp(integral of [t |N(n)| - V + mu N] dtau
    - beta * shift), so mean weight * nstates * e^{beta shift} estimates
    Tr e^{-beta H} over the chosen state set.  Returns per-sample endpoint
    permutations of the initially occupied sites.
    """
    if params.hq != 0.0:
        raise InvalidArgumentError("worldline sampling needs number conservation")
    graph = build_generator(box, nmax=1, sector=sector)
    nsites = box.nsites
    size = graph.size
    diag = diagonal_energies(box, pot, params, graph.occupations)
    t = params.t
    maxdeg = int(graph.degree.max()) if size else 0
    if t > 0 and maxdeg == 0:
        raise SamplingError("all states are blocked: no moves are possible")
    gamma = t * maxdeg
    lam = beta * gamma
    shift = float((t * graph.degree - diag).max())

    rng = np.random.default_rng(seed)
    init_states = rng.integers(0, size, size=nsamples)
    n_events = rng.poisson(lam, size=nsamples) if lam > 0 else np.zeros(nsamples, dtype=np.int64)
    n_events = n_events.astype(np.int64)
    offsets = np.zeros(nsamples, dtype=np.int64)
    np.cumsum(n_events[:-1], out=offsets[1:])
    total = int(n_events.sum())
    event_times = rng.random(total) * beta
    event_choices = rng.random(total)

    weights = np.empty(nsamples)
    perm_out = np.empty((nsamples, nsites), dtype=np.int64)
    cycle_hist = np.zeros(nsites + 1)
    keep = int(min(keep, nsamples))
    max_jumps = int(n_events[:keep].max()) if keep else 0
    jb_t = np.zeros((max(keep, 1), max(max_jumps, 1)))
    jb_f = np.zeros_like(jb_t, dtype=np.int64)
    jb_to = np.zeros_like(jb_f)
    jump_counts = np.zeros(max(keep, 1), dtype=np.int64)

    worldline_chunk(
        init_states.astype(np.int64),
        n_events,
        event_times,
        event_choices,
        offsets,
        graph.neigh_state,
        graph.neigh_from,
        graph.neigh_to,
        graph.degree,
        diag,
        graph.occupations.astype(np.int64),
        float(t),
        float(beta),
        float(gamma),
        shift,
        weights,
        perm_out,
        cycle_hist,
        jb_t,
        jb_f,
        jb_to,
        jump_counts,
        keep,
    )

    worldlines = []
    for s in range(keep):
        occ0 = graph.occupations[init_states[s]].copy()
        nj = int(jump_counts[s])
        order = np.argsort(jb_t[s, :nj], kind="stable")
        jumps = [(float(jb_t[s, j]), int(jb_f[s, j]), int(jb_to[s, j])) for j in order]
        occ = occ0.copy()
        for _, frm, to in jumps:
            occ[frm] -= 1
            occ[to] += 1
        worldlines.append(Worldline(beta=beta, initial=occ0, jumps=jumps, final=occ))

    mean = float(weights.mean())
    stderr = float(weights.std(ddof=1) / math.sqrt(nsamples)) if nsamples > 1 else 0.0
    z_est = mean * size * math.exp(beta * shift)
    return WorldlineSample(
        weights=weights,
        permutations=perm_out,
        cycle_hist=cycle_hist,
        z_ratio=mean,
        z_ratio_stderr=stderr,
        z_estimate=z_est,
        shift=shift,
        gamma=gamma,
        nstates=size,
        worldlines=worldlines,
    )


# ---------------------------------------------------------------------------
# exactly solvable ideal-gas cycles
# ---------------------------------------------------------------------------


@dataclass
class IdealGasCycles:
    z_modes: float
    z_permutation: float
    cycle_weights: dict          # j -> w_j = e^{beta mu j} Tr K^j / j
    mode_energies: np.ndarray
    n_truncation: int

    @property
    def mean_cycle_length(self):
        num = sum(j * j * w for j, w in self.cycle_weights.items())
        den = sum(j * w for j, w in self.cycle_weights.items())
        return num / den if den > 0 else 0.0


def single_particle_propagator(box, t, beta):
    """K = exp(-beta T1) with T1 = -t * adjacency; returns (K, eigenvalues)."""
    n = box.nsites
    adj = np.zeros((n, n))
    for x, y in lattice.bonds(box):
        i, j = box.site_index(x), box.site_index(y)
        adj[i, j] = adj[j, i] = 1.0
    t1 = -t * adj
    eps, vecs = np.linalg.eigh(t1)
    k = (vecs * np.exp(-beta * eps)) @ vecs.T
    return k, eps


def ideal_gas_cycle_analysis(box, beta, t, mu, n_truncation=None, weight_tol=1e-12):
    """Grand-canonical ideal lattice gas two ways: modes vs permutation cycles.

    Requires the subcritical condition e^{beta mu} lambda_max < 1.  The
    permutation sum is truncated at N where the next term falls below
    weight_tol relative to the running sum (or at `n_truncation`).
    """
    _, eps = single_particle_propagator(box, t, beta)
    lam = np.exp(-beta * eps)
    z_fug = math.exp(beta * mu)
    crit = z_fug * float(lam.max())
    if crit >= 1.0:
        raise SubcriticalityError(
            f"e^(beta mu) * lambda_max = {crit:.6g} >= 1: the mode sum diverges"
        )
    z_modes = float(np.prod(1.0 / (1.0 - z_fug * lam)))

    # cycle weights w_j until they are negligible
    weights = {}
    j = 1
    while True:
        w = (z_fug ** j) * float((lam ** j).sum()) / j
        weights[j] = w
        if w < weight_tol or j > 10000:
            break
        j += 1

    # canonical recursion Z_N = (1/N) sum_j C_j Z_{N-j}
    zs = [1.0]
    z_perm = 1.0
    n = 1
    while True:
        c = [float((lam ** jj).sum()) for jj in range(1, n + 1)]
        zn = sum(c[jj - 1] * zs[n - jj] for jj in range(1, n + 1)) / n
        zs.append(zn)
        term = (z_fug ** n) * zn
        z_perm += term
        if n_truncation is not None and n >= n_truncation:
            break
        if n_truncation is None and term < weight_tol * z_perm:
            break
        if n > 4000:
            raise UnsupportedSizeError("permutation sum failed to converge")
        n += 1

    return IdealGasCycles(
        z_modes=z_modes,
        z_permutation=float(z_perm),
        cycle_weights=weights,
        mode_energies=eps,
        n_truncation=n,
    )
