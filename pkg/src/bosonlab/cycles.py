"""Random-permutation cycle model: exact enumeration, MCMC, theorem bound.

The measure on permutations of the box sites is prod_x exp(-xi(x, pi(x))).
Small boxes are enumerated exactly; larger ones are sampled by a
transposition Metropolis chain.  The self-avoiding-cycle sum gives a
rigorous upper bound on P(origin in a cycle longer than n), checked exactly
wherever enumeration is possible.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import lattice
from ._kernels import mcmc_chunk, perm_cycle_stats
from .errors import InvalidArgumentError, SamplingError, UnsupportedSizeError

BRUTE_FORCE_SITE_LIMIT = 9
SAC_PATH_BUDGET = 50_000_000
XI_KINDS = ("quadratic", "power", "nearest-neighbor")


@dataclass(frozen=True)
class XiSpec:
    kind: str
    beta: float
    gamma: float = None
    cutoff: float = 6.0

    def __post_init__(self):
        if self.kind not in XI_KINDS:
            raise InvalidArgumentError(f"unknown xi kind {self.kind!r}")
        if self.beta <= 0:
            raise InvalidArgumentError("beta must be positive")
        if self.kind == "power":
            if self.gamma is None or self.gamma < 1:
                raise InvalidArgumentError("power kind needs gamma >= 1")


def _xi_of_distance(spec, d):
    if d == 0.0:
        return 0.0
    if spec.kind == "quadratic":
        return d * d / spec.beta
    if spec.kind == "power":
        return d ** spec.gamma / spec.beta
    if abs(d - 1.0) < 1e-9:
        return 1.0 / spec.beta
    return math.inf


def xi_value(spec, x, y, box):
    """xi between two sites, minimal-image distance on periodic axes."""
    return _xi_of_distance(spec, lattice.distance(box, x, y))


def xi_matrix(spec, box):
    """(n, n) table of xi values between all site pairs."""
    n = box.nsites
    sites = box.sites()
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = _xi_of_distance(spec, lattice.distance(box, sites[i], sites[j]))
            out[i, j] = out[j, i] = v
    return out


@dataclass
class SummabilityReport:
    total: float
    shells: dict                 # distance -> shell sum of exp(-xi)
    last_shell: float
    growing: bool


def summability_check(spec, ndim, cutoff=None):
    """sum_x exp(-xi(0, x)) over the cutoff ball in Z^d, with a growth flag."""
    cutoff = spec.cutoff if cutoff is None else cutoff
    rad = int(math.floor(cutoff + 1e-9))
    shells = {}
    for y in itertools.product(range(-rad, rad + 1), repeat=ndim):
        d = math.sqrt(sum(c * c for c in y))
        if d > cutoff + 1e-9:
            continue
        w = math.exp(-_xi_of_distance(spec, d))
        key = round(d, 9)
        shells[key] = shells.get(key, 0.0) + w
    dists = sorted(shells)
    mags = [shells[d] for d in dists if d > 0]
    growing = len(mags) >= 3 and mags[-1] >= mags[-2] >= mags[-3]
    return SummabilityReport(
        total=float(sum(shells.values())),
        shells=shells,
        last_shell=mags[-1] if mags else 0.0,
        growing=growing,
    )


def permutation_weight(spec, box, perm):
    """prod_x exp(-xi(x, pi(x))); exact zero when any factor is blocked."""
    perm = np.asarray(perm, dtype=np.int64)
    _check_perm(perm, box.nsites)
    neglog = xi_matrix(spec, box)[np.arange(len(perm)), perm]
    if np.isinf(neglog).any():
        return 0.0
    return float(np.exp(-neglog.sum()))


def _check_perm(perm, n):
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise InvalidArgumentError("not a permutation of the box sites")


# ---------------------------------------------------------------------------
# cycle statistics containers
# ---------------------------------------------------------------------------


@dataclass
class CycleStats:
    """Cycle-length data, exact or sampled.

    histogram[l] is the (expected) number of l-cycles per permutation;
    origin_law[l] is P(cycle through the origin has length l).
    """

    histogram: np.ndarray
    origin_law: np.ndarray
    nsites: int
    origin_length: int = None        # set for a single decomposed permutation
    cycles: list = None
    origin_law_stderr: np.ndarray = None
    exact: bool = False
    nsamples: int = 0
    acceptance: float = None

    def p_longer_than(self, n):
        return float(self.origin_law[n + 1:].sum())


def cycle_decompose(perm):
    """Disjoint cycles (rotation-canonical: smallest site first)."""
    perm = np.asarray(perm, dtype=np.int64)
    n = len(perm)
    _check_perm(perm, n)
    seen = np.zeros(n, dtype=bool)
    cycles = []
    hist = np.zeros(n + 1)
    origin_len = 0
    for s in range(n):
        if seen[s]:
            continue
        cyc = []
        cur = s
        while not seen[cur]:
            seen[cur] = True
            cyc.append(int(cur))
            cur = int(perm[cur])
        cycles.append(tuple(cyc))  # starts at its smallest element by scan order
        hist[len(cyc)] += 1
        if s == 0:
            origin_len = len(cyc)
    origin_law = np.zeros(n + 1)
    origin_law[origin_len] = 1.0
    return CycleStats(
        histogram=hist,
        origin_law=origin_law,
        nsites=n,
        origin_length=origin_len,
        cycles=cycles,
        exact=True,
        nsamples=1,
    )


def brute_force_distribution(box, spec):
    """Exact cycle law by enumerating all |box|! permutations (|box| <= 9)."""
    n = box.nsites
    if n > BRUTE_FORCE_SITE_LIMIT:
        raise UnsupportedSizeError(
            f"enumeration limited to {BRUTE_FORCE_SITE_LIMIT} sites, got {n}"
        )
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    neglog = xi_matrix(spec, box)
    finite = np.where(np.isinf(neglog), np.inf, neglog)
    exponents = finite[np.arange(n)[None, :], perms].sum(axis=1)
    weights = np.where(np.isinf(exponents), 0.0, np.exp(-exponents))
    z = float(weights.sum())
    if z <= 0:
        raise SamplingError("every permutation has zero weight")
    origin_len, hist = perm_cycle_stats(perms, weights)
    origin_law = np.zeros(n + 1)
    for length in range(1, n + 1):
        origin_law[length] = float(weights[origin_len == length].sum()) / z
    return CycleStats(
        histogram=hist / z,
        origin_law=origin_law,
        nsites=n,
        exact=True,
        nsamples=len(perms),
    )


# ---------------------------------------------------------------------------
# transposition Metropolis
# ---------------------------------------------------------------------------


def _proposal_candidates(n):
    """All partners b != a.  Range-restricted proposals look natural here but
    are not irreducible: on the 2x2 torus the plaquette 4-cycles are reached
    only by composing a transposition of a diagonal (blocked) pair, whose
    resulting moves are nearest-neighbour steps.  Unrestricted transpositions
    keep the proposal symmetric and reach the whole positive-weight class."""
    cand = np.zeros((n, max(n - 1, 1)), dtype=np.int64)
    for a in range(n):
        cand[a, : n - 1] = [b for b in range(n) if b != a]
    cand_len = np.full(n, n - 1, dtype=np.int64)
    return cand, cand_len


def mcmc_sample(box, spec, sweeps, seed, burn=None, batches=50, chains=1):
    """Sample the permutation measure by composing random transpositions.

    Proposals pick a site uniformly and a partner within interaction range;
    acceptance is min(1, weight ratio), which satisfies detailed balance.
    One sweep is |box| proposals.  Standard errors come from batch means
    over `batches` contiguous blocks (concatenated across chains).
    """
    if sweeps < 1:
        raise InvalidArgumentError("sweeps must be >= 1")
    n = box.nsites
    neglog = xi_matrix(spec, box)
    np.fill_diagonal(neglog, 0.0)
    cand, cand_len = _proposal_candidates(n)
    if n < 2:
        raise SamplingError("no transposition is possible: chain is immobile")
    if burn is None:
        burn = max(sweeps // 10, 10)
    batches = max(1, min(batches, sweeps))

    seeds = np.random.SeedSequence(seed).spawn(chains)
    batch_laws = []
    batch_hists = []
    total_hist = np.zeros(n + 1)
    total_counts = np.zeros(n + 1)
    accepted = 0
    proposed = 0
    for chain_seed in seeds:
        rng = np.random.default_rng(chain_seed)
        perm = np.arange(n, dtype=np.int64)
        if burn:
            u = rng.random((burn * n, 3))
            series = np.zeros(burn, dtype=np.int64)
            hist = np.zeros(n + 1)
            mcmc_chunk(perm, neglog, cand, cand_len, u, burn, series, hist)
        edges = np.linspace(0, sweeps, batches + 1, dtype=np.int64)
        for b in range(batches):
            nsw = int(edges[b + 1] - edges[b])
            if nsw == 0:
                continue
            u = rng.random((nsw * n, 3))
            series = np.zeros(nsw, dtype=np.int64)
            hist = np.zeros(n + 1)
            accepted += mcmc_chunk(perm, neglog, cand, cand_len, u, nsw, series, hist)
            proposed += nsw * n
            law = np.bincount(series, minlength=n + 1).astype(float) / nsw
            batch_laws.append(law)
            batch_hists.append(hist / nsw)
            total_hist += hist
            total_counts[1:] += np.bincount(series, minlength=n + 1)[1:]

    nmeas = chains * sweeps
    origin_law = total_counts / nmeas
    laws = np.array(batch_laws)
    stderr = laws.std(axis=0, ddof=1) / math.sqrt(len(laws)) if len(laws) > 1 else np.zeros(n + 1)
    return CycleStats(
        histogram=total_hist / nmeas,
        origin_law=origin_law,
        nsites=n,
        origin_law_stderr=stderr,
        exact=False,
        nsamples=nmeas,
        acceptance=accepted / proposed if proposed else 0.0,
    )


# ---------------------------------------------------------------------------
# estimators and the theorem bound
# ---------------------------------------------------------------------------


@dataclass
class LongCycleEstimates:
    p_gt: dict                   # n -> (estimate, stderr)
    mean_origin_length: float
    long_fraction: float         # fraction of sites in cycles longer than L
    threshold: int


def long_cycle_estimators(stats, n_list, threshold=None):
    """P(B_{>n}) for each n, mean origin-cycle length, long-cycle site fraction."""
    n = stats.nsites
    law = stats.origin_law
    p_gt = {}
    for nn in n_list:
        est = float(law[nn + 1:].sum())
        if stats.origin_law_stderr is not None:
            err = float(np.sqrt((stats.origin_law_stderr[nn + 1:] ** 2).sum()))
        else:
            err = 0.0
        p_gt[int(nn)] = (est, err)
    lengths = np.arange(n + 1)
    mean_len = float((lengths * law).sum())
    thr = int(threshold if threshold is not None else max(n_list))
    # histogram[l] counts l-cycles per permutation; l * hist / n = site fraction
    frac = float((lengths[thr + 1:] * stats.histogram[thr + 1:]).sum() / n)
    return LongCycleEstimates(
        p_gt=p_gt, mean_origin_length=mean_len, long_fraction=frac, threshold=thr
    )


def sac_bound(box, spec, n, length_limit=None):
    """sum over self-avoiding cycles through the origin with |c| > n of
    prod exp(-xi); an upper bound for P(B_{>n}) since Z(box minus c) <= Z(box).

    Cycles are oriented sequences (0, x_1, ..., x_{l-1}) of distinct sites;
    both orientations count, matching the event definition.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    nsites = box.nsites
    limit = int(length_limit if length_limit is not None else min(nsites, 9))
    neglog = xi_matrix(spec, box)
    np.fill_diagonal(neglog, np.inf)  # moves, not fixed points, build cycles
    allowed = [np.nonzero(np.isfinite(neglog[a]))[0] for a in range(nsites)]
    degrees = sorted((len(a) for a in allowed), reverse=True)
    budget = 1
    for d in degrees[:limit]:
        budget *= max(d, 1)
        if budget > SAC_PATH_BUDGET:
            raise UnsupportedSizeError("self-avoiding cycle enumeration too large")

    total = 0.0
    visited = np.zeros(nsites, dtype=bool)
    visited[0] = True

    def dfs(site, length, acc):
        nonlocal total
        if length > n and np.isfinite(neglog[site, 0]):
            total += math.exp(-(acc + neglog[site, 0]))
        if length >= limit:
            return
        for nxt in allowed[site]:
            if not visited[nxt]:
                visited[nxt] = True
                dfs(int(nxt), length + 1, acc + neglog[site, nxt])
                visited[nxt] = False

    dfs(0, 1, 0.0)
    return total
