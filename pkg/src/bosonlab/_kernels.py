"""Hot numeric kernels: numba-compiled loops with numpy fallbacks.

Every public function here dispatches on :data:`bosonlab._accel.HAVE_NUMBA`.
The numba path is a straight loop under ``@njit``; the fallback is either a
vectorized numpy equivalent (embarrassingly parallel kernels) or the same
loop source executed as plain python (sequential chains).  ``benchmarks/``
times the two against each other.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

# ---------------------------------------------------------------------------
# classical energies over all bitmask configurations
# ---------------------------------------------------------------------------


@njit(cache=True)
def _classical_energies_nb(J, w, n):
    total = 1 << n
    out = np.empty(total)
    for m in range(total):
        e = 0.0
        for a in range(n):
            if (m >> a) & 1:
                e += 0.5 * J[a, a] - w[a]
                for b in range(a + 1, n):
                    if (m >> b) & 1:
                        e += J[a, b]
        out[m] = e
    return out


def _classical_energies_np(J, w, n, chunk=1 << 16):
    total = 1 << n
    out = np.empty(total)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(np.float64)
        out[start : start + len(masks)] = (
            0.5 * np.einsum("ia,ab,ib->i", bits, J, bits) - bits @ w
        )
    return out


def classical_energies(J, w, n):
    """Energies 0.5 n.J.n - w.n for every mask in [0, 2^n), bit a = site a."""
    if HAVE_NUMBA:
        return _classical_energies_nb(J, w, n)
    return _classical_energies_np(J, w, n)


# ---------------------------------------------------------------------------
# permutation cycle statistics over an enumerated ensemble
# ---------------------------------------------------------------------------


@njit(cache=True)
def _perm_cycle_stats_nb(perms, weights):
    npm, n = perms.shape
    origin_len = np.empty(npm, dtype=np.int64)
    hist = np.zeros(n + 1)
    visited = np.zeros(n, dtype=np.uint8)
    for p in range(npm):
        for s in range(n):
            visited[s] = 0
        w = weights[p]
        for s in range(n):
            if visited[s]:
                continue
            length = 0
            cur = s
            while not visited[cur]:
                visited[cur] = 1
                cur = perms[p, cur]
                length += 1
            hist[length] += w
            if s == 0:
                origin_len[p] = length
    return origin_len, hist


def _perm_cycle_stats_np(perms, weights):
    npm, n = perms.shape
    rows = np.arange(npm)
    hist = np.zeros(n + 1)
    origin_len = None
    for start in range(n):
        cur = perms[:, start]
        length = np.ones(npm, dtype=np.int64)
        active = cur != start
        while active.any():
            cur = np.where(active, perms[rows, cur], cur)
            length += active
            active = cur != start
        # each l-cycle is seen from l of its sites; divide to count it once
        np.add.at(hist, length, weights / length)
        if start == 0:
            origin_len = length
    return origin_len, hist


def perm_cycle_stats(perms, weights):
    """Origin-cycle length per permutation and the weighted cycle histogram.

    hist[l] accumulates weight * (number of l-cycles); sum_l l*hist[l] equals
    n * sum(weights).
    """
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if HAVE_NUMBA:
        return _perm_cycle_stats_nb(perms, weights)
    return _perm_cycle_stats_np(perms, weights)


# ---------------------------------------------------------------------------
# transposition Metropolis for the permutation cycle measure
# ---------------------------------------------------------------------------


@njit(cache=True)
def _mcmc_chunk(perm, neglog, cand, cand_len, uniforms, nsweeps, origin_series, hist):
    n = perm.shape[0]
    u = 0
    accepts = 0
    visited = np.zeros(n, dtype=np.uint8)
    for sweep in range(nsweeps):
        for _ in range(n):
            a = int(uniforms[u, 0] * n)
            la = cand_len[a]
            if la > 0:
                b = cand[a, int(uniforms[u, 1] * la)]
                pa = perm[a]
                pb = perm[b]
                de = (neglog[a, pb] + neglog[b, pa]) - (neglog[a, pa] + neglog[b, pb])
                if de <= 0.0 or uniforms[u, 2] < np.exp(-de):
                    perm[a] = pb
                    perm[b] = pa
                    accepts += 1
            u += 1
        for s in range(n):
            visited[s] = 0
        for s in range(n):
            if visited[s]:
                continue
            length = 0
            cur = s
            while not visited[cur]:
                visited[cur] = 1
                cur = perm[cur]
                length += 1
            hist[length] += 1.0
            if s == 0:
                origin_series[sweep] = length
    return accepts


def mcmc_chunk(perm, neglog, cand, cand_len, uniforms, nsweeps, origin_series, hist):
    """Run `nsweeps` sweeps (n proposals each); record per-sweep cycle stats.

    The chain state `perm` is updated in place; `uniforms` must hold
    nsweeps * n rows of (site pick, partner pick, accept) variates.  With
    numba disabled the identical source runs uncompiled, so both paths
    consume the random stream the same way and agree bit for bit.
    """
    return _mcmc_chunk(perm, neglog, cand, cand_len, uniforms, nsweeps, origin_series, hist)


# ---------------------------------------------------------------------------
# closed worldline sampling on the configuration graph
# ---------------------------------------------------------------------------


@njit(cache=True)
def _worldline_chunk(
    init_states,
    n_events,
    event_times,
    event_choices,
    offsets,
    neigh_state,
    neigh_from,
    neigh_to,
    degree,
    diag,
    initial_occ,
    t,
    beta,
    gamma,
    shift,
    weights,
    perm_out,
    cycle_hist,
    jump_buf_times,
    jump_buf_from,
    jump_buf_to,
    jump_counts,
    keep,
):
    nsamples = init_states.shape[0]
    nsites = initial_occ.shape[1]
    site_particle = np.empty(nsites, dtype=np.int64)
    visited = np.zeros(nsites, dtype=np.uint8)
    for s in range(nsamples):
        i0 = init_states[s]
        k = n_events[s]
        off = offsets[s]
        times = np.sort(event_times[off : off + k])
        cur = i0
        for x in range(nsites):
            site_particle[x] = x if initial_occ[i0, x] > 0 else -1
        acc = 0.0
        prev = 0.0
        nj = 0
        for e in range(k):
            tau = times[e]
            acc += (tau - prev) * (t * degree[cur] - diag[cur])
            prev = tau
            u = event_choices[off + e]
            if gamma > 0.0:
                thr = t * degree[cur] / gamma
                if u < thr:
                    j = int(u * gamma / t)
                    if j >= degree[cur]:  # guard the u ~ thr rounding edge
                        j = degree[cur] - 1
                    frm = neigh_from[cur, j]
                    to = neigh_to[cur, j]
                    site_particle[to] = site_particle[frm]
                    site_particle[frm] = -1
                    cur = neigh_state[cur, j]
                    if s < keep:
                        jump_buf_times[s, nj] = tau
                        jump_buf_from[s, nj] = frm
                        jump_buf_to[s, nj] = to
                    nj += 1
        acc += (beta - prev) * (t * degree[cur] - diag[cur])
        if s < keep:
            jump_counts[s] = nj
        if cur != i0:
            weights[s] = 0.0
            perm_out[s, :] = -1
            continue
        w = np.exp(acc - beta * shift)
        weights[s] = w
        for x in range(nsites):
            perm_out[s, x] = -1
        for y in range(nsites):
            p = site_particle[y]
            if p >= 0:
                perm_out[s, p] = y
        # weighted cycle histogram over occupied sites
        for x in range(nsites):
            visited[x] = 0
        for x in range(nsites):
            if perm_out[s, x] < 0 or visited[x]:
                continue
            length = 0
            c = x
            while not visited[c]:
                visited[c] = 1
                c = perm_out[s, c]
                length += 1
            cycle_hist[length] += w


def worldline_chunk(*args):
    """Sample closed trajectories; see the wrapper in :mod:`bosonlab.stochastic`."""
    return _worldline_chunk(*args)
