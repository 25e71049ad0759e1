"""Command-line driver: parse a config, run the selected engine, write rows.

Exit codes: 0 success, 2 validation failure, 3 engine error.  Grid points
are dispatched to a thread pool; rows are sorted before writing, so reports
do not depend on completion order.
"""

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import contours as contours_mod
from . import cycles as cycles_mod
from . import exactdiag, lattice, polymer, stochastic
from .config import RunConfig, parse_config
from .errors import BosonLabError, ConfigError, UnsupportedSizeError
from .hilbert import FockBasis
from .model import ModelParams, build_interaction, reference_energies, classical_ground_bruteforce
from .report import Report, write_report


def _grid_points(config):
    pts = []
    for beta in config.beta_grid:
        for mu in config.mu_grid:
            for h in config.h_grid:
                for t in config.t_grid:
                    pts.append((beta, mu, h, t))
    return pts


def _map_points(config, fn):
    pts = _grid_points(config)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(fn, pts))
    else:
        results = [fn(p) for p in pts]
    rows = []
    for chunk in results:
        rows.extend(chunk)
    return rows


def _params(config, point):
    beta, mu, h, t = point
    return ModelParams(t=t, mu=mu, h=h, alpha=config.alpha, hq=config.hq, beta=beta)


def _run_ed(config):
    box = lattice.build_box(config.dims, config.periodic)
    pot = config.potential()
    basis = FockBasis(box, config.nmax)
    if config.odlro == "auto":
        far = max(range(box.nsites),
                  key=lambda i: lattice.distance(box, box.site_coord(0), box.site_coord(i)))
        pair = (0, far)
    else:
        i, j = (int(p) for p in config.odlro.split(","))
        pair = (i, j)

    def point_rows(point):
        beta, mu, h, t = point
        params = _params(config, point)
        _, ham = build_interaction(box, basis, params, pot)
        spec = exactdiag.spectrum(ham)
        th = exactdiag.thermodynamics(ham, beta, box, mu=mu, spec=spec)
        rho, kappa = exactdiag.density_and_compressibility(
            box, basis, params, pot, beta, mu, dmu=config.dmu,
            families=("T", "V", "N", "P", "Q"))
        corr = exactdiag.odlro_correlator(
            ham, beta, box.site_coord(pair[0]), box.site_coord(pair[1]), basis, spec=spec)
        return [(beta, mu, h, t, th.Z, th.f, rho, kappa, corr.real, corr.imag)]

    columns = ["beta", "mu", "h", "t", "Z", "f", "rho", "kappa", "odlro_re", "odlro_im"]
    return columns, _map_points(config, point_rows)


def _run_classical(config):
    box = lattice.build_box(config.dims, config.periodic)
    pot = config.potential()
    odd = lattice.has_odd_periodic_dims(box)

    def point_rows(point):
        beta, mu, h, t = point
        ref = reference_energies(mu, h, pot.u1, pot.usqrt2, atol=config.atol)
        emin, configs = classical_ground_bruteforce(box, mu, h, pot, atol=config.atol)
        per_site = emin / box.nsites
        agree = int(abs(per_site - ref.minimum) <= max(config.atol, 1e-12))
        return [(beta, mu, h, t, emin, per_site, len(configs),
                 ref.minimum, "|".join(ref.argmin), agree, int(odd))]

    columns = ["beta", "mu", "h", "t", "e_min", "e_min_per_site", "n_minima",
               "ref_min", "ref_argmin", "agree", "odd_periodic_dims"]
    return columns, _map_points(config, point_rows)


def _run_cycles(config):
    box = lattice.build_box(config.dims, config.periodic)

    def point_rows(point):
        beta, mu, h, t = point
        spec = cycles_mod.XiSpec(kind=config.xi, beta=beta, gamma=config.gamma,
                                 cutoff=config.xi_cutoff)
        method = config.method
        if method == "auto":
            method = "exact" if box.nsites <= cycles_mod.BRUTE_FORCE_SITE_LIMIT else "mcmc"
        if method == "exact":
            stats = cycles_mod.brute_force_distribution(box, spec)
        else:
            stats = cycles_mod.mcmc_sample(box, spec, config.sweeps, config.seed,
                                           batches=config.batches)
        est = cycles_mod.long_cycle_estimators(stats, config.n_list)
        rows = []
        for length in range(1, box.nsites + 1):
            err = (stats.origin_law_stderr[length]
                   if stats.origin_law_stderr is not None else 0.0)
            rows.append((beta, mu, h, t, "origin_law", length,
                         float(stats.origin_law[length]), float(err)))
            rows.append((beta, mu, h, t, "cycle_hist", length,
                         float(stats.histogram[length]), 0.0))
        for n, (val, err) in est.p_gt.items():
            rows.append((beta, mu, h, t, "p_gt", n, val, err))
            try:
                bound = cycles_mod.sac_bound(box, spec, n)
                rows.append((beta, mu, h, t, "sac_bound", n, bound, 0.0))
            except UnsupportedSizeError:
                pass
        rows.append((beta, mu, h, t, "mean_origin_length", 0,
                     est.mean_origin_length, 0.0))
        if stats.acceptance is not None:
            rows.append((beta, mu, h, t, "acceptance", 0, stats.acceptance, 0.0))
        return rows

    columns = ["beta", "mu", "h", "t", "record", "index", "value", "stderr"]
    return columns, _map_points(config, point_rows)


def _run_worldline(config):
    box = lattice.build_box(config.dims, config.periodic)
    pot = config.potential()

    def point_rows(point):
        beta, mu, h, t = point
        params = _params(config, point)
        res = stochastic.sample_worldlines(
            box, params, pot, beta, config.seed, config.samples,
            sector=config.sector, keep=config.keep)
        rows = [
            (beta, mu, h, t, "z_ratio", 0, res.z_ratio, res.z_ratio_stderr),
            (beta, mu, h, t, "z_estimate", 0, res.z_estimate,
             res.z_ratio_stderr * res.nstates * math.exp(beta * res.shift)),
            (beta, mu, h, t, "closed_fraction", 0,
             float((res.weights > 0).mean()), 0.0),
        ]
        tot = res.weights.sum()
        for length in range(1, box.nsites + 1):
            val = float(res.cycle_hist[length] / tot) if tot > 0 else 0.0
            rows.append((beta, mu, h, t, "cycle_hist", length, val, 0.0))
        return rows

    columns = ["beta", "mu", "h", "t", "record", "index", "value", "stderr"]
    return columns, _map_points(config, point_rows)


def _run_polymer(config):
    box = lattice.build_box(config.dims, config.periodic)
    pot = config.potential()

    def point_rows(point):
        beta, mu, h, t = point
        params = _params(config, point)
        table = polymer.build_weight_table(box, params, pot, beta,
                                           size_cutoff=config.size_cutoff,
                                           nmax=config.nmax)
        cf = polymer.cluster_free_energy(box, table, k_cutoff=config.k_cutoff)
        rep = polymer.weight_and_condition_check(box, params, pot, beta, config.r,
                                                 table=table, nmax=config.nmax)
        rows = []
        for support, w in sorted(table.weights.items()):
            name = "+".join(str(s) for s in support)
            rows.append((beta, mu, h, t, "weight", name, w.real, w.imag))
        rows += [
            (beta, mu, h, t, "f0", "site0", float(table.f0[0]), 0.0),
            (beta, mu, h, t, "cluster_f", "", cf.f, 0.0),
            (beta, mu, h, t, "tail_indicator", "", cf.tail_indicator, 0.0),
            (beta, mu, h, t, "diverging", "", float(cf.diverging), 0.0),
            (beta, mu, h, t, "star_norm", f"r={config.r}", rep.star_norm, 0.0),
            (beta, mu, h, t, "condition_value", "", rep.condition_value, 0.0),
            (beta, mu, h, t, "condition_ok", "", float(rep.condition_ok), 0.0),
            (beta, mu, h, t, "bound_violations", "", float(len(rep.bound_violations)), 0.0),
        ]
        return rows

    columns = ["beta", "mu", "h", "t", "record", "label", "value", "value2"]
    return columns, _map_points(config, point_rows)


def _run_contours(config):
    box = lattice.build_box(config.dims, config.periodic)
    pot = config.potential()

    def point_rows(point):
        beta, mu, h, t = point
        params = _params(config, point)
        res = stochastic.sample_worldlines(
            box, params, pot, beta, config.seed, config.samples,
            sector=config.sector, keep=config.samples)
        rows = []
        for i, wl in enumerate(res.worldlines):
            if not wl.closed:
                continue
            cs = contours_mod.extract_contours(
                contours_mod.SpaceTimeConfig(wl, config.slices), box)
            winds_space = 0
            winds_time = 0
            largest = 0
            excited = 0
            for c in cs.contours:
                w = contours_mod.detect_winding(c, box, config.slices)
                winds_space += int(any(w[ax] for ax in range(box.ndim)))
                winds_time += int(w["time"])
                largest = max(largest, len(c.support))
                excited += len(c.support)
            rows.append((beta, mu, h, t, i, len(cs.contours), excited, largest,
                         winds_space, winds_time, int(cs.admissible)))
        return rows

    columns = ["beta", "mu", "h", "t", "sample", "n_contours", "excited_cells",
               "largest_support", "winding_space", "winding_time", "admissible"]
    return columns, _map_points(config, point_rows)


_RUNNERS = {
    "ed": _run_ed,
    "classical": _run_classical,
    "cycles": _run_cycles,
    "worldline": _run_worldline,
    "polymer": _run_polymer,
    "contours": _run_contours,
}


def run_and_report(config):
    """Execute the configured engine over the grid; returns a Report."""
    columns, rows = _RUNNERS[config.engine](config)
    return Report(config=config, columns=columns, rows=rows)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="bosonlab",
        description="Cross-validated lattice boson engines (see README for the "
                    "config format).")
    parser.add_argument("--config", required=True, help="path to a run config")
    parser.add_argument("--out", help="output path (overrides config)")
    parser.add_argument("--seed", type=int, help="seed (overrides config)")
    parser.add_argument("--threads", type=int, help="worker threads (overrides config)")
    parser.add_argument("--format", choices=("csv", "json"), dest="fmt",
                        help="output format (overrides config)")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.fmt is not None:
            overrides["fmt"] = args.fmt
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2

    try:
        report = run_and_report(config)
    except BosonLabError as exc:
        print(f"engine error [{config.engine}]: {exc}", file=sys.stderr)
        return 3

    if config.out:
        write_report(report, config.out, config.fmt)
        print(f"wrote {len(report.rows)} rows to {config.out}", file=sys.stderr)
    else:
        write_report(report, sys.stdout, config.fmt)
    return 0


if __name__ == "__main__":
    sys.exit(main())
