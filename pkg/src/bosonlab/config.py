"""Run-configuration text format: sections of key = value pairs.

The format is line-oriented; `#` starts a comment, `[section]` opens a
section.  Grids accept a single number, a comma list, or `start:step:stop`
(inclusive).  Validation reports every violation with its line number, not
just the first.  See README for the full key reference.
"""

import math
from dataclasses import dataclass, field, asdict

from .errors import ConfigError
from .model import PotentialSpec

ENGINES = ("ed", "cycles", "polymer", "worldline", "classical", "contours")
STOCHASTIC_ENGINES = ("cycles", "worldline", "contours")
FORMATS = ("csv", "json")
XI_KINDS = ("quadratic", "power", "nearest-neighbor")
METHODS = ("auto", "exact", "mcmc")


@dataclass(frozen=True)
class RunConfig:
    engine: str
    dims: tuple
    periodic: tuple
    nmax: int = 1
    alpha: float = 0.0
    hq: float = 0.0
    u0: float = math.inf
    u1: float = 0.0
    usqrt2: float = 0.0
    tail: tuple = ()
    cutoff: float = 1.5
    beta_grid: tuple = (1.0,)
    mu_grid: tuple = (0.0,)
    h_grid: tuple = (0.0,)
    t_grid: tuple = (0.0,)
    seed: int = None
    threads: int = 1
    fmt: str = "csv"
    out: str = None
    # engine options
    dmu: float = 1e-3
    odlro: str = "auto"
    xi: str = "nearest-neighbor"
    gamma: float = 3.0
    xi_cutoff: float = 6.0
    method: str = "auto"
    sweeps: int = 100000
    batches: int = 50
    n_list: tuple = (1, 2, 3)
    samples: int = 10000
    sector: int = None
    keep: int = 0
    r: float = 0.5
    size_cutoff: int = 4
    k_cutoff: int = 4
    slices: int = 8
    atol: float = 1e-9

    def potential(self):
        return PotentialSpec(onsite=self.u0, u1=self.u1, usqrt2=self.usqrt2,
                             tail=self.tail, cutoff=self.cutoff)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float(text):
    low = text.strip().lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    return float(text)


def _parse_grid(text):
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid syntax is start:step:stop")
        a, step, b = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(round((b - a) / step)) + 1
        if count < 1:
            raise ValueError("empty grid")
        return tuple(a + i * step for i in range(count))
    if "," in text:
        return tuple(float(p) for p in text.split(",") if p.strip())
    return (float(text),)


def _parse_dims(text):
    parts = [p for p in text.lower().replace("x", " ").split() if p]
    dims = tuple(int(p) for p in parts)
    if not dims or any(d < 1 for d in dims):
        raise ValueError("dims must be positive integers like 2x3")
    return dims


def _parse_tail(text):
    text = text.strip()
    if not text:
        return ()
    entries = []
    for item in text.split(","):
        d, v = item.split(":")
        entries.append((float(d), float(v)))
    return tuple(entries)


def _parse_int_list(text):
    return tuple(int(p) for p in text.split(",") if p.strip())


# (section, key) -> (attribute, parser)
_SCHEMA = {
    ("run", "engine"): ("engine", str.strip),
    ("run", "seed"): ("seed", lambda s: int(s)),
    ("run", "threads"): ("threads", lambda s: int(s)),
    ("run", "format"): ("fmt", str.strip),
    ("run", "out"): ("out", str.strip),
    ("box", "dims"): ("dims", _parse_dims),
    ("box", "periodic"): ("periodic", None),  # handled specially
    ("model", "nmax"): ("nmax", lambda s: int(s)),
    ("model", "alpha"): ("alpha", _parse_float),
    ("model", "hq"): ("hq", _parse_float),
    ("potential", "u0"): ("u0", _parse_float),
    ("potential", "u1"): ("u1", _parse_float),
    ("potential", "usqrt2"): ("usqrt2", _parse_float),
    ("potential", "tail"): ("tail", _parse_tail),
    ("potential", "cutoff"): ("cutoff", _parse_float),
    ("scan", "beta"): ("beta_grid", _parse_grid),
    ("scan", "mu"): ("mu_grid", _parse_grid),
    ("scan", "h"): ("h_grid", _parse_grid),
    ("scan", "t"): ("t_grid", _parse_grid),
    ("engine.ed", "dmu"): ("dmu", _parse_float),
    ("engine.ed", "odlro"): ("odlro", str.strip),
    ("engine.cycles", "xi"): ("xi", str.strip),
    ("engine.cycles", "gamma"): ("gamma", _parse_float),
    ("engine.cycles", "xi_cutoff"): ("xi_cutoff", _parse_float),
    ("engine.cycles", "method"): ("method", str.strip),
    ("engine.cycles", "sweeps"): ("sweeps", lambda s: int(s)),
    ("engine.cycles", "batches"): ("batches", lambda s: int(s)),
    ("engine.cycles", "n_list"): ("n_list", _parse_int_list),
    ("engine.worldline", "samples"): ("samples", lambda s: int(s)),
    ("engine.worldline", "sector"): ("sector", lambda s: None if s.strip() == "all" else int(s)),
    ("engine.worldline", "keep"): ("keep", lambda s: int(s)),
    ("engine.polymer", "r"): ("r", _parse_float),
    ("engine.polymer", "size_cutoff"): ("size_cutoff", lambda s: int(s)),
    ("engine.polymer", "k_cutoff"): ("k_cutoff", lambda s: int(s)),
    ("engine.contours", "slices"): ("slices", lambda s: int(s)),
    ("engine.contours", "samples"): ("samples", lambda s: int(s)),
    ("engine.contours", "keep"): ("keep", lambda s: int(s)),
    ("engine.classical", "atol"): ("atol", _parse_float),
}


def parse_config(text):
    """Parse and validate; raises ConfigError listing every violation."""
    violations = []
    values = {}
    periodic_raw = None
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            known = {s for s, _ in _SCHEMA}
            if section not in known:
                violations.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected key = value, got {line!r}")
            continue
        if section is None:
            violations.append(f"line {lineno}: key outside any known section")
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        entry = _SCHEMA.get((section, key))
        if entry is None:
            violations.append(f"line {lineno}: unknown key {key!r} in [{section}]")
            continue
        attr, parser = entry
        if attr == "periodic":
            periodic_raw = (val, lineno)
            continue
        try:
            values[attr] = parser(val)
        except (ValueError, TypeError) as exc:
            violations.append(f"line {lineno}: bad value for {key}: {exc}")

    if "engine" not in values:
        violations.append("missing required key: engine (section [run])")
    elif values["engine"] not in ENGINES:
        violations.append(f"unknown engine {values['engine']!r}; pick one of {ENGINES}")
    if "dims" not in values:
        violations.append("missing required key: dims (section [box])")

    dims = values.get("dims", (1,))
    if periodic_raw is not None:
        val, lineno = periodic_raw
        try:
            if "," in val:
                flags = tuple(_parse_bool(p) for p in val.split(","))
                if len(flags) != len(dims):
                    raise ValueError("one flag per axis")
            else:
                flags = (_parse_bool(val),) * len(dims)
            values["periodic"] = flags
        except ValueError as exc:
            violations.append(f"line {lineno}: bad value for periodic: {exc}")
    values.setdefault("periodic", (True,) * len(dims))

    engine = values.get("engine")
    if engine in STOCHASTIC_ENGINES and values.get("seed") is None:
        violations.append(f"engine {engine!r} requires a seed (key 'seed' in [run])")
    if values.get("fmt", "csv") not in FORMATS:
        violations.append(f"unknown format {values.get('fmt')!r}; pick csv or json")
    if values.get("xi", "nearest-neighbor") not in XI_KINDS:
        violations.append(f"unknown xi kind {values.get('xi')!r}")
    if values.get("method", "auto") not in METHODS:
        violations.append(f"unknown method {values.get('method')!r}")
    if values.get("threads", 1) < 1:
        violations.append("threads must be >= 1")
    if values.get("nmax", 1) < 1:
        violations.append("nmax must be >= 1")
    for grid_key in ("beta_grid", "mu_grid", "h_grid", "t_grid"):
        if grid_key in values and len(values[grid_key]) == 0:
            violations.append(f"grid {grid_key} is empty")
    if any(b <= 0 for b in values.get("beta_grid", (1.0,))):
        violations.append("beta grid values must be positive")
    if math.isinf(values.get("u0", math.inf)) and values.get("nmax", 1) != 1:
        violations.append("u0 = inf (hard-core) requires nmax = 1")

    if violations:
        raise ConfigError(violations)
    return RunConfig(**values)


def emit_config(config):
    """Canonical text for a RunConfig; parse(emit(c)) == c."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return "inf" if math.isinf(v) else repr(v)
        return str(v)

    lines = ["[run]", f"engine = {config.engine}"]
    if config.seed is not None:
        lines.append(f"seed = {config.seed}")
    lines += [f"threads = {config.threads}", f"format = {config.fmt}"]
    if config.out is not None:
        lines.append(f"out = {config.out}")
    lines += [
        "",
        "[box]",
        "dims = " + "x".join(str(d) for d in config.dims),
        "periodic = " + ",".join(fmt(p) for p in config.periodic),
        "",
        "[model]",
        f"nmax = {config.nmax}",
        f"alpha = {fmt(config.alpha)}",
        f"hq = {fmt(config.hq)}",
        "",
        "[potential]",
        f"u0 = {fmt(config.u0)}",
        f"u1 = {fmt(config.u1)}",
        f"usqrt2 = {fmt(config.usqrt2)}",
        "tail = " + ",".join(f"{fmt(d)}:{fmt(v)}" for d, v in config.tail),
        f"cutoff = {fmt(config.cutoff)}",
        "",
        "[scan]",
        "beta = " + ",".join(fmt(v) for v in config.beta_grid),
        "mu = " + ",".join(fmt(v) for v in config.mu_grid),
        "h = " + ",".join(fmt(v) for v in config.h_grid),
        "t = " + ",".join(fmt(v) for v in config.t_grid),
    ]
    lines += [
        "", "[engine.ed]", f"dmu = {fmt(config.dmu)}", f"odlro = {config.odlro}",
        "", "[engine.cycles]", f"xi = {config.xi}", f"gamma = {fmt(config.gamma)}",
        f"xi_cutoff = {fmt(config.xi_cutoff)}", f"method = {config.method}",
        f"sweeps = {config.sweeps}", f"batches = {config.batches}",
        "n_list = " + ",".join(str(v) for v in config.n_list),
        "", "[engine.worldline]", f"samples = {config.samples}",
        "sector = " + ("all" if config.sector is None else str(config.sector)),
        f"keep = {config.keep}",
        "", "[engine.polymer]", f"r = {fmt(config.r)}",
        f"size_cutoff = {config.size_cutoff}", f"k_cutoff = {config.k_cutoff}",
        "", "[engine.contours]", f"slices = {config.slices}",
        "", "[engine.classical]", f"atol = {fmt(config.atol)}",
    ]
    return "\n".join(lines) + "\n"
