"""Deterministic tabular reports: CSV with a commented header, or JSON.

Reports never embed wall-clock data; identical configs and seeds produce
byte-identical files (at threads = 1 the compute order is fixed too, but
rows are sorted before writing in any case).
"""

import json
import math
from dataclasses import dataclass, replace

from . import __version__
from .config import emit_config


def _echo(config):
    # the output path is I/O disposition, not run semantics; keep reports
    # byte-identical regardless of where they are written
    return emit_config(replace(config, out=None))


@dataclass
class Report:
    config: object
    columns: list
    rows: list          # list of tuples matching columns

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: tuple(_sort_key(v) for v in r))


def _sort_key(v):
    if isinstance(v, (int, float)):
        return (0, float(v), "")
    return (1, 0.0, str(v))


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(report, fh):
    own = isinstance(fh, (str, bytes))
    f = open(fh, "w") if own else fh
    try:
        f.write(f"# bosonlab {__version__}\n")
        for line in _echo(report.config).strip().splitlines():
            f.write(f"# {line}\n")
        f.write(",".join(report.columns) + "\n")
        for row in report.sorted_rows():
            f.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if own:
            f.close()


def write_json(report, fh):
    own = isinstance(fh, (str, bytes))
    f = open(fh, "w") if own else fh
    try:
        payload = {
            "version": __version__,
            "config": _echo(report.config),
            "columns": list(report.columns),
            "rows": [
                ["inf" if isinstance(v, float) and math.isinf(v) else v for v in row]
                for row in report.sorted_rows()
            ],
        }
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")
    finally:
        if own:
            f.close()


def write_report(report, path, fmt):
    if fmt == "json":
        write_json(report, path)
    else:
        write_csv(report, path)
