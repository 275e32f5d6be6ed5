"""CSV and JSON persistence for experiment outputs."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .experiments import BoxplotStats, ReplicationValues


@dataclass
class Table:
    header: Sequence[str]
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.9g}"
    return str(x)


def write_csv(table, path) -> None:
    """UTF-8, comma separated, header row, 9 significant digits, LF line endings."""
    header = table.header
    rows: Iterable = table.rows() if callable(getattr(table, "rows", None)) else table.rows
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def boxplot_table(stats: dict, key: str = "dim") -> Table:
    t = Table([key, "n", "min", "q1", "median", "q3", "max", "mean"])
    for k, s in stats.items():
        t.rows.append([k, s.n, s.min, s.q1, s.median, s.q3, s.max, s.mean])
    return t


def replication_table(values: list[ReplicationValues], key: str = "dim") -> Table:
    t = Table([key, "rep", "seed", "p", "inv_p"])
    for rv in values:
        for r, (seed, p) in enumerate(zip(rv.seeds, rv.p)):
            inv = math.inf if p == 0 else 1.0 / p
            t.rows.append([rv.key, r, seed, p, inv])
    return t


def report_table(reports) -> Table:
    t = Table(["name", "pass", "n", "estimate", "target", "stderr"])
    for rep in reports:
        t.rows.append([rep.name, rep.passed, rep.n, rep.estimate, rep.target, rep.stderr])
    return t


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, BoxplotStats):
        return asdict(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_summary(summary: dict, path) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")


def read_summary(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
