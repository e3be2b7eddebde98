"""Empirical CDFs."""
from __future__ import annotations

import csv
import io

import numpy as np

from ..errors import InvalidParameter


def emit_cdf(samples) -> list:
    """``[(value, fraction <= value)]`` at each distinct sample value, ascending."""
    x = np.asarray(list(samples), dtype=float).ravel()
    if x.size == 0:
        raise InvalidParameter("cannot build a CDF from no samples")
    if np.isnan(x).any():
        raise InvalidParameter("CDF samples contain NaN")
    values, counts = np.unique(x, return_counts=True)
    frac = np.cumsum(counts) / x.size
    frac[-1] = 1.0
    return [(float(v), float(f)) for v, f in zip(values, frac)]


def cdf_csv(tables: dict, value_name: str) -> str:
    """Long-format CSV ``series, <value_name>, fraction`` for several CDFs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", value_name, "fraction"])
    for name in sorted(tables):
        for v, f in tables[name]:
            w.writerow([name, repr(v), repr(f)])
    return buf.getvalue()
