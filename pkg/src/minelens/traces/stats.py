"""The ten per-series statistics used as features."""

from __future__ import annotations

import math

import numpy as np

STATISTICS = ("Min", "Max", "Mean", "Median", "Kurt", "Skew", "Sem", "Std", "Mad", "CV")


def summarize(series) -> dict[str, float | None]:
    """Summary statistics of one timeseries' values; ``None`` marks an undefined statistic.

    Std and Sem use the n-1 denominator. Skew is the adjusted Fisher-Pearson
    coefficient (n >= 3) and Kurt the bias-corrected excess kurtosis (n >= 4);
    both are undefined for a constant series. CV is undefined at zero mean.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("cannot summarize an empty series")
    lo, hi = float(x.min()), float(x.max())
    constant = lo == hi
    mean = lo if constant else float(x.mean())
    dev = x - mean
    out: dict[str, float | None] = {
        "Min": lo,
        "Max": hi,
        "Mean": mean,
        "Median": float(np.median(x)),
        "Kurt": None,
        "Skew": None,
        "Sem": None,
        "Std": None,
        "Mad": 0.0 if constant else float(np.abs(dev).mean()),
        "CV": None,
    }
    if n >= 2:
        s = 0.0 if constant else math.sqrt(float(dev @ dev) / (n - 1))
        out["Std"] = s
        out["Sem"] = s / math.sqrt(n)
        if mean != 0:
            out["CV"] = s / mean
    if not constant:
        # shape moments are scale-free; normalizing keeps tiny spreads from underflowing
        z = dev / float(np.abs(dev).max())
        m2 = float(np.mean(z**2))
        if n >= 3:
            g1 = float(np.mean(z**3)) / m2**1.5
            out["Skew"] = math.sqrt(n * (n - 1)) / (n - 2) * g1
        if n >= 4:
            g2 = float(np.mean(z**4)) / m2**2 - 3.0
            out["Kurt"] = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return out
