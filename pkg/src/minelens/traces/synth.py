"""Deterministic synthetic profiler traces for miner and benign apps.

Miners run the CPU near full load (near 30% for a throttled share of them)
with short spikes to 100%, and drain the battery on average. Benign apps
show varied CPU load that stays below 90% and charge on average. Every app
gets all metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import METRICS, ProfEvent
from .matrix import BENIGN, MINER

DEFAULT_DURATION_S = 300
DEFAULT_PERIOD_S = 5
DEFAULT_THROTTLED_FRACTION = 0.2


@dataclass(frozen=True)
class SyntheticTraces:
    events: tuple[ProfEvent, ...]
    labels: dict[str, str]


def _round(a) -> np.ndarray:
    # values are stored at the precision they are written with, so CSV round-trips are exact
    return np.round(np.asarray(a, dtype=float), 6)


def _app_series(rng: np.random.Generator, miner: bool, throttled: bool, n: int) -> dict[str, np.ndarray]:
    # counters follow the baseline load; only the utilization reading carries the spikes
    if miner:
        level = 30.0 if throttled else 95.0
        base = np.clip(level + rng.normal(0, 3.0, n), 0, 100)
        util = base.copy()
        spikes = rng.choice(n, size=int(rng.integers(1, 5)), replace=False)
        util[spikes] = rng.uniform(98.5, 100.0, spikes.size)
        power = rng.normal(-700, 450) + rng.normal(0, 150, n)
        cpi = rng.uniform(0.8, 1.6)
        switches = rng.poisson(rng.uniform(100, 250), n).astype(float)
        faults = rng.poisson(rng.uniform(1, 60), n).astype(float)
        temp = rng.uniform(33, 40) + np.linspace(0, rng.uniform(0, 5), n) + rng.normal(0, 0.3, n)
        rx_step = rng.exponential(rng.uniform(200, 2e3), n)
        tx_step = rng.exponential(rng.uniform(100, 1e3), n)
    else:
        level = rng.uniform(2, 60)
        base = np.clip(level + rng.normal(0, rng.uniform(2, 10), n), 0, 100)
        bursts = (rng.random(n) < 0.05) * rng.uniform(5, 25, n)
        util = np.clip(base + bursts, 0, 90)
        power = rng.normal(500, 450) + rng.normal(0, 150, n)
        cpi = rng.uniform(1.1, 2.5)
        switches = rng.poisson(rng.uniform(20, 200), n).astype(float)
        faults = rng.poisson(rng.uniform(5, 200), n).astype(float)
        temp = rng.uniform(29, 38) + rng.normal(0, 0.5, n)
        burst = rng.random(n) < 0.2
        rx_step = burst * rng.exponential(rng.uniform(2e3, 5e4), n)
        tx_step = burst * rng.exponential(rng.uniform(5e2, 1e4), n)

    frac = base / 100.0
    cycles = frac * 2.0e9 * (1 + rng.normal(0, 0.05, n))
    cpi_t = cpi * (1 + rng.normal(0, 0.03, n))
    instructions = cycles / cpi_t
    return {
        "Battery Current": power / 3.85 + rng.normal(0, 10, n),
        "Battery Power": power,
        "CPU Branch Misses": instructions * rng.uniform(0.002, 0.01),
        "CPU Clock": 3.0e8 + 1.9e9 * frac + rng.normal(0, 2e7, n),
        "CPU Context Switches": switches,
        "CPU Cycles": cycles,
        "CPU Cycles/Instruction": cpi_t,
        "CPU Instructions": instructions,
        "CPU Page Faults": faults,
        "CPU Task Clock": frac * 1000.0 * (1 + rng.normal(0, 0.02, n)),
        "CPU Utilization Percent": util,
        "Memory Usage": rng.uniform(5e7, 4e8) + np.cumsum(rng.normal(0, 2e5, n)),
        "Rx Bytes (Total)": np.cumsum(rx_step),
        "Tx Bytes (Total)": np.cumsum(tx_step),
        "Temperature": temp,
    }


def generate_synthetic_traces(
    n_miner: int,
    n_benign: int,
    seed: int,
    duration_s: int = DEFAULT_DURATION_S,
    period_s: int = DEFAULT_PERIOD_S,
    throttled_fraction: float = DEFAULT_THROTTLED_FRACTION,
) -> SyntheticTraces:
    """Events for ``n_miner`` miners then ``n_benign`` benign apps, identical for a given seed."""
    if n_miner < 0 or n_benign < 0:
        raise ValueError("app counts must be non-negative")
    if period_s <= 0 or duration_s < 0:
        raise ValueError("period must be positive and duration non-negative")
    times = np.arange(0, duration_s * 1000 + 1, period_s * 1000, dtype=np.int64)
    n = times.size
    root = np.random.SeedSequence(seed)
    children = root.spawn(n_miner + n_benign)

    events: list[ProfEvent] = []
    labels: dict[str, str] = {}
    for idx, child in enumerate(children):
        miner = idx < n_miner
        app = f"com.synth.miner{idx:04d}" if miner else f"com.synth.benign{idx - n_miner:04d}"
        rng = np.random.default_rng(child)
        throttled = miner and rng.random() < throttled_fraction
        series = {k: _round(v) for k, v in _app_series(rng, miner, throttled, n).items()}
        labels[app] = MINER if miner else BENIGN
        for t_i, t in enumerate(times.tolist()):
            for metric in METRICS:
                events.append(ProfEvent(app, t, metric, float(series[metric][t_i])))
    return SyntheticTraces(tuple(events), labels)
