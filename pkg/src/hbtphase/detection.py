"""Semiclassical photodetection with efficiency, dark counts and dead time."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EmptyRecordError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 0.05
    dark_rate: float = 100.0  # counts / s
    dead_time: float = 45e-9  # s
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be in [0, 1]")
        if not self.dark_rate >= 0:
            raise ValueError("dark_rate must be >= 0")
        if not self.dead_time >= 0:
            raise ValueError("dead_time must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class CountRecord:
    counts: np.ndarray
    dt: float
    config: DetectorConfig | None = None
    lost: int = field(default=0, compare=False)  # events removed by dead time

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")

    @property
    def duration(self) -> float:
        return len(self.counts) * self.dt


def apply_dead_time(times: np.ndarray, dead_time: float, last_kept: float = -np.inf) -> np.ndarray:
    """Mask of events kept by a non-paralyzable detector.

    ``times`` must be sorted.  An event within ``dead_time`` of the previous
    *registered* event is lost and does not extend the dead interval.
    """
    n = len(times)
    if n == 0 or dead_time <= 0:
        return np.ones(n, dtype=bool)
    gaps = np.diff(times, prepend=last_kept)
    # an event more than one dead time after its predecessor is always registered
    keep = gaps > dead_time
    unsure = np.flatnonzero(~keep)
    if len(unsure) == 0:
        return keep
    sure_idx = np.where(keep, np.arange(n), -1)
    last_sure = np.maximum.accumulate(sure_idx)
    last_time = last_kept
    last_pos = -1
    for i in unsure:
        j = last_sure[i]
        if j > last_pos:
            last_time, last_pos = times[j], j
        if times[i] - last_time > dead_time:
            keep[i] = True
            last_time, last_pos = times[i], i
    return keep


class DetectorStream:
    """Stateful detector for chunked timelines.

    Keeps its RNG, the absolute bin offset and the time of the last
    registered event, so dead time carries across chunk edges.  Output is
    deterministic for a fixed chunking; a different chunking consumes the RNG
    in a different order and gives a statistically equivalent record.
    """

    def __init__(self, cfg: DetectorConfig, rng: np.random.Generator | None = None):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed) if rng is None else rng
        self.bin_offset = 0
        self.last_event = -np.inf  # in bins
        self.lost = 0

    def process(self, intensity, dt: float) -> CountRecord:
        intensity = np.asarray(intensity, dtype=float)
        if not dt > 0:
            raise ValueError("dt must be > 0")
        if np.any(intensity < 0):
            raise ValueError("intensities must be >= 0")
        cfg = self.cfg
        mean = (cfg.efficiency * intensity + cfg.dark_rate) * dt
        primary = self.rng.poisson(mean)
        n = len(primary)
        if cfg.dead_time <= 0:
            self.bin_offset += n
            return CountRecord(primary.astype(np.int64), dt, cfg)
        bins = np.repeat(np.arange(n), primary)
        offsets = self.rng.random(len(bins))
        # sort within each bin; bins are already ordered
        order = np.lexsort((offsets, bins))
        bins = bins[order]
        # event times in units of dt relative to this chunk's first bin
        times = bins + offsets[order]
        keep = apply_dead_time(times, cfg.dead_time / dt, self.last_event - self.bin_offset)
        if keep.any():
            self.last_event = self.bin_offset + times[np.flatnonzero(keep)[-1]]
        lost = int(len(keep) - keep.sum())
        self.lost += lost
        self.bin_offset += n
        counts = np.bincount(bins[keep], minlength=n).astype(np.int64)
        return CountRecord(counts, dt, cfg, lost=lost)


def detect(intensity, dt: float, cfg: DetectorConfig, rng: np.random.Generator | None = None) -> CountRecord:
    """Photon counts per bin for an intensity timeline in photons/s.

    Per bin the number of primary events is Poisson with mean
    ``(efficiency * I + dark_rate) * dt``; events are placed uniformly inside
    their bin and thinned by the dead time on the global timeline, so dead
    intervals carry across bin edges.
    """
    return DetectorStream(cfg, rng).process(intensity, dt)


def mean_rate(record: CountRecord) -> float:
    if len(record.counts) == 0:
        raise EmptyRecordError("record has no bins")
    return float(np.sum(record.counts)) / record.duration


def nonparalyzable_rate(true_rate, dead_time: float):
    """Registered rate ``R / (1 + R tau_d)``."""
    return true_rate / (1.0 + true_rate * dead_time)
