"""End-to-end Monte Carlo: sources -> network -> detectors -> correlators."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .correlation import (
    CorrelationAccumulator,
    CorrelationCurve,
    Estimate,
    block_length_for,
    channel_mean,
    g2_auto_zero,
    g2_cross,
    g2_cross_at,
)
from .detection import DetectorConfig, DetectorStream
from .interferometer import (
    GEOMETRIC_PHASE_SIGN,
    InterferometerGeometry,
    UnsupportedConfigurationError,
    analytic_coincidence,
    analytic_coincidence_general,
    detector_intensities,
)
from .source import SourceConfig, ThermalFieldStream

#: Two-sided 2-sigma tail probability.
TWO_SIGMA_P = 2 * stats.norm.sf(2.0)

MIN_THETA_POINTS = 8


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit child seed for ``(seed, keys...)``."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SimParams:
    n_bins: int
    dt: float
    source1: SourceConfig
    source2: SourceConfig
    detector3: DetectorConfig
    detector4: DetectorConfig
    detect: bool = True
    chunk_bins: int = 1 << 16
    block_factor: float = 8.0

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")

    @property
    def block_length(self) -> int:
        tau_c = max(self.source1.coherence_time, self.source2.coherence_time)
        return block_length_for(tau_c, self.dt, self.block_factor)

    def for_point(self, index: int) -> "SimParams":
        """Copy with every seed replaced by an independent child seed for one scan point."""
        return replace(
            self,
            source1=replace(self.source1, seed=derive_seed(self.source1.seed, index)),
            source2=replace(self.source2, seed=derive_seed(self.source2.seed, index)),
            detector3=replace(self.detector3, seed=derive_seed(self.detector3.seed, index)),
            detector4=replace(self.detector4, seed=derive_seed(self.detector4.seed, index)),
        )


@dataclass(frozen=True)
class PointResult:
    coincidence: Estimate
    mean3: Estimate
    mean4: Estimate
    auto3: Estimate
    auto4: Estimate
    accumulator: CorrelationAccumulator


def simulate_point(geom: InterferometerGeometry, params: SimParams) -> PointResult:
    """Run the full chain at one geometry and estimate zero-lag correlations."""
    s1 = ThermalFieldStream(params.source1)
    s2 = ThermalFieldStream(params.source2)
    d3 = DetectorStream(params.detector3)
    d4 = DetectorStream(params.detector4)
    B = params.block_length
    chunk = max(B, (params.chunk_bins // B) * B)
    acc = CorrelationAccumulator((0,), B, integer=params.detect)
    done = 0
    while done < params.n_bins:
        m = min(chunk, params.n_bins - done)
        E1 = s1.sample_block(m, params.dt)
        E2 = s2.sample_block(m, params.dt)
        I3, I4 = detector_intensities(E1, E2, geom)
        if params.detect:
            a = d3.process(I3, params.dt).counts
            b = d4.process(I4, params.dt).counts
        else:
            a, b = I3, I4
        acc.push_block(a, b)
        done += m
    return PointResult(
        coincidence=g2_cross_at(acc, 0),
        mean3=channel_mean(acc, "a"),
        mean4=channel_mean(acc, "b"),
        auto3=g2_auto_zero(acc, "a"),
        auto4=g2_auto_zero(acc, "b"),
        accumulator=acc,
    )


def oracle_coincidence(geom: InterferometerGeometry, params: SimParams, sign: int = GEOMETRIC_PHASE_SIGN) -> float:
    """Balanced closed form where it applies, otherwise the Gaussian-moment oracle."""
    I1, I2 = params.source1.mean_intensity, params.source2.mean_intensity
    if I1 == I2:
        try:
            return analytic_coincidence(geom, sign)
        except UnsupportedConfigurationError:
            pass
    return analytic_coincidence_general(geom, I1, I2)


@dataclass(frozen=True)
class FringeRow:
    theta: float
    phi34: float
    result: PointResult
    analytic: float


def scan_fringe(geom: InterferometerGeometry, thetas: Sequence[float], params: SimParams,
                threads: int = 1, sign: int = GEOMETRIC_PHASE_SIGN) -> list[FringeRow]:
    """Rotate the P3 half-wave plate by each theta, so that ``phi34`` grows by ``2 theta``.

    Every point gets its own child seeds, so rows are independent and the table
    does not depend on ``threads``.
    """
    thetas = [float(t) for t in thetas]
    if len(thetas) < MIN_THETA_POINTS:
        raise ValueError(f"need at least {MIN_THETA_POINTS} theta values")
    if geom.analyzer3_angle is None or geom.analyzer4_angle is None:
        raise UnsupportedConfigurationError("fringe scan needs analyzers at both detectors")

    def run(item):
        idx, theta = item
        g = geom.with_analyzers(geom.analyzer3_angle - 2 * theta, geom.analyzer4_angle)
        res = simulate_point(g, params.for_point(idx))
        return FringeRow(theta, g.phi34, res, oracle_coincidence(g, params, sign))

    return _map(run, list(enumerate(thetas)), threads)


@dataclass(frozen=True)
class FringeFit:
    offset: float
    amplitude: float
    phase: float
    frequency: float
    offset_err: float
    amplitude_err: float
    frequency_err: float
    rms_residual: float

    @property
    def period(self) -> float:
        return 2 * math.pi / self.frequency


def _design(phi, freq):
    return np.column_stack([np.ones_like(phi), np.cos(freq * phi), np.sin(freq * phi)])


def fit_fringe(phi34, values, errors=None, frequency: float = 2.0) -> FringeFit:
    """Fit ``A + B cos(w phi34 + delta)`` with free ``w`` started from ``frequency``.

    Without ``errors`` this is ordinary least squares and the parameter errors
    come from the residual scatter.
    """
    phi = np.asarray(phi34, float)
    y = np.asarray(values, float)
    sigma = None if errors is None else np.asarray(errors, float)
    X = _design(phi, frequency)
    w = np.ones_like(y) if sigma is None else 1.0 / sigma
    coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
    a0, c0, s0 = coef
    amp0 = math.hypot(c0, s0)
    delta0 = math.atan2(-s0, c0)

    def model(p, A, B, f, d):
        return A + B * np.cos(f * p + d)

    popt, pcov = optimize.curve_fit(
        model, phi, y, p0=[a0, amp0, frequency, delta0], sigma=sigma,
        absolute_sigma=sigma is not None, maxfev=20000,
    )
    A, Bamp, f, d = popt
    if Bamp < 0:
        Bamp, d = -Bamp, d + math.pi
    if f < 0:
        f, d = -f, -d
    d = math.remainder(d, 2 * math.pi)
    errs = np.sqrt(np.diag(pcov))
    resid = y - model(phi, *popt)
    return FringeFit(
        offset=float(A), amplitude=float(Bamp), phase=float(d), frequency=float(f),
        offset_err=float(errs[0]), amplitude_err=float(errs[1]), frequency_err=float(errs[2]),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass(frozen=True)
class ModulationTest:
    amplitude: float
    amplitude_err: float
    chi2: float
    p_value: float

    @property
    def consistent_with_zero(self) -> bool:
        """No modulation at the 2-sigma (two-sided 95.45 %) level."""
        return self.p_value > TWO_SIGMA_P


def modulation_test(phi34, values, errors, frequency: float = 2.0) -> ModulationTest:
    """Weighted test for a ``cos/sin(frequency * phi34)`` modulation.

    The two modulation coefficients are tested jointly (chi-square with two
    degrees of freedom) against zero.
    """
    phi = np.asarray(phi34, float)
    y = np.asarray(values, float)
    sigma = np.asarray(errors, float)
    X = _design(phi, frequency)
    W = 1.0 / sigma**2
    cov = np.linalg.inv(X.T @ (X * W[:, None]))
    coef = cov @ (X.T @ (W * y))
    b = coef[1:]
    cb = cov[1:, 1:]
    chi2 = float(b @ np.linalg.solve(cb, b))
    amp = float(math.hypot(*b))
    amp_err = float(math.sqrt(max(np.linalg.eigvalsh(cb))))
    return ModulationTest(amp, amp_err, chi2, float(math.exp(-chi2 / 2)))


@dataclass(frozen=True)
class SourceStats:
    tau: np.ndarray
    g11: CorrelationCurve
    g22: CorrelationCurve
    g12: CorrelationCurve
    samples1: np.ndarray
    samples2: np.ndarray
    coarse: bool


def source_statistics(cfg1: SourceConfig, cfg2: SourceConfig, dt: float, n_bins: int, lags,
                      detectors: tuple[DetectorConfig, DetectorConfig] | None = None,
                      block_factor: float = 8.0, threads: int = 1) -> SourceStats:
    """Auto- and cross-correlation curves of two independent sources.

    With ``detectors`` the curves are computed from photon counts (factorial
    moment at zero lag), otherwise from the intensities.
    """
    lags = np.unique(np.asarray(lags, dtype=np.int64))
    B = block_length_for(max(cfg1.coherence_time, cfg2.coherence_time), dt, block_factor)

    def generate(cfg):
        stream = ThermalFieldStream(cfg)
        return np.abs(stream.sample_block(n_bins, dt)) ** 2, stream.coarse

    (I1, c1), (I2, c2) = _map(generate, [cfg1, cfg2], threads)
    if detectors is not None:
        a = DetectorStream(detectors[0]).process(I1, dt).counts
        b = DetectorStream(detectors[1]).process(I2, dt).counts
        integer = True
    else:
        a, b = I1, I2
        integer = False

    def curve(pair):
        x, y = pair
        acc = CorrelationAccumulator.from_arrays(x, y, lags, B, integer=integer)
        cur = g2_cross(acc)
        if integer and x is y and 0 in lags:
            # shot-noise-free zero lag for a channel correlated with itself
            j = int(np.flatnonzero(lags == 0)[0])
            z = g2_auto_zero(acc, "a")
            cur.value[j], cur.stderr[j] = z.value, z.stderr
        return cur

    g11, g22, g12 = _map(curve, [(a, a), (b, b), (a, b)], threads)
    return SourceStats(lags * dt, g11, g22, g12, I1, I2, c1 or c2)
