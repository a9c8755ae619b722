"""Pseudo-thermal field synthesis.

A rotating ground-glass source behind a single-mode fibre is modelled as a
circular complex Gaussian field ``E(t)`` with mean intensity ``<|E|^2> = I0``
and a Gaussian field correlation

    |g1(tau)| = exp(-pi tau^2 / (2 tau_c^2)),

so that, through the Siegert relation ``G2 = 1 + |g1|^2`` for Gaussian
fields, the intensity correlation is ``1 + exp(-pi (tau/tau_c)^2)``.

Two generators are provided.  ``ThermalFieldStream`` filters white complex
Gaussian noise with a Gaussian kernel (overlap-save across blocks, exact
continuity).  ``scatterer_sum_block`` adds up many unit scatterers whose
phases drift at random Doppler frequencies; it is slower and kept as an
independent cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

#: Kernel half-width in units of tau_c; exp(-16 pi) is far below double precision noise.
KERNEL_HALF_WIDTH = 4.0

#: Sampling finer than tau_c / this is required for faithful correlation curves.
MIN_SAMPLES_PER_COHERENCE = 10

SPECTRAL = "spectral"
SCATTERER_SUM = "scatterer_sum"


class CoarseSamplingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SourceConfig:
    mean_intensity: float  # photons / s
    coherence_time: float  # s
    seed: int = 0
    generator_kind: str = SPECTRAL
    n_scatterers: int = 10_000

    def __post_init__(self):
        if not self.mean_intensity > 0:
            raise ValueError("mean_intensity must be > 0")
        if not self.coherence_time > 0:
            raise ValueError("coherence_time must be > 0")
        if self.generator_kind not in (SPECTRAL, SCATTERER_SUM):
            raise ValueError(f"unknown generator_kind {self.generator_kind!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def theoretical_g2(tau, coherence_time: float):
    if not coherence_time > 0:
        raise ValueError("coherence_time must be > 0")
    tau = np.asarray(tau, dtype=float)
    out = 1.0 + np.exp(-math.pi * (tau / coherence_time) ** 2)
    return float(out) if out.ndim == 0 else out


def field_correlation(tau, coherence_time: float):
    """Target ``|g1(tau)|``."""
    tau = np.asarray(tau, dtype=float)
    return np.exp(-math.pi * tau**2 / (2 * coherence_time**2))


def is_coarse(dt: float, coherence_time: float) -> bool:
    return dt > coherence_time / MIN_SAMPLES_PER_COHERENCE * (1 + 1e-12)


def gaussian_kernel(dt: float, coherence_time: float) -> np.ndarray:
    """Real filter whose autocorrelation is ``|g1|`` sampled on the ``dt`` grid.

    ``exp(-pi t^2/tau_c^2)`` convolved with itself gives
    ``exp(-pi t^2/(2 tau_c^2))`` up to normalisation; the taps are scaled to
    unit energy so the filtered unit-variance noise keeps unit variance.
    """
    half = int(math.ceil(KERNEL_HALF_WIDTH * coherence_time / dt))
    t = np.arange(-half, half + 1) * dt
    h = np.exp(-math.pi * (t / coherence_time) ** 2)
    return h / math.sqrt(np.sum(h * h))


def _complex_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    # unit variance: <|w|^2> = 1
    w = rng.standard_normal((n, 2))
    return (w[:, 0] + 1j * w[:, 1]) * math.sqrt(0.5)


@dataclass
class ThermalFieldStream:
    """Seeded, stateful generator of a pseudo-thermal field time series.

    Identical ``(config, dt, call sequence)`` gives bit-identical output.
    Successive ``sample_block`` calls continue the same process: the last
    ``len(kernel) - 1`` noise samples are carried over, so splitting a run
    into blocks only changes floating-point rounding.
    """

    config: SourceConfig
    time_index: int = 0
    dt: float | None = None
    coarse: bool = False
    _rng: np.random.Generator = field(init=False, repr=False)
    _kernel: np.ndarray | None = field(init=False, default=None, repr=False)
    _history: np.ndarray | None = field(init=False, default=None, repr=False)
    _scatterers: tuple | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.config.seed)

    def _bind_dt(self, dt: float) -> None:
        if self.dt is None:
            self.dt = dt
            self.coarse = is_coarse(dt, self.config.coherence_time)
            if self.coarse:
                warnings.warn(
                    f"dt = {dt:g} s exceeds tau_c/{MIN_SAMPLES_PER_COHERENCE}; "
                    "correlation curves are undersampled",
                    CoarseSamplingWarning,
                    stacklevel=3,
                )
            if self.config.generator_kind == SPECTRAL:
                self._kernel = gaussian_kernel(dt, self.config.coherence_time)
                self._history = _complex_normal(self._rng, len(self._kernel) - 1)
            else:
                self._scatterers = _draw_scatterers(
                    self._rng, self.config.n_scatterers, dt, self.config.coherence_time,
                    max(_REVOLUTION_SAMPLES, _revolution_length(0, dt, self.config.coherence_time)),
                )
        elif dt != self.dt:
            raise ValueError(f"stream is bound to dt = {self.dt:g} s, got {dt:g} s")

    def sample_block(self, n: int, dt: float) -> np.ndarray:
        """Return the next ``n`` complex field samples (sqrt(photons/s))."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if not dt > 0:
            raise ValueError("dt must be > 0")
        self._bind_dt(dt)
        amp = math.sqrt(self.config.mean_intensity)
        if self.config.generator_kind == SPECTRAL:
            noise = np.concatenate([self._history, _complex_normal(self._rng, n)])
            out = fftconvolve(noise, self._kernel, mode="valid")
            self._history = noise[len(noise) - (len(self._kernel) - 1):]
        else:
            out = _eval_scatterers(self._scatterers, self.time_index, n)
        self.time_index += n
        return amp * out


def sample_block(stream: ThermalFieldStream, n: int, dt: float) -> np.ndarray:
    return stream.sample_block(n, dt)


# Scatterer-sum model.  Each scatterer keeps a random phase and a random
# Doppler frequency drawn from a Gaussian of variance pi / tau_c^2, which gives
# <exp(i w tau)> = exp(-pi tau^2 / (2 tau_c^2)) = |g1(tau)|.  Frequencies are
# rounded to multiples of 2 pi / (P dt): the field is then periodic with the
# "disk revolution" of P samples and the scatterer sum is evaluated exactly
# with one inverse FFT of length P.

_REVOLUTION_SAMPLES = 1 << 21


def _revolution_length(n: int, dt: float, coherence_time: float) -> int:
    need = max(2 * n, int(64 * coherence_time / dt), 1024)
    return 1 << int(math.ceil(math.log2(need)))


def _draw_scatterers(rng, n_scatterers, dt, coherence_time, period):
    sigma = math.sqrt(math.pi) / coherence_time
    omega = rng.normal(0.0, sigma, n_scatterers)
    phase = rng.uniform(0.0, 2 * math.pi, n_scatterers)
    bins = np.rint(omega * dt * period / (2 * math.pi)).astype(np.int64) % period
    spectrum = np.zeros(period, dtype=complex)
    np.add.at(spectrum, bins, np.exp(1j * phase) / math.sqrt(n_scatterers))
    # one revolution of the field, computed exactly from the frequency bins
    field_ = np.fft.ifft(spectrum) * period
    return (field_,)


def _eval_scatterers(scatterers, start: int, n: int) -> np.ndarray:
    (field_,) = scatterers
    idx = (start + np.arange(n)) % len(field_)
    return field_[idx]


def scatterer_sum_block(n_scatterers: int, n: int, dt: float, config: SourceConfig) -> np.ndarray:
    """One block of the field ``E = sum_i E_i exp(i phi_i(t))``.

    Needs ``n_scatterers >= 100`` for thermal (central-limit) statistics;
    fewer is allowed but warned about.  A single scatterer gives a field of
    constant modulus.
    """
    if n_scatterers < 1:
        raise ValueError("n_scatterers must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if n_scatterers < 100:
        warnings.warn(
            f"{n_scatterers} scatterers is outside the central-limit regime",
            UserWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    period = _revolution_length(n, dt, config.coherence_time)
    sc = _draw_scatterers(rng, n_scatterers, dt, config.coherence_time, period)
    return math.sqrt(config.mean_intensity) * _eval_scatterers(sc, 0, n)
