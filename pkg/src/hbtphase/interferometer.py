"""Four-route beamsplitter network and the closed-form coincidence oracle.

Each route S_i -> D_j is one real amplitude factor ``s_ij`` and one
propagation phase ``k r_ij``; beamsplitter phase conventions are absorbed into
the effective path lengths.  A detector either sits behind a linear analyzer
(the usual case) or accepts both polarizations (``analyzer angle = None``).

Sign convention.  Fields pick up ``exp(-i k r)`` along a route and
``phi34 = alpha4 - alpha3``.  Propagating R and L through the analyzers then
gives the fringe argument ``Delta + 2 phi34 = Delta + Omega/2`` with
``Omega = 4 phi34`` the signed solid angle of R -> P3 -> L -> P4.  The
Pancharatnam phase of that cycle is ``2 (alpha4 - alpha3)``, so
``Omega / 2 = GEOMETRIC_PHASE_SIGN * pancharatnam_phase(R, P3, L, P4)`` with
``GEOMETRIC_PHASE_SIGN = +1``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .polarization import (
    JonesVector,
    analyzer_cycle,
    circular_state,
    linear_state,
    pancharatnam_phase,
)

GEOMETRIC_PHASE_SIGN = 1

#: Amplitude factor of one route through two 50:50 beamsplitters.
BALANCED_SPLIT = 0.5

ROUTES = ("13", "14", "23", "24")


class UnsupportedConfigurationError(ValueError):
    pass


class ZeroIntensityError(ValueError):
    pass


@dataclass(frozen=True)
class InterferometerGeometry:
    r13: float = 1.0
    r14: float = 1.0
    r23: float = 1.0
    r24: float = 1.0
    wavelength: float = 852e-9
    source1_pol: JonesVector = field(default_factory=lambda: circular_state("R"))
    source2_pol: JonesVector = field(default_factory=lambda: circular_state("L"))
    analyzer3_angle: float | None = 0.0
    analyzer4_angle: float | None = 0.0
    splitting: tuple[float, float, float, float] = (BALANCED_SPLIT,) * 4

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")
        for name in ("r13", "r14", "r23", "r24"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if len(self.splitting) != 4 or not all(0.0 <= s <= 1.0 for s in self.splitting):
            raise ValueError("splitting factors must be four values in [0, 1]")

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def phi34(self) -> float:
        if self.analyzer3_angle is None or self.analyzer4_angle is None:
            raise UnsupportedConfigurationError("phi34 needs analyzers at both detectors")
        return self.analyzer4_angle - self.analyzer3_angle

    def path(self, route: str) -> float:
        return getattr(self, "r" + route)

    def split(self, route: str) -> float:
        return self.splitting[ROUTES.index(route)]

    def with_analyzers(self, alpha3, alpha4) -> "InterferometerGeometry":
        return replace(self, analyzer3_angle=alpha3, analyzer4_angle=alpha4)

    def with_propagation_phase(self, delta: float) -> "InterferometerGeometry":
        """Copy with r13 adjusted so that ``propagation_phase`` equals ``delta``."""
        base = propagation_phase(replace(self, r13=self.r14 + self.r23 - self.r24))
        r13 = self.r14 + self.r23 - self.r24 + (delta - base) / self.k
        if r13 < 0:
            r13 += self.wavelength * math.ceil(-r13 / self.wavelength)
        return replace(self, r13=r13)


def propagation_phase(geom: InterferometerGeometry) -> float:
    return geom.k * ((geom.r13 - geom.r14) - (geom.r23 - geom.r24))


def _analyzer_rows(angle: float | None) -> list[JonesVector]:
    # bras of the detected polarization channels
    if angle is None:
        return [linear_state(0.0), linear_state(math.pi / 2)]
    return [linear_state(angle)]


def route_amplitudes(geom: InterferometerGeometry) -> dict[str, np.ndarray]:
    """Complex factor multiplying the source field on each route, per detected channel."""
    k = geom.k
    # a phase common to all routes drops out; measuring paths from the shortest
    # one keeps k * r small and the phases accurate
    ref = min(geom.path(r) for r in ROUTES)
    pols = {"1": geom.source1_pol, "2": geom.source2_pol}
    angles = {"3": geom.analyzer3_angle, "4": geom.analyzer4_angle}
    out = {}
    for route in ROUTES:
        src, det = route[0], route[1]
        proj = np.array([row.inner(pols[src]) for row in _analyzer_rows(angles[det])])
        out[route] = geom.split(route) * cmath.exp(-1j * k * (geom.path(route) - ref)) * proj
    return out


def fields_at_detectors(E1, E2, geom: InterferometerGeometry):
    """Post-analyzer scalar fields ``(E3, E4)``.

    Both detectors need analyzers; for accept-all detectors use
    ``detector_intensities``.
    """
    if geom.analyzer3_angle is None or geom.analyzer4_angle is None:
        raise UnsupportedConfigurationError("scalar fields need analyzers at both detectors")
    c = route_amplitudes(geom)
    E1 = np.asarray(E1)
    E2 = np.asarray(E2)
    E3 = c["13"][0] * E1 + c["23"][0] * E2
    E4 = c["14"][0] * E1 + c["24"][0] * E2
    return E3, E4


def detector_intensities(E1, E2, geom: InterferometerGeometry):
    """Detected intensities ``(I3, I4)``, summing channels of accept-all detectors."""
    c = route_amplitudes(geom)
    E1 = np.asarray(E1)
    E2 = np.asarray(E2)
    I3 = sum(np.abs(c["13"][p] * E1 + c["23"][p] * E2) ** 2 for p in range(len(c["13"])))
    I4 = sum(np.abs(c["14"][p] * E1 + c["24"][p] * E2) ** 2 for p in range(len(c["14"])))
    return I3, I4


def _is_circular(state: JonesVector, handedness: str) -> bool:
    return state.equal_up_to_phase(circular_state(handedness), tol=1e-12)


def geometric_half_solid_angle(geom: InterferometerGeometry, sign: int = GEOMETRIC_PHASE_SIGN) -> float:
    """``Omega / 2`` for the R -> P3 -> L -> P4 pair cycle, in (-pi, pi]."""
    cycle = analyzer_cycle(geom.analyzer3_angle, geom.analyzer4_angle)
    return sign * pancharatnam_phase(cycle)


def analytic_coincidence(geom: InterferometerGeometry, sign: int = GEOMETRIC_PHASE_SIGN) -> float:
    """Closed-form ``C = 3/2 + cos(Delta + Omega/2) / 2``.

    Valid for balanced splitting, equal source intensities and R/L sources;
    anything else raises ``UnsupportedConfigurationError``.
    """
    if not all(abs(s - geom.splitting[0]) <= 1e-15 for s in geom.splitting) or geom.splitting[0] == 0:
        raise UnsupportedConfigurationError("closed form needs balanced splitting")
    if not (_is_circular(geom.source1_pol, "R") and _is_circular(geom.source2_pol, "L")):
        raise UnsupportedConfigurationError("closed form needs source1 = R and source2 = L")
    if geom.analyzer3_angle is None or geom.analyzer4_angle is None:
        raise UnsupportedConfigurationError("closed form needs analyzers at both detectors")
    arg = propagation_phase(geom) + geometric_half_solid_angle(geom, sign)
    return 1.5 + 0.5 * math.cos(arg)


def detector_moments(geom: InterferometerGeometry, I1: float, I2: float):
    """Mean intensities and channel cross-moments for Gaussian source fields.

    Returns ``(<I3>, <I4>, M)`` with ``M[p, q] = <E3_p E4_q*>``.
    """
    if I1 < 0 or I2 < 0 or (I1 == 0 and I2 == 0):
        raise ValueError("source intensities must be >= 0 and not both zero")
    c = route_amplitudes(geom)
    mean3 = float(np.sum(np.abs(c["13"]) ** 2) * I1 + np.sum(np.abs(c["23"]) ** 2) * I2)
    mean4 = float(np.sum(np.abs(c["14"]) ** 2) * I1 + np.sum(np.abs(c["24"]) ** 2) * I2)
    cross = np.outer(c["13"], c["14"].conj()) * I1 + np.outer(c["23"], c["24"].conj()) * I2
    return mean3, mean4, cross


def analytic_coincidence_general(geom: InterferometerGeometry, I1: float, I2: float) -> float:
    """Zero-lag ``G2_34`` from the Gaussian moment theorem.

    For circular Gaussian fields ``<I3 I4> = <I3><I4> + sum_pq |<E3_p E4_q*>|^2``,
    which covers unbalanced routes, unequal sources and accept-all detectors.
    """
    mean3, mean4, cross = detector_moments(geom, I1, I2)
    if mean3 <= 0 or mean4 <= 0:
        raise ZeroIntensityError("zero mean intensity at a detector")
    return 1.0 + float(np.sum(np.abs(cross) ** 2)) / (mean3 * mean4)


def analytic_auto(geom: InterferometerGeometry, I1: float, I2: float, detector: int) -> float:
    """Zero-lag ``G2_jj`` at one detector; 2 for a single analyzed channel."""
    c = route_amplitudes(geom)
    a, b = ("13", "23") if detector == 3 else ("14", "24")
    # channel covariance matrix of the detected field
    cov = np.outer(c[a], c[a].conj()) * I1 + np.outer(c[b], c[b].conj()) * I2
    mean = float(np.real(np.trace(cov)))
    if mean <= 0:
        raise ZeroIntensityError("zero mean intensity at the detector")
    return 1.0 + float(np.sum(np.abs(cov) ** 2)) / mean**2
