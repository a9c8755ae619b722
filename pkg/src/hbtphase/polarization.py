"""Jones calculus, Poincare-sphere geometry and the Pancharatnam connection.

Conventions (the only place they are fixed):

* Jones vectors are ``(a_x, a_y)`` in the lab x/y basis.
* Right circular is ``R = (1, i)/sqrt(2)``, left circular ``L = (1, -i)/sqrt(2)``.
* Stokes coordinates are ``s1 = |a_x|^2 - |a_y|^2``, ``s2 = 2 Re(a_x* a_y)``,
  ``s3 = 2 Im(a_x* a_y)``.  R sits at the north pole, L at the south pole and
  a linear state at angle ``alpha`` on the equator at azimuth ``2 alpha``.
* ``<a|b>`` is antilinear in the first slot.

With these choices the cycle R -> P(a) -> L -> P(b) -> R encloses the signed
solid angle ``4 (b - a)`` (counter-clockwise seen from outside is positive)
and its Pancharatnam phase is ``2 (b - a)``, i.e. always half the signed solid
angle.  How that phase enters the coincidence fringe is fixed in
``hbtphase.interferometer``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Below this overlap magnitude the connection between two states is undefined.
ORTHOGONALITY_TOL = 1e-9


class OrthogonalStatesError(ValueError):
    """Consecutive states in a cycle are orthogonal; the phase is undefined."""


class AntipodalVerticesError(ValueError):
    """Consecutive polygon vertices are antipodal; the geodesic is ambiguous."""


@dataclass(frozen=True)
class JonesVector:
    a_x: complex
    a_y: complex

    @classmethod
    def from_array(cls, arr) -> "JonesVector":
        arr = np.asarray(arr, dtype=complex)
        return cls(complex(arr[0]), complex(arr[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.a_x, self.a_y], dtype=complex)

    def norm(self) -> float:
        return math.sqrt(abs(self.a_x) ** 2 + abs(self.a_y) ** 2)

    def normalized(self) -> "JonesVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero Jones vector")
        return JonesVector(self.a_x / n, self.a_y / n)

    def inner(self, other: "JonesVector") -> complex:
        """``<self|other>``."""
        return self.a_x.conjugate() * other.a_x + self.a_y.conjugate() * other.a_y

    def rephased(self, phase: float) -> "JonesVector":
        f = cmath.exp(1j * phase)
        return JonesVector(self.a_x * f, self.a_y * f)

    def equal_up_to_phase(self, other: "JonesVector", tol: float = 1e-12) -> bool:
        """True when the two states differ only by a global phase (and norm)."""
        na, nb = self.norm(), other.norm()
        if na == 0.0 or nb == 0.0:
            return na == nb
        return abs(abs(self.inner(other)) / (na * nb) - 1.0) <= tol


@dataclass(frozen=True)
class StokesPoint:
    s1: float
    s2: float
    s3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3], dtype=float)


def linear_state(angle: float) -> JonesVector:
    return JonesVector(complex(math.cos(angle)), complex(math.sin(angle)))


def circular_state(handedness: str) -> JonesVector:
    h = handedness.upper()
    r = 1.0 / math.sqrt(2.0)
    if h == "R":
        return JonesVector(complex(r), 1j * r)
    if h == "L":
        return JonesVector(complex(r), -1j * r)
    raise ValueError(f"handedness must be 'R' or 'L', got {handedness!r}")


def linear_polarizer(angle: float) -> np.ndarray:
    """Projector onto linear polarization at ``angle`` from the x-axis."""
    if not math.isfinite(angle):
        raise ValueError("polarizer angle must be finite")
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c * c, c * s], [c * s, s * s]], dtype=complex)


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def retarder(retardance: float, fast_axis: float) -> np.ndarray:
    """Linear retarder with the given retardance, fast axis at ``fast_axis``."""
    rot = _rotation(fast_axis)
    core = np.diag([1.0, cmath.exp(1j * retardance)])
    return rot @ core @ rot.T


def half_wave_plate(fast_axis: float) -> np.ndarray:
    """Half-wave plate, written in its real reflection form.

    Maps linear polarization at ``a`` to ``2*fast_axis - a``; differs from
    ``retarder(pi, fast_axis)`` by a global factor only.
    """
    c, s = math.cos(2 * fast_axis), math.sin(2 * fast_axis)
    return np.array([[c, s], [s, -c]], dtype=complex)


def quarter_wave_plate(fast_axis: float) -> np.ndarray:
    return retarder(math.pi / 2, fast_axis)


def apply(matrix: np.ndarray, state: JonesVector) -> JonesVector:
    return JonesVector.from_array(matrix @ state.as_array())


def project_amplitude(state: JonesVector, analyzer_angle: float) -> complex:
    """Amplitude ``<alpha|state>`` transmitted by a linear analyzer.

    With the conventions of this module ``<alpha|R> = exp(+i alpha)/sqrt(2)``
    and ``<alpha|L> = exp(-i alpha)/sqrt(2)``.
    """
    return linear_state(analyzer_angle).inner(state)


def stokes_of(state: JonesVector) -> StokesPoint:
    st = state.normalized()
    cross = st.a_x.conjugate() * st.a_y
    return StokesPoint(
        abs(st.a_x) ** 2 - abs(st.a_y) ** 2,
        2.0 * cross.real,
        2.0 * cross.imag,
    )


def pancharatnam_phase(cycle: Sequence[JonesVector]) -> float:
    """Geometric phase of a closed cycle of pure states, in (-pi, pi].

    The phase is ``arg(<1|2><2|3>...<n|1>)``; it is invariant under
    independent rephasing of every state.
    """
    if len(cycle) < 3:
        raise ValueError("a cycle needs at least three states")
    states = [s.normalized() for s in cycle]
    product = complex(1.0)
    for a, b in zip(states, states[1:] + states[:1]):
        overlap = a.inner(b)
        if abs(overlap) <= ORTHOGONALITY_TOL:
            raise OrthogonalStatesError(
                f"consecutive states are orthogonal (|overlap| = {abs(overlap):.3g})"
            )
        product *= overlap / abs(overlap)
    phase = cmath.phase(product)
    # cmath.phase returns [-pi, pi]; fold -pi onto +pi.
    return math.pi if phase <= -math.pi else phase


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero-length vector")
    return v / n


def _wrap_solid_angle(omega: float) -> float:
    """Fold a solid angle into (-2 pi, 2 pi]."""
    w = math.fmod(omega, 4 * math.pi)
    if w > 2 * math.pi:
        w -= 4 * math.pi
    elif w <= -2 * math.pi:
        w += 4 * math.pi
    return w


def geodesic_solid_angle(vertices: Sequence[StokesPoint], tol: float = 1e-12) -> float:
    """Signed solid angle enclosed by a geodesic polygon on the unit sphere.

    Computed from the spherical excess written with turning angles,
    ``Omega = 2 pi - sum(turning)``, which equals the sum of interior angles
    minus ``(n - 2) pi``.  Counter-clockwise traversal (seen from outside) is
    positive.  The result is defined modulo 4 pi and returned in (-2 pi, 2 pi].
    Repeated consecutive vertices are merged; a vertex where the path
    reverses on itself contributes a turn of +pi.
    """
    if len(vertices) < 3:
        raise ValueError("a polygon needs at least three vertices")
    pts = [_unit(v.as_array() if isinstance(v, StokesPoint) else np.asarray(v, float))
           for v in vertices]
    n = len(pts)
    for i in range(n):
        if np.dot(pts[i], pts[(i + 1) % n]) < -1.0 + tol:
            raise AntipodalVerticesError(f"vertices {i} and {(i + 1) % n} are antipodal")

    # drop repeated consecutive vertices; a path that doubles back turns by pi
    pts = [p for i, p in enumerate(pts) if np.linalg.norm(p - pts[i - 1]) >= tol] or pts[:1]
    n = len(pts)
    if n < 2:
        return 0.0

    total_turn = 0.0
    for i in range(n):
        prev_pt, here, next_pt = pts[i - 1], pts[i], pts[(i + 1) % n]
        to_prev = prev_pt - np.dot(here, prev_pt) * here
        to_next = next_pt - np.dot(here, next_pt) * here
        heading_in = -_unit(to_prev)
        heading_out = _unit(to_next)
        sin_turn = float(np.dot(here, np.cross(heading_in, heading_out)))
        cos_turn = float(np.dot(heading_in, heading_out))
        if abs(sin_turn) < tol and cos_turn < 0.0:
            total_turn += math.pi
        else:
            total_turn += math.atan2(sin_turn, cos_turn)
    return _wrap_solid_angle(2 * math.pi - total_turn)


def analyzer_cycle(analyzer3_angle: float, analyzer4_angle: float) -> list[JonesVector]:
    """The two-photon polarization cycle R -> P3 -> L -> P4.

    Its phase is ``2 (analyzer4_angle - analyzer3_angle)``.
    """
    return [
        circular_state("R"),
        linear_state(analyzer3_angle),
        circular_state("L"),
        linear_state(analyzer4_angle),
    ]
