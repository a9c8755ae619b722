"""Time-bin two-photon states generated by exchange, and their entanglement.

States are 4-vectors over the ordered basis ``(ss, sl, ls, ll)``; the first
letter is the time bin of the photon at detector 3, the second at detector 4.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

BASIS = ("ss", "sl", "ls", "ll")
BELL_LABELS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")

_R2 = 1.0 / math.sqrt(2.0)
#: Rows are the Bell states Phi+, Phi-, Psi+, Psi- in the (ss, sl, ls, ll) basis.
BELL_BASIS = np.array(
    [
        [_R2, 0, 0, _R2],
        [_R2, 0, 0, -_R2],
        [0, _R2, _R2, 0],
        [0, _R2, -_R2, 0],
    ],
    dtype=complex,
)

DEGENERATE_NORM = 1e-9
CONSISTENCY_TOL = 1e-10


class DegenerateStateError(ValueError):
    pass


class InconsistentStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeBinQubit:
    amp_s: complex
    amp_l: complex

    def __post_init__(self):
        norm = abs(self.amp_s) ** 2 + abs(self.amp_l) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"time-bin qubit is not normalized (|a|^2 + |b|^2 = {norm})")

    @classmethod
    def superposition(cls, relative_phase: float) -> "TimeBinQubit":
        """``(|s> + e^{i phase} |l>) / sqrt(2)``."""
        return cls(complex(_R2), _R2 * cmath.exp(1j * relative_phase))

    def as_array(self) -> np.ndarray:
        return np.array([self.amp_s, self.amp_l], dtype=complex)


SHORT = TimeBinQubit(1.0 + 0j, 0j)
LONG = TimeBinQubit(0j, 1.0 + 0j)


@dataclass(frozen=True)
class TwoPhotonState:
    amplitudes: np.ndarray
    normalization: float = 1.0  # factor applied to the raw superposition

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(4)
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-12:
            raise ValueError("two-photon state is not normalized")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec, normalization: float = 1.0) -> "TwoPhotonState":
        vec = np.asarray(vec, dtype=complex)
        return cls(vec / np.linalg.norm(vec), normalization)

    def overlap(self, other: "TwoPhotonState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def fidelity(a: TwoPhotonState, b: TwoPhotonState) -> float:
    """``|<a|b>|^2``; equality up to global phase means fidelity close to 1."""
    return abs(a.overlap(b)) ** 2


def bell_state(label: str) -> TwoPhotonState:
    return TwoPhotonState(BELL_BASIS[BELL_LABELS.index(label)])


def phi_state(chi: float) -> TwoPhotonState:
    """``(|ss> + e^{i chi} |ll>) / sqrt(2)``."""
    return TwoPhotonState(np.array([_R2, 0, 0, _R2 * cmath.exp(1j * chi)]))


def output_state(phi_in: TimeBinQubit, psi_in: TimeBinQubit, phase: float) -> TwoPhotonState:
    """Normalized ``|phi>_3 |psi>_4 + e^{i phase} |psi>_3 |phi>_4``.

    The factor actually applied is stored in ``normalization``; it is
    ``1/sqrt(2)`` only for orthogonal inputs.
    """
    a, b = phi_in.as_array(), psi_in.as_array()
    raw = np.kron(a, b) + cmath.exp(1j * phase) * np.kron(b, a)
    norm = float(np.linalg.norm(raw))
    if norm < DEGENERATE_NORM:
        raise DegenerateStateError("the two exchange amplitudes cancel")
    return TwoPhotonState(raw / norm, 1.0 / norm)


def antiphase_closed_form(phase: float, phi1: float) -> TwoPhotonState:
    """``cos(phase/2) |Phi(pi + 2 phi1)> + e^{i(phase + pi + 2 phi1)/2} sin(phase/2) |Psi->``.

    Differs from the exchange state built by ``output_state`` by the
    ``phase/2`` in the sin-term phase; see ``antiphase_exchange_form``.
    """
    return _phi_psi_mix(phase, phi1, 0.5 * (phase + math.pi + 2 * phi1))


def antiphase_exchange_form(phase: float, phi1: float) -> TwoPhotonState:
    """Bell-basis form of the exchange state for inputs with phases ``phi1``, ``pi + phi1``.

    Expanding ``output_state`` gives
    ``cos(phase/2) |Phi(pi + 2 phi1)> + e^{i(pi/2 + phi1)} sin(phase/2) |Psi->``;
    the sin-term phase has no ``phase/2`` part.  The two inputs are
    orthogonal, so the state is maximally entangled for every ``phase``.
    """
    return _phi_psi_mix(phase, phi1, 0.5 * math.pi + phi1)


def _phi_psi_mix(phase: float, phi1: float, mu: float) -> TwoPhotonState:
    vec = (math.cos(phase / 2) * phi_state(math.pi + 2 * phi1).amplitudes
           + cmath.exp(1j * mu) * math.sin(phase / 2) * bell_state("psi_minus").amplitudes)
    return TwoPhotonState.from_vector(vec)


def antiphase_inputs(phi1: float) -> tuple[TimeBinQubit, TimeBinQubit]:
    return TimeBinQubit.superposition(phi1), TimeBinQubit.superposition(math.pi + phi1)


def antiphase_state(phase: float, phi1: float, verify: bool = True) -> TwoPhotonState:
    """Exchange state for inputs with relative phases ``phi1`` and ``pi + phi1``.

    Built with ``output_state``.  With ``verify`` the result is compared with
    ``antiphase_closed_form`` up to a global phase and a mismatch raises
    ``InconsistentStateError``; the two agree only where ``sin(phase/2)`` or
    ``cos(phase/2)`` vanishes.
    """
    state = output_state(*antiphase_inputs(phi1), phase)
    if verify:
        closed = antiphase_closed_form(phase, phi1)
        f = fidelity(state, closed)
        if f < 1.0 - CONSISTENCY_TOL:
            raise InconsistentStateError(
                f"direct and closed-form states differ (fidelity {f:.12f}) at phase={phase}, phi1={phi1}"
            )
    return state


def bell_decomposition(state: TwoPhotonState) -> np.ndarray:
    """Coefficients on (Phi+, Phi-, Psi+, Psi-)."""
    return BELL_BASIS.conj() @ state.amplitudes


def from_bell(coefficients) -> TwoPhotonState:
    return TwoPhotonState(BELL_BASIS.T @ np.asarray(coefficients, dtype=complex))


def concurrence(state: TwoPhotonState) -> float:
    ss, sl, ls, ll = state.amplitudes
    return float(min(1.0, 2.0 * abs(ss * ll - sl * ls)))


def reduced_density_matrix(state: TwoPhotonState) -> np.ndarray:
    """State of the photon at detector 3 after tracing out detector 4."""
    m = state.amplitudes.reshape(2, 2)
    return m @ m.conj().T


def entanglement_entropy(state: TwoPhotonState) -> float:
    """Von Neumann entropy (bits) of the reduced state; ``0 log 0 = 0``."""
    # eigenvalues of the 2x2 reduced matrix from its trace (1) and determinant
    det = (concurrence(state) / 2.0) ** 2
    disc = math.sqrt(max(0.0, 1.0 - 4.0 * det))
    return binary_entropy((1.0 + disc) / 2.0)


def binary_entropy(p: float) -> float:
    out = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            out -= q * math.log2(q)
    return out


@dataclass(frozen=True)
class EntropyRow:
    phase: float
    phi1: float
    concurrence: float
    entropy: float
    bell: np.ndarray


FAMILIES = ("antiphase", "antiphase_closed_form", "orthogonal", "superposition")


def family_state(family: str, phase: float, phi1: float = 0.0, phi2: float | None = None) -> TwoPhotonState:
    """One member of a named state family.

    ``antiphase``: exchange state of antiphase inputs (built directly, not verified);
    ``antiphase_closed_form``: the closed form above; ``orthogonal``:
    ``output_state(|s>, |l>, phase)``; ``superposition``: exchange state of
    inputs with free relative phases ``phi1`` and ``phi2``.
    """
    if family == "antiphase":
        return antiphase_state(phase, phi1, verify=False)
    if family == "antiphase_closed_form":
        return antiphase_closed_form(phase, phi1)
    if family == "orthogonal":
        return output_state(SHORT, LONG, phase)
    if family == "superposition":
        if phi2 is None:
            raise ValueError("superposition family needs phi2")
        return output_state(TimeBinQubit.superposition(phi1), TimeBinQubit.superposition(phi2), phase)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def entropy_scan(phases, phi1: float = 0.0, family: str = "antiphase", phi2: float | None = None) -> list[EntropyRow]:
    """Entanglement versus exchange phase for one state family."""
    phases = [float(p) for p in phases]
    if len(phases) < 2:
        raise ValueError("need at least two phase values")
    rows = []
    for ph in phases:
        st = family_state(family, ph, phi1, phi2)
        rows.append(EntropyRow(ph, phi1, concurrence(st), entanglement_entropy(st), bell_decomposition(st)))
    return rows
