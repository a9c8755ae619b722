import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbtphase.entanglement import (
    BELL_BASIS,
    LONG,
    SHORT,
    DegenerateStateError,
    InconsistentStateError,
    TimeBinQubit,
    TwoPhotonState,
    antiphase_closed_form,
    antiphase_exchange_form,
    antiphase_inputs,
    antiphase_state,
    bell_decomposition,
    bell_state,
    binary_entropy,
    concurrence,
    entanglement_entropy,
    entropy_scan,
    family_state,
    fidelity,
    from_bell,
    output_state,
    reduced_density_matrix,
)

phase = st.floats(0, 2 * math.pi)


def rdm_entropy(state):
    # oracle: eigenvalues of the reduced density matrix
    ev = np.clip(np.linalg.eigvalsh(reduced_density_matrix(state)), 0, 1)
    return float(-sum(p * math.log2(p) for p in ev if p > 1e-300))


@st.composite
def two_photon_states(draw):
    re = draw(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    im = draw(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1, 0, 0, 0], complex)
    return TwoPhotonState.from_vector(v)


def test_orthogonal_inputs_give_psi_states():
    assert fidelity(output_state(SHORT, LONG, 0.0), bell_state("psi_plus")) > 1 - 1e-10
    assert fidelity(output_state(SHORT, LONG, math.pi), bell_state("psi_minus")) > 1 - 1e-10
    assert abs(output_state(SHORT, LONG, 0.3).normalization - 1 / math.sqrt(2)) < 1e-15


def test_identical_inputs():
    with pytest.raises(DegenerateStateError):
        output_state(SHORT, SHORT, math.pi)
    st_ = output_state(SHORT, SHORT, 0.0)
    assert abs(st_.normalization - 0.5) < 1e-15
    assert concurrence(st_) < 1e-15


def test_qubit_and_state_validation():
    with pytest.raises(ValueError):
        TimeBinQubit(1.0, 1.0)
    with pytest.raises(ValueError):
        TwoPhotonState(np.array([1, 1, 0, 0]))


def test_bell_basis_is_orthonormal():
    np.testing.assert_allclose(BELL_BASIS @ BELL_BASIS.conj().T, np.eye(4), atol=1e-15)


@given(two_photon_states())
def test_bell_round_trip(state):
    c = bell_decomposition(state)
    assert abs(np.vdot(c, c).real - 1) < 1e-12
    assert fidelity(from_bell(c), state) > 1 - 1e-12


@given(two_photon_states())
def test_entropy_against_reduced_matrix_oracle(state):
    assert abs(entanglement_entropy(state) - rdm_entropy(state)) < 1e-9
    assert 0 <= concurrence(state) <= 1


@given(phase)
def test_orthogonal_family_is_maximally_entangled(ph):
    st_ = family_state("orthogonal", ph)
    assert abs(entanglement_entropy(st_) - 1) < 1e-9
    assert abs(rdm_entropy(st_) - 1) < 1e-9


@given(phase, phase)
def test_product_inputs_without_exchange_are_separable(a, b):
    v = np.kron(TimeBinQubit.superposition(a).as_array(), TimeBinQubit.superposition(b).as_array())
    st_ = TwoPhotonState(v)
    assert concurrence(st_) < 1e-12
    assert rdm_entropy(st_) < 1e-9


@given(phase, phase)
def test_antiphase_exchange_state_in_bell_basis(ph, phi1):
    direct = antiphase_state(ph, phi1, verify=False)
    assert fidelity(direct, antiphase_exchange_form(ph, phi1)) > 1 - 1e-10
    # no Psi+ component and no entanglement change with the exchange phase
    assert abs(bell_decomposition(direct)[2]) < 1e-12
    assert abs(entanglement_entropy(direct) - 1) < 1e-9
    a, b = antiphase_inputs(phi1)
    assert abs(np.vdot(a.as_array(), b.as_array())) < 1e-12


@given(phase, phase)
def test_closed_form_has_no_psi_plus_component(ph, phi1):
    assert abs(bell_decomposition(antiphase_closed_form(ph, phi1))[2]) < 1e-12


def test_closed_form_agrees_only_at_special_phases():
    for ph in (0.0, 2 * math.pi):
        assert fidelity(antiphase_state(ph, 0.4), antiphase_closed_form(ph, 0.4)) > 1 - 1e-10
    with pytest.raises(InconsistentStateError):
        antiphase_state(math.pi / 2, 0.4)
    # its entanglement is |cos^2(phi/2) + e^{i phi} sin^2(phi/2)|
    for ph in np.linspace(0, 2 * math.pi, 9):
        expected = abs(math.cos(ph / 2) ** 2 + cmath.exp(1j * ph) * math.sin(ph / 2) ** 2)
        assert abs(concurrence(antiphase_closed_form(ph, 0.0)) - expected) < 1e-12


def test_superposition_family_entropy_depends_on_the_phase():
    rows = entropy_scan(np.linspace(0, 2 * math.pi, 17), phi1=0.0, family="superposition", phi2=math.pi / 2)
    e = np.array([r.entropy for r in rows])
    assert e.max() - e.min() > 0.5
    for r in rows:
        assert abs(r.entropy - rdm_entropy(from_bell(r.bell))) < 1e-9


def test_entropy_scan_interface():
    rows = entropy_scan([0.0, math.pi], family="orthogonal")
    assert [r.phase for r in rows] == [0.0, math.pi]
    with pytest.raises(ValueError):
        entropy_scan([0.0])
    with pytest.raises(ValueError):
        entropy_scan([0.0, 1.0], family="nope")
    with pytest.raises(ValueError):
        entropy_scan([0.0, 1.0], family="superposition")


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert abs(binary_entropy(0.1) - 0.4689955935892812) < 1e-15
