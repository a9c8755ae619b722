import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbtphase.polarization import (
    AntipodalVerticesError,
    JonesVector,
    OrthogonalStatesError,
    StokesPoint,
    analyzer_cycle,
    apply,
    circular_state,
    geodesic_solid_angle,
    half_wave_plate,
    linear_polarizer,
    linear_state,
    pancharatnam_phase,
    project_amplitude,
    quarter_wave_plate,
    retarder,
    stokes_of,
)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
components = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)



@st.composite
def states(draw):
    a, b = draw(components), draw(components)
    if abs(a) ** 2 + abs(b) ** 2 < 1e-6:
        a = 1.0
    return JonesVector(a, b).normalized()


def van_oosterom(a, b, c):
    # signed solid angle of a spherical triangle, independent closed form
    return 2 * math.atan2(a @ np.cross(b, c), 1 + a @ b + b @ c + c @ a)


def test_basis_states_on_the_sphere():
    np.testing.assert_allclose(stokes_of(circular_state("R")).as_array(), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(stokes_of(circular_state("L")).as_array(), [0, 0, -1], atol=1e-15)
    for a in (0.0, 0.3, math.pi / 4, 2.0):
        np.testing.assert_allclose(stokes_of(linear_state(a)).as_array(),
                                   [math.cos(2 * a), math.sin(2 * a), 0], atol=1e-15)


def test_circular_state_rejects_unknown_label():
    with pytest.raises(ValueError):
        circular_state("X")


@given(angles)
def test_polarizer_is_a_projector(a):
    P = linear_polarizer(a)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(P, P.conj().T, atol=1e-12)
    assert apply(P, linear_state(a)).equal_up_to_phase(linear_state(a))
    assert apply(P, linear_state(a + math.pi / 2)).norm() < 1e-12


def test_polarizer_rejects_non_finite_angle():
    with pytest.raises(ValueError):
        linear_polarizer(float("nan"))


@given(angles, angles)
def test_half_wave_plate_mirrors_linear_states(theta, alpha):
    H = half_wave_plate(theta)
    np.testing.assert_allclose(H @ H.conj().T, np.eye(2), atol=1e-12)
    assert apply(H, linear_state(alpha)).equal_up_to_phase(linear_state(2 * theta - alpha), tol=1e-9)


@given(angles, angles)
def test_half_wave_plate_equals_pi_retarder_up_to_phase(theta, alpha):
    s = circular_state("R").rephased(alpha)
    assert apply(half_wave_plate(theta), s).equal_up_to_phase(apply(retarder(math.pi, theta), s), tol=1e-9)


def test_quarter_wave_plate_makes_circular_light():
    out = apply(quarter_wave_plate(math.pi / 4), linear_state(0.0))
    assert abs(abs(stokes_of(out).s3) - 1) < 1e-12
    # a half-wave plate flips handedness
    flipped = apply(half_wave_plate(0.0), circular_state("R"))
    assert flipped.equal_up_to_phase(circular_state("L"))


@given(angles)
def test_projection_amplitudes_of_circular_states(a):
    assert abs(project_amplitude(circular_state("R"), a) - cmath.exp(1j * a) / math.sqrt(2)) < 1e-12
    assert abs(project_amplitude(circular_state("L"), a) - cmath.exp(-1j * a) / math.sqrt(2)) < 1e-12


@settings(max_examples=200)
@given(states(), states(), states(), angles, angles, angles)
def test_pancharatnam_phase_is_gauge_invariant_and_half_the_solid_angle(u, v, w, p, q, r):
    if min(abs(u.inner(v)), abs(v.inner(w)), abs(w.inner(u))) < 1e-3:
        return
    phase = pancharatnam_phase([u, v, w])
    assert abs(math.remainder(phase - pancharatnam_phase([u.rephased(p), v.rephased(q), w.rephased(r)]),
                              2 * math.pi)) < 1e-9
    pts = [stokes_of(x).as_array() for x in (u, v, w)]
    omega = geodesic_solid_angle([stokes_of(x) for x in (u, v, w)])
    assert abs(math.remainder(omega - van_oosterom(*pts), 4 * math.pi)) < 1e-7
    assert abs(math.remainder(2 * phase - omega, 4 * math.pi)) < 1e-7


def test_pancharatnam_phase_rejects_orthogonal_neighbours():
    with pytest.raises(OrthogonalStatesError):
        pancharatnam_phase([circular_state("R"), circular_state("L"), linear_state(0)])
    with pytest.raises(ValueError):
        pancharatnam_phase([circular_state("R"), linear_state(0)])


def test_octant_triangle():
    tri = [StokesPoint(1, 0, 0), StokesPoint(0, 1, 0), StokesPoint(0, 0, 1)]
    assert abs(geodesic_solid_angle(tri) - math.pi / 2) < 1e-12
    assert abs(geodesic_solid_angle(tri[::-1]) + math.pi / 2) < 1e-12


def test_degenerate_and_antipodal_polygons():
    flat = [StokesPoint(1, 0, 0), StokesPoint(1, 0, 0), StokesPoint(0, 1, 0)]
    assert abs(geodesic_solid_angle(flat)) < 1e-12
    with pytest.raises(AntipodalVerticesError):
        geodesic_solid_angle([StokesPoint(0, 0, 1), StokesPoint(0, 0, -1), StokesPoint(1, 0, 0)])


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_pair_cycle_encloses_four_phi34(a3, a4):
    phi34 = a4 - a3
    omega = geodesic_solid_angle([stokes_of(s) for s in analyzer_cycle(a3, a4)])
    assert abs(math.remainder(omega - 4 * phi34, 4 * math.pi)) < 1e-9
    assert abs(math.remainder(pancharatnam_phase(analyzer_cycle(a3, a4)) - 2 * phi34, 2 * math.pi)) < 1e-9


def test_equal_analyzers_enclose_nothing():
    assert abs(geodesic_solid_angle([stokes_of(s) for s in analyzer_cycle(0.4, 0.4)])) < 1e-12
    assert abs(pancharatnam_phase(analyzer_cycle(0.4, 0.4))) < 1e-12


def test_phi34_eighth_turn():
    omega = geodesic_solid_angle([stokes_of(s) for s in analyzer_cycle(0.0, math.pi / 8)])
    assert abs(omega - math.pi / 2) < 1e-12
    assert abs(pancharatnam_phase(analyzer_cycle(0.0, math.pi / 8)) - math.pi / 4) < 1e-12
