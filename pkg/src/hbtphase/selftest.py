"""Reduced-scale invariant suite behind ``hbtphase selftest``.

Every check uses fixed seeds, so the report is deterministic.  Tolerances
are set for ~1e5 samples.
"""

from __future__ import annotations

import math
import sys
import time
import warnings

import numpy as np
from scipy import stats

from .correlation import CorrelationAccumulator, g2_auto_zero, g2_cross
from .detection import DetectorConfig, detect, nonparalyzable_rate
from .entanglement import (
    LONG,
    SHORT,
    antiphase_closed_form,
    antiphase_exchange_form,
    antiphase_state,
    bell_decomposition,
    bell_state,
    entanglement_entropy,
    fidelity,
    from_bell,
    output_state,
    reduced_density_matrix,
)
from .experiment import SimParams, scan_fringe
from .interferometer import (
    GEOMETRIC_PHASE_SIGN,
    InterferometerGeometry,
    analytic_auto,
    analytic_coincidence,
    analytic_coincidence_general,
    detector_moments,
    geometric_half_solid_angle,
)
from .polarization import (
    analyzer_cycle,
    geodesic_solid_angle,
    half_wave_plate,
    linear_polarizer,
    stokes_of,
)
from .source import CoarseSamplingWarning, SCATTERER_SUM, SourceConfig, ThermalFieldStream, theoretical_g2

N = 100_000
TAU_BINS = 12  # coherence time in samples for curve checks


def _rng(k):
    return np.random.default_rng(1000 + k)


def check_jones_algebra():
    rng = _rng(1)
    worst = 0.0
    for a in rng.uniform(-math.pi, math.pi, 20):
        P = linear_polarizer(a)
        H = half_wave_plate(a)
        worst = max(worst, np.abs(P @ P - P).max(), np.abs(P - P.conj().T).max(),
                    np.abs(H @ H.conj().T - np.eye(2)).max())
    return worst < 1e-12, f"max defect {worst:.2e}"


def check_geometry():
    rng = _rng(2)
    worst = 0.0
    for a3, a4 in rng.uniform(-math.pi / 2, math.pi / 2, (50, 2)):
        g = InterferometerGeometry(analyzer3_angle=a3, analyzer4_angle=a4)
        omega = geodesic_solid_angle([stokes_of(v) for v in analyzer_cycle(a3, a4)])
        expected = math.remainder(4 * g.phi34, 4 * math.pi)
        half = geometric_half_solid_angle(g)
        worst = max(worst, abs(math.remainder(omega - expected, 4 * math.pi)),
                    abs(math.remainder(2 * half - omega, 4 * math.pi)))
    return worst < 1e-9, f"max |Omega - 4 phi34| {worst:.2e}"


def check_oracles():
    rng = _rng(3)
    worst = 0.0
    for _ in range(200):
        a3, a4 = rng.uniform(0, math.pi, 2)
        r = 1.0 + rng.uniform(0, 1e-5, 4)
        g = InterferometerGeometry(*r, analyzer3_angle=a3, analyzer4_angle=a4)
        worst = max(worst, abs(analytic_coincidence(g) - analytic_coincidence_general(g, 1.0, 1.0)))
    return worst < 1e-12, f"max |closed - general| {worst:.2e}"


def check_local_invariance():
    # means and self-correlations at each detector must not see phi34 or Delta
    vals = []
    for a3 in np.linspace(0, math.pi, 9):
        g = InterferometerGeometry(analyzer3_angle=a3, analyzer4_angle=0.3).with_propagation_phase(a3)
        m3, m4, _ = detector_moments(g, 1.0, 1.0)
        vals.append((m3, m4, analytic_auto(g, 1.0, 1.0, 3), analytic_auto(g, 1.0, 1.0, 4)))
    spread = float(np.ptp(np.array(vals), axis=0).max())
    return spread < 1e-12, f"spread {spread:.2e}"


def _intensity(seed, n, dt, tau_c=1.0, kind="spectral"):
    cfg = SourceConfig(1.0, tau_c, seed=seed, generator_kind=kind, n_scatterers=2000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseSamplingWarning)
        return np.abs(ThermalFieldStream(cfg).sample_block(n, dt)) ** 2


def check_thermal_distribution():
    I = _intensity(11, N, dt=3.0)
    ratio = I.var() / I.mean() ** 2
    p = stats.kstest(I / I.mean(), "expon").pvalue
    return abs(ratio - 1) < 0.03 and p > 0.01, f"var/mean^2 {ratio:.4f}, KS p {p:.3f}"


_LAGS = np.array([0, 3, 6, 12, 24])


def _curve_check(kind, seed):
    I = _intensity(seed, N, dt=1.0, tau_c=float(TAU_BINS), kind=kind)
    acc = CorrelationAccumulator.from_arrays(I, I, _LAGS, 8 * TAU_BINS, integer=False)
    cur = g2_cross(acc)
    dev = float(np.abs(cur.value - theoretical_g2(_LAGS, TAU_BINS)).max())
    return dev < 0.1, f"max |G2 - theory| {dev:.4f} (G2(0) = {cur.value[0]:.3f})"


def check_g2_shape():
    return _curve_check("spectral", 12)


def check_scatterer_shape():
    return _curve_check(SCATTERER_SUM, 13)


def check_independence():
    I1 = _intensity(14, N, 1.0, float(TAU_BINS))
    I2 = _intensity(15, N, 1.0, float(TAU_BINS))
    cur = g2_cross(CorrelationAccumulator.from_arrays(I1, I2, _LAGS, 8 * TAU_BINS, integer=False))
    dev = float(np.abs(cur.value - 1).max())
    return dev < 0.04, f"max |G12 - 1| {dev:.4f}"


def check_dead_time():
    rate, tau_d = 1.0, 0.1  # R tau_d = 0.1 in natural units
    flat = np.full(N, rate)
    rec = detect(flat, 1.0, DetectorConfig(1.0, 0.0, tau_d, seed=16))
    observed = rec.counts.sum() / N
    expected = nonparalyzable_rate(rate, tau_d)
    rel = abs(observed / expected - 1)
    return rel < 0.02, f"rate {observed:.4f} vs {expected:.4f}"


def check_poisson():
    rec = detect(np.full(N, 2.0), 1.0, DetectorConfig(1.0, 0.0, 0.0, seed=17))
    d = rec.counts.var() / rec.counts.mean()
    return abs(d - 1) < 0.03, f"index of dispersion {d:.4f}"


def check_thinning():
    I = _intensity(18, N, 1.0, float(TAU_BINS))
    counts = detect(I * 0.5, 1.0, DetectorConfig(0.2, 0.0, 0.0, seed=19)).counts
    B = 8 * TAU_BINS
    gi = g2_auto_zero(CorrelationAccumulator.from_arrays(I, I, (0,), B, integer=False), "a").value
    gc = g2_auto_zero(CorrelationAccumulator.from_arrays(counts, counts, (0,), B), "a").value
    return abs(gi - gc) < 0.1, f"G2(0) intensity {gi:.3f}, counts {gc:.3f}"


def check_merge():
    rng = _rng(4)
    a = rng.poisson(3, 5000)
    b = rng.poisson(3, 5000)
    whole = CorrelationAccumulator.from_arrays(a, b, (0, 1, 5), 50)
    ok = True
    for cut in (50, 1000, 2500):
        left = CorrelationAccumulator.from_arrays(a[:cut], b[:cut], (0, 1, 5), 50)
        right = CorrelationAccumulator.from_arrays(a[cut:], b[cut:], (0, 1, 5), 50)
        ok &= bool(np.array_equal((left | right).totals(), whole.totals()))
    return ok, "merged totals equal single pass" if ok else "merged totals differ"


def _fringe_params(n_bins):
    src = dict(mean_intensity=1.0e5, coherence_time=TAU_BINS * 1e-5)
    return SimParams(
        n_bins=n_bins, dt=1e-5,
        source1=SourceConfig(seed=21, **src), source2=SourceConfig(seed=22, **src),
        detector3=DetectorConfig(1.0, 0.0, 0.0, seed=23), detector4=DetectorConfig(1.0, 0.0, 0.0, seed=24),
    )


def check_fringe_oracle(sign=GEOMETRIC_PHASE_SIGN):
    geom = InterferometerGeometry().with_propagation_phase(math.pi / 3)
    thetas = np.arange(16) * math.pi / 16
    rows = scan_fringe(geom, thetas, _fringe_params(20_000), sign=sign)
    mc = np.array([r.result.coincidence.value for r in rows])
    oracle = np.array([r.analytic for r in rows])
    rms = float(np.sqrt(np.mean((mc - oracle) ** 2)))
    return rms < 0.1, f"RMS |C_mc - C_analytic| {rms:.4f} over {len(rows)} points"


def check_determinism(threads=2):
    from .output import FRINGE_COLUMNS, render_csv

    geom = InterferometerGeometry()
    thetas = np.arange(8) * math.pi / 8

    def table(t):
        rows = scan_fringe(geom, thetas, _fringe_params(4_000), threads=t)
        return render_csv(FRINGE_COLUMNS, [(r.theta, r.phi34, r.result.coincidence.value,
                                            r.result.coincidence.stderr, r.analytic) for r in rows])

    same = table(1) == table(max(2, threads))
    return same, "identical CSV for 1 and several threads" if same else "CSV depends on thread count"


def check_exchange_states():
    f_plus = fidelity(output_state(SHORT, LONG, 0.0), bell_state("psi_plus"))
    f_minus = fidelity(output_state(SHORT, LONG, math.pi), bell_state("psi_minus"))
    ok = f_plus > 1 - 1e-10 and f_minus > 1 - 1e-10
    return ok, f"1 - F(Psi+) {1 - f_plus:.1e}, 1 - F(Psi-) {1 - f_minus:.1e}"


def _rdm_entropy(state):
    ev = np.clip(np.linalg.eigvalsh(reduced_density_matrix(state)), 0, 1)
    return float(-sum(p * math.log2(p) for p in ev if p > 0))


def check_entropy():
    worst = 0.0
    for ph in np.linspace(0, 2 * math.pi, 25):
        st = output_state(SHORT, LONG, ph)
        worst = max(worst, abs(entanglement_entropy(st) - 1.0), abs(_rdm_entropy(st) - 1.0))
    rng = _rng(5)
    for _ in range(25):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        st = from_bell(v / np.linalg.norm(v))
        worst = max(worst, abs(entanglement_entropy(st) - _rdm_entropy(st)),
                    float(np.abs(bell_decomposition(st) - v / np.linalg.norm(v)).max()))
    return worst < 1e-9, f"max deviation {worst:.1e}"


def check_antiphase_expansion():
    rng = _rng(6)
    worst = 0.0
    for ph, p1 in rng.uniform(0, 2 * math.pi, (50, 2)):
        worst = max(worst, 1 - fidelity(antiphase_state(ph, p1, verify=False), antiphase_exchange_form(ph, p1)))
    return worst < 1e-10, f"max 1 - F(direct, Bell expansion) {worst:.1e}"


def info_antiphase_closed_form():
    rng = _rng(7)
    fids = [fidelity(antiphase_state(ph, p1, verify=False), antiphase_closed_form(ph, p1))
            for ph, p1 in rng.uniform(0, 2 * math.pi, (50, 2))]
    return f"closed form with phase/2 in the sin term: min fidelity {min(fids):.3f} against the direct state"


def run_selftest(sign: int = GEOMETRIC_PHASE_SIGN, threads: int = 2, out=None) -> bool:
    out = sys.stdout if out is None else out
    checks = [
        ("jones algebra", check_jones_algebra),
        ("pair-cycle solid angle", check_geometry),
        ("oracle cross-validation", check_oracles),
        ("local observables phase-free", check_local_invariance),
        ("thermal intensity law", check_thermal_distribution),
        ("G2 shape (spectral)", check_g2_shape),
        ("G2 shape (scatterer sum)", check_scatterer_shape),
        ("source independence", check_independence),
        ("dead-time throughput", check_dead_time),
        ("Poisson counting", check_poisson),
        ("thinning invariance", check_thinning),
        ("accumulator merge", check_merge),
        ("fringe oracle", lambda: check_fringe_oracle(sign)),
        ("thread determinism", lambda: check_determinism(threads)),
        ("exchange Bell states", check_exchange_states),
        ("entropy oracle", check_entropy),
        ("antiphase Bell expansion", check_antiphase_expansion),
    ]
    t0 = time.perf_counter()
    failures = 0
    for name, fn in checks:
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<30} {detail} [{time.perf_counter() - t:.2f} s]", file=out)
    print(f"INFO  {'antiphase closed form':<30} {info_antiphase_closed_form()}", file=out)
    total = time.perf_counter() - t0
    print(f"{len(checks) - failures}/{len(checks)} checks passed in {total:.1f} s", file=out)
    return failures == 0
