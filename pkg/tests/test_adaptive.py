import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridframe.adaptive import (WlarState, aclms_step, adaptive_clarke, adaptive_park,
                                extract_frequency, extract_vuf, run_pipeline, wlar_weights)
from gridframe.diagnostics import circularity
from gridframe.errors import ConfigError, DivergenceError, ImbalanceOverflowError
from gridframe.signal_model import (FrequencyEvent, SagSpec, SampleSeries, ThreePhaseConfig,
                                    accumulated_phase, apply_sag, balanced_config, synth)
from gridframe.transforms import ComplexSeries, clarke_complex, sequence_from_waveform

FS = 1000.0
FOREVER = 10 ** 9


def two_sequence(vp, vn, w, n):
    k = np.arange(n)
    return (vp * np.exp(1j * w * k) + np.conj(vn) * np.exp(-1j * w * k)) / math.sqrt(2)


def test_step_zero_error_is_fixed_point():
    w = 0.3
    st0 = WlarState(h=np.exp(-1j * w), g=0j, mu=0.05, prev_sample=1.0 + 0j)
    st1, err = aclms_step(st0, np.exp(1j * w))
    assert abs(err) < 1e-15
    assert abs(st1.h - st0.h) < 1e-16 and st1.g == 0


def test_step_hand_example():
    st0 = WlarState(h=0j, g=0j, mu=0.1, prev_sample=1 + 0j)
    st1, err = aclms_step(st0, 1j)
    assert err == 1j
    assert abs(st1.h - (-0.1j)) < 1e-16
    assert abs(st1.g - (-0.1j)) < 1e-16
    assert st1.prev_sample == 1j


def test_balanced_input_exact_prediction():
    w = 0.4
    s = math.sqrt(1.5) * np.exp(1j * w * np.arange(50))
    state = WlarState(h=np.exp(-1j * w), g=0j, mu=0.01)
    for x in s:
        state, err = aclms_step(state, x)
        assert abs(err) < 1e-13


def test_divergence_reports_index():
    state = WlarState(mu=1e300, prev_sample=1e200 + 0j, sample_index=17)
    with pytest.raises(DivergenceError) as exc:
        aclms_step(state, 1e200 + 1e200j)
    assert exc.value.sample_index == 17


def test_invalid_mu():
    with pytest.raises(ConfigError):
        WlarState(mu=0.0)
    with pytest.raises(ConfigError):
        run_pipeline(SampleSeries(np.zeros((3, 3))), mu=-1.0)


def test_extract_frequency_examples():
    f = extract_frequency(np.exp(-1j * 0.1 * np.pi), 0j)
    assert abs(f.omega - 0.1 * np.pi) < 1e-15 and not f.low_confidence
    h = 0.5 - 0.4j
    for g in (0.4 + 0j, 0.4j, 0.5 + 0j):
        f = extract_frequency(h, g)
        assert f.low_confidence
        assert f.omega in (0.0, math.pi)


def test_extract_vuf_examples():
    assert extract_vuf(0.3 - 0.5j, 0j).kappa == 0
    assert extract_vuf(0.3 - 0.5j, 1e-9).kappa == 0


@settings(max_examples=300, deadline=None)
@given(w=st.floats(0.02 * np.pi, 0.98 * np.pi), r=st.floats(0.0, 0.95),
       a=st.floats(-np.pi, np.pi))
def test_extraction_round_trip(w, r, a):
    kappa = r * np.exp(1j * a)
    h, g = wlar_weights(w, kappa)
    # the pair satisfies both frequency relations
    assert abs(np.exp(1j * w) - (np.conj(h) + np.conj(g) * kappa)) < 1e-12
    if r > 1e-6:
        assert abs(np.exp(-1j * w) - (np.conj(h) + np.conj(g) / np.conj(kappa))) < 1e-12 / r
    assert abs(extract_frequency(h, g).omega - w) < 1e-10
    expected = kappa if abs(g) >= 1e-8 else 0
    assert abs(extract_vuf(h, g).kappa - expected) < 1e-10 + (0 if abs(g) >= 1e-8 else r)


@settings(max_examples=100, deadline=None)
@given(w=st.floats(0.05, 3.0), r=st.floats(0.0, 0.9), a=st.floats(-np.pi, np.pi),
       vp=st.floats(0.2, 3.0), ph=st.floats(-np.pi, np.pi))
def test_fixed_point_of_consistent_weights(w, r, a, vp, ph):
    kappa = r * np.exp(1j * a)
    Vp = vp * np.exp(1j * ph)
    s = two_sequence(Vp, kappa * Vp, w, 60)
    h, g = wlar_weights(w, kappa)
    state = WlarState(h=h, g=g, mu=0.01)
    for x in s:
        state, err = aclms_step(state, x)
        assert abs(err) < 1e-10 * max(1.0, vp)


def test_adaptive_clarke_examples():
    s = np.array([0.3 + 0.2j, -1.0j])
    np.testing.assert_allclose(adaptive_clarke(s, 0), math.sqrt(2) * s, atol=0)
    vp, w = 1.3 * np.exp(0.4j), 0.2
    kappa = 0.35 * np.exp(-1.1j)
    z = two_sequence(vp, kappa * vp, w, 100)
    m = adaptive_clarke(z, kappa)
    np.testing.assert_allclose(m, vp * np.exp(1j * w * np.arange(100)), atol=1e-13)
    with pytest.raises(ImbalanceOverflowError):
        adaptive_clarke(z, 1.0)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(0.0, 0.95), a=st.floats(-np.pi, np.pi), p=st.integers(1, 99))
def test_adaptive_clarke_output_is_circular(r, a, p):
    n = 200
    w = 2 * np.pi * p / n
    kappa = r * np.exp(1j * a)
    m = adaptive_clarke(two_sequence(1.0, kappa, w, n), kappa)
    np.testing.assert_allclose(m * np.exp(-1j * w * np.arange(n)), 1.0, atol=1e-10 / (1 - r * r))
    assert abs(np.mean(m * m)) < 1e-10


def test_adaptive_park_examples():
    vp, w = 0.9 - 0.3j, 0.25
    m = vp * np.exp(1j * w * np.arange(80))
    np.testing.assert_allclose(adaptive_park(m, np.full(80, w)), vp, atol=1e-13)
    np.testing.assert_allclose(adaptive_park(m, np.zeros(80)), m, atol=0)
    # non-zero start index
    k = np.arange(20, 100)
    m = vp * np.exp(1j * w * k)
    np.testing.assert_allclose(adaptive_park(m, np.full(80, w), start_index=20), vp, atol=1e-12)


def test_pipeline_balanced():
    cfg = balanced_config(sample_rate=FS, base_frequency=50.2)
    tr = run_pipeline(synth(cfg, 2000), mu=0.01, sample_rate=FS)
    assert len(tr) == 2000
    assert abs(tr.omega[-1] - cfg.omega) < 1e-3
    assert abs(tr.kappa[-1]) < 1e-6
    assert not tr.low_confidence[-1000:].any()


def test_pipeline_type_d_kappa():
    base = balanced_config(sample_rate=FS, base_frequency=50.0)
    sag = SagSpec("D", 0.7, 0, FOREVER)
    cfg = ThreePhaseConfig(sample_rate=FS, base_frequency=50.0, sag_events=(sag,))
    oracle = sequence_from_waveform(apply_sag(base, sag)).vuf
    tr = run_pipeline(synth(cfg, 5000), mu=0.01, sample_rate=FS)
    assert abs(tr.kappa[-1] - oracle) < 1e-3
    assert abs(tr.omega[-1] - base.omega) < 1e-3


def test_pipeline_type_d_frequency_off_nominal():
    sag = SagSpec("D", 0.7, 0, FOREVER)
    cfg = ThreePhaseConfig(sample_rate=FS, base_frequency=0.05 * FS, sag_events=(sag,))
    tr = run_pipeline(synth(cfg, 5000), mu=0.01)
    assert abs(tr.omega[-1] - 0.1 * np.pi) < 1e-3


def test_pipeline_type_c_self_balancing():
    cfg = ThreePhaseConfig(sample_rate=FS, base_frequency=50.0,
                           sag_events=(SagSpec("C", 0.5, 0, FOREVER),))
    s = synth(cfg, 4000)
    tr = run_pipeline(s, mu=0.01)
    tail = slice(2000, None)
    assert circularity(tr.m_bar[tail]).circularity_coefficient < 0.05
    assert circularity(clarke_complex(s).samples[tail]).circularity_coefficient > 0.3


def test_pipeline_empty():
    tr = run_pipeline(SampleSeries(np.zeros((0, 3))))
    assert len(tr) == 0 and tr.m_tilde.size == 0


def test_pipeline_accepts_complex_series():
    s = synth(balanced_config(), 300)
    a = run_pipeline(s)
    b = run_pipeline(clarke_complex(s))
    np.testing.assert_array_equal(a.m_tilde, b.m_tilde)


def test_frequency_step_adaptive_park_settles():
    f1, f2, k0 = 50.0, 49.0, 2000
    cfg = ThreePhaseConfig(sample_rate=FS, base_frequency=f1,
                           frequency_events=(FrequencyEvent(k0, f2),))
    n = 6000
    s = synth(cfg, n)
    tr = run_pipeline(s, mu=0.01, sample_rate=FS)
    vp = sequence_from_waveform(cfg).positive
    assert abs(tr.frequency_hz[-1] - f2) < 1e-3
    # accumulated-phase demodulation: m_tilde settles on V+ rotated by the phase
    # lost while the estimate lagged the true frequency
    lag = accumulated_phase(cfg, n) - tr.phase
    settled = slice(k0 + 1000, None)
    assert np.ptp(lag[settled]) < 1e-3
    err = np.abs(tr.m_tilde[settled] - vp * np.exp(1j * lag[settled]))
    assert err.max() < 0.01 * abs(vp)
    assert np.abs(np.abs(tr.m_tilde[settled]) - abs(vp)).max() < 0.01 * abs(vp)


def test_monotone_convergence_small_mu():
    w = 2 * np.pi * 50 / FS
    z = ComplexSeries(math.sqrt(1.5) * np.exp(1j * w * np.arange(3000)))
    rng = np.random.default_rng(11)
    for _ in range(10):
        h0 = complex(*rng.normal(size=2))
        g0 = complex(*rng.normal(size=2)) * 0.5
        state = WlarState(h=h0, g=g0, mu=0.002)
        errs = []
        for x in z.samples:
            state, e = aclms_step(state, x)
            errs.append(abs(e))
        means = np.array(errs[1:2801]).reshape(14, 200).mean(axis=1)
        assert np.all(np.diff(means) <= 1e-12)


@pytest.mark.slow
def test_stability_long_run():
    cfg = ThreePhaseConfig(amplitudes=(1.0, 0.6, 0.8), phases=(0.0, 0.3, -0.2),
                           sample_rate=FS, base_frequency=50.0)
    z = clarke_complex(synth(cfg, 10 ** 6))
    z = ComplexSeries(z.samples / np.abs(z.samples).max())
    tr = run_pipeline(z, mu=0.01)
    assert np.all(np.isfinite(tr.h)) and np.all(np.isfinite(tr.g))
