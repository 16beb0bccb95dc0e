from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gestloco.dsp import (BiquadFilter, RingBuffer, StreamingPeakDetector,
                          design_butterworth_lowpass, detect_peaks)

FS = 100.0
CUTOFF = 5.0


def _filter() -> BiquadFilter:
    return BiquadFilter(design_butterworth_lowpass(CUTOFF, FS))


def measure_gain(f: BiquadFilter, freq_hz: float, fs: float, *,
                 settle_s: float = 1.0, measure_s: float = 2.0) -> float:
    """Independent amplitude oracle: quadrature demodulation of the steady-state
    response to a unit sinusoid, after discarding the transient."""
    n_settle = int(settle_s * fs)
    n_total = n_settle + int(measure_s * fs)
    t = np.arange(n_total) / fs
    x = np.sin(2 * np.pi * freq_hz * t)
    y = f.process_block(x)[n_settle:]
    t = t[n_settle:]
    # project onto the quadrature pair; exact for a pure sinusoid over whole cycles
    i = 2.0 * np.mean(y * np.sin(2 * np.pi * freq_hz * t))
    q = 2.0 * np.mean(y * np.cos(2 * np.pi * freq_hz * t))
    return math.hypot(i, q)


def test_design_matches_scipy_butterworth():
    scipy_signal = pytest.importorskip("scipy.signal")
    b, a = scipy_signal.butter(2, CUTOFF, fs=FS)
    c = design_butterworth_lowpass(CUTOFF, FS)
    assert np.allclose([c.b0, c.b1, c.b2], b, rtol=1e-9, atol=1e-12)
    assert np.allclose([1.0, c.a1, c.a2], a, rtol=1e-9, atol=1e-12)


def test_design_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        design_butterworth_lowpass(50.0, 100.0)  # at Nyquist
    with pytest.raises(ValueError):
        design_butterworth_lowpass(0.0, 100.0)
    with pytest.raises(ValueError):
        design_butterworth_lowpass(5.0, 0.0)


def test_coefficients_stable():
    for cutoff in (0.5, 2.0, 5.0, 20.0, 49.0):
        assert design_butterworth_lowpass(cutoff, FS).is_stable()


def test_dc_gain_unity_on_constant_input():
    f = _filter()
    y = f.process_block(np.ones(int(4 * FS)))
    assert abs(y[-1] - 1.0) < 1e-9


def test_minus_3db_at_cutoff():
    gain = measure_gain(_filter(), CUTOFF, FS)
    db = 20 * math.log10(gain)
    assert abs(db - (-3.0103)) < 0.3


def test_attenuation_at_4x_cutoff():
    gain = measure_gain(_filter(), 4 * CUTOFF, FS)
    assert 20 * math.log10(gain) <= -20.0


def test_impulse_response_sums_to_one():
    f = _filter()
    x = np.zeros(int(2 * FS))
    x[0] = 1.0
    assert abs(f.process_block(x).sum() - 1.0) < 1e-6


def test_zero_input_zero_state_zero_output():
    f = _filter()
    assert f.process(0.0) == 0.0
    assert np.all(f.process_block(np.zeros(100)) == 0.0)


def test_step_response_bounded_with_small_overshoot():
    f = _filter()
    y = f.process_block(np.ones(int(4 * FS)))
    assert y.max() <= 1.05  # Butterworth Q ~= 0.707 overshoots ~4.3%
    assert y.min() >= -1e-12
    assert abs(y[-1] - 1.0) < 1e-9


def test_non_finite_input_rejected():
    f = _filter()
    with pytest.raises(ValueError):
        f.process(float("nan"))
    with pytest.raises(ValueError):
        f.process_block(np.array([0.0, float("inf")]))


def test_block_matches_single_sample_bit_for_bit(rng):
    x = rng.normal(size=500)
    f1, f2 = _filter(), _filter()
    y_block = f1.process_block(x)
    y_seq = np.array([f2.process(v) for v in x])
    assert np.array_equal(y_block, y_seq)


def test_filter_linearity(rng):
    x1 = rng.normal(size=400)
    x2 = rng.normal(size=400)
    a, b = 1.7, -0.3
    fa, fb, fc = _filter(), _filter(), _filter()
    lhs = fc.process_block(a * x1 + b * x2)
    rhs = a * fa.process_block(x1) + b * fb.process_block(x2)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_bounded_input_bounded_output_long_run(rng):
    f = _filter()
    m = 10.0
    peak = 0.0
    for _ in range(10):  # 10^6 samples total
        y = f.process_block(rng.uniform(-m, m, size=100_000))
        peak = max(peak, np.abs(y).max())
    assert peak < 10.0 * m


# --- peak detection -------------------------------------------------------------


def _buffer_from(values, dt=0.01, t0=0.0) -> RingBuffer:
    buf = RingBuffer(len(values))
    for i, v in enumerate(values):
        buf.push(t0 + i * dt, v)
    return buf


def test_no_peaks_in_all_zero_buffer():
    assert detect_peaks(_buffer_from(np.zeros(100)), threshold=0.15) == []


def test_single_sinusoid_cycle_single_peak():
    t = np.arange(100) * 0.01
    x = 0.3 * np.sin(2 * np.pi * 1.0 * t)  # one cycle, amplitude 2x threshold
    events = detect_peaks(_buffer_from(x), threshold=0.15)
    assert len(events) == 1
    crest = int(np.argmax(x))
    assert events[0].timestamp == pytest.approx(t[crest])
    assert events[0].value == pytest.approx(x[crest])


def test_synthetic_tapping_two_peaks_spacing_half_second():
    # 2 Hz sinusoidal y-velocity, amplitude 0.4 m/s, threshold 0.15, 1 s buffer.
    dt = 0.01
    t = np.arange(100) * dt
    x = 0.4 * np.sin(2 * np.pi * 2.0 * t)
    events = detect_peaks(_buffer_from(x), threshold=0.15)
    assert len(events) == 2
    # oracle: brute-force argmax of each positive half-cycle
    crest0 = t[int(np.argmax(np.where(t < 0.25, x, -np.inf)))]
    crest1 = t[int(np.argmax(np.where((t >= 0.25) & (t < 0.75), x, -np.inf)))]
    assert events[0].timestamp == pytest.approx(crest0, abs=dt)
    assert events[1].timestamp == pytest.approx(crest1, abs=dt)
    assert events[1].timestamp - events[0].timestamp == pytest.approx(0.5, abs=dt)


def test_peak_values_at_or_above_threshold():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 0.2, size=300)
    for e in detect_peaks(_buffer_from(x), threshold=0.15):
        assert e.value >= 0.15


def test_peak_determinism():
    rng = np.random.default_rng(7)
    x = rng.normal(0, 0.2, size=200)
    b1, b2 = _buffer_from(x), _buffer_from(x)
    assert detect_peaks(b1, 0.15) == detect_peaks(b2, 0.15)


@given(freq=st.floats(min_value=1.0, max_value=3.0),
       duration=st.floats(min_value=1.0, max_value=4.0))
@settings(max_examples=100, deadline=None)
def test_periodic_peak_count(freq, duration):
    # start at the sine minimum so the window does not slice a region open
    dt = 0.01
    n = int(duration / dt)
    t = np.arange(n) * dt
    x = 0.4 * np.sin(2 * np.pi * freq * t - math.pi / 2)
    events = detect_peaks(_buffer_from(x), threshold=0.15)
    expected = freq * n * dt
    assert math.floor(expected) <= len(events) <= math.floor(expected) + 1


def test_streaming_matches_batch_on_closed_regions(rng):
    dt = 0.01
    t = np.arange(400) * dt
    x = 0.4 * np.sin(2 * np.pi * 1.3 * t) + rng.normal(0, 0.02, size=len(t))
    x[-5:] = 0.0  # end below threshold so every region closes
    det = StreamingPeakDetector(0.15)
    streamed = [e for e in (det.push(ti, vi) for ti, vi in zip(t, x)) if e]
    assert streamed == detect_peaks(_buffer_from(x), 0.15)


def test_refractory_suppresses_near_double_peaks():
    dt = 0.01
    values = np.zeros(60)
    values[10:14] = (0.2, 0.4, 0.2, 0.16)   # first region
    values[16:19] = (0.2, 0.35, 0.2)        # second crest 0.05 s later
    values[9] = 0.0
    buf = _buffer_from(values, dt)
    events = detect_peaks(buf, threshold=0.15, refractory_s=0.15)
    assert len(events) == 1


def test_threshold_must_be_positive():
    with pytest.raises(ValueError):
        detect_peaks(_buffer_from(np.zeros(10)), 0.0)
    with pytest.raises(ValueError):
        StreamingPeakDetector(-1.0)


def test_ring_buffer_eviction():
    buf = RingBuffer(3)
    for i in range(5):
        buf.push(i * 0.01, float(i))
    assert len(buf) == 3
    assert buf.values() == [2.0, 3.0, 4.0]
    assert buf.timestamps() == [0.02, 0.03, 0.04]
