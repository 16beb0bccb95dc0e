"""Streaming signal-processing primitives for the tapping detector.

A second-order low-pass Butterworth section, a fixed-capacity sample buffer,
and peak detection over a filtered velocity signal. Peak detection follows a
gait-style scheme: every contiguous run of samples at or above the detection
threshold is a candidate step region; region edges are then walked outward
while the signal keeps falling (down to a floor), and the region's maximum
sample becomes the peak. A refractory interval suppresses double detections.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from ._backend import kernels


@dataclass(frozen=True, slots=True)
class BiquadCoefficients:
    """Normalized biquad coefficients (a0 = 1)."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def is_stable(self) -> bool:
        # poles of z^2 + a1 z + a2 inside the unit circle (Jury criterion)
        return abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2


def design_butterworth_lowpass(cutoff_hz: float, sample_rate_hz: float) -> BiquadCoefficients:
    """Second-order Butterworth low-pass via the bilinear transform.

    The analog prototype frequency is pre-warped so the digital -3 dB point
    lands exactly on ``cutoff_hz``. DC gain is 1.
    """
    if sample_rate_hz <= 0.0:
        raise ValueError("sample_rate_hz must be positive")
    if not 0.0 < cutoff_hz < sample_rate_hz / 2.0:
        raise ValueError(
            f"cutoff_hz must lie in (0, {sample_rate_hz / 2.0}) (Nyquist), got {cutoff_hz}")
    k = math.tan(math.pi * cutoff_hz / sample_rate_hz)  # pre-warped
    q = 1.0 / math.sqrt(2.0)  # Butterworth
    norm = 1.0 / (1.0 + k / q + k * k)
    b0 = k * k * norm
    return BiquadCoefficients(
        b0=b0,
        b1=2.0 * b0,
        b2=b0,
        a1=2.0 * (k * k - 1.0) * norm,
        a2=(1.0 - k / q + k * k) * norm,
    )


class BiquadFilter:
    """Single-owner stateful IIR section (direct form II transposed).

    State persists across calls so a continuous stream can be filtered one
    sample (or one block) at a time. ``process`` and ``process_block`` run the
    identical recurrence and produce bit-identical outputs.
    """

    def __init__(self, coeffs: BiquadCoefficients):
        self.coeffs = coeffs
        self._s1 = 0.0
        self._s2 = 0.0

    def reset(self) -> None:
        self._s1 = 0.0
        self._s2 = 0.0

    def process(self, x: float) -> float:
        if not math.isfinite(x):
            raise ValueError(f"non-finite filter input {x!r}")
        c = self.coeffs
        y = c.b0 * x + self._s1
        self._s1 = (c.b1 * x - c.a1 * y) + self._s2
        self._s2 = c.b2 * x - c.a2 * y
        return y

    def process_block(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.size and not np.all(np.isfinite(xs)):
            raise ValueError("non-finite filter input in block")
        c = self.coeffs
        out, self._s1, self._s2 = kernels.biquad_run(
            c.b0, c.b1, c.b2, c.a1, c.a2, xs, self._s1, self._s2)
        return out


@dataclass(frozen=True, slots=True)
class PeakEvent:
    timestamp: float
    value: float


class RingBuffer:
    """Fixed-capacity buffer of (timestamp, value) samples; oldest evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._q: deque[tuple[float, float]] = deque(maxlen=capacity)

    def push(self, timestamp: float, value: float) -> None:
        self._q.append((timestamp, value))

    def __len__(self) -> int:
        return len(self._q)

    def timestamps(self) -> list[float]:
        return [t for t, _ in self._q]

    def values(self) -> list[float]:
        return [v for _, v in self._q]

    def samples(self) -> list[tuple[float, float]]:
        return list(self._q)


def detect_peaks(buffer: RingBuffer, threshold: float, *,
                 refractory_s: float = 0.15, floor: float = 0.0) -> list[PeakEvent]:
    """Find step peaks in a buffered signal.

    For each contiguous region with value >= threshold, the boundaries are
    expanded outward while the signal keeps descending and stays above
    ``floor`` (locating the full swing); the region's maximum sample is the
    peak. Events closer than ``refractory_s`` to the previous accepted event
    are dropped.
    """
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    samples = buffer.samples()
    n = len(samples)
    events: list[PeakEvent] = []
    last_t: float | None = None
    i = 0
    while i < n:
        if samples[i][1] < threshold:
            i += 1
            continue
        j = i
        while j + 1 < n and samples[j + 1][1] >= threshold:
            j += 1
        lo, hi = _expand_region(samples, i, j, floor)
        # max() keeps the earliest sample on exact value ties
        t_peak, v_peak = max(samples[lo:hi + 1], key=lambda s: s[1])
        if last_t is None or t_peak - last_t >= refractory_s:
            events.append(PeakEvent(t_peak, v_peak))
            last_t = t_peak
        i = j + 1
    return events


def _expand_region(samples: list[tuple[float, float]], lo: int, hi: int,
                   floor: float) -> tuple[int, int]:
    # walk outward while the signal keeps descending; stop when it turns
    # upward again (previous/next swing) or drops to the floor
    while lo > 0 and samples[lo - 1][1] < samples[lo][1] and samples[lo - 1][1] > floor:
        lo -= 1
    while hi + 1 < len(samples) and samples[hi + 1][1] < samples[hi][1] \
            and samples[hi + 1][1] > floor:
        hi += 1
    return lo, hi


class StreamingPeakDetector:
    """Online equivalent of ``detect_peaks`` for one sample at a time.

    A peak is confirmed when the signal falls back below the threshold
    (region close), so confirmation lags the crest by up to half a swing.
    On identical data the confirmed peaks match ``detect_peaks`` exactly for
    every region that has closed.
    """

    def __init__(self, threshold: float, refractory_s: float = 0.15):
        if threshold <= 0.0:
            raise ValueError("threshold must be positive")
        self.threshold = threshold
        self.refractory_s = refractory_s
        self._in_region = False
        self._best_t = 0.0
        self._best_v = -math.inf
        self._last_emit_t: float | None = None

    def push(self, timestamp: float, value: float) -> PeakEvent | None:
        if value >= self.threshold:
            if not self._in_region:
                self._in_region = True
                self._best_t = timestamp
                self._best_v = value
            elif value > self._best_v:  # strict: ties keep the earliest sample
                self._best_t = timestamp
                self._best_v = value
            return None
        if not self._in_region:
            return None
        self._in_region = False
        if self._last_emit_t is not None and self._best_t - self._last_emit_t < self.refractory_s:
            return None
        self._last_emit_t = self._best_t
        return PeakEvent(self._best_t, self._best_v)
