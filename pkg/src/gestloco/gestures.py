"""The four locomotion interfaces as per-frame stream controllers.

Each controller consumes one input frame (``HandFrame`` for the three hand
gestures, ``GamepadFrame`` for the gamepad) and emits a ``LocomotionCommand``
(speed in km/h, steering angle in degrees). Speed mappings:

* finger distance  - thumb-index gap mapped linearly onto [s_min, s_max],
  with a dead zone below which speed is zero
* finger number    - SVM-classified count of extended right-hand fingers,
  class id == km/h
* finger tapping   - interval between successive upward-velocity peaks of
  the index fingertip mapped inversely onto [s_min, s_max]
* gamepad          - right stick y scales speed, left stick x scales steering

Steering for the hand interfaces comes from the left hand's pointing
direction (yaw vs. the initial -z travel axis), smoothed by a critically
damped spring. The emitted steering angle is interpreted by the simulator as
a yaw-rate command by default ("rate" mode; "absolute" sets the heading
offset directly).

Tracking loss: the last command is held for TRACK_LOSS_HOLD_S, after which
the speed target drops to zero; the steering target goes to zero immediately
and keeps being smoothed. Controllers never raise mid-trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .classifier import ClassifierModel, predict
from .dsp import (BiquadFilter, RingBuffer, StreamingPeakDetector,
                  design_butterworth_lowpass)
from .features import stack_features
from .geom import FORWARD, UP, Vec3
from .handmodel import INDEX, THUMB, GamepadFrame, HandFrame

KMH_PER_MPS = 3.6
TRACK_LOSS_HOLD_S = 0.25

INTERFACES = ("finger-distance", "finger-number", "finger-tapping", "gamepad")


@dataclass(frozen=True, slots=True)
class LocomotionCommand:
    speed_kmh: float
    steering_deg: float


@dataclass(frozen=True, slots=True)
class SpeedLimits:
    s_min_kmh: float = 0.0
    s_max_kmh: float = 5.0
    accel_mps2: float = 0.5  # applied by the simulator, carried here for config unity

    def __post_init__(self):
        if not 0.0 <= self.s_min_kmh < self.s_max_kmh:
            raise ValueError("require 0 <= s_min < s_max")


@dataclass(frozen=True, slots=True)
class FingerDistanceConfig:
    reference_m: float = 0.08   # gap giving s_max
    dead_zone_m: float = 0.025  # gap at/below which speed is zero

    def __post_init__(self):
        if not 0.0 < self.dead_zone_m < self.reference_m:
            raise ValueError("require 0 < dead_zone < reference")


@dataclass(frozen=True, slots=True)
class FingerTappingConfig:
    t_min_s: float = 0.3
    t_max_s: float = 0.95
    cutoff_hz: float = 5.0
    buffer_s: float = 1.0
    threshold_mps: float = 0.15
    refractory_s: float = 0.15

    def __post_init__(self):
        if not 0.0 < self.t_min_s < self.t_max_s:
            raise ValueError("require 0 < t_min < t_max")


@dataclass(frozen=True, slots=True)
class SteeringConfig:
    smooth_time_s: float = 0.2
    turn_gain: float = 1.0      # deg/s of heading per deg of command (rate mode)
    mode: str = "rate"          # "rate" | "absolute"

    def __post_init__(self):
        if self.mode not in ("rate", "absolute"):
            raise ValueError(f"steering mode must be 'rate' or 'absolute', got {self.mode!r}")


@dataclass(frozen=True, slots=True)
class GamepadConfig:
    deadzone: float = 0.05
    max_steer_deg: float = 45.0


# --- speed mappings -----------------------------------------------------------

def finger_distance_speed(right, cfg: FingerDistanceConfig, lim: SpeedLimits) -> float:
    """Thumb-index gap -> speed; gap <= dead zone stops, gap > reference saturates."""
    gap = right.fingertips[THUMB].distance_to(right.fingertips[INDEX])
    if gap <= cfg.dead_zone_m:
        return 0.0
    if gap > cfg.reference_m:
        return lim.s_max_kmh
    frac = (gap - cfg.dead_zone_m) / (cfg.reference_m - cfg.dead_zone_m)
    return frac * (lim.s_max_kmh - lim.s_min_kmh) + lim.s_min_kmh


def tapping_interval_speed(t_step: float, cfg: FingerTappingConfig, lim: SpeedLimits) -> float:
    """Peak-to-peak interval -> speed; <= t_min saturates, > t_max stops."""
    if t_step > cfg.t_max_s:
        return lim.s_min_kmh
    if t_step <= cfg.t_min_s:
        return lim.s_max_kmh
    frac = 1.0 - (t_step - cfg.t_min_s) / (cfg.t_max_s - cfg.t_min_s)
    return frac * (lim.s_max_kmh - lim.s_min_kmh) + lim.s_min_kmh


# --- steering -----------------------------------------------------------------

def steering_raw_angle(pointing_dir: Vec3) -> float | None:
    """Signed yaw (deg) of the pointing direction vs. the -z travel axis.

    The direction is first projected onto the x-z plane so hand pitch does
    not bleed into yaw. Returns None when the projection is degenerate
    (pointing straight up/down).
    """
    px, pz = pointing_dir.x, pointing_dir.z
    n = math.hypot(px, pz)
    if n < 1e-9:
        return None
    current = Vec3(px / n, 0.0, pz / n)
    d = UP.dot(FORWARD.cross(current))
    sign = -1.0 if d < 0.0 else 1.0  # sign(0) == +1
    cos_angle = min(1.0, max(-1.0, FORWARD.dot(current)))
    return sign * math.degrees(math.acos(cos_angle))


def smooth_damp(current: float, target: float, velocity: float,
                smooth_time: float, dt: float) -> tuple[float, float]:
    """Critically damped spring step toward ``target``.

    Exact recurrence (game-engine SmoothDamp semantics), with
    omega = 2 / smooth_time and x = omega * dt:

        decay    = 1 / (1 + x + 0.48 x^2 + 0.235 x^3)     # ~= exp(-x)
        change   = current - target
        temp     = (velocity + omega * change) * dt
        velocity'= (velocity - omega * temp) * decay
        value'   = target + (change + temp) * decay

    plus an overshoot clamp: if value' passes the target (relative to the
    starting side), it snaps to the target and velocity' = (value' - target)/dt.
    Returns (value', velocity').
    """
    omega = 2.0 / smooth_time
    x = omega * dt
    decay = 1.0 / (1.0 + x + 0.48 * x * x + 0.235 * x * x * x)
    change = current - target
    temp = (velocity + omega * change) * dt
    new_velocity = (velocity - omega * temp) * decay
    new_value = target + (change + temp) * decay
    if (target > current) == (new_value > target):
        new_value = target
        new_velocity = (new_value - target) / dt if dt > 0.0 else 0.0
    return new_value, new_velocity


class SteeringState:
    """Damped steering tracker fed by the left hand once per frame."""

    def __init__(self, cfg: SteeringConfig):
        self.cfg = cfg
        self.angle_deg = 0.0
        self.velocity = 0.0
        self._last_target = 0.0

    def step(self, left, dt: float) -> float:
        if left.tracked:
            raw = steering_raw_angle(left.pointing_dir)
            if raw is not None:
                self._last_target = raw
        else:
            self._last_target = 0.0  # lost hand: decay toward straight ahead
        if dt > 0.0:
            self.angle_deg, self.velocity = smooth_damp(
                self.angle_deg, self._last_target, self.velocity,
                self.cfg.smooth_time_s, dt)
        return self.angle_deg


# --- controllers --------------------------------------------------------------

class _HandController:
    """Shared plumbing: left-hand steering, frame timing, loss handling."""

    def __init__(self, lim: SpeedLimits, steering: SteeringConfig):
        self.lim = lim
        self.steering = SteeringState(steering)
        self._prev_t: float | None = None
        self._held_speed = 0.0
        self._loss_since: float | None = None

    def _dt(self, t: float) -> float:
        dt = 0.0 if self._prev_t is None else t - self._prev_t
        self._prev_t = t
        return dt

    def _apply_loss(self, t: float, tracked: bool, speed_if_tracked) -> float:
        """Hold the last speed through short dropouts, then command zero."""
        if tracked:
            self._loss_since = None
            self._held_speed = speed_if_tracked()
        else:
            if self._loss_since is None:
                self._loss_since = t
            if t - self._loss_since > TRACK_LOSS_HOLD_S:
                self._held_speed = 0.0
        return self._held_speed

    def _clamp(self, speed: float) -> float:
        return min(max(speed, 0.0), self.lim.s_max_kmh)


class FingerDistanceController(_HandController):
    def __init__(self, lim: SpeedLimits | None = None,
                 cfg: FingerDistanceConfig | None = None,
                 steering: SteeringConfig | None = None):
        super().__init__(lim or SpeedLimits(), steering or SteeringConfig())
        self.cfg = cfg or FingerDistanceConfig()

    def step(self, frame: HandFrame) -> LocomotionCommand:
        dt = self._dt(frame.timestamp)
        speed = self._apply_loss(
            frame.timestamp, frame.right.tracked,
            lambda: finger_distance_speed(frame.right, self.cfg, self.lim))
        steer = self.steering.step(frame.left, dt)
        return LocomotionCommand(self._clamp(speed), steer)


class FingerNumberController(_HandController):
    def __init__(self, model: ClassifierModel, lim: SpeedLimits | None = None,
                 steering: SteeringConfig | None = None):
        super().__init__(lim or SpeedLimits(), steering or SteeringConfig())
        self.model = model

    def step(self, frame: HandFrame) -> LocomotionCommand:
        dt = self._dt(frame.timestamp)
        both = frame.left.tracked and frame.right.tracked
        speed = self._apply_loss(
            frame.timestamp, both,
            lambda: float(predict(self.model, stack_features(frame.left, frame.right))))
        steer = self.steering.step(frame.left, dt)
        return LocomotionCommand(self._clamp(speed), steer)


class FingerTappingController(_HandController):
    """Speed from the cadence of index-finger taps.

    The index fingertip's y-velocity is low-pass filtered, buffered, and
    scanned for upward peaks; each new peak updates the speed from the
    interval to the previous peak. With no fresh peak for longer than t_max
    the speed decays to s_min.
    """

    def __init__(self, sample_rate_hz: float = 100.0, lim: SpeedLimits | None = None,
                 cfg: FingerTappingConfig | None = None,
                 steering: SteeringConfig | None = None):
        super().__init__(lim or SpeedLimits(), steering or SteeringConfig())
        self.cfg = cfg or FingerTappingConfig()
        self.filter = BiquadFilter(
            design_butterworth_lowpass(self.cfg.cutoff_hz, sample_rate_hz))
        self.buffer = RingBuffer(max(2, round(self.cfg.buffer_s * sample_rate_hz)))
        self.detector = StreamingPeakDetector(self.cfg.threshold_mps, self.cfg.refractory_s)
        self._last_peak_t: float | None = None
        self._speed = self.lim.s_min_kmh

    def step(self, frame: HandFrame) -> LocomotionCommand:
        dt = self._dt(frame.timestamp)
        t = frame.timestamp
        if frame.right.tracked:
            self._loss_since = None
            vy = frame.right.fingertip_velocities[INDEX].y
            filtered = self.filter.process(vy)
            self.buffer.push(t, filtered)
            peak = self.detector.push(t, filtered)
            if peak is not None:
                if self._last_peak_t is not None:
                    t_step = peak.timestamp - self._last_peak_t
                    self._speed = tapping_interval_speed(t_step, self.cfg, self.lim)
                self._last_peak_t = peak.timestamp
            if self._last_peak_t is None or t - self._last_peak_t > self.cfg.t_max_s:
                self._speed = self.lim.s_min_kmh  # cadence went stale
        else:
            if self._loss_since is None:
                self._loss_since = t
            if t - self._loss_since > TRACK_LOSS_HOLD_S:
                self._speed = self.lim.s_min_kmh
        steer = self.steering.step(frame.left, dt)
        return LocomotionCommand(self._clamp(self._speed), steer)


class GamepadController:
    def __init__(self, lim: SpeedLimits | None = None, cfg: GamepadConfig | None = None):
        self.lim = lim or SpeedLimits()
        self.cfg = cfg or GamepadConfig()

    def step(self, frame: GamepadFrame) -> LocomotionCommand:
        speed = 0.0 if frame.right_y < self.cfg.deadzone else frame.right_y * self.lim.s_max_kmh
        steer = 0.0 if abs(frame.left_x) < self.cfg.deadzone \
            else frame.left_x * self.cfg.max_steer_deg
        return LocomotionCommand(speed, steer)


def make_controller(interface: str, *, lim: SpeedLimits | None = None,
                    model: ClassifierModel | None = None,
                    sample_rate_hz: float = 100.0,
                    finger_distance: FingerDistanceConfig | None = None,
                    finger_tapping: FingerTappingConfig | None = None,
                    steering: SteeringConfig | None = None,
                    gamepad: GamepadConfig | None = None):
    """Uniform controller factory over the four interface ids."""
    if interface == "finger-distance":
        return FingerDistanceController(lim, finger_distance, steering)
    if interface == "finger-number":
        if model is None:
            raise ValueError("finger-number interface requires a trained classifier model")
        return FingerNumberController(model, lim, steering)
    if interface == "finger-tapping":
        return FingerTappingController(sample_rate_hz, lim, finger_tapping, steering)
    if interface == "gamepad":
        return GamepadController(lim, gamepad)
    raise ValueError(f"unknown interface {interface!r}; expected one of {INTERFACES}")
