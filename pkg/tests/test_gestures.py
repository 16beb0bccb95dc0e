from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gestloco.classifier import LabeledSample, train
from gestloco.features import stack_features
from gestloco.geom import Vec3
from gestloco.gestures import (FingerDistanceConfig, FingerTappingConfig,
                               GamepadConfig, GamepadController, SpeedLimits,
                               SteeringConfig, finger_distance_speed,
                               make_controller, smooth_damp, steering_raw_angle,
                               tapping_interval_speed)
from gestloco.handmodel import (GamepadFrame, HandFrame, TrackedHand,
                                untracked_hand)
from gestloco.pilot import PoseTemplates, generate_dataset

LIM = SpeedLimits()
FD = FingerDistanceConfig()
TAP = FingerTappingConfig()
REL = 1e-9


def hand_with_gap(gap: float) -> TrackedHand:
    tips = (Vec3(0, 0, 0), Vec3(gap, 0, 0), Vec3(0, 0.05, 0),
            Vec3(0.01, 0.05, 0), Vec3(0.02, 0.05, 0))
    vels = (Vec3(0, 0, 0),) * 5
    return TrackedHand(tips, Vec3(0, 0, 0.05), Vec3(0, 1, 0), Vec3(0, 0, -1), vels)


def steering_hand(pointing: Vec3) -> TrackedHand:
    tips = (Vec3(0, 0, 0),) * 5
    return TrackedHand(tips, Vec3(0, 0, 0), Vec3(0, 1, 0), pointing,
                       (Vec3(0, 0, 0),) * 5)


# --- finger distance ------------------------------------------------------------

def test_reference_distance_gives_max_speed():
    assert finger_distance_speed(hand_with_gap(0.08), FD, LIM) == pytest.approx(5.0, rel=REL)


def test_dead_zone_distance_stops():
    assert finger_distance_speed(hand_with_gap(0.025), FD, LIM) == 0.0
    assert finger_distance_speed(hand_with_gap(0.01), FD, LIM) == 0.0


def test_midpoint_distance_gives_half_speed():
    assert finger_distance_speed(hand_with_gap(0.0525), FD, LIM) == pytest.approx(2.5, rel=REL)


def test_over_reference_clamps_to_max():
    assert finger_distance_speed(hand_with_gap(0.2), FD, LIM) == 5.0


@given(st.floats(min_value=0.0251, max_value=0.08),
       st.floats(min_value=0.0251, max_value=0.08))
@settings(max_examples=200, deadline=None)
def test_finger_distance_monotone(l1, l2):
    assume(l1 < l2)
    s1 = finger_distance_speed(hand_with_gap(l1), FD, LIM)
    s2 = finger_distance_speed(hand_with_gap(l2), FD, LIM)
    assert s1 < s2


# --- finger tapping mapping -------------------------------------------------------

def test_tapping_interval_boundaries():
    assert tapping_interval_speed(0.3, TAP, LIM) == pytest.approx(5.0, rel=REL)
    assert tapping_interval_speed(0.95, TAP, LIM) == pytest.approx(0.0, abs=1e-12)
    assert tapping_interval_speed(0.625, TAP, LIM) == pytest.approx(2.5, rel=REL)
    assert tapping_interval_speed(0.2, TAP, LIM) == 5.0    # clamp below t_min
    assert tapping_interval_speed(1.2, TAP, LIM) == 0.0    # clamp above t_max


@given(st.floats(min_value=0.301, max_value=0.95),
       st.floats(min_value=0.301, max_value=0.95))
@settings(max_examples=200, deadline=None)
def test_tapping_interval_monotone_decreasing(t1, t2):
    assume(t1 < t2)
    assert tapping_interval_speed(t1, TAP, LIM) > tapping_interval_speed(t2, TAP, LIM)


# --- steering ---------------------------------------------------------------------

def test_steering_identity_case():
    assert steering_raw_angle(Vec3(0, 0, -1)) == pytest.approx(0.0, abs=1e-12)


def test_steering_left_is_positive_ninety():
    assert steering_raw_angle(Vec3(-1, 0, 0)) == pytest.approx(90.0, rel=REL)


def test_steering_right_is_negative_ninety():
    assert steering_raw_angle(Vec3(1, 0, 0)) == pytest.approx(-90.0, rel=REL)


def test_steering_projects_out_pitch():
    # pitching the hand up must not change the yaw reading
    flat = steering_raw_angle(Vec3(-0.5, 0.0, -0.5))
    pitched = steering_raw_angle(Vec3(-0.5, 0.7, -0.5))
    assert pitched == pytest.approx(flat, rel=REL)


def test_steering_degenerate_projection_is_none():
    assert steering_raw_angle(Vec3(0, 1, 0)) is None


@given(st.floats(min_value=-0.999, max_value=0.999),
       st.floats(min_value=-0.999, max_value=-0.001))
@settings(max_examples=200, deadline=None)
def test_steering_antisymmetry(x, z):
    assume(abs(x) > 1e-6)
    n = math.hypot(x, z)
    angle = steering_raw_angle(Vec3(x / n, 0, z / n))
    mirrored = steering_raw_angle(Vec3(-x / n, 0, z / n))
    assert mirrored == -angle


def test_smooth_damp_converges_within_one_percent():
    cfg = SteeringConfig()
    value, velocity = 0.0, 0.0
    target = 40.0
    dt = 0.01
    steps = int(5 * cfg.smooth_time_s / dt)
    for _ in range(steps):
        value, velocity = smooth_damp(value, target, velocity, cfg.smooth_time_s, dt)
    assert abs(value - target) <= 0.01 * abs(target)


def test_smooth_damp_no_overshoot():
    value, velocity = 0.0, 0.0
    peak = -math.inf
    for _ in range(500):
        value, velocity = smooth_damp(value, 10.0, velocity, 0.2, 0.01)
        peak = max(peak, value)
    assert peak <= 10.0 + 1e-9


# --- gamepad ----------------------------------------------------------------------

def test_gamepad_neutral():
    cmd = GamepadController().step(GamepadFrame(0.0, 0.0, 0.0))
    assert (cmd.speed_kmh, cmd.steering_deg) == (0.0, 0.0)


def test_gamepad_full_forward():
    cmd = GamepadController().step(GamepadFrame(0.0, 0.0, 1.0))
    assert cmd.speed_kmh == pytest.approx(5.0, rel=REL)
    assert cmd.steering_deg == 0.0


def test_gamepad_half_speed_full_left_deflection():
    cmd = GamepadController().step(GamepadFrame(0.0, -1.0, 0.5))
    assert cmd.speed_kmh == pytest.approx(2.5, rel=REL)
    assert cmd.steering_deg == pytest.approx(-45.0, rel=REL)


def test_gamepad_deadzones():
    c = GamepadController(cfg=GamepadConfig(deadzone=0.05))
    assert c.step(GamepadFrame(0.0, 0.04, 0.04)) == c.step(GamepadFrame(0.0, 0.0, 0.0))
    assert c.step(GamepadFrame(0.0, 0.05, 0.05)).speed_kmh > 0.0


# --- controllers ------------------------------------------------------------------

def _frames_constant(hand_right, hand_left, n=50, dt=0.01):
    return [HandFrame(k * dt, hand_left, hand_right) for k in range(n)]


def test_neutral_stream_constant_zero_command():
    frames = _frames_constant(hand_with_gap(0.01), steering_hand(Vec3(0, 0, -1)))
    ctrl = make_controller("finger-distance")
    for frame in frames:
        cmd = ctrl.step(frame)
        assert cmd.speed_kmh == 0.0
        assert cmd.steering_deg == pytest.approx(0.0, abs=1e-12)


def test_controller_determinism():
    frames = _frames_constant(hand_with_gap(0.06), steering_hand(Vec3(-0.3, 0, -0.95)))
    c1 = make_controller("finger-distance")
    c2 = make_controller("finger-distance")
    assert [c1.step(f) for f in frames] == [c2.step(f) for f in frames]


def test_tracking_loss_holds_then_zeroes():
    dt = 0.01
    good = HandFrame(0.0, steering_hand(Vec3(0, 0, -1)), hand_with_gap(0.08))
    ctrl = make_controller("finger-distance")
    assert ctrl.step(good).speed_kmh == 5.0
    speeds = []
    for k in range(1, 61):  # 0.6 s of tracking loss
        frame = HandFrame(k * dt, untracked_hand(), untracked_hand())
        speeds.append(ctrl.step(frame).speed_kmh)
    held = [s for k, s in enumerate(speeds) if (k + 1) * dt <= 0.25]
    assert all(s == 5.0 for s in held)
    assert speeds[-1] == 0.0


def test_steering_target_zero_on_left_loss():
    ctrl = make_controller("finger-distance")
    dt = 0.01
    for k in range(100):
        cmd = ctrl.step(HandFrame(k * dt, steering_hand(Vec3(-1, 0, 0)),
                                  hand_with_gap(0.05)))
    assert cmd.steering_deg == pytest.approx(90.0, abs=1.0)
    for k in range(100, 300):
        cmd = ctrl.step(HandFrame(k * dt, untracked_hand(), hand_with_gap(0.05)))
    assert abs(cmd.steering_deg) < 1.0  # decayed toward zero


@given(st.floats(min_value=0.0, max_value=0.3), st.floats(min_value=-1, max_value=1),
       st.floats(min_value=-1, max_value=1))
@settings(max_examples=200, deadline=None)
def test_speed_always_within_limits(gap, px, pz):
    assume(math.hypot(px, pz) > 1e-3)
    n = math.hypot(px, pz)
    frame = HandFrame(0.0, steering_hand(Vec3(px / n, 0, pz / n)), hand_with_gap(gap))
    cmd = make_controller("finger-distance").step(frame)
    assert LIM.s_min_kmh <= cmd.speed_kmh <= LIM.s_max_kmh


def _tapping_frames(period_s, duration_s, dt=0.01, amplitude=0.4):
    frames = []
    base = PoseTemplates().right_for_class(5)
    left = PoseTemplates().left_extended()
    for k in range(int(duration_s / dt)):
        t = k * dt
        vy = amplitude * math.sin(2 * math.pi * t / period_s)
        vels = list(base.fingertip_velocities)
        vels[1] = Vec3(0.0, vy, 0.0)
        right = TrackedHand(base.fingertips, base.palm_centre, base.palm_normal,
                            base.pointing_dir, tuple(vels))
        frames.append(HandFrame(t, left, right))
    return frames


def test_tapping_controller_tracks_cadence():
    ctrl = make_controller("finger-tapping", sample_rate_hz=100.0)
    speeds = [ctrl.step(f).speed_kmh for f in _tapping_frames(0.5, 6.0)]
    expected = tapping_interval_speed(0.5, TAP, LIM)
    assert speeds[-1] == pytest.approx(expected, abs=0.2)
    # most of the post-warmup stream sits at the expected speed
    tail = speeds[200:]
    close = sum(1 for s in tail if abs(s - expected) < 0.2)
    assert close / len(tail) > 0.8


def test_tapping_decays_when_taps_stop():
    ctrl = make_controller("finger-tapping", sample_rate_hz=100.0)
    frames = _tapping_frames(0.4, 3.0)
    for f in frames:
        ctrl.step(f)
    quiet = _tapping_frames(0.4, 2.0, amplitude=0.0)
    last = None
    for f in quiet:
        shifted = HandFrame(f.timestamp + 3.0, f.left, f.right)
        last = ctrl.step(shifted)
    assert last.speed_kmh == 0.0


@pytest.fixture(scope="module")
def small_model():
    rng = np.random.default_rng(99)
    frames, labels = generate_dataset(30, sigma=0.003, rng=rng)
    samples = [LabeledSample(stack_features(f.left, f.right), l)
               for f, l in zip(frames, labels)]
    return train(samples)


def test_finger_number_controller_poses(small_model):
    templates = PoseTemplates()
    ctrl = make_controller("finger-number", model=small_model)
    stop = HandFrame(0.0, templates.left_fist(), templates.right_for_class(0))
    assert ctrl.step(stop).speed_kmh == 0.0
    five = HandFrame(0.01, templates.left_extended(), templates.right_for_class(5))
    assert ctrl.step(five).speed_kmh == 5.0
    two = HandFrame(0.02, templates.left_extended(), templates.right_for_class(2))
    assert ctrl.step(two).speed_kmh == 2.0


def test_finger_number_holds_on_untracked(small_model):
    templates = PoseTemplates()
    ctrl = make_controller("finger-number", model=small_model)
    three = HandFrame(0.0, templates.left_extended(), templates.right_for_class(3))
    assert ctrl.step(three).speed_kmh == 3.0
    lost = HandFrame(0.01, untracked_hand(), templates.right_for_class(3))
    assert ctrl.step(lost).speed_kmh == 3.0  # within the hold window


def test_finger_number_requires_model():
    with pytest.raises(ValueError):
        make_controller("finger-number")


def test_unknown_interface_rejected():
    with pytest.raises(ValueError):
        make_controller("telepathy")
