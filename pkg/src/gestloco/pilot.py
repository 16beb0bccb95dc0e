"""Synthetic operators that close the control loop.

A pilot decides a desired (speed, steer) from the simulator observation,
then *inverts* the selected interface's mapping to produce the hand or
gamepad frame a human would have produced: thumb-index gap for finger
distance, a pose template for finger number, a phase-continuous sinusoidal
index-finger velocity for finger tapping, stick deflections for the gamepad,
and a rotated left hand for steering.

Pose templates are parametric (no recorded data): extended fingertips sit
>= 6 cm from the palm centre, curled ones <= 3 cm, so the gesture classes are
separable by construction. Fingertip tracking noise is i.i.d. Gaussian per
axis. The left hand's pointing direction additionally receives yaw noise
with stationary std sigma / 0.1 m radians (the orientation estimate inherits
fingertip noise over a ~10 cm lever arm), modelled as an AR(1) process with
a 0.7 s correlation time: optical pose error wanders slowly with hand pose,
and only that low-frequency part survives the steering smoothing. Per frame
the draw order is fixed: left fingertips (5x3), right fingertips (5x3),
left yaw (1). Observations reach the policies delayed by the configured
reaction time. The gamepad has no tracking noise (only the reaction delay
applies).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import PilotConfig, SimConfig
from .geom import FORWARD, Vec3, rotate_y, wrap_deg
from .gestures import KMH_PER_MPS
from .handmodel import INDEX, THUMB, GamepadFrame, HandFrame, TrackedHand

# template geometry (metres, scale 1): (along_pointing, lateral, toward_palm)
_EXTENDED = ((0.035, -0.065, 0.0),   # thumb: short forward, strongly lateral
             (0.088, -0.022, 0.0),
             (0.092, 0.0, 0.0),
             (0.086, 0.022, 0.0),
             (0.075, 0.040, 0.0))
_CURLED = ((0.015, -0.025, 0.004),
           (0.024, -0.010, 0.010),
           (0.026, 0.0, 0.010),
           (0.024, 0.010, 0.010),
           (0.020, 0.018, 0.008))

# class id -> which right-hand fingers are extended (thumb joins last)
CLASS_FINGERS: dict[int, tuple[int, ...]] = {
    0: (),
    1: (1,),
    2: (1, 2),
    3: (1, 2, 3),
    4: (1, 2, 3, 4),
    5: (0, 1, 2, 3, 4),
}

_PALM_NORMAL = Vec3(0.0, -1.0, 0.0)  # palms face down over the sensor
_PALM_Y = 0.25
_YAW_NOISE_TAU_S = 0.7  # correlation time of the orientation-estimate error


class PoseTemplates:
    """Canonical hands for the six speed classes, parameterized by hand scale."""

    def __init__(self, hand_scale: float = 1.0):
        self.scale = hand_scale

    def hand(self, extended: tuple[bool, ...], side: str) -> TrackedHand:
        mirror = -1.0 if side == "left" else 1.0
        centre = Vec3(0.10 * mirror, _PALM_Y, 0.0)
        lateral = _PALM_NORMAL.cross(FORWARD)  # +x
        tips = []
        for i in range(5):
            along, lat, toward = (_EXTENDED if extended[i] else _CURLED)[i]
            tips.append(centre
                        + FORWARD.scale(along * self.scale)
                        + lateral.scale(lat * mirror * self.scale)
                        + _PALM_NORMAL.scale(toward * self.scale))
        zero5 = (Vec3(0, 0, 0),) * 5
        return TrackedHand(tuple(tips), centre, _PALM_NORMAL, FORWARD, zero5)

    def right_for_class(self, class_id: int) -> TrackedHand:
        fingers = CLASS_FINGERS[class_id]
        return self.hand(tuple(i in fingers for i in range(5)), "right")

    def left_extended(self) -> TrackedHand:
        return self.hand((True,) * 5, "left")

    def left_fist(self) -> TrackedHand:
        return self.hand((False,) * 5, "left")


def rotate_hand_y(hand: TrackedHand, angle_deg: float) -> TrackedHand:
    """Rigidly rotate a hand about the y axis (descriptors are invariant to this)."""
    return TrackedHand(
        tuple(rotate_y(tip, angle_deg) for tip in hand.fingertips),
        rotate_y(hand.palm_centre, angle_deg),
        rotate_y(hand.palm_normal, angle_deg),
        rotate_y(hand.pointing_dir, angle_deg),
        tuple(rotate_y(v, angle_deg) for v in hand.fingertip_velocities),
        hand.tracked,
    )


def _noisy_tips(hand: TrackedHand, sigma: float, rng: np.random.Generator) -> TrackedHand:
    noise = rng.standard_normal((5, 3)) * sigma
    tips = tuple(tip + Vec3(*noise[i]) for i, tip in enumerate(hand.fingertips))
    return TrackedHand(tips, hand.palm_centre, hand.palm_normal, hand.pointing_dir,
                       hand.fingertip_velocities, hand.tracked)


def synthesize_pose(class_id: int, templates: PoseTemplates, sigma: float,
                    rng: np.random.Generator, t: float = 0.0) -> HandFrame:
    """One labeled dataset frame: left fist for class 0 else fully extended,
    right hand posed for the class, Gaussian noise on all fingertips."""
    if class_id not in CLASS_FINGERS:
        raise ValueError(f"class id must be 0..5, got {class_id}")
    left = templates.left_fist() if class_id == 0 else templates.left_extended()
    right = templates.right_for_class(class_id)
    left = _noisy_tips(left, sigma, rng)
    right = _noisy_tips(right, sigma, rng)
    return HandFrame(t, left, right)


def generate_dataset(n_per_class: int, sigma: float, rng: np.random.Generator,
                     hand_scale: float = 1.0, dt: float = 0.01,
                     ) -> tuple[list[HandFrame], list[int]]:
    """Class-major labeled pose dataset: class 0 frames first, then 1, ..."""
    if n_per_class < 1:
        raise ValueError("empty dataset: n_per_class must be >= 1")
    templates = PoseTemplates(hand_scale)
    frames: list[HandFrame] = []
    labels: list[int] = []
    for class_id in range(6):
        for i in range(n_per_class):
            frames.append(synthesize_pose(class_id, templates, sigma, rng,
                                          t=len(frames) * dt))
            labels.append(class_id)
    return frames, labels


# --- interface inversion --------------------------------------------------------

def invert_tap_period(desired_kmh: float, cfg, lim) -> float | None:
    """Tap period realizing a speed via the interval mapping; None = stop tapping."""
    span = lim.s_max_kmh - lim.s_min_kmh
    frac = (min(max(desired_kmh, lim.s_min_kmh), lim.s_max_kmh) - lim.s_min_kmh) / span
    if frac <= 1e-9:
        return None
    return cfg.t_min_s + (1.0 - frac) * (cfg.t_max_s - cfg.t_min_s)


class InputSynthesizer:
    """Stateful inverse of one interface: desired (speed, steer) -> input frame."""

    def __init__(self, interface: str, sim_cfg: SimConfig, pilot_cfg: PilotConfig,
                 rng: np.random.Generator):
        self.interface = interface
        self.cfg = sim_cfg
        self.pilot = pilot_cfg
        self.rng = rng
        self.templates = PoseTemplates(pilot_cfg.hand_scale)
        self._tap_phase = 0.0
        self._tap_cycle_scale = 1.0
        self._yaw_noise_rad = 0.0
        self._prev_t: float | None = None

    def frame(self, t: float, desired_speed_kmh: float, desired_steer_deg: float):
        lim = self.cfg.limits
        desired_speed_kmh = min(max(desired_speed_kmh, lim.s_min_kmh), lim.s_max_kmh)
        if self.interface == "gamepad":
            g = self.cfg.gamepad
            return GamepadFrame(
                t,
                left_x=min(max(desired_steer_deg / g.max_steer_deg, -1.0), 1.0),
                right_y=min(max(desired_speed_kmh / lim.s_max_kmh, 0.0), 1.0),
            )

        dt = 0.0 if self._prev_t is None else t - self._prev_t
        self._prev_t = t
        right = self._right_hand(desired_speed_kmh, dt)
        left = self._left_hand(desired_speed_kmh)

        sigma = self.pilot.noise_sigma_m
        left = _noisy_tips(left, sigma, self.rng)
        right = _noisy_tips(right, sigma, self.rng)
        # AR(1) orientation error: stationary std sigma/0.1 rad, 0.7 s memory
        rho = math.exp(-dt / _YAW_NOISE_TAU_S) if dt > 0.0 else 1.0
        self._yaw_noise_rad = (rho * self._yaw_noise_rad
                               + math.sqrt(1.0 - rho * rho)
                               * (sigma / 0.1) * self.rng.standard_normal())
        left = rotate_hand_y(left, desired_steer_deg
                             + math.degrees(self._yaw_noise_rad))
        return HandFrame(t, left, right)

    def _left_hand(self, desired_speed_kmh: float) -> TrackedHand:
        if self.interface == "finger-number" and round(desired_speed_kmh) == 0:
            return self.templates.left_fist()  # stop class needs both fists
        return self.templates.left_extended()

    def _right_hand(self, desired_kmh: float, dt: float) -> TrackedHand:
        lim = self.cfg.limits
        if self.interface == "finger-distance":
            fd = self.cfg.finger_distance
            frac = (desired_kmh - lim.s_min_kmh) / (lim.s_max_kmh - lim.s_min_kmh)
            gap = fd.dead_zone_m + frac * (fd.reference_m - fd.dead_zone_m)
            hand = self.templates.right_for_class(5)
            tips = list(hand.fingertips)
            lateral = hand.palm_normal.cross(hand.pointing_dir)
            tips[THUMB] = tips[INDEX] - lateral.scale(gap)
            return TrackedHand(tuple(tips), hand.palm_centre, hand.palm_normal,
                               hand.pointing_dir, hand.fingertip_velocities)
        if self.interface == "finger-number":
            return self.templates.right_for_class(int(round(desired_kmh)))
        if self.interface == "finger-tapping":
            period = invert_tap_period(desired_kmh, self.cfg.finger_tapping, lim)
            if period is None:
                vy = 0.0
            else:
                # each completed cycle redraws a human-like timing perturbation
                self._tap_phase += 2.0 * math.pi * dt / (period * self._tap_cycle_scale)
                if self._tap_phase >= 2.0 * math.pi:
                    self._tap_phase -= 2.0 * math.pi
                    cv = self.pilot.tap_timing_cv
                    self._tap_cycle_scale = max(
                        0.2, 1.0 + cv * self.rng.standard_normal()) if cv > 0 else 1.0
                vy = self.pilot.tap_amplitude_mps * math.sin(self._tap_phase)
            hand = self.templates.right_for_class(5)
            vels = list(hand.fingertip_velocities)
            vels[INDEX] = Vec3(0.0, vy, 0.0)
            return TrackedHand(hand.fingertips, hand.palm_centre, hand.palm_normal,
                               hand.pointing_dir, tuple(vels))
        raise ValueError(f"unknown interface {self.interface!r}")


# --- policies ---------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class PursuitObservation:
    t: float
    avatar_z: float
    avatar_speed_mps: float
    ball_z: float
    ball_speed_mps: float
    gap_m: float


@dataclass(frozen=True, slots=True)
class WaypointObservation:
    t: float
    x: float
    z: float
    heading_deg: float
    speed_mps: float


class _DelayLine:
    """Returns the newest observation at least ``delay`` old (else the oldest)."""

    def __init__(self, delay_s: float):
        self.delay = delay_s
        self._q: deque = deque()

    def push_and_get(self, obs, t: float):
        self._q.append(obs)
        while len(self._q) > 1 and self._q[1].t <= t - self.delay:
            self._q.popleft()
        return self._q[0]


class PursuitPilot:
    """Gap-holding operator: ball-speed feedforward plus PD on the 3 m gap error."""

    def __init__(self, interface: str, sim_cfg: SimConfig, pilot_cfg: PilotConfig,
                 rng: np.random.Generator):
        self.cfg = sim_cfg
        self.pilot = pilot_cfg
        self.synth = InputSynthesizer(interface, sim_cfg, pilot_cfg, rng)
        self.delay = _DelayLine(pilot_cfg.reaction_delay_s)
        self._prev_gap: float | None = None
        self._prev_obs_t: float | None = None

    def desired_speed_kmh(self, obs: PursuitObservation) -> float:
        err = obs.gap_m - self.cfg.pursuit.initial_gap_m
        if self._prev_gap is None or obs.t == self._prev_obs_t:
            gap_rate = 0.0
        else:
            gap_rate = (obs.gap_m - self._prev_gap) / (obs.t - self._prev_obs_t)
        self._prev_gap, self._prev_obs_t = obs.gap_m, obs.t
        desired = (obs.ball_speed_mps * KMH_PER_MPS
                   + self.pilot.kp_kmh_per_m * err
                   + self.pilot.kd_kmh_per_mps * gap_rate)
        lim = self.cfg.limits
        return min(max(desired, lim.s_min_kmh), lim.s_max_kmh)

    def frame(self, obs: PursuitObservation):
        eff = self.delay.push_and_get(obs, obs.t)
        return self.synth.frame(obs.t, self.desired_speed_kmh(eff), 0.0)


class WaypointPilot:
    """Pure-pursuit operator over the gate-centre polyline."""

    def __init__(self, interface: str, sim_cfg: SimConfig, pilot_cfg: PilotConfig,
                 rng: np.random.Generator, polyline: list[tuple[float, float]]):
        self.cfg = sim_cfg
        self.pilot = pilot_cfg
        self.synth = InputSynthesizer(interface, sim_cfg, pilot_cfg, rng)
        self.delay = _DelayLine(pilot_cfg.reaction_delay_s)
        self.polyline = polyline  # (x, z) vertices, z strictly decreasing

    def lookahead_point(self, x: float, z: float) -> tuple[float, float]:
        return polyline_lookahead(self.polyline, x, z, self.pilot.lookahead_m)

    def desired(self, obs: WaypointObservation) -> tuple[float, float]:
        tx, tz = self.lookahead_point(obs.x, obs.z)
        target_heading = math.degrees(math.atan2(-(tx - obs.x), -(tz - obs.z)))
        err = wrap_deg(target_heading - obs.heading_deg)
        steer = min(max(self.pilot.steer_gain_per_s * err,
                        -self.pilot.max_steer_cmd_deg), self.pilot.max_steer_cmd_deg)
        lim = self.cfg.limits
        slowdown = min(max(1.0 - abs(err) / 90.0, 0.3), 1.0)
        return lim.s_max_kmh * slowdown, steer

    def frame(self, obs: WaypointObservation):
        eff = self.delay.push_and_get(obs, obs.t)
        speed, steer = self.desired(eff)
        return self.synth.frame(obs.t, speed, steer)


def polyline_lookahead(polyline: list[tuple[float, float]], x: float, z: float,
                       lookahead_m: float) -> tuple[float, float]:
    """Point ``lookahead_m`` of arc length ahead of (x, z)'s projection.

    The polyline's z coordinates decrease monotonically (travel direction);
    past the last vertex the path continues straight along -z.
    """
    # project by z onto the containing segment
    seg = 0
    while seg + 1 < len(polyline) and polyline[seg + 1][1] >= z:
        seg += 1
    if seg + 1 >= len(polyline):  # beyond the last vertex
        lx, lz = polyline[-1]
        return lx, min(z, lz) - lookahead_m
    (x0, z0), (x1, z1) = polyline[seg], polyline[seg + 1]
    u = 0.0 if z0 == z1 else min(max((z0 - z) / (z0 - z1), 0.0), 1.0)
    px, pz = x0 + u * (x1 - x0), z0 + u * (z1 - z0)
    remaining = lookahead_m
    while True:
        seg_dx, seg_dz = x1 - px, z1 - pz
        seg_len = math.hypot(seg_dx, seg_dz)
        if remaining <= seg_len:
            f = remaining / seg_len if seg_len > 0.0 else 0.0
            return px + f * seg_dx, pz + f * seg_dz
        remaining -= seg_len
        px, pz = x1, z1
        seg += 1
        if seg + 1 >= len(polyline):
            return px, pz - remaining  # extend straight along -z
        (x1, z1) = polyline[seg + 1]
