"""Scenario and pilot configuration: JSON files over dataclass defaults.

A scenario config selects the task kind and overrides any constant of the
simulation or of the controllers. Schema (all keys optional except ``kind``):

    {
      "kind": "pursuit" | "waypoints",
      "dt_s": 0.01,
      "speed_limits":    {"s_min_kmh", "s_max_kmh", "accel_mps2"},
      "avatar":          {"capsule_radius_m", "capsule_height_m"},
      "steering":        {"smooth_time_s", "turn_gain", "mode"},
      "finger_distance": {"reference_m", "dead_zone_m"},
      "finger_tapping":  {"t_min_s", "t_max_s", "cutoff_hz", "buffer_s",
                          "threshold_mps", "refractory_s"},
      "gamepad":         {"deadzone", "max_steer_deg"},
      "pursuit":         {"duration_s", "ball_accel_mps2", "initial_gap_m",
                          "keyframe_period_s", "n_keyframes",
                          "keyframe_choices_kmh"},
      "waypoints":       {"n_gates", "opening_width_m", "opening_height_m",
                          "depth_m", "spacing_m", "lateral_range_m",
                          "start_offset_m", "finish_offset_m", "bar_width_m",
                          "max_duration_s"}
    }

A pilot profile mirrors PilotConfig field names. Validation collects every
problem before failing so a bad file reports all its issues at once.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .gestures import (FingerDistanceConfig, FingerTappingConfig, GamepadConfig,
                       SpeedLimits, SteeringConfig)
from .sim import (DEFAULT_CAPSULE_HEIGHT_M, DEFAULT_CAPSULE_RADIUS_M,
                  DEFAULT_DT_S, PursuitSettings, WaypointsSettings)

KINDS = ("pursuit", "waypoints")


@dataclass(frozen=True, slots=True)
class AvatarConfig:
    capsule_radius_m: float = DEFAULT_CAPSULE_RADIUS_M
    capsule_height_m: float = DEFAULT_CAPSULE_HEIGHT_M


@dataclass(frozen=True, slots=True)
class PilotConfig:
    """Synthetic operator parameters; stand-ins, not measured human values."""

    reaction_delay_s: float = 0.25
    noise_sigma_m: float = 0.003       # Gaussian, per fingertip axis
    kp_kmh_per_m: float = 2.0          # pursuit: gap error gain
    kd_kmh_per_mps: float = 2.0        # pursuit: gap rate gain
    lookahead_m: float = 3.5           # waypoints: pure-pursuit lookahead
    steer_gain_per_s: float = 2.0      # waypoints: deg/s of command per deg of error
    max_steer_cmd_deg: float = 60.0
    tap_amplitude_mps: float = 0.4     # above the 0.15 m/s detection threshold
    tap_timing_cv: float = 0.05        # human inter-tap variability (~5% of interval)
    hand_scale: float = 1.0

    def __post_init__(self):
        if self.reaction_delay_s < 0.0:
            raise ValueError("reaction_delay_s must be >= 0")
        if self.noise_sigma_m < 0.0:
            raise ValueError("noise_sigma_m must be >= 0")


@dataclass(frozen=True, slots=True)
class SimConfig:
    kind: str
    dt_s: float = DEFAULT_DT_S
    limits: SpeedLimits = SpeedLimits()
    avatar: AvatarConfig = AvatarConfig()
    steering: SteeringConfig = SteeringConfig()
    finger_distance: FingerDistanceConfig = FingerDistanceConfig()
    finger_tapping: FingerTappingConfig = FingerTappingConfig()
    gamepad: GamepadConfig = GamepadConfig()
    pursuit: PursuitSettings = PursuitSettings()
    waypoints: WaypointsSettings = WaypointsSettings()

    @property
    def sample_rate_hz(self) -> float:
        return 1.0 / self.dt_s


_SECTION_TYPES = {
    "speed_limits": ("limits", SpeedLimits),
    "avatar": ("avatar", AvatarConfig),
    "steering": ("steering", SteeringConfig),
    "finger_distance": ("finger_distance", FingerDistanceConfig),
    "finger_tapping": ("finger_tapping", FingerTappingConfig),
    "gamepad": ("gamepad", GamepadConfig),
    "pursuit": ("pursuit", PursuitSettings),
    "waypoints": ("waypoints", WaypointsSettings),
}


def _build_section(cls, data: dict, section: str, problems: list[str]):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            problems.append(f"{section}: unknown key {key!r}")
            continue
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{section}: {exc}")
        return cls()


def sim_config_from_dict(data: dict) -> SimConfig:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["scenario config must be a JSON object"])
    kind = data.get("kind")
    if kind not in KINDS:
        problems.append(f"kind must be one of {KINDS}, got {kind!r}")
        kind = "pursuit"
    kwargs = {"kind": kind}
    dt = data.get("dt_s", DEFAULT_DT_S)
    if not isinstance(dt, (int, float)) or not 0.0 < float(dt) <= 0.1:
        problems.append(f"dt_s must be a number in (0, 0.1], got {dt!r}")
    else:
        kwargs["dt_s"] = float(dt)
    for key, value in data.items():
        if key in ("kind", "dt_s"):
            continue
        if key not in _SECTION_TYPES:
            problems.append(f"unknown section {key!r}")
            continue
        if not isinstance(value, dict):
            problems.append(f"section {key!r} must be an object")
            continue
        attr, cls = _SECTION_TYPES[key]
        kwargs[attr] = _build_section(cls, value, key, problems)
    if problems:
        raise ConfigError(problems)
    return SimConfig(**kwargs)


def pilot_config_from_dict(data: dict) -> PilotConfig:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["pilot profile must be a JSON object"])
    cfg = _build_section(PilotConfig, data, "pilot", problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def _load_json(path: str | Path, what: str) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {what} {path}: {exc}"]) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{what} {path} is not valid JSON: {exc}"]) from None


def load_sim_config(path: str | Path) -> SimConfig:
    return sim_config_from_dict(_load_json(path, "scenario config"))


def load_pilot_config(path: str | Path) -> PilotConfig:
    return pilot_config_from_dict(_load_json(path, "pilot profile"))
