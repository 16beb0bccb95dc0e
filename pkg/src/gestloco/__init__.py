"""Gesture-driven virtual locomotion: controllers, simulator, metrics.

Turns time-stamped hand-tracking frames into locomotion commands through
three gesture interfaces (finger distance, finger number, finger tapping)
plus a gamepad mapping, runs the two benchmark tasks (target pursuit,
waypoints navigation) with synthetic pilots, and computes the objective
metric suites.
"""

from ._backend import BACKEND_NAME
from .classifier import (ClassifierModel, LabeledSample, load_model, predict,
                         save_model, train)
from .config import PilotConfig, SimConfig, load_pilot_config, load_sim_config
from .errors import ConfigError, GestlocoError, LogFormatError, ModelFormatError
from .features import FEATURE_DIM, extract_hand_features, stack_features
from .geom import Vec3
from .gestures import (INTERFACES, FingerDistanceConfig, FingerTappingConfig,
                       GamepadConfig, LocomotionCommand, SpeedLimits,
                       SteeringConfig, make_controller)
from .handmodel import (GamepadFrame, HandFrame, TrackedHand, parse_gamepad_log,
                        parse_hand_log, write_gamepad_log, write_hand_log)
from .metrics import (PursuitMetrics, WaypointMetrics, aggregate,
                      compute_metrics, pursuit_metrics, waypoint_metrics)
from .sim import (AvatarState, PursuitScenario, TrialRecord, WaypointsScenario,
                  step_avatar, step_ball, trial_record_from_csv,
                  trial_record_to_csv)
from .trial import replay_trial, run_trial

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "ClassifierModel", "LabeledSample", "load_model", "predict",
    "save_model", "train", "PilotConfig", "SimConfig", "load_pilot_config",
    "load_sim_config", "ConfigError", "GestlocoError", "LogFormatError",
    "ModelFormatError", "FEATURE_DIM", "extract_hand_features", "stack_features",
    "Vec3", "INTERFACES", "FingerDistanceConfig", "FingerTappingConfig",
    "GamepadConfig", "LocomotionCommand", "SpeedLimits", "SteeringConfig",
    "make_controller", "GamepadFrame", "HandFrame", "TrackedHand",
    "parse_gamepad_log", "parse_hand_log", "write_gamepad_log", "write_hand_log",
    "PursuitMetrics", "WaypointMetrics", "aggregate", "compute_metrics",
    "pursuit_metrics", "waypoint_metrics", "AvatarState", "PursuitScenario",
    "TrialRecord", "WaypointsScenario", "step_avatar", "step_ball",
    "trial_record_from_csv", "trial_record_to_csv", "replay_trial", "run_trial",
    "__version__",
]
