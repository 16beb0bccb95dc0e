"""Closed-loop trial execution and open-loop replay.

One trial wires pilot -> controller -> avatar at a fixed timestep: each tick
the pilot observes the simulation (through its reaction delay), synthesizes
an input frame, the controller turns it into a locomotion command, and the
world advances. Replay substitutes a recorded frame stream for the pilot;
with the same scenario seed this reproduces the original trial exactly.

Randomness: SeedSequence(seed) spawns two Philox streams, the first for the
scenario (keyframes / gate offsets), the second for pilot noise. Repeats of
a manifest row use seed, seed+1, ...
"""

from __future__ import annotations

import numpy as np

from .classifier import ClassifierModel
from .config import PilotConfig, SimConfig
from .errors import ConfigError
from .geom import Vec3
from .gestures import INTERFACES, KMH_PER_MPS, make_controller
from .pilot import (PursuitObservation, PursuitPilot, WaypointObservation,
                    WaypointPilot)
from .sim import (AvatarState, GateTracker, PursuitScenario, TrialRecord,
                  WaypointsScenario, step_avatar, step_ball)

def _spawn_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    scenario_ss, pilot_ss = np.random.SeedSequence(seed).spawn(2)
    return (np.random.Generator(np.random.Philox(scenario_ss)),
            np.random.Generator(np.random.Philox(pilot_ss)))


def _make_controller(cfg: SimConfig, interface: str, model: ClassifierModel | None):
    if interface not in INTERFACES:
        raise ConfigError([f"unknown interface {interface!r}; expected one of {INTERFACES}"])
    return make_controller(
        interface, lim=cfg.limits, model=model, sample_rate_hz=cfg.sample_rate_hz,
        finger_distance=cfg.finger_distance, finger_tapping=cfg.finger_tapping,
        steering=cfg.steering, gamepad=cfg.gamepad)


def run_trial(cfg: SimConfig, interface: str, pilot_cfg: PilotConfig, seed: int,
              model: ClassifierModel | None = None, record_inputs: bool = False,
              ) -> tuple[TrialRecord, list | None]:
    """Closed-loop trial; returns (record, input frames or None)."""
    scenario_rng, pilot_rng = _spawn_rngs(seed)
    inputs: list | None = [] if record_inputs else None

    if cfg.kind == "pursuit":
        pilot = PursuitPilot(interface, cfg, pilot_cfg, pilot_rng)

        def source(_k: int, obs: PursuitObservation):
            frame = pilot.frame(obs)
            if inputs is not None:
                inputs.append(frame)
            return frame

        rec = _run_pursuit(cfg, interface, seed, scenario_rng, source, model)
    elif cfg.kind == "waypoints":
        scenario = WaypointsScenario.generate(cfg.waypoints, scenario_rng, seed)
        polyline = [(0.0, 0.0)] + [(g.centre_x, g.plane_z) for g in scenario.gates()]
        pilot = WaypointPilot(interface, cfg, pilot_cfg, pilot_rng, polyline)

        def source(_k: int, obs: WaypointObservation):
            frame = pilot.frame(obs)
            if inputs is not None:
                inputs.append(frame)
            return frame

        rec = _run_waypoints(cfg, interface, seed, scenario, source, model)
    else:
        raise ConfigError([f"unknown scenario kind {cfg.kind!r}"])
    return rec, inputs


def replay_trial(cfg: SimConfig, interface: str, frames: list, seed: int,
                 model: ClassifierModel | None = None) -> TrialRecord:
    """Drive the controller from a recorded frame stream instead of a pilot.

    Frames must sit on the tick grid; a stream shorter than the trial
    truncates it (the record is marked incomplete for waypoints unless the
    finish was reached).
    """
    if not frames:
        raise ConfigError(["replay log is empty"])
    for k, frame in enumerate(frames):
        if abs(frame.timestamp - k * cfg.dt_s) > 1e-6:
            raise ConfigError(
                [f"frame {k}: timestamp {frame.timestamp!r} is off the "
                 f"{cfg.dt_s} s tick grid of the scenario"])
    scenario_rng, _ = _spawn_rngs(seed)

    def source(k: int, _obs):
        return frames[k]

    if cfg.kind == "pursuit":
        return _run_pursuit(cfg, interface, seed, scenario_rng, source, model,
                            tick_cap=len(frames))
    scenario = WaypointsScenario.generate(cfg.waypoints, scenario_rng, seed)
    return _run_waypoints(cfg, interface, seed, scenario, source, model,
                          tick_cap=len(frames))


def _run_pursuit(cfg: SimConfig, interface: str, seed: int,
                 scenario_rng: np.random.Generator, frame_source, model,
                 tick_cap: int | None = None) -> TrialRecord:
    scenario = PursuitScenario.generate(cfg.pursuit, scenario_rng, seed)
    controller = _make_controller(cfg, interface, model)
    dt = cfg.dt_s
    avatar = AvatarState(Vec3(0.0, 0.0, 0.0),
                         capsule_radius_m=cfg.avatar.capsule_radius_m,
                         capsule_height_m=cfg.avatar.capsule_height_m)
    ball_z = -cfg.pursuit.initial_gap_m
    ball_speed = 0.0

    rec = TrialRecord(kind="pursuit", interface=interface, seed=seed, dt_s=dt,
                      keyframes_kmh=scenario.keyframes_kmh,
                      keyframe_period_s=cfg.pursuit.keyframe_period_s)
    n_ticks = round(cfg.pursuit.duration_s / dt)
    if tick_cap is not None:
        n_ticks = min(n_ticks, tick_cap)

    cmd = None
    for k in range(n_ticks):
        t = k * dt
        gap = _gap(avatar, ball_z)
        obs = PursuitObservation(t, avatar.position.z, avatar.speed_mps,
                                 ball_z, ball_speed, gap)
        cmd = controller.step(frame_source(k, obs))
        _append_row(rec, t, avatar, cmd)
        rec.ball_z.append(ball_z)
        rec.ball_speed_mps.append(ball_speed)
        rec.gap_m.append(gap)

        # direction control is disabled in the pursuit task
        avatar = step_avatar(avatar, cmd, cfg.limits, dt, cfg.steering,
                             turn_enabled=False)
        target_mps = scenario.target_kmh(t) / KMH_PER_MPS
        new_ball_speed = step_ball(ball_speed, target_mps,
                                   cfg.pursuit.ball_accel_mps2, dt)
        ball_z -= 0.5 * (ball_speed + new_ball_speed) * dt
        ball_speed = new_ball_speed

    if cmd is not None:  # trailing row: final state at t = n*dt
        _append_row(rec, n_ticks * dt, avatar, cmd)
        rec.ball_z.append(ball_z)
        rec.ball_speed_mps.append(ball_speed)
        rec.gap_m.append(_gap(avatar, ball_z))
    return rec


def _run_waypoints(cfg: SimConfig, interface: str, seed: int,
                   scenario: WaypointsScenario, frame_source, model,
                   tick_cap: int | None = None) -> TrialRecord:
    controller = _make_controller(cfg, interface, model)
    dt = cfg.dt_s
    gates = scenario.gates()
    tracker = GateTracker(gates, cfg.avatar.capsule_radius_m)
    finish_z = scenario.finish_z
    avatar = AvatarState(Vec3(0.0, 0.0, 0.0),
                         capsule_radius_m=cfg.avatar.capsule_radius_m,
                         capsule_height_m=cfg.avatar.capsule_height_m)

    rec = TrialRecord(kind="waypoints", interface=interface, seed=seed, dt_s=dt,
                      gate_centres=tuple((g.centre_x, g.plane_z) for g in gates),
                      n_gates=len(gates), complete=False)
    n_ticks = round(cfg.waypoints.max_duration_s / dt)
    if tick_cap is not None:
        n_ticks = min(n_ticks, tick_cap)

    cmd = None
    end_tick = 0
    for k in range(n_ticks):
        t = k * dt
        obs = WaypointObservation(t, avatar.position.x, avatar.position.z,
                                  avatar.heading_deg, avatar.speed_mps)
        cmd = controller.step(frame_source(k, obs))
        _append_row(rec, t, avatar, cmd)

        prev = avatar.position
        avatar = step_avatar(avatar, cmd, cfg.limits, dt, cfg.steering)
        end_tick = k + 1
        t_end = end_tick * dt
        for gate_idx, kind in tracker.step(prev.x, prev.z,
                                           avatar.position.x, avatar.position.z):
            rec.events.append((t_end, gate_idx, kind))
        if avatar.position.z <= finish_z:
            rec.complete = True
            rec.finish_time_s = t_end
            for gate_idx, kind in tracker.resolve_remaining_as_missed():
                rec.events.append((t_end, gate_idx, kind))
            break

    if cmd is not None:
        _append_row(rec, end_tick * dt, avatar, cmd)
    return rec


def _gap(avatar: AvatarState, ball_z: float) -> float:
    dx = avatar.position.x
    dz = avatar.position.z - ball_z
    return (dx * dx + dz * dz) ** 0.5


def _append_row(rec: TrialRecord, t: float, avatar: AvatarState, cmd) -> None:
    rec.t.append(t)
    rec.av_x.append(avatar.position.x)
    rec.av_z.append(avatar.position.z)
    rec.heading_deg.append(avatar.heading_deg)
    rec.speed_mps.append(avatar.speed_mps)
    rec.cmd_speed_kmh.append(cmd.speed_kmh)
    rec.cmd_steer_deg.append(cmd.steering_deg)
