"""Deterministic fixed-timestep simulator for the two locomotion tasks.

Task 1 (pursuit): a ball 3 m ahead of the avatar rolls straight along -z,
retargeting its speed every 10 s from 17 seeded keyframes in {2, 3, 4} km/h;
the avatar must hold the 3 m gap. Direction control is disabled.

Task 2 (waypoints): 50 gates with 2 m x 2 m openings, seeded lateral offsets
within +/-2 m, 5 m clear spacing; the trial ends when the avatar crosses a
finish plane 5 m past the last gate. Gates resolve to pass/miss exactly once
(no backtracking); capsule contact with a gate's frame bars counts one
collision per contact episode.

All integration is trapezoidal at a fixed dt. Every random draw comes from a
counter-based generator (Philox) seeded per trial, so a (seed, config) pair
reproduces a trial byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LogFormatError
from .geom import Vec3, heading_to_forward
from .gestures import (KMH_PER_MPS, LocomotionCommand, SpeedLimits,
                       SteeringConfig)

DEFAULT_DT_S = 0.01  # 100 Hz, matching the hand-frame default rate
DEFAULT_CAPSULE_RADIUS_M = 0.3
DEFAULT_CAPSULE_HEIGHT_M = 1.7

RECORD_FORMAT_VERSION = 1


# --- avatar -------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class AvatarState:
    position: Vec3
    heading_deg: float = 0.0
    speed_mps: float = 0.0
    capsule_radius_m: float = DEFAULT_CAPSULE_RADIUS_M
    capsule_height_m: float = DEFAULT_CAPSULE_HEIGHT_M


def step_avatar(state: AvatarState, cmd: LocomotionCommand, lim: SpeedLimits,
                dt: float, steering: SteeringConfig | None = None,
                turn_enabled: bool = True) -> AvatarState:
    """Advance one tick: speed toward the command under the acceleration cap,
    heading per the steering mode, position along the new heading by the
    trapezoidal speed integral."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    steering = steering or SteeringConfig()
    target = min(max(cmd.speed_kmh, 0.0), lim.s_max_kmh) / KMH_PER_MPS
    dv = target - state.speed_mps
    max_dv = lim.accel_mps2 * dt
    dv = min(max(dv, -max_dv), max_dv)
    new_speed = state.speed_mps + dv

    heading = state.heading_deg
    if turn_enabled:
        if steering.mode == "absolute":
            heading = steering.turn_gain * cmd.steering_deg
        else:
            heading = heading + steering.turn_gain * cmd.steering_deg * dt

    disp = 0.5 * (state.speed_mps + new_speed) * dt
    fwd = heading_to_forward(heading)
    return replace(state, position=state.position + fwd.scale(disp),
                   heading_deg=heading, speed_mps=new_speed)


def step_ball(speed_mps: float, target_mps: float, accel_mps2: float, dt: float) -> float:
    dv = min(max(target_mps - speed_mps, -accel_mps2 * dt), accel_mps2 * dt)
    return speed_mps + dv


# --- scenarios ----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class PursuitSettings:
    duration_s: float = 180.0
    ball_accel_mps2: float = 0.3
    initial_gap_m: float = 3.0
    keyframe_period_s: float = 10.0
    n_keyframes: int = 17
    keyframe_choices_kmh: tuple[float, ...] = (2.0, 3.0, 4.0)


@dataclass(frozen=True, slots=True)
class PursuitScenario:
    settings: PursuitSettings
    keyframes_kmh: tuple[float, ...]
    seed: int

    @classmethod
    def generate(cls, settings: PursuitSettings, rng: np.random.Generator,
                 seed: int) -> "PursuitScenario":
        # one draw per keyframe, in order, before anything else uses the stream
        picks = rng.integers(0, len(settings.keyframe_choices_kmh),
                             size=settings.n_keyframes)
        keyframes = tuple(settings.keyframe_choices_kmh[int(i)] for i in picks)
        return cls(settings, keyframes, seed)

    def target_kmh(self, t: float) -> float:
        # the final keyframe stays in effect past n_keyframes * period
        idx = min(int(t / self.settings.keyframe_period_s), len(self.keyframes_kmh) - 1)
        return self.keyframes_kmh[idx]


@dataclass(frozen=True, slots=True)
class WaypointsSettings:
    n_gates: int = 50
    opening_width_m: float = 2.0
    opening_height_m: float = 2.0
    depth_m: float = 0.1
    spacing_m: float = 5.0          # back of a gate to the front of its successor
    lateral_range_m: float = 2.0
    start_offset_m: float = 5.0     # avatar start to the front of gate 0
    finish_offset_m: float = 5.0    # back of the last gate to the finish plane
    bar_width_m: float = 0.2        # frame bar cross-section (lateral); depth = depth_m
    max_duration_s: float = 900.0   # safety cap; a trial hitting it is incomplete


@dataclass(frozen=True, slots=True)
class Gate:
    index: int
    centre_x: float
    front_z: float
    opening_half_w: float
    depth: float
    bar_width: float

    @property
    def back_z(self) -> float:
        return self.front_z - self.depth

    @property
    def plane_z(self) -> float:
        return self.front_z - 0.5 * self.depth  # pass/miss resolves at mid-depth

    def bar_rects(self) -> tuple[tuple[float, float, float, float], ...]:
        """Side-bar rectangles in the x-z plane as (x0, x1, z0, z1), z0 > z1.

        The top bar sits above 2 m, out of reach of a 1.7 m capsule, so only
        the side bars participate in collision detection.
        """
        left = (self.centre_x - self.opening_half_w - self.bar_width,
                self.centre_x - self.opening_half_w, self.front_z, self.back_z)
        right = (self.centre_x + self.opening_half_w,
                 self.centre_x + self.opening_half_w + self.bar_width,
                 self.front_z, self.back_z)
        return left, right


@dataclass(frozen=True, slots=True)
class WaypointsScenario:
    settings: WaypointsSettings
    lateral_offsets_m: tuple[float, ...]
    seed: int

    @classmethod
    def generate(cls, settings: WaypointsSettings, rng: np.random.Generator,
                 seed: int) -> "WaypointsScenario":
        offsets = rng.uniform(-settings.lateral_range_m, settings.lateral_range_m,
                              size=settings.n_gates)
        return cls(settings, tuple(float(x) for x in offsets), seed)

    def gates(self) -> list[Gate]:
        s = self.settings
        pitch = s.spacing_m + s.depth_m
        return [Gate(i, self.lateral_offsets_m[i], -(s.start_offset_m + i * pitch),
                     0.5 * s.opening_width_m, s.depth_m, s.bar_width_m)
                for i in range(s.n_gates)]

    @property
    def finish_z(self) -> float:
        s = self.settings
        last_back = -(s.start_offset_m + (s.n_gates - 1) * (s.spacing_m + s.depth_m)
                      + s.depth_m)
        return last_back - s.finish_offset_m


# --- gate events ----------------------------------------------------------------

def gate_crossing(gate: Gate, x0: float, z0: float, x1: float, z1: float) -> str | None:
    """'pass'/'miss' when the segment crosses the gate plane moving forward, else None."""
    if not (z0 > gate.plane_z >= z1):
        return None
    frac = (z0 - gate.plane_z) / (z0 - z1)
    x_cross = x0 + frac * (x1 - x0)
    return "pass" if abs(x_cross - gate.centre_x) <= gate.opening_half_w else "miss"


def gate_bar_contact(gate: Gate, x: float, z: float, radius: float) -> bool:
    """True when a capsule axis at (x, z) with the given radius overlaps a side bar."""
    for x0, x1, zf, zb in gate.bar_rects():
        nx = min(max(x, x0), x1)
        nz = min(max(z, zb), zf)
        if (x - nx) ** 2 + (z - nz) ** 2 < radius * radius:
            return True
    return False


class GateTracker:
    """Per-trial pass/miss/collision bookkeeping over one gate list."""

    def __init__(self, gates: list[Gate], capsule_radius: float):
        self.gates = gates
        self.radius = capsule_radius
        self.resolved = [False] * len(gates)
        self.in_contact = [False] * len(gates)

    def step(self, x0: float, z0: float, x1: float, z1: float) -> list[tuple[int, str]]:
        """Events for one tick's path segment, as (gate_index, kind) pairs."""
        events: list[tuple[int, str]] = []
        for g in self.gates:
            near = min(abs(z0 - g.plane_z), abs(z1 - g.plane_z)) <= 2.0
            if not near and not (z0 > g.plane_z >= z1):
                continue
            if not self.resolved[g.index]:
                kind = gate_crossing(g, x0, z0, x1, z1)
                if kind is not None:
                    self.resolved[g.index] = True
                    events.append((g.index, kind))
            contact = gate_bar_contact(g, x1, z1, self.radius)
            if contact and not self.in_contact[g.index]:
                events.append((g.index, "collision"))
            self.in_contact[g.index] = contact
        return events

    def resolve_remaining_as_missed(self) -> list[tuple[int, str]]:
        events = []
        for g in self.gates:
            if not self.resolved[g.index]:
                self.resolved[g.index] = True
                events.append((g.index, "miss"))
        return events


# --- trial record ---------------------------------------------------------------

@dataclass
class TrialRecord:
    """Per-tick trace of one trial plus the scenario facts metrics need.

    Row k holds the state at t = k*dt and the command applied over the
    following tick; the last row repeats the final command. Events carry the
    end-of-tick timestamp at which they were detected.
    """

    kind: str            # "pursuit" | "waypoints"
    interface: str
    seed: int
    dt_s: float
    t: list[float] = field(default_factory=list)
    av_x: list[float] = field(default_factory=list)
    av_z: list[float] = field(default_factory=list)
    heading_deg: list[float] = field(default_factory=list)
    speed_mps: list[float] = field(default_factory=list)
    cmd_speed_kmh: list[float] = field(default_factory=list)
    cmd_steer_deg: list[float] = field(default_factory=list)
    # pursuit extras
    ball_z: list[float] = field(default_factory=list)
    ball_speed_mps: list[float] = field(default_factory=list)
    gap_m: list[float] = field(default_factory=list)
    keyframes_kmh: tuple[float, ...] | None = None
    keyframe_period_s: float | None = None
    # waypoints extras
    events: list[tuple[float, int, str]] = field(default_factory=list)
    gate_centres: tuple[tuple[float, float], ...] | None = None  # (x, plane_z)
    n_gates: int | None = None
    finish_time_s: float | None = None
    complete: bool = True

    def __len__(self) -> int:
        return len(self.t)


_POS_COLUMNS = ("t_s", "av_x_m", "av_z_m", "av_heading_deg", "av_speed_mps",
                "cmd_speed_kmh", "cmd_steer_deg")
_PURSUIT_COLUMNS = _POS_COLUMNS + ("ball_z_m", "ball_speed_mps", "gap_m")


def trial_record_to_csv(rec: TrialRecord) -> str:
    """Serialize a record; floats use repr so re-parsing is bit-exact."""
    lines = [f"# gestloco-trial v{RECORD_FORMAT_VERSION}",
             f"# kind={rec.kind}",
             f"# interface={rec.interface}",
             f"# seed={rec.seed}",
             f"# dt_s={rec.dt_s!r}",
             f"# complete={1 if rec.complete else 0}"]
    if rec.kind == "pursuit":
        lines.append("# keyframes_kmh=" + ",".join(repr(v) for v in rec.keyframes_kmh))
        lines.append(f"# keyframe_period_s={rec.keyframe_period_s!r}")
        lines.append(",".join(_PURSUIT_COLUMNS))
        for i in range(len(rec.t)):
            lines.append(",".join(repr(v) for v in (
                rec.t[i], rec.av_x[i], rec.av_z[i], rec.heading_deg[i],
                rec.speed_mps[i], rec.cmd_speed_kmh[i], rec.cmd_steer_deg[i],
                rec.ball_z[i], rec.ball_speed_mps[i], rec.gap_m[i])))
    else:
        lines.append(f"# n_gates={rec.n_gates}")
        lines.append("# gate_centres=" + ";".join(
            f"{repr(x)},{repr(z)}" for x, z in rec.gate_centres))
        lines.append(f"# finish_time_s="
                     f"{repr(rec.finish_time_s) if rec.finish_time_s is not None else ''}")
        lines.append(",".join(_POS_COLUMNS))
        for i in range(len(rec.t)):
            lines.append(",".join(repr(v) for v in (
                rec.t[i], rec.av_x[i], rec.av_z[i], rec.heading_deg[i],
                rec.speed_mps[i], rec.cmd_speed_kmh[i], rec.cmd_steer_deg[i])))
        for t, gate, kind in rec.events:
            lines.append(f"# event t={repr(t)} gate={gate} kind={kind}")
    return "\n".join(lines) + "\n"


def trial_record_from_csv(text: str) -> TrialRecord:
    lines = text.splitlines()
    if not lines or lines[0] != f"# gestloco-trial v{RECORD_FORMAT_VERSION}":
        raise LogFormatError(1, "not a gestloco trial record (bad or missing header)")
    meta: dict[str, str] = {}
    events: list[tuple[float, int, str]] = []
    data_rows: list[list[float]] = []
    columns: list[str] | None = None
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("# event "):
            try:
                fields = dict(tok.split("=", 1) for tok in line[2:].split()[1:])
                events.append((float(fields["t"]), int(fields["gate"]), fields["kind"]))
            except (KeyError, ValueError) as exc:
                raise LogFormatError(line_no, f"bad event line: {exc}") from None
        elif line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value
        elif columns is None:
            columns = line.split(",")
        else:
            try:
                data_rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise LogFormatError(line_no, f"bad data row: {exc}") from None
    try:
        kind = meta["kind"]
        rec = TrialRecord(kind=kind, interface=meta["interface"],
                          seed=int(meta["seed"]), dt_s=float(meta["dt_s"]),
                          complete=meta.get("complete", "1") == "1")
        expected = _PURSUIT_COLUMNS if kind == "pursuit" else _POS_COLUMNS
        if columns != list(expected):
            raise LogFormatError(0, f"unexpected columns {columns} for kind {kind!r}")
        for row in data_rows:
            if len(row) != len(expected):
                raise LogFormatError(0, f"row width {len(row)} != {len(expected)}")
            (rec.t.append(row[0]), rec.av_x.append(row[1]), rec.av_z.append(row[2]),
             rec.heading_deg.append(row[3]), rec.speed_mps.append(row[4]),
             rec.cmd_speed_kmh.append(row[5]), rec.cmd_steer_deg.append(row[6]))
            if kind == "pursuit":
                rec.ball_z.append(row[7])
                rec.ball_speed_mps.append(row[8])
                rec.gap_m.append(row[9])
        if kind == "pursuit":
            rec.keyframes_kmh = tuple(float(v) for v in meta["keyframes_kmh"].split(","))
            rec.keyframe_period_s = float(meta["keyframe_period_s"])
        elif kind == "waypoints":
            rec.n_gates = int(meta["n_gates"])
            rec.gate_centres = tuple(
                (float(pair.split(",")[0]), float(pair.split(",")[1]))
                for pair in meta["gate_centres"].split(";") if pair)
            rec.finish_time_s = float(meta["finish_time_s"]) if meta["finish_time_s"] else None
            rec.events = events
        else:
            raise LogFormatError(0, f"unknown trial kind {meta['kind']!r}")
    except KeyError as exc:
        raise LogFormatError(0, f"missing record metadata {exc}") from None
    return rec


def path_length_m(rec: TrialRecord) -> float:
    total = 0.0
    for i in range(1, len(rec.t)):
        total += math.hypot(rec.av_x[i] - rec.av_x[i - 1], rec.av_z[i] - rec.av_z[i - 1])
    return total
