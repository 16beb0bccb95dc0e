"""Objective metric suites for the two tasks, plus cross-trial aggregation.

Pursuit (five values): mean/std of the avatar-ball gap over the whole trace,
mean/std of the absolute speed difference, and the transient-response value
s_inst = mean absolute speed difference inside the 0.1 s window after each of
the 16 interior ball-speed keyframe changes (and no other samples).

Waypoints (five values): completion time, average locomotion speed (path
length / completion time), mean absolute lateral deviation from the polyline
through the gate centres (start position prepended as the first vertex,
constant-x extension past the last gate), passed-gate and collision counts.

Per-trial stds are population stds (a property of the trace); cross-trial
aggregation reports mean and standard error of the mean with the sample std
(SEM = 0 for a single trial).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .gestures import KMH_PER_MPS
from .sim import TrialRecord, path_length_m


@dataclass(frozen=True, slots=True)
class PursuitMetrics:
    d_avg_m: float
    d_std_m: float
    s_avg_kmh: float
    s_std_kmh: float
    s_inst_kmh: float


@dataclass(frozen=True, slots=True)
class WaypointMetrics:
    t_c_s: float
    s_l_mps: float
    d_p_m: float
    n_w: int
    n_c: int


def pursuit_metrics(rec: TrialRecord) -> PursuitMetrics:
    if rec.kind != "pursuit":
        raise ValueError(f"expected a pursuit record, got kind {rec.kind!r}")
    if not rec.t:
        raise ValueError("empty trial record")
    gap = np.asarray(rec.gap_m)
    sdiff = np.abs(np.asarray(rec.speed_mps) - np.asarray(rec.ball_speed_mps)) * KMH_PER_MPS
    t = np.asarray(rec.t)

    window_means = []
    n_changes = len(rec.keyframes_kmh) - 1
    for k in range(1, n_changes + 1):
        t0 = k * rec.keyframe_period_s
        m = (t >= t0 - 1e-9) & (t <= t0 + 0.1 + 1e-9)
        if m.any():
            window_means.append(float(np.mean(sdiff[m])))
    if not window_means:
        raise ValueError("record too short: no keyframe-change windows present")

    return PursuitMetrics(
        d_avg_m=float(np.mean(gap)),
        d_std_m=float(np.std(gap)),
        s_avg_kmh=float(np.mean(sdiff)),
        s_std_kmh=float(np.std(sdiff)),
        s_inst_kmh=float(np.mean(window_means)),
    )


def lateral_deviation_m(polyline: list[tuple[float, float]], x: float, z: float) -> float:
    """|x - x_opt(z)| against a polyline with strictly decreasing z vertices."""
    if z >= polyline[0][1]:
        return abs(x - polyline[0][0])
    for (x0, z0), (x1, z1) in zip(polyline, polyline[1:]):
        if z0 >= z > z1:
            u = (z0 - z) / (z0 - z1)
            return abs(x - (x0 + u * (x1 - x0)))
    return abs(x - polyline[-1][0])  # past the last gate: straight ahead


def waypoint_metrics(rec: TrialRecord) -> WaypointMetrics:
    if rec.kind != "waypoints":
        raise ValueError(f"expected a waypoints record, got kind {rec.kind!r}")
    if not rec.complete or rec.finish_time_s is None:
        raise ValueError("waypoints trial did not reach the finish trigger")
    t_c = rec.finish_time_s - rec.t[0]
    if t_c <= 0.0:
        raise ValueError("non-positive completion time")

    # first vertex = the scenario's start position (the origin), then gate centres
    polyline = [(0.0, 0.0)] + list(rec.gate_centres)
    deviations = [lateral_deviation_m(polyline, x, z)
                  for x, z in zip(rec.av_x, rec.av_z)]

    n_w = sum(1 for _, _, kind in rec.events if kind == "pass")
    n_c = sum(1 for _, _, kind in rec.events if kind == "collision")
    return WaypointMetrics(
        t_c_s=t_c,
        s_l_mps=path_length_m(rec) / t_c,
        d_p_m=float(np.mean(deviations)),
        n_w=n_w,
        n_c=n_c,
    )


def compute_metrics(rec: TrialRecord) -> PursuitMetrics | WaypointMetrics:
    return pursuit_metrics(rec) if rec.kind == "pursuit" else waypoint_metrics(rec)


def aggregate(rows) -> dict[str, tuple[float, float]]:
    """Per-field (mean, SEM) over metric rows of one type.

    SEM uses the sample standard deviation; a single row yields SEM = 0.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("aggregate needs at least one metrics row")
    fields = [f.name for f in dataclasses.fields(rows[0])]
    out: dict[str, tuple[float, float]] = {}
    for name in fields:
        values = np.array([float(getattr(r, name)) for r in rows])
        n = len(values)
        sem = 0.0 if n == 1 else float(np.std(values, ddof=1) / math.sqrt(n))
        out[name] = (float(np.mean(values)), sem)
    return out
