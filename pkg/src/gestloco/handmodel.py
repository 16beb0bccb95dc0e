"""Domain types for hand-tracking streams and their line-delimited log format.

One log record per line, UTF-8, space-separated ``key=value`` pairs.
Vector values are three comma-separated numbers. Keys per record:

    t
    <h>.tracked  <h>.palm  <h>.normal  <h>.dir
    <h>.tip0 .. <h>.tip4   <h>.vel0 .. <h>.vel4      for h in {l, r}

Fingertip order is thumb, index, middle, ring, pinky. Numbers are written
with 17 significant digits so parse(write(x)) reproduces every float
bit-for-bit. Timestamps must be strictly increasing within a stream.

Gamepad logs use the same framing with keys ``t``, ``lx``, ``ry``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import LogFormatError
from .geom import Vec3, ZERO

FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")
THUMB, INDEX, MIDDLE, RING, PINKY = range(5)

_UNIT_TOL = 1e-6


@dataclass(frozen=True, slots=True)
class TrackedHand:
    """One hand sample: fingertip positions/velocities plus palm frame vectors.

    ``palm_normal`` and ``pointing_dir`` are unit vectors while ``tracked``
    is true. An untracked hand carries zeroed geometry by convention.
    """

    fingertips: tuple[Vec3, Vec3, Vec3, Vec3, Vec3]
    palm_centre: Vec3
    palm_normal: Vec3
    pointing_dir: Vec3
    fingertip_velocities: tuple[Vec3, Vec3, Vec3, Vec3, Vec3]
    tracked: bool = True


def untracked_hand() -> TrackedHand:
    z5 = (ZERO, ZERO, ZERO, ZERO, ZERO)
    return TrackedHand(z5, ZERO, ZERO, ZERO, z5, tracked=False)


@dataclass(frozen=True, slots=True)
class HandFrame:
    timestamp: float
    left: TrackedHand
    right: TrackedHand


@dataclass(frozen=True, slots=True)
class GamepadFrame:
    """One gamepad sample; axes are clamped on construction.

    left_x in [-1, 1] steers, right_y in [0, 1] sets speed (backward
    travel is disabled, hence the one-sided speed axis).
    """

    timestamp: float
    left_x: float = 0.0
    right_y: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "left_x", min(1.0, max(-1.0, self.left_x)))
        object.__setattr__(self, "right_y", min(1.0, max(0.0, self.right_y)))


def validate_hand(hand: TrackedHand) -> None:
    """Raise ValueError when a hand violates its invariants."""
    vectors = (hand.palm_centre, hand.palm_normal, hand.pointing_dir,
               *hand.fingertips, *hand.fingertip_velocities)
    for v in vectors:
        if not v.is_finite():
            raise ValueError("hand contains non-finite components")
    if hand.tracked:
        if abs(hand.palm_normal.norm() - 1.0) > _UNIT_TOL:
            raise ValueError("palm_normal of a tracked hand must be unit length")
        if abs(hand.pointing_dir.norm() - 1.0) > _UNIT_TOL:
            raise ValueError("pointing_dir of a tracked hand must be unit length")


# --- serialization -----------------------------------------------------------

def _fmt(x: float) -> str:
    # 17 significant digits: exact double round-trip, comfortably past the
    # 9-digit minimum the log format guarantees.
    return format(x, ".16e")


def _fmt_vec(v: Vec3) -> str:
    return f"{_fmt(v.x)},{_fmt(v.y)},{_fmt(v.z)}"


def _hand_fields(prefix: str, hand: TrackedHand) -> list[str]:
    if not hand.tracked:
        hand = untracked_hand()  # zeroed geometry convention
    parts = [f"{prefix}.tracked={1 if hand.tracked else 0}",
             f"{prefix}.palm={_fmt_vec(hand.palm_centre)}",
             f"{prefix}.normal={_fmt_vec(hand.palm_normal)}",
             f"{prefix}.dir={_fmt_vec(hand.pointing_dir)}"]
    parts += [f"{prefix}.tip{i}={_fmt_vec(hand.fingertips[i])}" for i in range(5)]
    parts += [f"{prefix}.vel{i}={_fmt_vec(hand.fingertip_velocities[i])}" for i in range(5)]
    return parts


def write_hand_log(frames: list[HandFrame] | tuple[HandFrame, ...]) -> bytes:
    lines = []
    for frame in frames:
        fields = [f"t={_fmt(frame.timestamp)}"]
        fields += _hand_fields("l", frame.left)
        fields += _hand_fields("r", frame.right)
        lines.append(" ".join(fields))
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def write_gamepad_log(frames: list[GamepadFrame] | tuple[GamepadFrame, ...]) -> bytes:
    lines = [f"t={_fmt(f.timestamp)} lx={_fmt(f.left_x)} ry={_fmt(f.right_y)}"
             for f in frames]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


# --- parsing -----------------------------------------------------------------

def _split_fields(line: str, line_no: int) -> dict[str, str]:
    fields: dict[str, str] = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise LogFormatError(line_no, f"malformed token {token!r}")
        if key in fields:
            raise LogFormatError(line_no, f"duplicate field {key!r}")
        fields[key] = value
    return fields


def _take(fields: dict[str, str], key: str, line_no: int) -> str:
    try:
        return fields.pop(key)
    except KeyError:
        raise LogFormatError(line_no, f"missing field {key!r}") from None


def _parse_float(text: str, key: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise LogFormatError(line_no, f"field {key!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise LogFormatError(line_no, f"field {key!r}: non-finite value {text!r}")
    return value


def _parse_vec(text: str, key: str, line_no: int) -> Vec3:
    parts = text.split(",")
    if len(parts) != 3:
        raise LogFormatError(line_no, f"field {key!r}: expected 3 components, got {len(parts)}")
    x, y, z = (_parse_float(p, key, line_no) for p in parts)
    return Vec3(x, y, z)


def _parse_hand(prefix: str, fields: dict[str, str], line_no: int) -> TrackedHand:
    tracked_text = _take(fields, f"{prefix}.tracked", line_no)
    if tracked_text not in ("0", "1"):
        raise LogFormatError(line_no, f"field '{prefix}.tracked': expected 0 or 1")
    hand = TrackedHand(
        fingertips=tuple(_parse_vec(_take(fields, f"{prefix}.tip{i}", line_no),
                                    f"{prefix}.tip{i}", line_no) for i in range(5)),
        palm_centre=_parse_vec(_take(fields, f"{prefix}.palm", line_no), f"{prefix}.palm", line_no),
        palm_normal=_parse_vec(_take(fields, f"{prefix}.normal", line_no), f"{prefix}.normal", line_no),
        pointing_dir=_parse_vec(_take(fields, f"{prefix}.dir", line_no), f"{prefix}.dir", line_no),
        fingertip_velocities=tuple(_parse_vec(_take(fields, f"{prefix}.vel{i}", line_no),
                                              f"{prefix}.vel{i}", line_no) for i in range(5)),
        tracked=tracked_text == "1",
    )
    try:
        validate_hand(hand)
    except ValueError as exc:
        raise LogFormatError(line_no, f"hand {prefix!r}: {exc}") from None
    return hand


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LogFormatError(0, f"stream is not valid UTF-8: {exc}") from None
    return data


def parse_hand_log(data: bytes | str) -> list[HandFrame]:
    """Parse a hand-frame log; raises LogFormatError with the offending line number."""
    frames: list[HandFrame] = []
    prev_t: float | None = None
    for line_no, line in enumerate(_decode(data).splitlines(), start=1):
        if not line.strip():
            continue
        fields = _split_fields(line, line_no)
        t = _parse_float(_take(fields, "t", line_no), "t", line_no)
        left = _parse_hand("l", fields, line_no)
        right = _parse_hand("r", fields, line_no)
        if fields:
            raise LogFormatError(line_no, f"unknown fields: {sorted(fields)}")
        if prev_t is not None and t <= prev_t:
            raise LogFormatError(line_no, f"non-monotonic timestamp {t!r} after {prev_t!r}")
        prev_t = t
        frames.append(HandFrame(t, left, right))
    return frames


def parse_gamepad_log(data: bytes | str) -> list[GamepadFrame]:
    frames: list[GamepadFrame] = []
    prev_t: float | None = None
    for line_no, line in enumerate(_decode(data).splitlines(), start=1):
        if not line.strip():
            continue
        fields = _split_fields(line, line_no)
        t = _parse_float(_take(fields, "t", line_no), "t", line_no)
        lx = _parse_float(_take(fields, "lx", line_no), "lx", line_no)
        ry = _parse_float(_take(fields, "ry", line_no), "ry", line_no)
        if fields:
            raise LogFormatError(line_no, f"unknown fields: {sorted(fields)}")
        if not -1.0 <= lx <= 1.0:
            raise LogFormatError(line_no, f"field 'lx': {lx!r} outside [-1, 1]")
        if not 0.0 <= ry <= 1.0:
            raise LogFormatError(line_no, f"field 'ry': {ry!r} outside [0, 1]")
        if prev_t is not None and t <= prev_t:
            raise LogFormatError(line_no, f"non-monotonic timestamp {t!r} after {prev_t!r}")
        prev_t = t
        frames.append(GamepadFrame(t, lx, ry))
    return frames
