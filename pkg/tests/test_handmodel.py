from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gestloco.errors import LogFormatError
from gestloco.geom import Vec3
from gestloco.handmodel import (GamepadFrame, HandFrame, TrackedHand,
                                parse_gamepad_log, parse_hand_log,
                                untracked_hand, validate_hand, write_gamepad_log,
                                write_hand_log)

from conftest import hand_frame_lists, tracked_hands


def _simple_hand() -> TrackedHand:
    tips = tuple(Vec3(0.01 * i, 0.02, 0.03) for i in range(5))
    vels = tuple(Vec3(0.0, 0.0, 0.0) for _ in range(5))
    return TrackedHand(tips, Vec3(0.0, 0.25, 0.0), Vec3(0.0, -1.0, 0.0),
                       Vec3(0.0, 0.0, -1.0), vels)


def test_single_frame_round_trip():
    frame = HandFrame(0.01, _simple_hand(), _simple_hand())
    parsed = parse_hand_log(write_hand_log([frame]))
    assert len(parsed) == 1
    assert parsed[0] == frame
    assert parsed[0].timestamp == 0.01


def test_non_monotonic_timestamps_rejected():
    frames = [HandFrame(0.02, _simple_hand(), _simple_hand()),
              HandFrame(0.03, _simple_hand(), _simple_hand())]
    lines = write_hand_log(frames).decode().splitlines()
    bad = (lines[1] + "\n" + lines[0] + "\n").encode()
    with pytest.raises(LogFormatError) as exc:
        parse_hand_log(bad)
    assert exc.value.line_no == 2
    assert "non-monotonic" in str(exc.value)


def test_empty_stream_is_empty_sequence():
    assert parse_hand_log(b"") == []
    assert write_hand_log([]) == b""


def test_untracked_hand_serialized_zeroed():
    # even if the caller left junk geometry on an untracked hand
    junk = TrackedHand(tuple(Vec3(9, 9, 9) for _ in range(5)), Vec3(1, 2, 3),
                       Vec3(0, 1, 0), Vec3(0, 0, -1),
                       tuple(Vec3(1, 1, 1) for _ in range(5)), tracked=False)
    frame = HandFrame(1.0, junk, _simple_hand())
    parsed = parse_hand_log(write_hand_log([frame]))[0]
    assert parsed.left == untracked_hand()
    assert not parsed.left.tracked
    assert parsed.right == frame.right


def test_missing_field_names_the_field():
    frame = HandFrame(0.5, _simple_hand(), _simple_hand())
    line = write_hand_log([frame]).decode().rstrip("\n")
    tokens = [tok for tok in line.split(" ") if not tok.startswith("l.tip2=")]
    with pytest.raises(LogFormatError) as exc:
        parse_hand_log(" ".join(tokens).encode())
    assert "l.tip2" in str(exc.value)


def test_unknown_field_rejected():
    frame = HandFrame(0.5, _simple_hand(), _simple_hand())
    line = write_hand_log([frame]).decode().rstrip("\n") + " bogus=1\n"
    with pytest.raises(LogFormatError):
        parse_hand_log(line.encode())


def test_non_unit_normal_rejected():
    hand = TrackedHand(_simple_hand().fingertips, Vec3(0, 0, 0), Vec3(0, 2, 0),
                       Vec3(0, 0, -1), _simple_hand().fingertip_velocities)
    with pytest.raises(ValueError):
        validate_hand(hand)
    frame_bytes = write_hand_log([HandFrame(0.0, hand, _simple_hand())])
    with pytest.raises(LogFormatError):
        parse_hand_log(frame_bytes)


@given(hand_frame_lists())
@settings(max_examples=200, deadline=None)
def test_round_trip_property(frames):
    # untracked hands normalize to zeroed geometry before comparison
    normalized = [HandFrame(f.timestamp,
                            f.left if f.left.tracked else untracked_hand(),
                            f.right if f.right.tracked else untracked_hand())
                  for f in frames]
    assert parse_hand_log(write_hand_log(frames)) == normalized


@given(st.binary(max_size=400))
@settings(max_examples=300, deadline=None)
def test_parser_never_panics(data):
    try:
        parse_hand_log(data)
    except LogFormatError:
        pass  # the only acceptable failure mode


@given(st.text(max_size=200))
@settings(max_examples=200, deadline=None)
def test_parser_never_panics_on_text(text):
    try:
        parse_hand_log(text)
    except LogFormatError:
        pass


@given(tracked_hands())
@settings(max_examples=100, deadline=None)
def test_tracked_hand_round_trip_exact(hand):
    frame = HandFrame(0.125, hand, untracked_hand())
    assert parse_hand_log(write_hand_log([frame]))[0] == frame


def test_gamepad_round_trip_and_clamping():
    frames = [GamepadFrame(0.0, -0.5, 0.25), GamepadFrame(0.01, 2.0, -1.0)]
    assert frames[1].left_x == 1.0 and frames[1].right_y == 0.0
    parsed = parse_gamepad_log(write_gamepad_log(frames))
    assert parsed == frames


def test_gamepad_rejects_out_of_range_values():
    with pytest.raises(LogFormatError):
        parse_gamepad_log(b"t=0.0 lx=1.5 ry=0.0\n")
    with pytest.raises(LogFormatError):
        parse_gamepad_log(b"t=0.0 lx=0.0 ry=-0.2\n")


def test_gamepad_non_monotonic_rejected():
    data = write_gamepad_log([GamepadFrame(0.0, 0, 0)]) * 2
    with pytest.raises(LogFormatError) as exc:
        parse_gamepad_log(data)
    assert exc.value.line_no == 2
