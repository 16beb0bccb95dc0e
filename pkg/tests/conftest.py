"""Shared fixtures and hypothesis strategies."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import strategies as st

from gestloco.geom import Vec3
from gestloco.handmodel import HandFrame, TrackedHand, untracked_hand

finite_floats = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False,
                          allow_infinity=False)
small_floats = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False,
                         allow_infinity=False)


@st.composite
def vec3s(draw, elements=finite_floats):
    return Vec3(draw(elements), draw(elements), draw(elements))


@st.composite
def unit_vec3s(draw):
    # rejection-free: angles parameterize the sphere
    theta = draw(st.floats(min_value=0.0, max_value=math.pi))
    phi = draw(st.floats(min_value=0.0, max_value=2.0 * math.pi))
    return Vec3(math.sin(theta) * math.cos(phi),
                math.cos(theta),
                math.sin(theta) * math.sin(phi))


@st.composite
def tracked_hands(draw):
    tips = tuple(draw(vec3s(small_floats)) for _ in range(5))
    vels = tuple(draw(vec3s(small_floats)) for _ in range(5))
    return TrackedHand(tips, draw(vec3s(small_floats)), draw(unit_vec3s()),
                       draw(unit_vec3s()), vels, tracked=True)


@st.composite
def hands(draw):
    if draw(st.booleans()):
        return draw(tracked_hands())
    return untracked_hand()


@st.composite
def hand_frame_lists(draw, max_size=6):
    n = draw(st.integers(min_value=0, max_value=max_size))
    # strictly increasing timestamps
    steps = [draw(st.floats(min_value=1e-4, max_value=10.0)) for _ in range(n)]
    t = 0.0
    frames = []
    for step in steps:
        t += step
        frames.append(HandFrame(t, draw(hands()), draw(hands())))
    return frames


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
