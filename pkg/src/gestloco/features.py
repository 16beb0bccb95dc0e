"""Orientation/position-normalized fingertip descriptors.

Each fingertip F is projected onto the orthonormal-ish frame built from the
palm normal N and the pointing direction H:

    px = (F - C) . (N x H)      py = (F - C) . H      pz = (F - C) . N

which makes the descriptor invariant to where the hand sits relative to the
sensor and to rigid rotations of the whole hand. One hand yields 15 values
(5 fingertips x 3), both hands stacked left-then-right yield the 30-element
vector the gesture classifier consumes.
"""

from __future__ import annotations

import numpy as np

from .handmodel import TrackedHand

HAND_FEATURE_DIM = 15
FEATURE_DIM = 30


def extract_hand_features(hand: TrackedHand) -> np.ndarray:
    """15 descriptors for one tracked hand, fingertip order thumb..pinky."""
    if not hand.tracked:
        raise ValueError("cannot extract features from an untracked hand")
    c = hand.palm_centre
    n = hand.palm_normal
    h = hand.pointing_dir
    u = n.cross(h)
    out = np.empty(HAND_FEATURE_DIM)
    for i, tip in enumerate(hand.fingertips):
        rel = tip - c
        out[3 * i] = rel.dot(u)
        out[3 * i + 1] = rel.dot(h)
        out[3 * i + 2] = rel.dot(n)
    return out


def stack_features(left: TrackedHand, right: TrackedHand) -> np.ndarray:
    """30-element two-hand feature vector, left hand first."""
    if not left.tracked or not right.tracked:
        raise ValueError("both hands must be tracked to stack features")
    return np.concatenate([extract_hand_features(left), extract_hand_features(right)])
