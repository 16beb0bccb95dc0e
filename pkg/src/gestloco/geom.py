"""3-D vector math for the hand/avatar coordinate system.

Right-handed, y up. The forward travel direction is -z, so an avatar
heading of 0 deg faces (0, 0, -1) and positive headings turn toward -x
(right-hand rule about +y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()


ZERO = Vec3(0.0, 0.0, 0.0)
UP = Vec3(0.0, 1.0, 0.0)
FORWARD = Vec3(0.0, 0.0, -1.0)  # initial pointing/travel direction


def rotate_y(v: Vec3, angle_deg: float) -> Vec3:
    """Rotate about +y by `angle_deg` (right-hand rule: +90 deg maps -z to -x)."""
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return Vec3(v.x * c + v.z * s, v.y, -v.x * s + v.z * c)


def heading_to_forward(heading_deg: float) -> Vec3:
    """Unit travel direction for a yaw heading (0 deg = -z, +90 deg = -x)."""
    a = math.radians(heading_deg)
    return Vec3(-math.sin(a), 0.0, -math.cos(a))


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a
