"""Small 2D/3D vector helpers on plain numpy arrays.

Vectors are float64 ndarrays of shape (2,) or (3,); batched variants take
(..., 2) / (..., 3). Positions are meters, velocities m/s, angles radians.
"""
from __future__ import annotations

import math

import numpy as np

Vec2 = np.ndarray  # shape (2,)
Vec3 = np.ndarray  # shape (3,)


def vec2(x: float, y: float) -> Vec2:
    return np.array([x, y], dtype=float)


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=float)


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def unit(v: np.ndarray) -> np.ndarray:
    """Normalized copy of v. Zero vector stays zero (callers treat it as
    'no defined direction' rather than an error)."""
    n = np.linalg.norm(v)
    if n == 0.0:
        return np.zeros_like(v, dtype=float)
    return np.asarray(v, dtype=float) / n


def cross2(a: np.ndarray, b: np.ndarray) -> float:
    """z component of the cross product of two 2D vectors."""
    return float(a[0] * b[1] - a[1] * b[0])


def perp(v: Vec2) -> Vec2:
    """v rotated by +90 degrees (counterclockwise)."""
    return np.array([-v[1], v[0]], dtype=float)


def rotate_in_plane(v: Vec2, angle: float) -> Vec2:
    """Rotate a 2D vector counterclockwise by `angle` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def unit_from_angle(angle: float) -> Vec2:
    return np.array([math.cos(angle), math.sin(angle)])


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Unsigned angle between two vectors, in [0, pi].

    2D or 3D, both arguments must be nonzero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("angle_between is undefined for zero vectors")
    if a.shape[-1] == 2:
        cross_mag = abs(a[0] * b[1] - a[1] * b[0])
    else:
        cross_mag = float(np.linalg.norm(np.cross(a, b)))
    return math.atan2(cross_mag, float(np.dot(a, b)))


def cap_norm(v: np.ndarray, limit: float) -> np.ndarray:
    """Scale v down so its norm does not exceed `limit` (direction kept)."""
    n = np.linalg.norm(v)
    if n <= limit or n == 0.0:
        return np.asarray(v, dtype=float)
    return np.asarray(v, dtype=float) * (limit / n)


def horizontal(v: Vec3) -> Vec2:
    return np.asarray(v, dtype=float)[:2]


def with_z(v_xy: Vec2, z: float = 0.0) -> Vec3:
    return np.array([v_xy[0], v_xy[1], z], dtype=float)
