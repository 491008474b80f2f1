"""Small 3-D geometry helpers shared by the simulator and the reward terms.

Vectors are plain ``numpy`` arrays of shape ``(3,)`` and dtype float64.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([float(x), float(y), float(z)], dtype=np.float64)


def norm(v: np.ndarray) -> float:
    return float(math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))


def unit(v: np.ndarray) -> np.ndarray:
    n = norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def is_finite(v: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(v)))


def wrap_to_pi(angle: float) -> float:
    """Map an angle to the half-open interval (-pi, pi]."""
    r = math.fmod(angle, TWO_PI)
    if r > math.pi:
        r -= TWO_PI
    elif r <= -math.pi:
        r += TWO_PI
    return r


def axis_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane basis (e1, e2) for the plane normal to ``axis``.

    For the default branch axis +Y this returns (+X, +Z), so in-plane angles
    follow the convention 0 deg = +X, counterclockwise toward +Z.
    """
    a = unit(axis)
    ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - np.dot(ref, a) * a
    if norm(e1) < 1e-9:
        ref = np.array([0.0, 0.0, 1.0])
        e1 = ref - np.dot(ref, a) * a
    e1 = unit(e1)
    e2 = np.cross(e1, a)
    return e1, e2


def angle_about_axis(point: np.ndarray, center: np.ndarray, axis: np.ndarray) -> float:
    """Angle of ``point`` about ``center`` in the plane normal to ``axis``, in (-pi, pi]."""
    e1, e2 = axis_frame(axis)
    d = point - center
    return math.atan2(float(np.dot(d, e2)), float(np.dot(d, e1)))


def radial_distance(point: np.ndarray, center: np.ndarray, axis: np.ndarray) -> float:
    """Distance from ``point`` to the infinite line through ``center`` along ``axis``."""
    d = point - center
    along = float(np.dot(d, axis))
    rad = d - along * axis
    return norm(rad)
