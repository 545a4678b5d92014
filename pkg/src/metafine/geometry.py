"""Minimal rigid-body math: quaternions, rotation vectors, primitive regions.

Quaternions are numpy arrays [w, x, y, z], kept unit-norm. Angles at module
boundaries are degrees; internal trig is radians.
"""

from __future__ import annotations

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return normalize(np.asarray(q, dtype=float))


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    qv = np.array([0.0, v[0], v[1], v[2]])
    return quat_mul(quat_mul(q, qv), quat_conj(q))[1:]


def quat_from_rotvec_deg(rv_deg: np.ndarray) -> np.ndarray:
    """Rotation vector in degrees (axis * angle) to quaternion."""
    rv = np.deg2rad(np.asarray(rv_deg, dtype=float))
    angle = np.linalg.norm(rv)
    if angle < 1e-12:
        return IDENTITY_QUAT.copy()
    axis = rv / angle
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def rotvec_deg_from_quat(q: np.ndarray) -> np.ndarray:
    """Quaternion to rotation vector in degrees."""
    q = quat_normalize(q)
    if q[0] < 0:
        q = -q
    sin_half = np.linalg.norm(q[1:])
    if sin_half < 1e-12:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(sin_half, q[0])
    return np.rad2deg(angle) * (q[1:] / sin_half)


def quat_from_axis_angle_deg(axis: np.ndarray, angle_deg: float) -> np.ndarray:
    return quat_from_rotvec_deg(normalize(np.asarray(axis, dtype=float)) * angle_deg)


def quat_from_yaw_deg(yaw_deg: float) -> np.ndarray:
    return quat_from_axis_angle_deg(np.array([0.0, 0.0, 1.0]), yaw_deg)


def quat_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two orientations, degrees in [0, 180]."""
    dot = abs(float(np.clip(np.dot(quat_normalize(a), quat_normalize(b)), -1.0, 1.0)))
    return float(np.rad2deg(2.0 * np.arccos(dot)))


def angle_between_deg(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    cos = float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
    return float(np.rad2deg(np.arccos(cos)))


def pose_transform(pos: np.ndarray, quat: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Map a point from the local frame of (pos, quat) into the world frame."""
    return pos + quat_rotate(quat, point)


def pose_inverse_transform(pos: np.ndarray, quat: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Map a world point into the local frame of (pos, quat)."""
    return quat_rotate(quat_conj(quat), np.asarray(point, dtype=float) - pos)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    while np.linalg.norm(v) < 1e-9:
        v = rng.normal(size=3)
    return v / np.linalg.norm(v)


# --- primitive regions (object-frame) ---

def box_contains(center, extents, point, margin: float = 0.0) -> bool:
    """Axis-aligned box with full side lengths `extents`, in its own frame."""
    d = np.abs(np.asarray(point, dtype=float) - np.asarray(center, dtype=float))
    return bool(np.all(d <= np.asarray(extents, dtype=float) / 2.0 + margin))


def sphere_contains(center, radius, point, margin: float = 0.0) -> bool:
    d = np.linalg.norm(np.asarray(point, dtype=float) - np.asarray(center, dtype=float))
    return bool(d <= radius + margin)


def dominant_axis(extents) -> np.ndarray:
    """Unit vector along the longest side of a box."""
    i = int(np.argmax(extents))
    axis = np.zeros(3)
    axis[i] = 1.0
    return axis


def shortest_axis(extents) -> np.ndarray:
    i = int(np.argmin(extents))
    axis = np.zeros(3)
    axis[i] = 1.0
    return axis
