"""Rotation-group primitives: hat/vee, exp/log maps, relative log, slerp.

Conventions
-----------
Rotations are 3x3 orthonormal matrices with determinant +1. Tangent
vectors are 3-vectors in axis-angle coordinates (radians); ``hat`` maps
them to skew-symmetric matrices. Angular velocities are body-frame
3-vectors (rad/s) driving ``Rdot = R @ hat(w)``.

The relative log ``log_rel(r_a, r_b) = log_map(r_a.T @ r_b)`` gives the
tangent step taken at ``r_a`` toward ``r_b``; its norm is the geodesic
distance between the two frames.

Rotations within 1e-6 rad of a half-turn are rejected (NearAntipodal)
rather than resolved to an arbitrary branch.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, NearAntipodal, NotSkewSymmetric

# Where the closed-form exp/log coefficients become 0/0, switch to their
# Taylor expansions.
SMALL_ANGLE = 1e-7
# log/slerp domain boundary: rotation angles >= pi - ANTIPODAL_MARGIN are
# rejected.
ANTIPODAL_MARGIN = 1e-6

ORTHONORMALITY_TOL = 1e-9


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector: hat(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(s: np.ndarray) -> np.ndarray:
    """Inverse of hat(). Entries are read off directly so hat/vee round-trip
    bitwise; raises NotSkewSymmetric if ||S + S^T||_F >= 1e-8."""
    s = np.asarray(s, dtype=float)
    if np.linalg.norm(s + s.T) >= 1e-8:
        raise NotSkewSymmetric("matrix is not skew-symmetric")
    return np.array([s[2, 1], s[0, 2], s[1, 0]])


def exp_map(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula so(3) -> SO(3), with a second-order Taylor branch
    for the two coefficients below the small-angle threshold."""
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    k = hat(v)
    if angle < SMALL_ANGLE:
        a = 1.0 - angle * angle / 6.0
        b = 0.5 - angle * angle / 24.0
    else:
        a = np.sin(angle) / angle
        b = (1.0 - np.cos(angle)) / (angle * angle)
    return np.eye(3) + a * k + b * (k @ k)


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle arccos((tr(R) - 1) / 2), clamped into arccos domain."""
    c = (np.trace(r) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def log_map(r: np.ndarray) -> np.ndarray:
    """Inverse of exp_map on rotations away from the half-turn boundary.

    Returns the tangent 3-vector with norm equal to the rotation angle.
    Raises NearAntipodal for angles >= pi - 1e-6.
    """
    r = np.asarray(r, dtype=float)
    skew = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    # atan2 of (sin, cos) instead of arccos of the trace: the arccos route
    # loses ~eps/sin(angle) near pi, which the angle/(2 sin) coefficient
    # amplifies past 1e-9 inside the supported domain
    norm = np.linalg.norm(skew)
    angle = np.arctan2(0.5 * norm, 0.5 * (np.trace(r) - 1.0))
    if angle >= np.pi - ANTIPODAL_MARGIN:
        raise NearAntipodal(f"rotation angle {angle:.9f} too close to pi")
    if angle < SMALL_ANGLE:
        return 0.5 * skew
    return (angle / norm) * skew


def log_rel(r_a: np.ndarray, r_b: np.ndarray) -> np.ndarray:
    """Tangent vector log_map(r_a.T @ r_b); zero iff the frames coincide."""
    return log_map(np.asarray(r_a).T @ np.asarray(r_b))


def geodesic_distance(r_a: np.ndarray, r_b: np.ndarray) -> float:
    """Rotation angle between two frames. Defined on all of SO(3)xSO(3)
    (no branch choice needed, unlike log_rel)."""
    return rotation_angle(np.asarray(r_a).T @ np.asarray(r_b))


def slerp(r_a: np.ndarray, r_b: np.ndarray, s: float) -> np.ndarray:
    """Geodesic interpolation: r_a at s=0, r_b at s=1, constant-speed in
    between. s outside [0, 1] raises DomainError."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"interpolation fraction {s} outside [0, 1]")
    if s == 0.0:
        return np.array(r_a, dtype=float)
    if s == 1.0:
        return np.array(r_b, dtype=float)
    return np.asarray(r_a) @ exp_map(s * log_rel(r_a, r_b))


def check_rotation(r: np.ndarray, tol: float = ORTHONORMALITY_TOL) -> np.ndarray:
    """Validate orthonormality and unit determinant; returns the input."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise DomainError("rotation must be a finite 3x3 matrix")
    if np.linalg.norm(r.T @ r - np.eye(3)) > tol:
        raise DomainError("matrix is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise DomainError("matrix determinant is not +1")
    return r


def project_to_rotation(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (SVD projection)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(r: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0.

    Uses the largest-pivot variant so the division is always well
    conditioned.
    """
    r = np.asarray(r, dtype=float)
    t = np.trace(r)
    candidates = [t, r[0, 0], r[1, 1], r[2, 2]]
    i = int(np.argmax(candidates))
    if i == 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s,
                      (r[1, 0] - r[0, 1]) / s])
    elif i == 1:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array([(r[2, 1] - r[1, 2]) / s,
                      0.25 * s,
                      (r[0, 1] + r[1, 0]) / s,
                      (r[0, 2] + r[2, 0]) / s])
    elif i == 2:
        s = np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array([(r[0, 2] - r[2, 0]) / s,
                      (r[0, 1] + r[1, 0]) / s,
                      0.25 * s,
                      (r[1, 2] + r[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array([(r[1, 0] - r[0, 1]) / s,
                      (r[0, 2] + r[2, 0]) / s,
                      (r[1, 2] + r[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def tangent_mean(rotations: list[np.ndarray]) -> np.ndarray:
    """Exp of the mean of log_map over a list of rotations (tangent-space
    mean at the identity)."""
    logs = np.array([log_map(r) for r in rotations])
    return exp_map(logs.mean(axis=0))


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi - 1e-3) -> np.ndarray:
    """Uniform-axis random rotation with angle uniform in (0, max_angle]."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    return exp_map(angle * axis)
