"""Synthetic demonstration generators for tests and demos.

Each shape defines a stable ground-truth velocity field: a handful of
anisotropic positive-definite matrices blended by radius bands around a
base approach direction, all pulling toward the identity goal. Demos are
closed-loop integrations of that field from starts scattered around the
base direction, so every set is guaranteed to decay monotonically, carry
exact velocities, and span three dimensions of tangent space. Bends come
from the anisotropy: the fast axes collapse first, and alternating the
slow-axis orientation between radius bands folds the path once per
handoff (one bend for "corner", two for "zigzag", three for "wave").
"""

from __future__ import annotations

import numpy as np

from . import so3
from .dataset import Demonstration, DemonstrationSet
from .errors import DomainError

SHAPES = ("corner", "zigzag", "wave")

# shared approach direction for the demo bundles
_BASE_DIR = np.array([0.8, 0.55, 0.25]) / np.linalg.norm([0.8, 0.55, 0.25])


def _rot_about(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    return so3.exp_map(angle * axis / np.linalg.norm(axis))


def _ground_truth(shape: str):
    """Band means, band widths, and PD matrices of the generating field."""
    e = _BASE_DIR
    if shape == "corner":
        mats = [np.diag([1.3, 0.45, 0.8])]
        means, sig = [1.0 * e], [0.6]
    elif shape == "zigzag":
        turns = [_rot_about([0.2, 1.0, 0.3], a) for a in (0.5, -0.5)]
        mats = [r @ np.diag([1.3, 0.55, 0.9]) @ r.T for r in turns]
        means, sig = [1.5 * e, 0.55 * e], [0.55, 0.45]
    elif shape == "wave":
        turns = [_rot_about([1.0, 0.3, 0.2], a) for a in (0.55, -0.55, 0.55)]
        mats = [r @ np.diag([1.35, 0.55, 0.95]) @ r.T for r in turns]
        means, sig = [1.7 * e, 1.0 * e, 0.4 * e], [0.45, 0.4, 0.35]
    else:
        raise DomainError(f"unknown shape {shape!r} (choose from {SHAPES})")
    return np.array(means), np.array(sig), np.array(mats)


def ground_truth_velocity(shape: str, xi: np.ndarray) -> np.ndarray:
    """Generating field evaluated at tangent coordinate xi."""
    means, sig, mats = _ground_truth(shape)
    d2 = ((xi - means) ** 2).sum(axis=1) / (2.0 * sig**2)
    g = np.exp(-(d2 - d2.min()))
    g /= g.sum()
    return np.tensordot(g, mats, axes=1) @ xi


def make_demo_set(
    shape: str = "corner",
    n_demos: int = 10,
    seed: int = 0,
    start_radius: float = 1.8,
    start_jitter: float = 0.35,
    dir_spread: float = 0.35,
    dt: float = 0.01,
    keep_every: int = 3,
    stop: float = 5e-3,
) -> DemonstrationSet:
    """Integrate the shape's field from scattered starts.

    Starts sit near start_radius along the base direction, tilted by a
    zero-mean angle of scale dir_spread and offset by start_jitter noise;
    the bundle therefore narrows as it converges, which is what the
    cone-learning stage feeds on. Integration runs at dt but only every
    keep_every-th sample is stored; each demo ends at distance < stop.
    """
    rng = np.random.default_rng(seed)
    goal = np.eye(3)
    e = _BASE_DIR
    max_steps = int(np.ceil(40.0 / dt))

    demos = []
    for _ in range(n_demos):
        tilt = rng.standard_normal(3)
        tilt -= (tilt @ e) * e
        tilt /= np.linalg.norm(tilt)
        direction = so3.exp_map(dir_spread * rng.standard_normal() * tilt) @ e
        v = start_radius * (1.0 + 0.04 * rng.standard_normal()) * direction
        v = v + start_jitter * rng.standard_normal(3)
        r = goal @ so3.exp_map(-v)  # places log_rel(r, goal) at v

        ts, rots, ws = [], [], []
        t = 0.0
        for k in range(max_steps):
            xi = so3.log_rel(r, goal)
            w = ground_truth_velocity(shape, xi)
            done = np.linalg.norm(xi) < stop
            if k % keep_every == 0 or done:
                ts.append(t)
                rots.append(r.copy())
                ws.append(w)
            if done:
                break
            r = r @ so3.exp_map(w * dt)
            t += dt
        demos.append(Demonstration(t=np.array(ts), rotations=np.array(rots), omega=np.array(ws)))
    return DemonstrationSet(demos=demos, goal=goal)
