"""Demonstration ingestion, validation, and distance-based resampling.

A demonstration is a timed sequence of orientations (optionally with
angular velocities) whose geodesic distance to a shared goal frame is
non-increasing. Resampling replaces the time axis with a uniform grid of
distances to the goal, so that demonstrations of different durations and
speeds become directly comparable row by row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import so3
from .errors import BracketNotFound, InvariantViolation, NonMonotoneDistance, ParseError

# Max allowed increase of distance-to-goal between consecutive samples.
MONOTONE_SLACK = 1e-6
# Demos must end within this geodesic distance of the goal.
GOAL_TOL = 0.05
# Quaternions are renormalized on read if within this of unit norm.
QUAT_NORM_TOL = 1e-6

BISECT_MAX_ITER = 60
BISECT_TOL = 1e-9


@dataclass
class Demonstration:
    """One recorded trajectory: times (s), rotations, optional body-frame
    angular velocities (rad/s)."""

    t: np.ndarray                   # (n,)
    rotations: np.ndarray           # (n, 3, 3)
    omega: np.ndarray | None = None  # (n, 3)

    def __len__(self) -> int:
        return len(self.t)

    def distances(self, goal: np.ndarray) -> np.ndarray:
        return np.array([so3.geodesic_distance(r, goal) for r in self.rotations])


@dataclass
class DemonstrationSet:
    demos: list[Demonstration]
    goal: np.ndarray
    goal_tol: float = GOAL_TOL

    def __post_init__(self):
        validate(self)


@dataclass
class ResampledSet:
    """Demonstrations realigned on a shared distance grid.

    grid[i] = (d_min / m) * i for i = 0..m, so frames[0] sits at the goal
    and frames[m] at the common starting distance d_min.
    """

    grid: np.ndarray       # (m+1,)
    frames: np.ndarray     # (m+1, n_demos, 3, 3)
    goal: np.ndarray = field(repr=False, default=None)

    @property
    def d_min(self) -> float:
        return float(self.grid[-1])

    def as_demonstration_set(self) -> DemonstrationSet:
        """Reinterpret each column as a demo walking the grid goal-ward
        (unit timestamps)."""
        demos = []
        for n in range(self.frames.shape[1]):
            rots = self.frames[::-1, n].copy()
            demos.append(Demonstration(t=np.arange(len(rots), dtype=float), rotations=rots))
        return DemonstrationSet(demos=demos, goal=self.goal, goal_tol=GOAL_TOL)


def validate(dset: DemonstrationSet) -> None:
    """Check timestamp ordering, monotone distance decay, and goal arrival."""
    so3.check_rotation(dset.goal)
    if len(dset.demos) < 1:
        raise InvariantViolation("a demonstration set needs at least one demo")
    for n, demo in enumerate(dset.demos):
        if len(demo) < 2:
            raise InvariantViolation("fewer than 2 samples", demo=n)
        if not np.all(np.diff(demo.t) > 0):
            k = int(np.argmin(np.diff(demo.t)))
            raise InvariantViolation("timestamps not strictly increasing", demo=n, sample=k + 1)
        d = demo.distances(dset.goal)
        rises = np.diff(d) > MONOTONE_SLACK
        if np.any(rises):
            k = int(np.argmax(rises))
            raise NonMonotoneDistance(
                f"distance to goal rises {d[k]:.6f} -> {d[k + 1]:.6f}", demo=n, sample=k + 1)
        if d[-1] > dset.goal_tol:
            raise InvariantViolation(
                f"final frame is {d[-1]:.4f} rad from the goal (limit {dset.goal_tol})",
                demo=n, sample=len(demo) - 1)


def _quat_rows(raw, n_demo) -> np.ndarray:
    rots = []
    for j, q in enumerate(raw):
        q = np.asarray(q, dtype=float)
        if q.shape != (4,):
            raise ParseError(f"demo {n_demo}, sample {j}: quaternion must have 4 entries")
        norm = np.linalg.norm(q)
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise InvariantViolation(f"quaternion norm {norm:.8f}", demo=n_demo, sample=j)
        rots.append(so3.quat_to_matrix(q / norm))
    return np.array(rots)


def load(path: str, goal_tol: float = GOAL_TOL) -> DemonstrationSet:
    """Read a demonstration file.

    Format: JSON {"goal": [w,x,y,z] (optional), "demos": [{"t": [...],
    "q": [[w,x,y,z], ...], "omega": [[x,y,z], ...] (optional)}]}. Units are
    seconds, unit quaternions, rad/s. When the goal is absent it defaults
    to the tangent-space mean of the final frames.
    """
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "demos" not in doc:
        raise ParseError(f"{path}: expected an object with a 'demos' list")

    demos = []
    for n, entry in enumerate(doc["demos"]):
        try:
            t = np.asarray(entry["t"], dtype=float)
            rots = _quat_rows(entry["q"], n)
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"demo {n}: malformed entry ({e})") from e
        if len(t) != len(rots):
            raise ParseError(f"demo {n}: {len(t)} timestamps but {len(rots)} quaternions")
        omega = None
        if "omega" in entry and entry["omega"] is not None:
            omega = np.asarray(entry["omega"], dtype=float)
            if omega.shape != (len(t), 3):
                raise ParseError(f"demo {n}: omega shape {omega.shape} != ({len(t)}, 3)")
        demos.append(Demonstration(t=t, rotations=rots, omega=omega))

    if "goal" in doc and doc["goal"] is not None:
        q = np.asarray(doc["goal"], dtype=float)
        norm = np.linalg.norm(q)
        if q.shape != (4,) or abs(norm - 1.0) > QUAT_NORM_TOL:
            raise ParseError(f"{path}: goal must be a unit quaternion (w,x,y,z)")
        goal = so3.quat_to_matrix(q / norm)
    else:
        if not demos:
            raise ParseError(f"{path}: no demos and no goal")
        goal = so3.tangent_mean([d.rotations[-1] for d in demos])

    return DemonstrationSet(demos=demos, goal=goal, goal_tol=goal_tol)


def save(dset: DemonstrationSet, path: str) -> None:
    """Write a demonstration set in the format load() reads."""
    doc = {
        "goal": so3.matrix_to_quat(dset.goal).tolist(),
        "demos": [
            {
                "t": demo.t.tolist(),
                "q": [so3.matrix_to_quat(r).tolist() for r in demo.rotations],
                **({"omega": demo.omega.tolist()} if demo.omega is not None else {}),
            }
            for demo in dset.demos
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def estimate_velocities(demo: Demonstration) -> Demonstration:
    """Fill body-frame angular velocities by forward differences.

    w_k = log_rel(R_k, R_{k+1}) / (t_{k+1} - t_k); the last sample copies
    its predecessor. Demos that already carry velocities pass through.
    """
    if demo.omega is not None:
        return demo
    n = len(demo)
    w = np.zeros((n, 3))
    for k in range(n - 1):
        dt = demo.t[k + 1] - demo.t[k]
        w[k] = so3.log_rel(demo.rotations[k], demo.rotations[k + 1]) / dt
    w[-1] = w[-2]
    return Demonstration(t=demo.t, rotations=demo.rotations, omega=w)


def _bisect_to_distance(r_a, r_b, goal, target):
    """Point on the slerp arc r_a -> r_b at geodesic distance `target` from
    the goal. Distances at the endpoints must straddle the target.

    Runs until the bracket collapses below 1e-12 of arc (well inside the
    1e-9 distance contract) so that resampling an already-resampled set
    reproduces it to near machine precision.
    """
    seg = so3.geodesic_distance(r_a, r_b)
    lo, hi = 0.0, 1.0
    mid = 0.5
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        r = so3.slerp(r_a, r_b, mid)
        err = so3.geodesic_distance(r, goal) - target
        if (hi - lo) * seg < 1e-12:
            return r
        if err > 0:
            lo = mid
        else:
            hi = mid
    return so3.slerp(r_a, r_b, mid)


def resample_by_distance(dset: DemonstrationSet, m: int) -> ResampledSet:
    """Resample every demo at distances d_i = (d_min / m) * i, i = 0..m.

    d_min is the smallest initial distance-to-goal across demos, so every
    demo covers the full grid. Each grid point is found by bracketing a
    consecutive sample pair whose distances straddle d_i and bisecting the
    slerp between them on distance-to-goal. The goal frame acts as a
    virtual terminal sample so the grid reaches d = 0 even though demos
    only end near the goal.
    """
    if m < 2:
        raise InvariantViolation(f"grid size m={m} must be at least 2")
    validate(dset)
    goal = dset.goal
    initial = [so3.geodesic_distance(demo.rotations[0], goal) for demo in dset.demos]
    d_min = min(initial)
    grid = (d_min / m) * np.arange(m + 1)

    frames = np.empty((m + 1, len(dset.demos), 3, 3))
    for n, demo in enumerate(dset.demos):
        dists = np.append(demo.distances(goal), 0.0)
        rots = list(demo.rotations) + [goal]
        if dists[0] < d_min - MONOTONE_SLACK:
            raise BracketNotFound(f"demo {n} starts inside the grid ({dists[0]:.6f} < {d_min:.6f})")
        for i, target in enumerate(grid):
            if target == 0.0:
                frames[i, n] = goal
                continue
            below = np.nonzero(dists[1:] <= target)[0]
            if len(below) == 0:
                raise BracketNotFound(f"demo {n} never reaches distance {target:.6f}")
            k = int(below[0])
            if dists[k] <= target:
                # flat or slack-level dip; the sample itself is within tolerance
                frames[i, n] = rots[k]
            else:
                frames[i, n] = _bisect_to_distance(rots[k], rots[k + 1], goal, target)
    return ResampledSet(grid=grid, frames=frames, goal=goal)
