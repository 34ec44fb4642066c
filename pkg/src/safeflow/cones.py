"""Time-varying conic constraints learned from demonstration variability.

Each of the three body axes of the executed frame must stay within a cone
around the matching axis of the reference frame:

    h_i(R_exc, t) = (R_exc e_i) . (R_ref(t) e_i) - cos(theta_i(t)) >= 0

The cone half-angles theta_i are functions of the reference's remaining
geodesic distance to the goal. They are learned in two stages: first the
distance-resampled demos yield one angle triple per grid row (spread of
the demo bundle around its mean frame, largest deviation over the three
scaled covariance eigenvectors), then locally weighted regression turns
the table into a smooth curve with an analytic slope.

Tangent statistics use the goal-anchored chart xi = log(goal^T R), so the
row mean frame is goal @ exp(mean). Axis angles are invariant to that
common left factor, so the goal cancels out of the learned angles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3
from .dataset import ResampledSet
from .ds import RotationDS
from .errors import EigenFailure, InsufficientDemos

ANGLE_CLAMP_MARGIN = 1e-6  # cones stay strictly inside (0, pi/2)
DEFAULT_FLOOR = 0.01
DEFAULT_DEGREE = 5
DEFAULT_KERNELS = 10


@dataclass
class LWRConfig:
    degree: int = DEFAULT_DEGREE
    n_kernels: int = DEFAULT_KERNELS
    overlap: float = 1.0  # bandwidth as a multiple of the kernel spacing


@dataclass
class LWRModel:
    """Gaussian-kernel locally weighted polynomials over scalar distance.

    Prediction is the kernel-weighted blend of per-kernel polynomials in
    (d - c_j); inputs are clamped to the trained range [0, d_max].
    """

    centers: np.ndarray     # (J,)
    sigmas: np.ndarray      # (J,)
    coef: np.ndarray        # (J, degree+1, n_outputs)
    d_max: float
    train_d: np.ndarray = field(repr=False, default=None)
    train_y: np.ndarray = field(repr=False, default=None)

    @property
    def degree(self) -> int:
        return self.coef.shape[1] - 1

    def _kernel_terms(self, d: float):
        offs = d - self.centers                               # (J,)
        phi = np.exp(-0.5 * (offs / self.sigmas) ** 2)
        powers = offs[:, None] ** np.arange(self.coef.shape[1])   # (J, deg+1)
        vals = np.einsum("jm,jmo->jo", powers, self.coef)         # (J, out)
        return offs, phi, powers, vals

    def predict(self, d: float) -> np.ndarray:
        d = float(np.clip(d, 0.0, self.d_max))
        _, phi, _, vals = self._kernel_terms(d)
        return (phi @ vals) / phi.sum()

    def slope(self, d: float) -> np.ndarray:
        """Analytic d/dd of predict inside the range; zero outside (the
        input clamp holds the prediction constant there)."""
        if d < 0.0 or d > self.d_max:
            return np.zeros(self.coef.shape[2])
        offs, phi, powers, vals = self._kernel_terms(d)
        dphi = phi * (-offs / self.sigmas**2)
        m = np.arange(self.coef.shape[1])
        dpow = np.where(m > 0, m, 0.0)[None, :] * np.where(
            m > 0, offs[:, None] ** np.maximum(m - 1, 0), 0.0)
        dvals = np.einsum("jm,jmo->jo", dpow, self.coef)
        s = phi.sum()
        num = phi @ vals
        return (dphi @ vals + phi @ dvals) / s - num * dphi.sum() / s**2


def fit_lwr(d: np.ndarray, y: np.ndarray, cfg: LWRConfig = LWRConfig()) -> LWRModel:
    """Weighted least squares per kernel; centers uniform on [0, max(d)]."""
    d = np.asarray(d, dtype=float)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[0] != len(d):
        y = y.T
    d_max = float(d.max())
    centers = np.linspace(0.0, d_max, cfg.n_kernels)
    spacing = d_max / (cfg.n_kernels - 1) if cfg.n_kernels > 1 else max(d_max, 1.0)
    sigmas = np.full(cfg.n_kernels, spacing * cfg.overlap)

    coef = np.empty((cfg.n_kernels, cfg.degree + 1, y.shape[1]))
    for j, c in enumerate(centers):
        offs = d - c
        x = offs[:, None] ** np.arange(cfg.degree + 1)
        sw = np.sqrt(np.exp(-0.5 * (offs / sigmas[j]) ** 2))
        coef[j], *_ = np.linalg.lstsq(sw[:, None] * x, sw[:, None] * y, rcond=None)
    return LWRModel(centers=centers, sigmas=sigmas, coef=coef, d_max=d_max,
                    train_d=d.copy(), train_y=y.copy())


@dataclass
class TimeVaryingCones:
    angle_model: LWRModel
    reference: RotationDS
    angle_floor: float = DEFAULT_FLOOR


def _row_statistics(frames_row: np.ndarray, goal: np.ndarray):
    """Tangent mean and sample covariance of one grid row (goal chart)."""
    xs = np.array([so3.log_map(goal.T @ f) for f in frames_row])
    mean = xs.mean(axis=0)
    cov = np.cov(xs.T, ddof=1)
    return mean, 0.5 * (cov + cov.T)


def _scaled_eigvecs(cov: np.ndarray) -> np.ndarray:
    """Eigenvectors scaled to one standard deviation, signs canonical
    (largest-magnitude entry positive) so results are deterministic."""
    try:
        vals, vecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError:
        try:
            vals, vecs = np.linalg.eigh(cov + 1e-12 * np.eye(3))
        except np.linalg.LinAlgError as e:
            raise EigenFailure(f"covariance decomposition failed: {e}") from e
    if vals[0] < -1e-10:
        raise EigenFailure(f"covariance has negative eigenvalue {vals[0]:.3e}")
    out = np.empty((3, 3))
    for j in range(3):
        v = vecs[:, j]
        pivot = np.argmax(np.abs(v))
        if v[pivot] < 0:
            v = -v
        out[j] = np.sqrt(max(vals[j], 0.0)) * v
    return out  # rows are scaled eigenvectors


def row_cone_angles(mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Angle triple for one grid row: the worst misalignment of each axis
    over the three one-sigma perturbed frames."""
    r_m = so3.exp_map(mean)
    angles = np.zeros(3)
    for v in _scaled_eigvecs(cov):
        r_j = so3.exp_map(v + mean)
        cosines = np.einsum("ij,ij->j", r_m, r_j)  # per-axis column dots
        angles = np.maximum(angles, np.arccos(np.clip(cosines, -1.0, 1.0)))
    return angles


def cone_angle_table(resampled: ResampledSet, goal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-grid-row angle triples (the table LWR smooths)."""
    if resampled.frames.shape[1] < 2:
        raise InsufficientDemos("cone angles need at least 2 demos")
    angles = np.empty((len(resampled.grid), 3))
    for i in range(len(resampled.grid)):
        mean, cov = _row_statistics(resampled.frames[i], goal)
        angles[i] = row_cone_angles(mean, cov)
    return np.asarray(resampled.grid, dtype=float), angles


def learn_cone_angles(
    resampled: ResampledSet,
    goal: np.ndarray,
    cfg: LWRConfig = LWRConfig(),
) -> LWRModel:
    grid, angles = cone_angle_table(resampled, goal)
    return fit_lwr(grid, angles, cfg)


def cone_axes(cones: TimeVaryingCones, r_ref: np.ndarray) -> np.ndarray:
    """Reference axes R_ref e_i: simply the columns of R_ref, returned as
    a 3x3 matrix whose column i is axis i."""
    return np.asarray(r_ref, dtype=float)


def cone_angle(cones: TimeVaryingCones, r_ref: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(so3.log_rel(r_ref, cones.reference.goal))
    raw = cones.angle_model.predict(d)
    return np.clip(raw, cones.angle_floor, np.pi / 2 - ANGLE_CLAMP_MARGIN)


def cone_angle_rate(
    cones: TimeVaryingCones,
    r_ref: np.ndarray,
    w_ref: np.ndarray,
    dt: float = 0.003,
) -> np.ndarray:
    """theta_dot by the chain rule: analytic LWR slope times the distance
    rate along the reference flow (central difference over one step).
    Rates are zero wherever a clamp (input range or angle bounds) pins the
    effective angle."""
    model = cones.angle_model
    d = np.linalg.norm(so3.log_rel(r_ref, cones.reference.goal))
    if d > model.d_max:
        return np.zeros(3)
    r_fwd = r_ref @ so3.exp_map(np.asarray(w_ref) * dt)
    r_bwd = r_ref @ so3.exp_map(-np.asarray(w_ref) * dt)
    d_fwd = np.linalg.norm(so3.log_rel(r_fwd, cones.reference.goal))
    d_bwd = np.linalg.norm(so3.log_rel(r_bwd, cones.reference.goal))
    d_rate = (d_fwd - d_bwd) / (2.0 * dt)

    raw = model.predict(d)
    rate = model.slope(d) * d_rate
    clamped = (raw <= cones.angle_floor) | (raw >= np.pi / 2 - ANGLE_CLAMP_MARGIN)
    rate[clamped] = 0.0
    return rate


def constraint_value(cones: TimeVaryingCones, r_exc: np.ndarray, r_ref: np.ndarray) -> np.ndarray:
    """h_i = (R_exc e_i) . (R_ref e_i) - cos(theta_i); nonnegative while
    the executed axes stay inside their cones."""
    theta = cone_angle(cones, r_ref)
    cosines = np.einsum("ij,ij->j", np.asarray(r_exc), np.asarray(r_ref))
    return cosines - np.cos(theta)
