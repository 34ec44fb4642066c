"""Stable orientation dynamics learned from demonstrations.

The model maps an orientation R to a body angular velocity through the
goal-anchored tangent coordinate xi = log_rel(R, goal):

    w(R) = sum_k gamma_k(xi) * A_k @ xi

where gamma_k are Gaussian-mixture posteriors over xi and every A_k is
symmetric positive definite. Because a convex combination of PD matrices
is PD, the trace Lyapunov function V(R) = tr(I - R^T R_g) decreases along
the flow everywhere except the goal, which makes the goal asymptotically
stable regardless of how well the mixture fits the data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

from . import so3
from .dataset import DemonstrationSet, estimate_velocities
from .errors import InsufficientData

logger = logging.getLogger("safeflow")

COV_FLOOR = 1e-6       # smallest eigenvalue kept in mixture covariances
EIG_FLOOR = 1e-3       # smallest eigenvalue kept in the system matrices
PRUNE_FRACTION = 1e-6  # responsibility mass below this * n drops a component

EM_MAX_ITER = 500
EM_TOL = 1e-8
EM_PATIENCE = 3

FIT_MAX_ITER = 2000
FIT_TOL = 1e-10

LOG_2PI = np.log(2.0 * np.pi)


def _floor_spd(mat: np.ndarray, floor: float) -> np.ndarray:
    """Symmetrize and clamp eigenvalues from below (nearest-SPD projection)."""
    sym = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(sym)
    return (vecs * np.maximum(vals, floor)) @ vecs.T


@dataclass
class GMMModel:
    """Gaussian mixture over tangent coordinates."""

    priors: np.ndarray        # (K,)
    means: np.ndarray         # (K, 3)
    covariances: np.ndarray   # (K, 3, 3)
    _prec: np.ndarray = field(init=False, repr=False)
    _log_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.covariances = np.asarray(self.covariances, dtype=float)
        if abs(self.priors.sum() - 1.0) > 1e-12 or np.any(self.priors < 0):
            raise ValueError("priors must be nonnegative and sum to 1")
        self._prec = np.linalg.inv(self.covariances)
        sign, logdet = np.linalg.slogdet(self.covariances)
        if np.any(sign <= 0):
            raise ValueError("covariances must be positive definite")
        self._log_norm = np.log(self.priors) - 0.5 * (logdet + 3.0 * LOG_2PI)

    @property
    def n_components(self) -> int:
        return len(self.priors)

    def log_joint(self, x: np.ndarray) -> np.ndarray:
        """log(prior_k * N(x | mu_k, Sigma_k)) for each component; x is
        (n, 3) or (3,)."""
        x = np.atleast_2d(x)
        diff = x[:, None, :] - self.means[None, :, :]           # (n, K, 3)
        quad = np.einsum("nki,kij,nkj->nk", diff, self._prec, diff)
        return self._log_norm[None, :] - 0.5 * quad

    def posteriors(self, x: np.ndarray) -> np.ndarray:
        """Responsibilities gamma_k(x); rows sum to 1. Shape follows x."""
        lj = self.log_joint(x)
        out = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
        return out[0] if np.ndim(x) == 1 else out

    def log_likelihood(self, x: np.ndarray) -> float:
        return float(logsumexp(self.log_joint(x), axis=1).sum())


def fit_gmm(data: np.ndarray, n_components: int, seed: int = 0) -> GMMModel:
    """EM fit with k-means++ seeding.

    Stops when the total log-likelihood improves by less than 1e-8 for
    3 consecutive iterations, or after 500 iterations. Covariance
    eigenvalues are floored at 1e-6 every M-step. Components whose
    responsibility mass drops below 1e-6 * n are pruned (logged) and the
    fit continues with fewer components.
    """
    x = np.asarray(data, dtype=float)
    n = len(x)
    if n < 10 * n_components:
        raise InsufficientData(f"{n} samples cannot support {n_components} components (need 10 per)")

    centers, _ = kmeans_plusplus(x, n_clusters=n_components, random_state=seed)
    cov0 = _floor_spd(np.cov(x.T) if n > 1 else np.eye(3), COV_FLOOR)
    model = GMMModel(
        priors=np.full(n_components, 1.0 / n_components),
        means=centers,
        covariances=np.repeat(cov0[None], n_components, axis=0),
    )

    prev_ll = -np.inf
    flat_count = 0
    for _ in range(EM_MAX_ITER):
        lj = model.log_joint(x)                      # (n, K)
        ll = float(logsumexp(lj, axis=1).sum())
        resp = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
        mass = resp.sum(axis=0)

        keep = mass >= PRUNE_FRACTION * n
        if not np.all(keep):
            dropped = np.nonzero(~keep)[0]
            logger.warning("pruning %d empty mixture component(s): %s", len(dropped), dropped.tolist())
            resp = resp[:, keep]
            resp /= resp.sum(axis=1, keepdims=True)
            mass = resp.sum(axis=0)

        priors = mass / n
        means = (resp.T @ x) / mass[:, None]
        covs = np.empty((len(mass), 3, 3))
        for k in range(len(mass)):
            diff = x - means[k]
            covs[k] = _floor_spd((resp[:, k, None] * diff).T @ diff / mass[k], COV_FLOOR)
        model = GMMModel(priors=priors, means=means, covariances=covs)

        flat_count = flat_count + 1 if ll - prev_ll < EM_TOL else 0
        if flat_count >= EM_PATIENCE:
            break
        prev_ll = ll
    return model


@dataclass
class RotationDS:
    """Goal plus mixture plus one symmetric PD matrix per component."""

    gmm: GMMModel
    A: np.ndarray              # (K, 3, 3)
    goal: np.ndarray           # (3, 3)
    diagnostics: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        for k, a in enumerate(self.A):
            if np.linalg.norm(a - a.T) >= 1e-10:
                raise ValueError(f"A[{k}] is not symmetric")
            if np.linalg.eigvalsh(a)[0] < EIG_FLOOR - 1e-12:
                raise ValueError(f"A[{k}] has an eigenvalue below {EIG_FLOOR}")
        so3.check_rotation(self.goal)


def prepare_tangent_data(dset: DemonstrationSet) -> tuple[np.ndarray, np.ndarray]:
    """Stack (xi, w) training pairs from every demo sample; velocities are
    estimated when missing."""
    xs, ws = [], []
    for demo in dset.demos:
        filled = estimate_velocities(demo)
        for r, w in zip(filled.rotations, filled.omega):
            xs.append(so3.log_rel(r, dset.goal))
            ws.append(w)
    return np.array(xs), np.array(ws)


def _lsq_objective(a_stack, b, w):
    # b[t, k] = gamma_{tk} * xi_t; prediction_t = sum_k A_k b_{tk}
    pred = np.einsum("kij,tkj->ti", a_stack, b)
    return float(((w - pred) ** 2).sum())


def fit_system_matrices(dset: DemonstrationSet, gmm: GMMModel) -> RotationDS:
    """Least-squares fit of the PD matrices by projected gradient descent.

    All components start from the best single-matrix fit, so the final
    training residual can only improve on that baseline. After every
    gradient step each matrix is symmetrized and its eigenvalues clamped
    to at least 1e-3; the step size 1/L uses the curvature bound
    L = 2*lambda_max of the quadratic form.
    """
    xi, w = prepare_tangent_data(dset)
    n_k = gmm.n_components
    if len(xi) < 10 * n_k:
        raise InsufficientData(f"{len(xi)} samples cannot constrain {n_k} matrices")

    gamma = np.atleast_2d(gmm.posteriors(xi))        # (T, K)
    b = gamma[:, :, None] * xi[:, None, :]           # (T, K, 3)

    # single-matrix baseline: closed-form least squares projected to PD
    gram = xi.T @ xi
    cross = w.T @ xi
    base = _floor_spd(cross @ np.linalg.pinv(gram), EIG_FLOOR)
    a_base = np.repeat(base[None], n_k, axis=0)
    baseline = _lsq_objective(a_base, b, w)

    # curvature bound from the (3K x 3K) normal matrix of blocks
    # sum_t b_{tk} b_{tl}^T
    blocks = np.einsum("tki,tlj->klij", b, b)
    big = blocks.transpose(0, 2, 1, 3).reshape(3 * n_k, 3 * n_k)
    lam = np.linalg.eigvalsh(big)[-1]
    step = 1.0 / (2.0 * lam) if lam > 1e-12 else 0.0

    a_stack = a_base.copy()
    obj = baseline
    for _ in range(FIT_MAX_ITER):
        if step == 0.0:
            break
        pred = np.einsum("kij,tkj->ti", a_stack, b)
        residual = w - pred                           # (T, 3)
        grad = -2.0 * np.einsum("ti,tkj->kij", residual, b)
        new = np.array([_floor_spd(a - step * g, EIG_FLOOR) for a, g in zip(a_stack, grad)])
        new_obj = _lsq_objective(new, b, w)
        if obj - new_obj < FIT_TOL * max(obj, 1.0):
            if new_obj <= obj:
                a_stack, obj = new, new_obj
            break
        a_stack, obj = new, new_obj

    return RotationDS(
        gmm=gmm, A=a_stack, goal=dset.goal,
        diagnostics={"residual": obj, "baseline_residual": baseline, "samples": len(xi)},
    )


def evaluate(ds: RotationDS, r: np.ndarray) -> np.ndarray:
    """Angular velocity command at orientation r; exactly zero at the goal."""
    xi = so3.log_rel(r, ds.goal)
    gamma = ds.gmm.posteriors(xi)
    return np.tensordot(gamma, ds.A, axes=1) @ xi


def lyapunov_value(ds: RotationDS, r: np.ndarray) -> float:
    """V(R) = tr(I - R^T R_g) = 3 - tr(E); zero iff R equals the goal."""
    return float(3.0 - np.trace(np.asarray(r).T @ ds.goal))


def lyapunov_rate(ds: RotationDS, r: np.ndarray) -> float:
    """Time derivative of V along the closed-loop flow.

    V_dot = -w . vee(E - E^T) with E = R^T R_g, which reduces to
    -(2 sin(theta)/theta) * xi^T (sum_k gamma_k A_k) xi, strictly negative
    away from the goal since each A_k is PD.
    """
    e = np.asarray(r).T @ ds.goal
    w = evaluate(ds, r)
    skew = np.array([e[2, 1] - e[1, 2], e[0, 2] - e[2, 0], e[1, 0] - e[0, 1]])
    return float(-w @ skew)


def rollout(
    ds: RotationDS,
    r0: np.ndarray,
    dt: float = 0.003,
    t_max: float = 60.0,
    tol: float = 1e-3,
    record: bool = False,
):
    """Integrate R <- R exp(w dt) until the goal distance drops below tol.

    Returns (converged, elapsed time, final rotation, history); history is
    a list of (distance, V) pairs when record is set, else None.
    """
    r = np.array(r0, dtype=float)
    goal = ds.goal
    a_stack = ds.A
    means = ds.gmm.means
    prec = ds.gmm._prec
    log_norm = ds.gmm._log_norm
    history = [] if record else None
    n_steps = int(round(t_max / dt))

    for step_i in range(n_steps + 1):
        e = r.T @ goal
        cos_t = np.clip((np.trace(e) - 1.0) / 2.0, -1.0, 1.0)
        angle = np.arccos(cos_t)
        skew = 0.5 * np.array([e[2, 1] - e[1, 2], e[0, 2] - e[2, 0], e[1, 0] - e[0, 1]])
        xi = skew if angle < so3.SMALL_ANGLE else (angle / np.sin(angle)) * skew

        if record:
            history.append((float(np.linalg.norm(xi)), 3.0 - np.trace(e)))
        if np.linalg.norm(xi) < tol:
            return True, step_i * dt, r, history
        if step_i == n_steps:
            break

        diff = xi - means
        logp = log_norm - 0.5 * np.einsum("ki,kij,kj->k", diff, prec, diff)
        logp -= logp.max()
        gamma = np.exp(logp)
        gamma /= gamma.sum()
        omega = np.tensordot(gamma, a_stack, axes=1) @ xi
        r = r @ so3.exp_map(omega * dt)
    return False, n_steps * dt, r, history
