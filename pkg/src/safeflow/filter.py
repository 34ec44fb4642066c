"""Conic safety filter: affine barrier conditions and an exact small QP.

Each executor body axis must stay inside a learned cone around the
matching reference axis.  Per axis this is one affine condition
``a @ u + b >= 0`` on the commanded body angular velocity ``u``; the
filter returns the feasible input closest to the commanded one, subject
additionally to a box bound on each component.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import cones as cone_mod
from .errors import DomainError

# primal/dual slack accepted when certifying an active-set candidate
FEAS_SLACK = 1e-9
# in three dimensions any optimum is certified by <= 3 independent rows
MAX_ACTIVE = 3


@dataclass(frozen=True)
class FilterConfig:
    """Barrier gain, input box bound, and the control period."""

    alpha_gain: float = 10.0
    u_max: float = 5.0
    dt: float = 0.003

    def __post_init__(self):
        if self.alpha_gain <= 0 or self.u_max <= 0 or self.dt <= 0:
            raise DomainError("alpha_gain, u_max, and dt must be positive")


@dataclass
class QPSolution:
    """Filtered input plus the certificate that it is the minimizer.

    active_set holds indices into the combined constraint list: cone
    rows first in the order given, then box rows (upper, lower) per
    component.  kkt_residual is the largest stationarity, activity,
    primal, dual, or complementarity violation of the returned point;
    for an infeasible problem it is the residual constraint violation
    of the fallback point.
    """

    u_star: np.ndarray
    active_set: tuple
    feasible: bool
    kkt_residual: float


def build_constraints(r_exc, r_ref, w_ref, cones, cfg):
    """Affine conditions rendering each cone forward invariant.

    Row i reads a @ u + b >= 0 with a the sensitivity of the axis
    alignment to the executor input and b collecting the reference
    axis drift, the cone opening rate, and the gain term on the
    current margin.
    """
    r_exc = np.asarray(r_exc, dtype=float)
    r_ref = np.asarray(r_ref, dtype=float)
    w_ref = np.asarray(w_ref, dtype=float)
    theta = cone_mod.cone_angle(cones, r_ref)
    theta_dot = cone_mod.cone_angle_rate(cones, r_ref, w_ref, dt=cfg.dt)
    rel = r_exc.T @ r_ref
    eye = np.eye(3)
    rows = []
    for i in range(3):
        e = eye[i]
        a = np.cross(e, rel[:, i])
        margin = rel[i, i] - np.cos(theta[i])
        drift = -rel[i, :] @ np.cross(e, w_ref)
        b = drift + np.sin(theta[i]) * theta_dot[i] + cfg.alpha_gain * margin
        rows.append((a, float(b)))
    return rows


def _assemble(constraints, cfg):
    """Stack cone rows and the six box rows into one a @ u + b >= 0 list."""
    a_rows = [np.asarray(a, dtype=float) for a, _ in constraints]
    b_vals = [float(b) for _, b in constraints]
    eye = np.eye(3)
    for j in range(3):
        a_rows.append(-eye[j])
        b_vals.append(cfg.u_max)
        a_rows.append(eye[j])
        b_vals.append(cfg.u_max)
    return np.vstack(a_rows), np.asarray(b_vals), len(constraints)


def solve_qp(u0, constraints, cfg):
    """Exact minimizer of ||u - u0||^2/2 over the cone rows and the box.

    Candidate active sets are enumerated smallest first and in index
    order within each size, so ties resolve deterministically.  Each
    candidate is solved through its KKT system and accepted only if
    primal and dual feasible.  If no candidate certifies (the rows and
    the box have empty intersection), the returned point minimizes the
    largest violation instead and is flagged infeasible.
    """
    u0 = np.asarray(u0, dtype=float)
    mat, offs, n_cone = _assemble(constraints, cfg)
    if np.all(mat @ u0 + offs >= 0.0):
        return QPSolution(u_star=u0.copy(), active_set=(), feasible=True,
                          kkt_residual=0.0)
    n = len(offs)
    for size in range(1, MAX_ACTIVE + 1):
        for subset in itertools.combinations(range(n), size):
            idx = list(subset)
            a_s = mat[idx]
            gram = a_s @ a_s.T
            rhs = -(a_s @ u0 + offs[idx])
            try:
                lam = np.linalg.solve(gram, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(lam)) or np.any(lam < -FEAS_SLACK):
                continue
            u = u0 + a_s.T @ lam
            slack = mat @ u + offs
            if np.any(slack < -FEAS_SLACK):
                continue
            activity = float(np.abs(slack[idx]).max())
            if activity > FEAS_SLACK:
                continue
            kkt = max(activity,
                      float(max(0.0, -lam.min())),
                      float(max(0.0, -slack.min())),
                      float((np.abs(lam) * np.abs(slack[idx])).max()))
            return QPSolution(u_star=u, active_set=subset, feasible=True,
                              kkt_residual=kkt)
    return _least_violation(u0, mat, offs, n_cone, cfg)


def _least_violation(u0, mat, offs, n_cone, cfg):
    """Fallback for an empty feasible set: minimize the worst violation."""
    cost = np.array([0.0, 0.0, 0.0, 1.0])
    a_ub = np.hstack([-mat[:n_cone], -np.ones((n_cone, 1))])
    bounds = [(-cfg.u_max, cfg.u_max)] * 3 + [(0.0, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=offs[:n_cone], bounds=bounds,
                  method="highs")
    if res.success:
        u = np.clip(res.x[:3], -cfg.u_max, cfg.u_max)
    else:
        u = np.clip(u0, -cfg.u_max, cfg.u_max)
    violation = float(max(0.0, -(mat @ u + offs).min()))
    return QPSolution(u_star=u, active_set=(), feasible=False,
                      kkt_residual=violation)


def filter_step(r_exc, r_ref, w_ref, u0, cones, cfg):
    """Constraint assembly followed by the QP; a pure function."""
    return solve_qp(u0, build_constraints(r_exc, r_ref, w_ref, cones, cfg), cfg)
