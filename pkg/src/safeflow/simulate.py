"""Lockstep execution of the reference and executor systems.

The reference system replays the nominal motion that defined the cones;
the executor tracks the same vector field but receives external input
(scripted pulses or live teleoperation) and, when enabled, the safety
filter.  Each tick produces one record; a finished run carries summary
statistics including the normalized accumulated constraint violation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import cones as cone_mod
from . import ds as ds_mod
from . import filter as filter_mod
from . import so3
from .errors import DomainError

# extra margin demanded from the next-step constraint values so recorded
# samples never dip below zero through discretization
STEP_MARGIN = 1e-9
TIGHTEN_MAX_ITER = 12
CONVERGED_TOL = 1e-2

CSV_HEADER = ["t",
              "qref_w", "qref_x", "qref_y", "qref_z",
              "qexc_w", "qexc_x", "qexc_y", "qexc_z",
              "w_ref_x", "w_ref_y", "w_ref_z",
              "u0_x", "u0_y", "u0_z",
              "ustar_x", "ustar_y", "ustar_z",
              "h1", "h2", "h3",
              "th1", "th2", "th3",
              "feasible"]


@dataclass
class PerturbationProfile:
    """Smooth velocity pulse: quintic rise, hold, and symmetric fall.

    The pulse rises over `duration` seconds, holds the full amplitude
    for another `duration`, and falls over a third, so its support is
    3 * duration and the profile is continuously differentiable.
    """

    onset: float = 1.5
    duration: float = 0.5
    amplitude: np.ndarray = field(default_factory=lambda: np.array([2.0, 0.0, 0.0]))

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        if self.onset < 0 or self.duration <= 0:
            raise DomainError("perturbation onset must be >= 0 and duration > 0")
        if self.amplitude.shape != (3,):
            raise DomainError("perturbation amplitude must be a 3-vector")


def _smoothstep(x):
    x = min(max(x, 0.0), 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def smooth_step(t, profile):
    """Pulse velocity at time t; zero outside the 3 * duration support."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    local = t - profile.onset
    dur = profile.duration
    if local <= 0 or local >= 3 * dur:
        return np.zeros(3)
    if local < dur:
        gain = _smoothstep(local / dur)
    elif local <= 2 * dur:
        gain = 1.0
    else:
        gain = _smoothstep((3 * dur - local) / dur)
    return profile.amplitude * gain


@dataclass
class SimConfig:
    duration: float
    initial_exc: np.ndarray
    initial_ref: np.ndarray
    dt: float = 0.003
    perturbation: PerturbationProfile = field(default_factory=PerturbationProfile)
    filter_on: bool = True
    speed_scale: float = 1.0
    alpha_gain: float = 10.0
    u_max: float = 5.0

    def __post_init__(self):
        if self.dt <= 0 or self.duration <= 0:
            raise DomainError("dt and duration must be positive")
        if self.speed_scale < 0:
            raise DomainError("speed_scale must be nonnegative")
        self.initial_exc = np.asarray(self.initial_exc, dtype=float)
        self.initial_ref = np.asarray(self.initial_ref, dtype=float)

    def filter_config(self):
        return filter_mod.FilterConfig(alpha_gain=self.alpha_gain,
                                       u_max=self.u_max, dt=self.dt)


@dataclass
class SimState:
    r_ref: np.ndarray
    r_exc: np.ndarray
    t: float = 0.0
    speed_scale: float = 1.0
    filter_on: bool = True


@dataclass
class StepRecord:
    t: float
    r_ref: np.ndarray
    r_exc: np.ndarray
    w_ref: np.ndarray
    u0: np.ndarray
    u_star: np.ndarray
    h: np.ndarray
    theta: np.ndarray
    active_set: tuple
    feasible: bool


@dataclass
class SimTrace:
    records: list
    goal: np.ndarray
    summary: dict


def _tightened(r_exc, r_ref, w_ref_eff, u0, cones, cfg, rows):
    """Solve the filter QP, then shrink offsets until the actually
    integrated next step keeps every constraint nonnegative.

    The continuous-time condition allows small negative excursions
    under explicit integration; each pass converts the observed
    next-step shortfall into an offset tightening, which converges in
    a few iterations because the response of the next-step margin to
    the input is linear in dt to first order.
    """
    sol = filter_mod.solve_qp(u0, rows, cfg)
    if not sol.feasible:
        return sol
    extra = np.zeros(len(rows))
    r_ref_next = r_ref @ so3.exp_map(w_ref_eff * cfg.dt)
    for _ in range(TIGHTEN_MAX_ITER):
        r_exc_next = r_exc @ so3.exp_map(sol.u_star * cfg.dt)
        h_next = cone_mod.constraint_value(cones, r_exc_next, r_ref_next)
        if h_next.min() >= STEP_MARGIN:
            return sol
        short = h_next < STEP_MARGIN
        extra[short] += (STEP_MARGIN - h_next[short]) / cfg.dt
        tightened = [(a, b - extra[i]) for i, (a, b) in enumerate(rows)]
        candidate = filter_mod.solve_qp(u0, tightened, cfg)
        if not candidate.feasible:
            return sol
        sol = candidate
    return sol


def step(state, model, cones, filter_cfg, u_ext):
    """Advance one tick; returns the next state and this tick's record."""
    u_ext = np.asarray(u_ext, dtype=float)
    w_ref = ds_mod.evaluate(model, state.r_ref)
    w_exc = ds_mod.evaluate(model, state.r_exc)
    u0 = state.speed_scale * w_exc + u_ext
    w_ref_eff = state.speed_scale * w_ref
    theta = cone_mod.cone_angle(cones, state.r_ref)
    h = cone_mod.constraint_value(cones, state.r_exc, state.r_ref)
    if state.filter_on:
        rows = filter_mod.build_constraints(state.r_exc, state.r_ref,
                                            w_ref_eff, cones, filter_cfg)
        sol = _tightened(state.r_exc, state.r_ref, w_ref_eff, u0, cones,
                         filter_cfg, rows)
        u_star, active, feasible = sol.u_star, sol.active_set, sol.feasible
    else:
        u_star, active, feasible = u0, (), True
    record = StepRecord(t=state.t, r_ref=state.r_ref, r_exc=state.r_exc,
                        w_ref=w_ref, u0=u0, u_star=u_star, h=h, theta=theta,
                        active_set=active, feasible=feasible)
    next_state = SimState(r_ref=state.r_ref @ so3.exp_map(w_ref_eff * filter_cfg.dt),
                          r_exc=state.r_exc @ so3.exp_map(u_star * filter_cfg.dt),
                          t=state.t + filter_cfg.dt,
                          speed_scale=state.speed_scale,
                          filter_on=state.filter_on)
    return next_state, record


def nacv(actual_axes, ref_axes, angles):
    """Normalized accumulated constraint violation over a trace.

    Per sample and axis, the relative exceedance of the actual
    axis-to-reference-axis angle over the allowed cone angle,
    averaged over all samples and the three axes.
    """
    actual_axes = np.asarray(actual_axes, dtype=float)
    ref_axes = np.asarray(ref_axes, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if not (len(actual_axes) == len(ref_axes) == len(angles)):
        raise DomainError("trace arrays must have equal length")
    dots = np.einsum("tij,tij->tj", actual_axes, ref_axes)
    actual = np.arccos(np.clip(dots, -1.0, 1.0))
    excess = np.maximum(0.0, (actual - angles) / angles)
    return float(excess.sum() / (3 * len(angles)))


def run(cfg, model, cones):
    """Deterministic rollout of the full scenario described by cfg."""
    filter_cfg = cfg.filter_config()
    state = SimState(r_ref=cfg.initial_ref.copy(), r_exc=cfg.initial_exc.copy(),
                     t=0.0, speed_scale=cfg.speed_scale, filter_on=cfg.filter_on)
    n_steps = int(np.floor(cfg.duration / cfg.dt))
    records = []
    for k in range(n_steps + 1):
        state.t = k * cfg.dt
        u_ext = smooth_step(state.t, cfg.perturbation)
        next_state, record = step(state, model, cones, filter_cfg, u_ext)
        records.append(record)
        if k < n_steps:
            state = next_state
    final_error = so3.geodesic_distance(records[-1].r_exc, model.goal)
    ref_error = so3.geodesic_distance(records[-1].r_ref, model.goal)
    h_min = min(float(r.h.min()) for r in records)
    value = nacv(np.stack([r.r_exc for r in records]),
                 np.stack([r.r_ref for r in records]),
                 np.stack([r.theta for r in records]))
    summary = {"nacv": value,
               "final_error": float(final_error),
               "final_ref_error": float(ref_error),
               "max_violation": max(0.0, -h_min),
               "min_h": h_min,
               "converged": bool(final_error < CONVERGED_TOL),
               "feasible_fraction": float(np.mean([r.feasible for r in records]))}
    return SimTrace(records=records, goal=model.goal.copy(), summary=summary)


def _row(record):
    qref = so3.matrix_to_quat(record.r_ref)
    qexc = so3.matrix_to_quat(record.r_exc)
    vals = ([record.t] + list(qref) + list(qexc) + list(record.w_ref)
            + list(record.u0) + list(record.u_star) + list(record.h)
            + list(record.theta))
    return [format(v, ".17g") for v in vals] + [str(int(record.feasible))]


def write_csv(trace, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for record in trace.records:
            writer.writerow(_row(record))


def trace_to_dict(trace):
    records = []
    for r in trace.records:
        records.append({"t": r.t,
                        "q_ref": list(so3.matrix_to_quat(r.r_ref)),
                        "q_exc": list(so3.matrix_to_quat(r.r_exc)),
                        "w_ref": list(r.w_ref),
                        "u0": list(r.u0),
                        "u_star": list(r.u_star),
                        "h": list(r.h),
                        "theta": list(r.theta),
                        "active_set": list(r.active_set),
                        "feasible": bool(r.feasible)})
    return {"records": records,
            "goal": list(so3.matrix_to_quat(trace.goal)),
            "summary": trace.summary}


def write_json(trace, path):
    with open(path, "w") as handle:
        json.dump(trace_to_dict(trace), handle)
