"""Session service: tick-by-tick simulation with live operator input.

Each session owns an asynchronous tick loop that is the only writer of
its state.  Client input lands in a mailbox and is applied at the next
tick boundary, clamped to the input box; input older than a hold
window fades to zero so a stalled client cannot leave a stale command
running.  Every applied input is logged per tick, which makes any
session replayable offline through the same stepping code, bit for bit.
"""

from __future__ import annotations

import asyncio
import math
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, field_validator

from . import __version__, filter as filter_mod, simulate, so3
from .errors import SafeflowError, UnknownModel, UnknownSession

# input holds full strength for this long, then fades linearly to zero
STALENESS_HOLD = 0.2
STALENESS_FADE = 0.1


class SessionRequest(BaseModel):
    model: str
    dt: float = 0.003
    filter_on: bool = True
    speed_scale: float = 1.0
    alpha_gain: float = 10.0
    u_max: float = 5.0
    pace: float | None = None  # wall seconds per tick; None tracks dt, 0 free-runs

    @field_validator("dt", "alpha_gain", "u_max")
    @classmethod
    def _positive(cls, value):
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("speed_scale")
    @classmethod
    def _nonnegative(cls, value):
        if value < 0:
            raise ValueError("must be nonnegative")
        return value


class InputRequest(BaseModel):
    u: list[float]
    speed_scale: float | None = None
    filter_on: bool | None = None

    @field_validator("u")
    @classmethod
    def _finite_triple(cls, value):
        if len(value) != 3 or not all(math.isfinite(v) for v in value):
            raise ValueError("u must be three finite numbers")
        return value

    @field_validator("speed_scale")
    @classmethod
    def _valid_scale(cls, value):
        if value is not None and (not math.isfinite(value) or value < 0):
            raise ValueError("speed_scale must be finite and nonnegative")
        return value


@dataclass
class Session:
    sid: str
    model_id: str
    bundle: object
    state: simulate.SimState
    filter_cfg: filter_mod.FilterConfig
    pace: float
    tick: int = 0
    running: bool = False
    pending: InputRequest | None = None
    u_h: np.ndarray = field(default_factory=lambda: np.zeros(3))
    u_received_t: float = -math.inf
    clamped_last: bool = False
    ticks_log: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    subscribers: list = field(default_factory=list)
    task: asyncio.Task | None = None
    initial_ref: np.ndarray | None = None
    initial_exc: np.ndarray | None = None

    def __post_init__(self):
        if self.initial_ref is None:
            self.initial_ref = self.state.r_ref.copy()
        if self.initial_exc is None:
            self.initial_exc = self.state.r_exc.copy()

    def snapshot(self):
        return {"session": self.sid,
                "model": self.model_id,
                "tick": self.tick,
                "t": self.state.t,
                "running": self.running,
                "filter_on": self.state.filter_on,
                "speed_scale": self.state.speed_scale,
                "q_ref": list(so3.matrix_to_quat(self.state.r_ref)),
                "q_exc": list(so3.matrix_to_quat(self.state.r_exc))}


def _frame(tick, record):
    return {"tick": tick,
            "t": record.t,
            "q_ref": list(so3.matrix_to_quat(record.r_ref)),
            "q_exc": list(so3.matrix_to_quat(record.r_exc)),
            "theta": list(record.theta),
            "h": list(record.h),
            "u0": list(record.u0),
            "u_star": list(record.u_star),
            "active": [i in record.active_set for i in range(3)],
            "feasible": bool(record.feasible)}


def _staleness_factor(age):
    if age <= STALENESS_HOLD:
        return 1.0
    if age >= STALENESS_HOLD + STALENESS_FADE:
        return 0.0
    return (STALENESS_HOLD + STALENESS_FADE - age) / STALENESS_FADE


def _apply_pending(session):
    req = session.pending
    if req is None:
        return
    session.pending = None
    u = np.asarray(req.u, dtype=float)
    limit = session.filter_cfg.u_max
    session.clamped_last = bool(np.any(np.abs(u) > limit))
    session.u_h = np.clip(u, -limit, limit)
    session.u_received_t = session.state.t
    if req.speed_scale is not None:
        session.state.speed_scale = float(req.speed_scale)
    if req.filter_on is not None:
        session.state.filter_on = bool(req.filter_on)


def _tick_once(session):
    _apply_pending(session)
    age = session.state.t - session.u_received_t
    u_eff = session.u_h * _staleness_factor(age)
    next_state, record = simulate.step(session.state, session.bundle.model,
                                       session.bundle.cones, session.filter_cfg,
                                       u_eff)
    frame = _frame(session.tick, record)
    session.ticks_log.append({"u": u_eff.tolist(),
                              "speed_scale": session.state.speed_scale,
                              "filter_on": session.state.filter_on})
    session.frames.append(frame)
    session.state = next_state
    session.tick += 1
    for queue in list(session.subscribers):
        queue.put_nowait(frame)
    return frame


async def _run_loop(session):
    while session.running:
        _tick_once(session)
        await asyncio.sleep(session.pace)


def replay_log(log, bundle):
    """Re-run a session log offline; frames match the stream bitwise."""
    filter_cfg = filter_mod.FilterConfig(alpha_gain=log["alpha_gain"],
                                         u_max=log["u_max"], dt=log["dt"])
    state = simulate.SimState(r_ref=np.asarray(log["initial_ref"], dtype=float),
                              r_exc=np.asarray(log["initial_exc"], dtype=float),
                              t=0.0)
    frames = []
    for k, entry in enumerate(log["ticks"]):
        state.speed_scale = entry["speed_scale"]
        state.filter_on = entry["filter_on"]
        state, record = simulate.step(state, bundle.model, bundle.cones,
                                      filter_cfg, np.asarray(entry["u"], dtype=float))
        frames.append(_frame(k, record))
    return frames


def create_app(bundles, dt=0.003):
    """Service over a dict of model id -> loaded bundle."""
    app = FastAPI(title="safeflow teleoperation service", version=__version__)
    sessions: dict[str, Session] = {}
    counter = iter(range(1, 1 << 62))
    default_dt = dt

    def _get(sid) -> Session:
        if sid not in sessions:
            raise UnknownSession(f"unknown session {sid!r}")
        return sessions[sid]

    @app.exception_handler(SafeflowError)
    async def _safeflow_error(request, exc):
        status = 404 if isinstance(exc, (UnknownModel, UnknownSession)) else 400
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__,
                                     "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc):
        # the default handler echoes the offending value, which may be a
        # non-JSON float; report location and message only
        detail = [{"loc": [str(part) for part in err.get("loc", ())],
                   "msg": str(err.get("msg", ""))} for err in exc.errors()]
        return JSONResponse(status_code=422,
                            content={"error": "ValidationError",
                                     "detail": detail})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__,
                "models": sorted(bundles), "sessions": len(sessions)}

    @app.get("/models")
    async def models():
        out = []
        for name in sorted(bundles):
            bundle = bundles[name]
            out.append({"id": name,
                        "goal": list(so3.matrix_to_quat(bundle.model.goal)),
                        "distance_max": bundle.cones.angle_model.d_max,
                        "floor": bundle.cones.angle_floor})
        return {"models": out}

    @app.post("/sessions")
    async def create_session(req: SessionRequest):
        if req.model not in bundles:
            raise UnknownModel(f"unknown model {req.model!r}")
        bundle = bundles[req.model]
        sid = f"s{next(counter)}"
        dt_eff = req.dt if req.dt else default_dt
        state = simulate.SimState(r_ref=bundle.start.copy(),
                                  r_exc=bundle.start.copy(), t=0.0,
                                  speed_scale=req.speed_scale,
                                  filter_on=req.filter_on)
        cfg = filter_mod.FilterConfig(alpha_gain=req.alpha_gain,
                                      u_max=req.u_max, dt=dt_eff)
        pace = dt_eff if req.pace is None else req.pace
        sessions[sid] = Session(sid=sid, model_id=req.model, bundle=bundle,
                                state=state, filter_cfg=cfg, pace=pace)
        return sessions[sid].snapshot()

    @app.get("/sessions/{sid}")
    async def get_session(sid: str):
        return _get(sid).snapshot()

    @app.post("/sessions/{sid}/input")
    async def submit_input(sid: str, req: InputRequest):
        session = _get(sid)
        session.pending = req
        limit = session.filter_cfg.u_max
        u = np.clip(np.asarray(req.u, dtype=float), -limit, limit)
        return {"u_applied": u.tolist(),
                "clamped": bool(np.any(np.abs(np.asarray(req.u)) > limit)),
                "tick": session.tick}

    @app.post("/sessions/{sid}/start")
    async def start(sid: str):
        session = _get(sid)
        if not session.running:
            session.running = True
            session.task = asyncio.create_task(_run_loop(session))
        return session.snapshot()

    @app.post("/sessions/{sid}/pause")
    async def pause(sid: str):
        session = _get(sid)
        session.running = False
        if session.task is not None:
            await session.task
            session.task = None
        return session.snapshot()

    @app.post("/sessions/{sid}/reset")
    async def reset(sid: str):
        session = _get(sid)
        session.running = False
        if session.task is not None:
            await session.task
            session.task = None
        session.state = simulate.SimState(r_ref=session.initial_ref.copy(),
                                          r_exc=session.initial_exc.copy(), t=0.0,
                                          speed_scale=session.state.speed_scale,
                                          filter_on=session.state.filter_on)
        session.tick = 0
        session.pending = None
        session.u_h = np.zeros(3)
        session.u_received_t = -math.inf
        session.ticks_log = []
        session.frames = []
        return session.snapshot()

    @app.get("/sessions/{sid}/log")
    async def get_log(sid: str):
        session = _get(sid)
        return {"session": sid,
                "model": session.model_id,
                "dt": session.filter_cfg.dt,
                "alpha_gain": session.filter_cfg.alpha_gain,
                "u_max": session.filter_cfg.u_max,
                "initial_ref": session.initial_ref.tolist(),
                "initial_exc": session.initial_exc.tolist(),
                "ticks": list(session.ticks_log)}

    @app.websocket("/sessions/{sid}/stream")
    async def stream(websocket: WebSocket, sid: str):
        if sid not in sessions:
            await websocket.close(code=1008)
            return
        session = sessions[sid]
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        session.subscribers.append(queue)
        try:
            while True:
                frame = await queue.get()
                await websocket.send_json(frame)
        except Exception:
            pass
        finally:
            if queue in session.subscribers:
                session.subscribers.remove(queue)

    return app
