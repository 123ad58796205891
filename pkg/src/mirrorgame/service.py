"""WebSocket game service: a human plays the model avatar live.

One client connects to ``/session``, sends a hello, and then streams
its position with ``tick_in`` frames whenever it likes; the server owns
the clock, advancing the avatar at the fixed tick rate against the last
received human position (one tick behind, exactly like the offline
session engine) and emitting one ``tick_out`` frame per tick with both
positions and a trailing-window coordination readout. After the last
tick the full trial record is persisted and an ``end`` frame carries
the metrics and the record's download name.

Wire format: JSON text frames shaped ``{"kind": ..., "payload": {...}}``
with kinds hello, start, tick_in, tick_out, end, error. Every received
frame either updates the session state or draws an error frame.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import re
import time
from dataclasses import dataclass, replace

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from .controller import VtConfig, load_vt_config, role_preset
from .errors import ConfigSchemaError, DegenerateInputError
from .metrics.report import session_report
from .metrics.synchrony import windowed_cv
from .qlearning import CyberPlayer, load_agent
from .session import TrialRecord, save_record
from .signature import load_model
from .trajectory import Trajectory, resample
from .virtual_trainer import VirtualTrainer

logger = logging.getLogger(__name__)

WIRE_KINDS = ("hello", "start", "tick_in", "tick_out", "end", "error")

# seconds without fresh client input after which ticks are flagged stale
STALE_AFTER_S = 1.0
# trailing window for the live coordination readout
LIVE_CV_WINDOW_S = 10.0

_TICK_IN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["t", "x"],
    "properties": {"t": {"type": "number"}, "x": {"type": "number"}},
}

_FRAME_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(WIRE_KINDS)},
        "payload": {"type": "object"},
    },
}

_TRIAL_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*\.trial\.json$")


@dataclass
class ServiceSettings:
    """Configuration of one service process."""

    avatar: str = "vt"  # "vt" or "cp"
    role: str = "follower"  # the avatar's role
    ims_model: str | None = None
    vt_config: str | None = None
    qtable: str | None = None
    duration_s: float = 60.0
    tick_hz: float = 10.0
    analysis_rate_hz: float = 100.0
    out_dir: str = "."
    ui_dir: str | None = None
    avatar_seed: int = 0
    session_prefix: str = "live"
    hello_timeout_s: float = 30.0

    def __post_init__(self):
        if self.avatar not in ("vt", "cp"):
            raise ConfigSchemaError(f"avatar must be 'vt' or 'cp', got {self.avatar!r}")
        if self.role not in ("leader", "follower"):
            raise ConfigSchemaError(f"role must be leader/follower, got {self.role!r}")
        if self.duration_s <= 0 or self.tick_hz <= 0:
            raise ConfigSchemaError("duration_s and tick_hz must be > 0")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration_s * self.tick_hz))


def build_avatar(settings: ServiceSettings):
    """Instantiate the configured avatar player."""
    if settings.avatar == "vt":
        if not settings.ims_model:
            raise ConfigSchemaError("a vt avatar needs --ims-model")
        if settings.vt_config:
            cfg, model_path = load_vt_config(settings.vt_config)
            model_path = settings.ims_model or model_path
        else:
            from .hkb import HkbParams

            theta_p, omega = role_preset(settings.role)
            cfg = VtConfig(
                hkb=HkbParams(omega=omega), theta_p=theta_p, tick_hz=settings.tick_hz
            )
            model_path = settings.ims_model
        if cfg.tick_hz != settings.tick_hz:
            cfg = replace(cfg, tick_hz=settings.tick_hz)
        return VirtualTrainer(cfg, load_model(model_path), seed=settings.avatar_seed)
    if not settings.qtable:
        raise ConfigSchemaError("a cp avatar needs --qtable")
    table, agent_cfg, _meta = load_agent(settings.qtable)
    if agent_cfg.tick_hz != settings.tick_hz:
        raise ConfigSchemaError(
            f"qtable was trained at {agent_cfg.tick_hz} Hz, service runs {settings.tick_hz} Hz"
        )
    return CyberPlayer(table, agent_cfg)


def _frame(kind: str, payload: dict | None = None) -> str:
    return json.dumps({"kind": kind, "payload": payload or {}}, sort_keys=True)


def _parse_frame(raw: str) -> dict:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigSchemaError(f"frame is not JSON: {exc}") from exc
    if jsonschema is not None:
        try:
            jsonschema.validate(doc, _FRAME_SCHEMA)
            if doc["kind"] == "tick_in":
                jsonschema.validate(doc.get("payload", {}), _TICK_IN_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigSchemaError(f"bad frame: {exc.message}") from exc
    return doc


@dataclass
class _Mailbox:
    """Last-value-wins store for client input."""

    x: float = 0.5
    rx_monotonic: float | None = None
    closed: bool = False
    # an input error message set by the reader pump, or None
    fault: str | None = None
    fresh: int = 0

    def put(self, x: float, now: float) -> None:
        self.x = float(x)
        self.rx_monotonic = now
        self.fresh += 1


class LiveSession:
    """State machine for one connected client (transport-agnostic)."""

    def __init__(self, settings: ServiceSettings, avatar, session_id: str):
        self.settings = settings
        self.avatar = avatar
        self.session_id = session_id
        n = settings.n_ticks
        self.human = np.full(n + 1, np.nan)
        self.avatar_x = np.full(n + 1, np.nan)
        self.avatar_v = np.full(n + 1, np.nan)
        self.live_cv = np.full(n + 1, np.nan)
        self.clamped: list[int] = []
        self.stale: list[int] = []
        self.k = 0

    def start_payload(self) -> dict:
        s = self.settings
        return {
            "session_id": self.session_id,
            "duration_s": s.duration_s,
            "tick_hz": s.tick_hz,
            "n_ticks": s.n_ticks,
            "avatar": s.avatar,
            "avatar_role": s.role,
        }

    def tick(self, mailbox: _Mailbox, now: float) -> dict:
        """Advance one tick; returns the tick_out payload."""
        s = self.settings
        k = self.k
        x = mailbox.x
        clamped = not (0.0 <= x <= 1.0)
        if clamped:
            x = min(max(x, 0.0), 1.0)
            self.clamped.append(k)
        is_stale = mailbox.rx_monotonic is None or (now - mailbox.rx_monotonic) > STALE_AFTER_S
        if is_stale and k > 0:
            self.stale.append(k)
        self.human[k] = x

        if k == 0:
            xa, va = self.avatar.position, self.avatar.velocity
        else:
            prev = self.human[k - 1]
            prev2 = self.human[k - 2] if k >= 2 else prev
            est_vel = (prev - prev2) * s.tick_hz
            xa, va = self.avatar.tick(prev, est_vel, k / s.tick_hz)
        self.avatar_x[k] = xa
        self.avatar_v[k] = va

        cv = windowed_cv(
            self.human[: k + 1], self.avatar_x[: k + 1], s.tick_hz, LIVE_CV_WINDOW_S
        )
        self.live_cv[k] = cv
        self.k += 1
        return {
            "k": k,
            "t": k / s.tick_hz,
            "x_h": float(x),
            "x_a": float(xa),
            "v_a": float(va),
            "live_cv": None if np.isnan(cv) else float(cv),
            "stale": bool(is_stale and k > 0),
            "clamped": bool(clamped),
        }

    def record(self, incomplete: bool) -> TrialRecord:
        s = self.settings
        k = self.k
        human = self.human[:k]
        avatar = self.avatar_x[:k]
        human_role = "follower" if s.role == "leader" else "leader"
        avatar_id = f"avatar-{s.avatar}"
        metrics = {
            "emd": None, "cv": None, "rms": None,
            "dphi_mean": None, "dphi_std": None, "n_segments": 0,
        }
        if k >= 4:
            try:
                a = Trajectory(human, s.tick_hz)
                b = Trajectory(avatar, s.tick_hz)
                if s.analysis_rate_hz != s.tick_hz:
                    a = resample(a, s.analysis_rate_hz)
                    b = resample(b, s.analysis_rate_hz)
                metrics = session_report(a, b)
            except DegenerateInputError:
                pass
        return TrialRecord(
            session_id=self.session_id,
            mode="LF",
            duration_s=s.duration_s,
            tick_hz=s.tick_hz,
            analysis_rate_hz=s.analysis_rate_hz,
            seed=s.avatar_seed,
            players=[
                {"player_id": "human", "kind": "live", "role": human_role},
                {"player_id": avatar_id, "kind": s.avatar, "role": s.role},
            ],
            t=[i / s.tick_hz for i in range(k)],
            positions={
                "human": [float(v) for v in human],
                avatar_id: [float(v) for v in avatar],
            },
            metrics=metrics,
            incomplete=incomplete,
            flags={
                "human": {
                    "clamped": list(self.clamped),
                    "stale": list(self.stale),
                },
                "live_cv": [None if np.isnan(v) else float(v) for v in self.live_cv[:k]],
            },
        )


def build_app(settings: ServiceSettings):
    """Assemble the FastAPI application for one avatar."""
    os.makedirs(settings.out_dir, exist_ok=True)
    app = FastAPI(title="mirrorgame service")
    app.state.settings = settings
    app.state.busy = False
    app.state.session_count = 0

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "busy": app.state.busy}

    @app.get("/trials/{name}")
    async def get_trial(name: str):
        if not _TRIAL_NAME_RE.match(name):
            return JSONResponse({"error": "bad trial name"}, status_code=400)
        path = os.path.join(settings.out_dir, name)
        if not os.path.isfile(path):
            return JSONResponse({"error": "not found"}, status_code=404)
        return FileResponse(path, media_type="application/json")

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        if app.state.busy:
            await ws.send_text(_frame("error", {"message": "busy: a session is already running"}))
            await ws.close()
            return
        app.state.busy = True
        try:
            await _run_live_session(app, ws, WebSocketDisconnect)
        finally:
            app.state.busy = False

    if settings.ui_dir and os.path.isdir(settings.ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=settings.ui_dir, html=True), name="ui")

    return app


async def _run_live_session(app, ws, disconnect_exc) -> None:
    settings: ServiceSettings = app.state.settings
    mailbox = _Mailbox()

    # handshake: the first frame must be a hello
    try:
        raw = await asyncio.wait_for(ws.receive_text(), timeout=settings.hello_timeout_s)
        doc = _parse_frame(raw)
        if doc["kind"] != "hello":
            raise ConfigSchemaError(f"expected hello, got {doc['kind']}")
    except asyncio.TimeoutError:
        await ws.send_text(_frame("error", {"message": "hello timed out"}))
        await ws.close()
        return
    except disconnect_exc:
        return
    except ConfigSchemaError as exc:
        await ws.send_text(_frame("error", {"message": str(exc)}))
        await ws.close()
        return

    app.state.session_count += 1
    session_id = f"{settings.session_prefix}-{int(time.time())}-{app.state.session_count:03d}"
    avatar = build_avatar(settings)
    live = LiveSession(settings, avatar, session_id)
    await ws.send_text(_frame("start", live.start_payload()))

    async def pump():
        while True:
            try:
                raw_in = await ws.receive_text()
            except disconnect_exc:
                mailbox.closed = True
                return
            try:
                frame = _parse_frame(raw_in)
            except ConfigSchemaError as exc:
                mailbox.fault = str(exc)
                return
            if frame["kind"] == "tick_in":
                mailbox.put(frame["payload"]["x"], time.monotonic())
            else:
                mailbox.fault = f"unexpected frame kind {frame['kind']} during play"
                return

    reader = asyncio.create_task(pump())
    loop = asyncio.get_running_loop()
    t_start = loop.time()
    dt = 1.0 / settings.tick_hz
    incomplete = True
    try:
        for k in range(settings.n_ticks + 1):
            delay = t_start + k * dt - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            if mailbox.fault is not None:
                await ws.send_text(_frame("error", {"message": mailbox.fault}))
                break
            if mailbox.closed:
                break
            payload = live.tick(mailbox, time.monotonic())
            try:
                await ws.send_text(_frame("tick_out", payload))
            except (disconnect_exc, RuntimeError):
                break
        else:
            incomplete = False
    finally:
        reader.cancel()
        rec = live.record(incomplete=incomplete)
        path = os.path.join(settings.out_dir, rec.basename())
        save_record(rec, path)
        logger.info("session %s saved to %s (incomplete=%s)", session_id, path, incomplete)
        try:
            if not incomplete:
                await ws.send_text(
                    _frame("end", {"trial_id": rec.basename(), "metrics": rec.metrics})
                )
            await ws.close()
        except (disconnect_exc, RuntimeError):
            pass


def serve(settings: ServiceSettings, bind: str = "127.0.0.1:8765") -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigSchemaError(f"--bind must look like HOST:PORT, got {bind!r}")
    uvicorn.run(build_app(settings), host=host, port=int(port), log_level="info")
