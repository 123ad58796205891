"""Live game service: settings, avatar assembly, wire-frame parsing,
the transport-free session state machine, and WebSocket round trips."""

import json

import numpy as np
import pytest
from starlette.testclient import TestClient

from mirrorgame.errors import ConfigSchemaError
from mirrorgame.qlearning import ActionSet, AgentConfig, QTable, StateGrid, save_agent
from mirrorgame.service import (
    _TRIAL_NAME_RE,
    LiveSession,
    ServiceSettings,
    _frame,
    _Mailbox,
    _parse_frame,
    build_app,
    build_avatar,
)
from mirrorgame.session import load_record
from mirrorgame.virtual_trainer import VirtualTrainer


class StubAvatar:
    """Protocol stub that records what the engine passes it."""

    def __init__(self, x0=0.4):
        self.position = x0
        self.velocity = 0.0
        self.calls = []

    def reset(self, seed=None):
        self.calls = []

    def tick(self, partner_pos, partner_vel=0.0, t=0.0):
        self.calls.append((partner_pos, partner_vel, t))
        self.position = 0.5 * self.position + 0.5 * partner_pos
        self.velocity = 0.1
        return self.position, self.velocity


def settings(**kw):
    base = dict(avatar="vt", role="follower", ims_model="unused.json",
                duration_s=2.0, tick_hz=10.0)
    base.update(kw)
    return ServiceSettings(**base)


class TestSettings:
    def test_validation(self):
        with pytest.raises(ConfigSchemaError):
            ServiceSettings(avatar="ai")
        with pytest.raises(ConfigSchemaError):
            ServiceSettings(role="coach")
        with pytest.raises(ConfigSchemaError):
            ServiceSettings(duration_s=0.0)

    def test_tick_count(self):
        assert settings(duration_s=2.5, tick_hz=10.0).n_ticks == 25


class TestBuildAvatar:
    def test_vt_needs_model(self):
        with pytest.raises(ConfigSchemaError):
            build_avatar(ServiceSettings(avatar="vt"))

    def test_vt_built_with_role_preset(self, model_file):
        s = settings(ims_model=str(model_file), role="follower")
        avatar = build_avatar(s)
        assert isinstance(avatar, VirtualTrainer)
        assert avatar.cfg.theta_p == 0.9
        assert avatar.cfg.tick_hz == 10.0

    def test_cp_needs_qtable(self):
        with pytest.raises(ConfigSchemaError):
            build_avatar(ServiceSettings(avatar="cp"))

    def test_cp_rate_must_match(self, tmp_path):
        cfg = AgentConfig(grid=StateGrid(pos_bins=3, vel_bins=3, v_max=1.0),
                          actions=ActionSet.uniform(2.0, 3), tick_hz=20.0)
        table = QTable.initialize(cfg.grid, cfg.actions, seed=0)
        path = tmp_path / "cp.qt"
        save_agent(path, table, cfg)
        with pytest.raises(ConfigSchemaError):
            build_avatar(ServiceSettings(avatar="cp", qtable=str(path),
                                         tick_hz=10.0))

    def test_cp_built(self, tmp_path):
        cfg = AgentConfig(grid=StateGrid(pos_bins=3, vel_bins=3, v_max=1.0),
                          actions=ActionSet.uniform(2.0, 3), tick_hz=10.0)
        table = QTable.initialize(cfg.grid, cfg.actions, seed=0)
        path = tmp_path / "cp.qt"
        save_agent(path, table, cfg)
        avatar = build_avatar(ServiceSettings(avatar="cp", qtable=str(path)))
        x, v = avatar.tick(0.6, 0.0)
        assert 0.0 <= x <= 1.0


class TestWireFrames:
    def test_round_trip(self):
        raw = _frame("tick_in", {"t": 0.1, "x": 0.5})
        doc = _parse_frame(raw)
        assert doc == {"kind": "tick_in", "payload": {"t": 0.1, "x": 0.5}}

    def test_rejects_non_json(self):
        with pytest.raises(ConfigSchemaError):
            _parse_frame("{nope")

    def test_rejects_unknown_kind(self):
        with pytest.raises(ConfigSchemaError):
            _parse_frame(json.dumps({"kind": "jump"}))

    def test_tick_in_payload_checked(self):
        with pytest.raises(ConfigSchemaError):
            _parse_frame(json.dumps({"kind": "tick_in", "payload": {"t": 0.1}}))
        with pytest.raises(ConfigSchemaError):
            _parse_frame(json.dumps(
                {"kind": "tick_in", "payload": {"t": 0.1, "x": 0.5, "y": 1}}))

    def test_trial_name_pattern(self):
        assert _TRIAL_NAME_RE.match("live-1-001_human_avatar-vt.trial.json")
        assert not _TRIAL_NAME_RE.match("../../etc/passwd")
        assert not _TRIAL_NAME_RE.match(".hidden.trial.json")
        assert not _TRIAL_NAME_RE.match("plain.json")


class TestLiveSession:
    def drive(self, n, xs=None, avatar=None, s=None):
        s = s or settings()
        avatar = avatar or StubAvatar()
        live = LiveSession(s, avatar, "t-1")
        box = _Mailbox()
        outs = []
        for k in range(n):
            if xs is not None:
                box.put(xs[k], now=float(k) / s.tick_hz)
            outs.append(live.tick(box, now=float(k) / s.tick_hz))
        return live, avatar, outs

    def test_avatar_sees_previous_human_position(self):
        xs = [0.5, 0.6, 0.7, 0.8]
        _, avatar, outs = self.drive(4, xs=xs)
        # tick k>0 passes the human sample from tick k-1
        assert [c[0] for c in avatar.calls] == [0.5, 0.6, 0.7]
        assert [o["k"] for o in outs] == [0, 1, 2, 3]

    def test_velocity_estimate_is_backward_difference(self):
        xs = [0.5, 0.6, 0.8, 0.7]
        _, avatar, _ = self.drive(4, xs=xs)
        vels = [c[1] for c in avatar.calls]
        assert vels[0] == pytest.approx(0.0)  # first step has one sample
        assert vels[1] == pytest.approx((0.6 - 0.5) * 10.0)
        assert vels[2] == pytest.approx((0.8 - 0.6) * 10.0)

    def test_clamping_flagged_and_applied(self):
        _, _, outs = self.drive(2, xs=[1.4, 0.5])
        assert outs[0]["clamped"] is True
        assert outs[0]["x_h"] == 1.0
        assert outs[1]["clamped"] is False

    def test_stale_when_no_fresh_input(self):
        s = settings()
        live = LiveSession(s, StubAvatar(), "t-1")
        box = _Mailbox()  # never receives input
        first = live.tick(box, now=0.0)
        later = live.tick(box, now=5.0)
        assert first["stale"] is False  # tick 0 is never stale
        assert later["stale"] is True
        assert live.stale == [1]

    def test_fresh_input_not_stale(self):
        s = settings()
        live = LiveSession(s, StubAvatar(), "t-1")
        box = _Mailbox()
        box.put(0.5, now=0.0)
        live.tick(box, now=0.05)
        box.put(0.6, now=0.1)
        out = live.tick(box, now=0.15)
        assert out["stale"] is False

    def test_live_cv_warms_up(self):
        xs = list(0.5 + 0.3 * np.sin(2 * np.pi * 0.5 * np.arange(40) / 10.0))
        _, _, outs = self.drive(40, xs=xs, s=settings(duration_s=5.0))
        assert outs[0]["live_cv"] is None  # below the sample floor
        assert outs[-1]["live_cv"] is not None
        assert 0.0 <= outs[-1]["live_cv"] <= 1.0

    def test_record_contents(self):
        xs = list(0.5 + 0.3 * np.sin(2 * np.pi * 0.5 * np.arange(25) / 10.0))
        live, _, _ = self.drive(25, xs=xs, s=settings(duration_s=5.0))
        rec = live.record(incomplete=False)
        assert rec.mode == "LF"
        assert [p["player_id"] for p in rec.players] == ["human", "avatar-vt"]
        # avatar plays follower, so the human led
        assert rec.players[0]["role"] == "leader"
        assert len(rec.positions["human"]) == 25
        assert len(rec.flags["live_cv"]) == 25
        assert rec.incomplete is False
        assert rec.metrics["rms"] is not None

    def test_record_when_cut_short(self):
        live, _, _ = self.drive(2, xs=[0.5, 0.6])
        rec = live.record(incomplete=True)
        assert rec.incomplete is True
        assert len(rec.positions["human"]) == 2
        assert rec.metrics["emd"] is None  # too short for the battery


@pytest.fixture
def live_app(model_file, tmp_path):
    s = ServiceSettings(avatar="vt", role="follower",
                        ims_model=str(model_file), duration_s=0.5,
                        tick_hz=10.0, out_dir=str(tmp_path / "trials"),
                        session_prefix="t")
    return build_app(s), s


class TestWebSocket:
    def test_healthz(self, live_app):
        app, _ = live_app
        client = TestClient(app)
        doc = client.get("/healthz").json()
        assert doc == {"status": "ok", "busy": False}

    def test_full_session(self, live_app, tmp_path):
        app, s = live_app
        client = TestClient(app)
        with client.websocket_connect("/session") as ws:
            ws.send_text(_frame("hello", {"client": "pytest"}))
            start = json.loads(ws.receive_text())
            assert start["kind"] == "start"
            assert start["payload"]["n_ticks"] == 5
            ticks = []
            ws.send_text(_frame("tick_in", {"t": 0.0, "x": 0.3}))
            for _ in range(s.n_ticks + 1):
                frame = json.loads(ws.receive_text())
                assert frame["kind"] == "tick_out"
                ticks.append(frame["payload"])
                ws.send_text(_frame("tick_in", {"t": frame["payload"]["t"],
                                                "x": 0.3}))
            end = json.loads(ws.receive_text())
            assert end["kind"] == "end"
            trial_id = end["payload"]["trial_id"]
        assert [p["k"] for p in ticks] == list(range(6))
        # the record is downloadable over http
        resp = client.get(f"/trials/{trial_id}")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["incomplete"] is False
        assert len(doc["positions"]["human"]) == 6

    def test_record_saved_even_on_disconnect(self, live_app):
        app, s = live_app
        client = TestClient(app)
        with client.websocket_connect("/session") as ws:
            ws.send_text(_frame("hello"))
            json.loads(ws.receive_text())  # start
            ws.send_text(_frame("tick_in", {"t": 0.0, "x": 0.4}))
            json.loads(ws.receive_text())  # one tick_out
        # leaving the context closes the socket mid-session
        import glob
        import os
        import time

        path = None
        for _ in range(50):
            found = glob.glob(os.path.join(s.out_dir, "*.trial.json"))
            if found:
                path = found[0]
                break
            time.sleep(0.05)
        assert path is not None
        rec = load_record(path)
        assert rec.incomplete is True

    def test_non_hello_first_frame_is_an_error(self, live_app):
        app, _ = live_app
        client = TestClient(app)
        with client.websocket_connect("/session") as ws:
            ws.send_text(_frame("tick_in", {"t": 0.0, "x": 0.5}))
            frame = json.loads(ws.receive_text())
            assert frame["kind"] == "error"

    def test_garbage_first_frame_is_an_error(self, live_app):
        app, _ = live_app
        client = TestClient(app)
        with client.websocket_connect("/session") as ws:
            ws.send_text("{nope")
            frame = json.loads(ws.receive_text())
            assert frame["kind"] == "error"

    def test_second_client_refused_while_busy(self, live_app):
        app, _ = live_app
        client = TestClient(app)
        with client.websocket_connect("/session") as ws1:
            ws1.send_text(_frame("hello"))
            json.loads(ws1.receive_text())  # start; session is running
            with client.websocket_connect("/session") as ws2:
                frame = json.loads(ws2.receive_text())
                assert frame["kind"] == "error"
                assert "busy" in frame["payload"]["message"]

    def test_trial_download_guards(self, live_app):
        app, _ = live_app
        client = TestClient(app)
        assert client.get("/trials/.hidden.trial.json").status_code == 400
        assert client.get("/trials/unknown.trial.json").status_code == 404
