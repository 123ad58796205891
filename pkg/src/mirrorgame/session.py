"""Session orchestration: run trials, record them, batch them.

A session couples players on a fixed tick clock with a one-tick
information delay: at tick k each player reacts to the other's state
from tick k - 1, the same convention whether the players are scripted,
model-backed, or (in the live service) human. Records are plain JSON
and byte-deterministic for a given configuration.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigSchemaError, DegenerateInputError
from .metrics.report import session_report
from .players import build_player
from .trajectory import Trajectory, resample
from .validation import check_int, check_positive, spawn_seed

MODES = ("LF", "SC")


@dataclass(frozen=True)
class PlayerSpec:
    """Declarative player description inside a session config."""

    kind: str
    role: str
    player_id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.player_id:
            raise ConfigSchemaError("player_id must be non-empty")
        if self.role not in ("leader", "follower", "solo"):
            raise ConfigSchemaError(
                f"role must be leader/follower/solo, got {self.role!r}"
            )


@dataclass(frozen=True)
class SessionConfig:
    """One session: mode, clocks, players, seed."""

    mode: str
    duration_s: float
    players: tuple
    seed: int
    tick_hz: float = 10.0
    analysis_rate_hz: float = 100.0
    session_id: str = "session"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigSchemaError(f"mode must be one of {MODES}, got {self.mode!r}")
        check_positive(self.duration_s, "duration_s")
        check_positive(self.tick_hz, "tick_hz")
        check_positive(self.analysis_rate_hz, "analysis_rate_hz")
        check_int(self.seed, "seed")
        players = tuple(self.players)
        if self.mode == "LF":
            roles = sorted(p.role for p in players)
            if len(players) != 2 or roles != ["follower", "leader"]:
                raise ConfigSchemaError("LF mode needs exactly one leader and one follower")
        else:
            if len(players) != 1 or players[0].role != "solo":
                raise ConfigSchemaError("SC mode needs exactly one solo player")
        ids = [p.player_id for p in players]
        if len(set(ids)) != len(ids):
            raise ConfigSchemaError(f"player ids must be distinct, got {ids}")
        object.__setattr__(self, "players", players)

    @property
    def n_ticks(self) -> int:
        n = int(round(self.duration_s * self.tick_hz))
        if n < 1:
            raise DegenerateInputError(
                f"duration {self.duration_s} s yields no ticks at {self.tick_hz} Hz"
            )
        return n


@dataclass
class TrialRecord:
    """Everything one session produced.

    positions maps player_id to the tick-grid position samples
    (n_ticks + 1 values including the initial state). flags carries
    per-player lists of tick indices where live input was clamped or
    stale; engine-run sessions leave them empty.
    """

    session_id: str
    mode: str
    duration_s: float
    tick_hz: float
    analysis_rate_hz: float
    seed: int
    players: list
    t: list
    positions: dict
    metrics: dict
    incomplete: bool = False
    flags: dict = field(default_factory=dict)

    def trajectory(self, player_id: str) -> Trajectory:
        return Trajectory(np.asarray(self.positions[player_id]), self.tick_hz)

    def basename(self) -> str:
        ids = "_".join(p["player_id"] for p in self.players)
        return f"{self.session_id}_{ids}.trial.json"


def run_session(cfg: SessionConfig, registry: dict | None = None) -> TrialRecord:
    """Play one session to completion and compute its metric battery.

    In LF mode both players advance simultaneously off each other's
    previous position (one-tick delay); metrics are computed between the
    two players in their listed order after resampling to the analysis
    rate, so a positive mean relative phase means the first-listed
    player leads. In SC mode the single player runs with its own
    position as the partner reference.
    """
    n_ticks = cfg.n_ticks
    players = [
        build_player(p.kind, p.params, int(spawn_seed(cfg.seed, i).generate_state(1, dtype=np.uint64)[0]), registry)
        for i, p in enumerate(cfg.players)
    ]
    for p in players:
        p.reset()

    times = np.arange(n_ticks + 1) / cfg.tick_hz
    series = [np.empty(n_ticks + 1) for _ in players]
    for arr, pl in zip(series, players):
        arr[0] = pl.position

    if cfg.mode == "LF":
        a, b = players
        va, vb = a.velocity, b.velocity
        for k in range(1, n_ticks + 1):
            pa, pb = series[0][k - 1], series[1][k - 1]
            va_prev, vb_prev = va, vb
            xa, va = a.tick(pb, vb_prev, times[k])
            xb, vb = b.tick(pa, va_prev, times[k])
            series[0][k] = xa
            series[1][k] = xb
    else:
        (solo,) = players
        for k in range(1, n_ticks + 1):
            x, _ = solo.tick(series[0][k - 1], 0.0, times[k])
            series[0][k] = x

    trajs = [Trajectory(arr, cfg.tick_hz) for arr in series]
    up = [
        tr if cfg.analysis_rate_hz == cfg.tick_hz else resample(tr, cfg.analysis_rate_hz)
        for tr in trajs
    ]
    metrics = session_report(*up) if cfg.mode == "LF" else session_report(up[0])

    return TrialRecord(
        session_id=cfg.session_id,
        mode=cfg.mode,
        duration_s=cfg.duration_s,
        tick_hz=cfg.tick_hz,
        analysis_rate_hz=cfg.analysis_rate_hz,
        seed=cfg.seed,
        players=[
            {"player_id": p.player_id, "kind": p.kind, "role": p.role}
            for p in cfg.players
        ],
        t=[float(v) for v in times],
        positions={
            p.player_id: [float(v) for v in arr]
            for p, arr in zip(cfg.players, series)
        },
        metrics=metrics,
    )


def save_record(rec: TrialRecord, path: str | os.PathLike) -> None:
    """Write a trial record as deterministic JSON."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(asdict(rec), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_record(path: str | os.PathLike) -> TrialRecord:
    """Read a trial record written by :func:`save_record`."""
    try:
        with open(path, "r", encoding="ascii") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DegenerateInputError(f"cannot read trial record {path}: {exc}") from exc
    try:
        return TrialRecord(
            session_id=doc["session_id"],
            mode=doc["mode"],
            duration_s=float(doc["duration_s"]),
            tick_hz=float(doc["tick_hz"]),
            analysis_rate_hz=float(doc["analysis_rate_hz"]),
            seed=int(doc["seed"]),
            players=list(doc["players"]),
            t=list(doc["t"]),
            positions=dict(doc["positions"]),
            metrics=dict(doc["metrics"]),
            incomplete=bool(doc.get("incomplete", False)),
            flags=dict(doc.get("flags", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DegenerateInputError(f"trial record {path} is malformed: {exc}") from exc


def _run_indexed(args) -> TrialRecord:
    cfg, out_dir = args
    rec = run_session(cfg)
    if out_dir is not None:
        save_record(rec, os.path.join(out_dir, rec.basename()))
    return rec


def run_batch(
    cfg: SessionConfig,
    n_sessions: int,
    out_dir: str | os.PathLike | None = None,
    jobs: int = 1,
) -> list[TrialRecord]:
    """Run n structurally identical sessions with derived seeds.

    Session i gets seed ``spawn(cfg.seed, i)`` and id
    ``{cfg.session_id}-{i:04d}``; results are independent of the job
    count and ordered by index. Records are optionally written to
    ``out_dir`` as they complete.
    """
    n_sessions = check_int(n_sessions, "n_sessions", 1)
    jobs = check_int(jobs, "jobs", 1)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    configs = []
    for i in range(n_sessions):
        child_seed = int(spawn_seed(cfg.seed, i, 9).generate_state(1, dtype=np.uint64)[0])
        configs.append(
            (
                SessionConfig(
                    mode=cfg.mode,
                    duration_s=cfg.duration_s,
                    players=cfg.players,
                    seed=child_seed,
                    tick_hz=cfg.tick_hz,
                    analysis_rate_hz=cfg.analysis_rate_hz,
                    session_id=f"{cfg.session_id}-{i:04d}",
                ),
                os.fspath(out_dir) if out_dir is not None else None,
            )
        )
    if jobs == 1:
        return [_run_indexed(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_indexed, configs))
