"""Command line front end.

Subcommands cover the whole workflow: train a motor signature model
from recorded trials (train-ims), sample new motion from it
(synthesize), run offline sessions between any players (play), train
the Q-learning cyber player (train-cp), aggregate recorded sessions
into tables and figures (evaluate), and host the live WebSocket game
(serve).

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 config
schema violation. Every artifact-producing run writes a manifest next
to its outputs.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from .errors import (
    ConfigSchemaError,
    DegenerateInputError,
    MirrorGameError,
    NumericBlowupError,
)
from .manifest import write_manifest
from .session import PlayerSpec, SessionConfig, run_batch, run_session, save_record
from .spectral import FrameSpec
from .trajectory import load_csv, save_csv
from .validation import spawn_seed

_ID_PATTERN = "^[A-Za-z0-9][A-Za-z0-9_-]*$"

PLAY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mode", "duration_s", "seed", "players"],
    "properties": {
        "mode": {"enum": ["LF", "SC"]},
        "duration_s": {"type": "number", "exclusiveMinimum": 0},
        "tick_hz": {"type": "number", "exclusiveMinimum": 0},
        "analysis_rate_hz": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "session_id": {"type": "string", "pattern": _ID_PATTERN},
        "sessions": {"type": "integer", "minimum": 1},
        "players": {
            "type": "array",
            "minItems": 1,
            "maxItems": 2,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind", "role", "id"],
                "properties": {
                    "kind": {
                        "enum": ["scripted", "playback", "virtual_trainer", "cyber_player"]
                    },
                    "role": {"enum": ["leader", "follower", "solo"]},
                    "id": {"type": "string", "pattern": _ID_PATTERN},
                    "params": {"type": "object"},
                },
            },
        },
    },
}

_VT_REF_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "config": {"type": "string"},
        "inline": {"type": "object"},
        "ims_model": {"type": "string"},
        "role": {"enum": ["leader", "follower"]},
        "seed": {"type": "integer"},
    },
}

TRAIN_CP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["seed", "n_trials", "target", "partners"],
    "properties": {
        "seed": {"type": "integer"},
        "n_trials": {"type": "integer", "minimum": 1},
        "trial_s": {"type": "number", "exclusiveMinimum": 0},
        "role": {"enum": ["leader", "follower"]},
        "agent": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pos_bins": {"type": "integer", "minimum": 2},
                "vel_bins": {"type": "integer", "minimum": 3},
                "v_max": {"type": "number", "exclusiveMinimum": 0},
                "u_max": {"type": "number", "exclusiveMinimum": 0},
                "n_actions": {"type": "integer", "minimum": 3},
                "learn_rate": {"type": "number", "minimum": 0, "maximum": 1},
                "discount": {"type": "number", "minimum": 0, "maximum": 1},
                "eps0": {"type": "number", "minimum": 0, "maximum": 1},
                "eps_decay": {"type": "number", "exclusiveMinimum": 0},
                "eta_u": {"type": "number", "minimum": 0},
                "tick_hz": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "target": _VT_REF_SCHEMA,
        "partners": {"type": "array", "minItems": 1, "items": _VT_REF_SCHEMA},
    },
}

_PATH_KEYS = ("config", "csv", "qtable", "ims_model")


def _validate(doc, schema, what: str) -> None:
    import jsonschema

    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigSchemaError(f"bad {what}: {exc.message}") from exc


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise DegenerateInputError(f"{what} {path} does not exist") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise DegenerateInputError(f"cannot read {what} {path}: {exc}") from exc


def _resolve_paths(params: dict, base_dir: str) -> dict:
    out = dict(params)
    for key in _PATH_KEYS:
        v = out.get(key)
        if isinstance(v, str) and not os.path.isabs(v):
            out[key] = os.path.join(base_dir, v)
    return out


def cmd_train_ims(ns) -> int:
    from .signature import save_model, train_signature_model
    from .vq import distortion as vq_distortion
    from .spectral import stft
    from .trajectory import resample

    paths = []
    if ns.trial_dir:
        paths.extend(sorted(glob.glob(os.path.join(ns.trial_dir, "*.csv"))))
    paths.extend(ns.trial or [])
    if not paths:
        raise DegenerateInputError("no trial CSV files found; use --trial-dir or --trial")
    trials = [load_csv(p) for p in paths]

    spec = FrameSpec(ns.window, ns.hop)
    model = train_signature_model(
        trials, n_levels=ns.levels, frame_spec=spec, rate_hz=ns.rate_hz, seed=ns.seed
    )
    save_model(model, ns.out)

    pooled = np.vstack(
        [
            stft(tr if tr.rate_hz == ns.rate_hz else resample(tr, ns.rate_hz), spec)
            for tr in trials
        ]
    )
    dist = vq_distortion(pooled, model.codebook)
    write_manifest(
        ns.out + ".manifest.json",
        "train-ims",
        {
            "trials": [os.path.basename(p) for p in paths],
            "levels": ns.levels,
            "window": ns.window,
            "hop": ns.hop,
            "rate_hz": ns.rate_hz,
        },
        ns.seed,
        [ns.out],
    )
    print(
        f"trained signature model: {len(trials)} trials, {pooled.shape[0]} frames, "
        f"{model.n_levels} levels, distortion {dist:.6g} -> {ns.out}"
    )
    return 0


def cmd_synthesize(ns) -> int:
    from .signature import load_model, synthesize

    model = load_model(ns.model)
    os.makedirs(ns.out_dir, exist_ok=True)
    outputs = []
    for i in range(ns.n):
        tr = synthesize(model, ns.duration_s, spawn_seed(ns.seed, i))
        path = os.path.join(ns.out_dir, f"synth-{i:03d}.csv")
        save_csv(tr, path)
        outputs.append(path)
    write_manifest(
        os.path.join(ns.out_dir, "manifest.json"),
        "synthesize",
        {"model": ns.model, "duration_s": ns.duration_s, "n": ns.n},
        ns.seed,
        outputs,
    )
    print(f"synthesized {ns.n} trajectories of {ns.duration_s} s -> {ns.out_dir}")
    return 0


def _session_config_from_doc(doc: dict, base_dir: str) -> tuple[SessionConfig, int]:
    _validate(doc, PLAY_SCHEMA, "session config")
    players = tuple(
        PlayerSpec(
            kind=p["kind"],
            role=p["role"],
            player_id=p["id"],
            params=_resolve_paths(p.get("params", {}), base_dir),
        )
        for p in doc["players"]
    )
    cfg = SessionConfig(
        mode=doc["mode"],
        duration_s=doc["duration_s"],
        players=players,
        seed=doc["seed"],
        tick_hz=doc.get("tick_hz", 10.0),
        analysis_rate_hz=doc.get("analysis_rate_hz", 100.0),
        session_id=doc.get("session_id", "session"),
    )
    return cfg, int(doc.get("sessions", 1))


def cmd_play(ns) -> int:
    doc = _load_json(ns.config, "session config")
    cfg, n_sessions = _session_config_from_doc(doc, os.path.dirname(os.path.abspath(ns.config)))
    os.makedirs(ns.out_dir, exist_ok=True)
    if n_sessions == 1:
        records = [run_session(cfg)]
        save_record(records[0], os.path.join(ns.out_dir, records[0].basename()))
    else:
        records = run_batch(cfg, n_sessions, out_dir=ns.out_dir, jobs=ns.jobs)
    outputs = [os.path.join(ns.out_dir, r.basename()) for r in records]
    write_manifest(
        os.path.join(ns.out_dir, "manifest.json"),
        "play",
        {"config": ns.config, "sessions": n_sessions, "jobs": ns.jobs},
        cfg.seed,
        outputs,
    )
    for r in records:
        m = r.metrics
        parts = [f"{r.session_id}:"]
        for key in ("emd", "cv", "rms"):
            v = m.get(key)
            parts.append(f"{key}={v:.4f}" if v is not None else f"{key}=n/a")
        print(" ".join(parts))
    return 0


def cmd_train_cp(ns) -> int:
    from .cp_training import train_cp
    from .players import build_player
    from .qlearning import ActionSet, AgentConfig, StateGrid, save_agent

    doc = _load_json(ns.config, "training config")
    _validate(doc, TRAIN_CP_SCHEMA, "training config")
    base_dir = os.path.dirname(os.path.abspath(ns.config))
    agent = doc.get("agent", {})
    cfg = AgentConfig(
        grid=StateGrid(
            agent.get("pos_bins", 15), agent.get("vel_bins", 15), agent.get("v_max", 1.5)
        ),
        actions=ActionSet.uniform(agent.get("u_max", 10.0), agent.get("n_actions", 9)),
        learn_rate=agent.get("learn_rate", 0.1),
        discount=agent.get("discount", 0.9),
        eps0=agent.get("eps0", 1.0),
        eps_decay=agent.get("eps_decay", 200_000.0),
        eta_u=agent.get("eta_u", 1e-4),
        tick_hz=agent.get("tick_hz", 10.0),
        seed=doc["seed"],
    )
    target = build_player("virtual_trainer", _resolve_paths(doc["target"], base_dir), 0)
    partners = [
        build_player("virtual_trainer", _resolve_paths(p, base_dir), 0)
        for p in doc["partners"]
    ]
    role = doc.get("role", "follower")
    table, log = train_cp(
        cfg,
        target,
        partners,
        n_trials=doc["n_trials"],
        trial_s=doc.get("trial_s", 60.0),
        role=role,
        checkpoint_path=ns.checkpoint,
        checkpoint_every=ns.checkpoint_every,
        resume=ns.resume,
        jobs=ns.jobs,
    )
    save_agent(ns.out, table, cfg, meta={"trained_trials": doc["n_trials"], "role": role})
    log_path = ns.log or (ns.out + ".log.csv")
    log.to_csv(log_path)
    write_manifest(
        ns.out + ".manifest.json",
        "train-cp",
        {"config": ns.config, "jobs": ns.jobs},
        doc["seed"],
        [ns.out, ns.out + ".json", log_path],
    )
    tail = log.rows[-1]
    print(
        f"trained cyber player on {doc['n_trials']} trials: "
        f"final mean_reward={tail.mean_reward:.5f} cv={tail.cv:.3f} rms={tail.rms:.3f} -> {ns.out}"
    )
    return 0


def cmd_evaluate(ns) -> int:
    from .metrics.distributions import velocity_pdf
    from .metrics.report import aggregate_table, render_similarity_svg, write_table_csv
    from .metrics.similarity import similarity_space
    from .session import load_record
    from .trajectory import resample

    paths = sorted(glob.glob(os.path.join(ns.records_dir, "*.trial.json")))
    if not paths:
        raise DegenerateInputError(f"no *.trial.json records under {ns.records_dir}")
    records = [load_record(p) for p in paths]

    rows = []
    pdfs = []
    labels = []
    for rec in records:
        if rec.incomplete:
            continue
        for p in rec.players:
            rows.append(
                {
                    "player": p["player_id"],
                    "role": p["role"],
                    "emd": rec.metrics.get("emd"),
                    "cv": rec.metrics.get("cv"),
                    "rms": rec.metrics.get("rms"),
                }
            )
            tr = rec.trajectory(p["player_id"])
            if rec.analysis_rate_hz != rec.tick_hz:
                tr = resample(tr, rec.analysis_rate_hz)
            pdfs.append(velocity_pdf(tr))
            labels.append(p["player_id"])

    table = aggregate_table(rows)
    write_table_csv(table, ns.out_table)
    outputs = [ns.out_table]
    if ns.out_svg:
        smap = similarity_space(pdfs, labels)
        render_similarity_svg(smap, ns.out_svg)
        outputs.append(ns.out_svg)
    write_manifest(
        ns.out_table + ".manifest.json",
        "evaluate",
        {"records_dir": ns.records_dir, "n_records": len(records)},
        None,
        outputs,
    )
    for row in table:
        print(
            f"{row['player']} ({row['role']}): emd={row['emd']:.4f} "
            f"cv={row['cv']:.4f}+/-{row['cv_sd']:.4f} rms={row['rms']:.4f}+/-{row['rms_sd']:.4f}"
        )
    return 0


def cmd_serve(ns) -> int:
    from .service import ServiceSettings, serve

    settings = ServiceSettings(
        avatar=ns.avatar,
        role=ns.role,
        ims_model=ns.ims_model,
        vt_config=ns.vt_config,
        qtable=ns.qtable,
        duration_s=ns.duration_s,
        tick_hz=ns.tick_hz,
        out_dir=ns.out_dir,
        ui_dir=ns.ui_dir,
        avatar_seed=ns.seed,
    )
    os.makedirs(ns.out_dir, exist_ok=True)
    write_manifest(
        os.path.join(ns.out_dir, "manifest.json"),
        "serve",
        {
            "bind": ns.bind,
            "avatar": ns.avatar,
            "role": ns.role,
            "duration_s": ns.duration_s,
            "tick_hz": ns.tick_hz,
        },
        ns.seed,
        [],
    )
    serve(settings, bind=ns.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorgame",
        description="Motor-signature models, virtual players, and mirror-game sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-ims", help="fit a motor signature model from trial CSVs")
    p.add_argument("--trial-dir", help="directory of t,x CSV files (all *.csv, sorted)")
    p.add_argument("--trial", action="append", help="individual trial CSV (repeatable)")
    p.add_argument("--levels", type=int, default=256, help="codebook size (32..256 typical)")
    p.add_argument("--window", type=int, default=60, help="analysis window length in samples")
    p.add_argument("--hop", type=int, default=15, help="frame hop in samples")
    p.add_argument("--rate-hz", type=float, default=100.0, help="analysis sample rate")
    p.add_argument("--seed", type=int, required=True, help="codebook initialization seed")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.set_defaults(func=cmd_train_ims)

    p = sub.add_parser("synthesize", help="sample new trajectories from a signature model")
    p.add_argument("--model", required=True, help="signature model JSON")
    p.add_argument("--duration-s", type=float, required=True)
    p.add_argument("--n", type=int, default=1, help="number of trajectories")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("play", help="run offline sessions from a session config")
    p.add_argument("--config", required=True, help="session config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("train-cp", help="train the Q-learning cyber player")
    p.add_argument("--config", required=True, help="training config JSON")
    p.add_argument("--out", required=True, help="output Q-table path")
    p.add_argument("--log", help="training log CSV (default: <out>.log.csv)")
    p.add_argument("--checkpoint", help="checkpoint path prefix")
    p.add_argument("--checkpoint-every", type=int, default=0, metavar="N")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_train_cp)

    p = sub.add_parser("evaluate", help="aggregate recorded sessions into a table/figure")
    p.add_argument("--records-dir", required=True, help="directory of *.trial.json records")
    p.add_argument("--out-table", required=True, help="aggregate CSV path")
    p.add_argument("--out-svg", help="similarity-space SVG path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="host the live WebSocket game service")
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.add_argument("--avatar", choices=["vt", "cp"], default="vt")
    p.add_argument("--role", choices=["leader", "follower"], default="follower")
    p.add_argument("--ims-model", help="signature model JSON (vt avatar)")
    p.add_argument("--vt-config", help="virtual player config JSON (vt avatar)")
    p.add_argument("--qtable", help="trained Q-table (cp avatar)")
    p.add_argument("--duration-s", type=float, default=60.0)
    p.add_argument("--tick-hz", type=float, default=10.0)
    p.add_argument("--out-dir", default="trials")
    p.add_argument("--ui-dir", help="static web UI directory to mount at /")
    p.add_argument("--seed", type=int, default=0, help="avatar signature seed")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigSchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except NumericBlowupError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (MirrorGameError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
