"""Shadow training of the cyber player on virtual-player sessions.

The cyber player never disturbs the game it learns from: two virtual
players play a mirror-game trial, and the learner rides along in the
target's seat, observing the partner, trying accelerations, and being
rewarded for staying close to what the target actually did. Because the
played sessions do not depend on the value table, trial generation can
run in parallel while the value updates stay strictly sequential, which
keeps results byte-identical for a given seed regardless of job count.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DegenerateInputError, ShapeMismatchError, UndefinedPhaseError
from .metrics.synchrony import circular_variance, relative_phase, rmse
from .qlearning import (
    ActionSet,
    AgentConfig,
    QTable,
    StateGrid,
    discretize,
    q_update,
    reward,
    save_agent,
    select_action,
)
from .trajectory import Trajectory
from .validation import check_int, check_positive, spawn_seed
from .virtual_trainer import VirtualTrainer

LOG_COLUMNS = ("trial", "mean_reward", "epsilon", "cv", "rms")


class LogRow(NamedTuple):
    trial: int
    mean_reward: float
    epsilon: float
    cv: float
    rms: float


@dataclass
class TrainingLog:
    """Per-trial training diagnostics."""

    rows: list = field(default_factory=list)

    def append(self, row: LogRow) -> None:
        self.rows.append(row)

    def to_csv(self, path: str | os.PathLike) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.trial, f"{r.mean_reward:.8f}", f"{r.epsilon:.8f}", f"{r.cv:.8f}", f"{r.rms:.8f}"]
            )
        with open(path, "w", encoding="ascii", newline="\n") as f:
            f.write(buf.getvalue())

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "TrainingLog":
        log = cls()
        with open(path, "r", encoding="ascii") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if tuple(header or ()) != LOG_COLUMNS:
                raise DegenerateInputError(f"{path} is not a training log")
            for rec in reader:
                log.append(
                    LogRow(int(rec[0]), float(rec[1]), float(rec[2]), float(rec[3]), float(rec[4]))
                )
        return log


def _derive_int_seed(base_seed: int, *key: int) -> int:
    return int(spawn_seed(base_seed, *key).generate_state(1, dtype=np.uint64)[0])


def play_vt_pair(
    target: VirtualTrainer,
    partner: VirtualTrainer,
    n_ticks: int,
    target_seed: int,
    partner_seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Play one mirror-game trial between two virtual players.

    Both players update simultaneously: at tick k each reacts to the
    other's position from tick k - 1 (one-tick information delay).
    Returns position and velocity arrays of length n_ticks + 1 for the
    target and the partner.
    """
    check_int(n_ticks, "n_ticks", 1)
    target.reset(seed=target_seed)
    partner.reset(seed=partner_seed)
    x_t = np.empty(n_ticks + 1)
    v_t = np.empty(n_ticks + 1)
    x_p = np.empty(n_ticks + 1)
    v_p = np.empty(n_ticks + 1)
    x_t[0], v_t[0] = target.position, target.velocity
    x_p[0], v_p[0] = partner.position, partner.velocity
    for k in range(1, n_ticks + 1):
        prev_t, prev_p = x_t[k - 1], x_p[k - 1]
        x_t[k], v_t[k] = target.tick(prev_p)
        x_p[k], v_p[k] = partner.tick(prev_t)
    return x_t, v_t, x_p, v_p


def _gen_trial(args) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    target, partner, n_ticks, t_seed, p_seed = args
    return play_vt_pair(target, partner, n_ticks, t_seed, p_seed)


def _shadow_trial(
    table: QTable,
    cfg: AgentConfig,
    arrays,
    trial_idx: int,
    n_ticks: int,
) -> LogRow:
    """Run the learner through one recorded trial and update the table."""
    from .qlearning import epsilon as eps_fn

    x_t, v_t, x_p, v_p = arrays
    rng = np.random.default_rng(spawn_seed(cfg.seed, trial_idx, 2))
    dt = 1.0 / cfg.tick_hz
    accels = cfg.actions.accels
    x_c, v_c = float(x_t[0]), float(v_t[0])
    xs = np.empty(n_ticks + 1)
    xs[0] = x_c
    total_r = 0.0
    k0 = trial_idx * n_ticks
    for k in range(n_ticks):
        s = discretize(cfg.grid, x_c, v_c, x_p[k], v_p[k])
        a = select_action(table, s, k0 + k, cfg, rng)
        u = float(accels[a])
        v2 = v_c + u * dt
        x2 = x_c + v2 * dt
        if x2 < 0.0:
            x2, v2 = 0.0, 0.0
        elif x2 > 1.0:
            x2, v2 = 1.0, 0.0
        r = reward(x2, v2, x_t[k + 1], v_t[k + 1], u, cfg.eta_u)
        s2 = discretize(cfg.grid, x2, v2, x_p[k + 1], v_p[k + 1])
        q_update(table, s, a, r, s2, cfg)
        total_r += r
        x_c, v_c = x2, v2
        xs[k + 1] = x_c

    cp_traj = Trajectory(xs, cfg.tick_hz)
    partner_traj = Trajectory(x_p, cfg.tick_hz)
    try:
        series, _ = relative_phase(cp_traj, partner_traj)
        cv = circular_variance(series)
    except UndefinedPhaseError:
        cv = float("nan")
    return LogRow(
        trial=trial_idx,
        mean_reward=total_r / n_ticks,
        epsilon=eps_fn(k0, cfg.eps0, cfg.eps_decay),
        cv=cv,
        rms=rmse(cp_traj, partner_traj),
    )


def train_cp(
    cfg: AgentConfig,
    target: VirtualTrainer,
    partners,
    n_trials: int,
    trial_s: float = 60.0,
    role: str = "follower",
    checkpoint_path: str | os.PathLike | None = None,
    checkpoint_every: int = 0,
    resume: bool = False,
    jobs: int = 1,
) -> tuple[QTable, TrainingLog]:
    """Train a cyber player to mimic a target virtual player.

    Parameters
    ----------
    cfg : AgentConfig
        Learner hyperparameters; ``cfg.seed`` fixes the value-table
        initialization, the exploration stream, and all session seeds.
    target : VirtualTrainer
        The player whose seat the learner shadows.
    partners : sequence of VirtualTrainer
        Opponents, cycled per trial.
    n_trials : int
        Number of trials to play.
    trial_s : float
        Trial length in seconds at ``cfg.tick_hz``.
    role : str
        Which seat the target plays ("leader" or "follower"); recorded
        with the artifact, not used mechanically.
    checkpoint_path : optional
        Path prefix for periodic checkpoints; with ``resume=True``
        training continues from the saved trial index and the final
        result is identical to an uninterrupted run.
    checkpoint_every : int
        Checkpoint period in trials (0 disables).
    jobs : int
        Worker processes for session generation. The value updates stay
        sequential, so any job count yields the same table.
    """
    if role not in ("leader", "follower"):
        raise DegenerateInputError(f"role must be 'leader' or 'follower', got {role!r}")
    n_trials = check_int(n_trials, "n_trials", 1)
    check_positive(trial_s, "trial_s")
    jobs = check_int(jobs, "jobs", 1)
    checkpoint_every = check_int(checkpoint_every, "checkpoint_every", 0)
    partners = list(partners)
    if not partners:
        raise DegenerateInputError("need at least one partner")
    n_ticks = int(round(trial_s * cfg.tick_hz))
    if n_ticks < 4:
        raise DegenerateInputError(f"trial of {trial_s} s gives only {n_ticks} ticks")

    start_trial = 0
    if resume:
        if checkpoint_path is None:
            raise DegenerateInputError("resume requires a checkpoint path")
        table, log, start_trial = _load_checkpoint(checkpoint_path, cfg)
        if start_trial >= n_trials:
            return table, log
    else:
        table = QTable.initialize(cfg.grid, cfg.actions, cfg.seed)
        log = TrainingLog()

    def trial_args(t: int):
        partner = partners[t % len(partners)]
        return (
            target,
            partner,
            n_ticks,
            _derive_int_seed(cfg.seed, t, 0),
            _derive_int_seed(cfg.seed, t, 1),
        )

    def handle(t: int, arrays) -> None:
        log.append(_shadow_trial(table, cfg, arrays, t, n_ticks))
        if checkpoint_path and checkpoint_every and (t + 1) % checkpoint_every == 0:
            _save_checkpoint(checkpoint_path, cfg, table, log, t + 1, role)

    todo = range(start_trial, n_trials)
    if jobs == 1:
        for t in todo:
            handle(t, _gen_trial(trial_args(t)))
    else:
        chunk = max(jobs * 4, 8)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for lo in range(start_trial, n_trials, chunk):
                hi = min(lo + chunk, n_trials)
                for t, arrays in zip(
                    range(lo, hi), pool.map(_gen_trial, [trial_args(t) for t in range(lo, hi)])
                ):
                    handle(t, arrays)

    if checkpoint_path and checkpoint_every:
        _save_checkpoint(checkpoint_path, cfg, table, log, n_trials, role)
    return table, log


def _ckpt_files(prefix: str | os.PathLike) -> tuple[str, str, str]:
    p = os.fspath(prefix)
    return p + ".qtable", p + ".log.csv", p + ".state.json"


def _save_checkpoint(prefix, cfg: AgentConfig, table: QTable, log: TrainingLog, next_trial: int, role: str) -> None:
    qpath, lpath, spath = _ckpt_files(prefix)
    save_agent(qpath, table, cfg, meta={"trained_trials": next_trial, "role": role})
    log.to_csv(lpath)
    with open(spath, "w", encoding="ascii", newline="\n") as f:
        json.dump({"next_trial": next_trial, "seed": cfg.seed, "role": role}, f, sort_keys=True)
        f.write("\n")


def _load_checkpoint(prefix, cfg: AgentConfig) -> tuple[QTable, TrainingLog, int]:
    from .qlearning import load_agent

    qpath, lpath, spath = _ckpt_files(prefix)
    table, saved_cfg, _meta = load_agent(qpath)
    if saved_cfg.to_dict() != cfg.to_dict():
        raise ShapeMismatchError("checkpoint was written with a different agent config")
    log = TrainingLog.from_csv(lpath)
    try:
        with open(spath, "r", encoding="ascii") as f:
            state = json.load(f)
        next_trial = int(state["next_trial"])
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DegenerateInputError(f"cannot read checkpoint state {spath}: {exc}") from exc
    return table, log, next_trial


class CyberPlayerTrainer(BaseEstimator):
    """Estimator-style front end for cyber player training.

    ``fit(X)`` takes a sequence of virtual players whose first element
    is the target and the rest are training partners; the fitted
    attributes are ``table_`` (QTable), ``log_`` (TrainingLog), and
    ``config_`` (the assembled AgentConfig).
    """

    def __init__(
        self,
        n_trials=100,
        trial_s=60.0,
        role="follower",
        pos_bins=15,
        vel_bins=15,
        v_max=1.5,
        u_max=10.0,
        n_actions=9,
        learn_rate=0.1,
        discount=0.9,
        eps0=1.0,
        eps_decay=200_000.0,
        eta_u=1e-4,
        tick_hz=10.0,
        seed=0,
        jobs=1,
    ):
        self.n_trials = n_trials
        self.trial_s = trial_s
        self.role = role
        self.pos_bins = pos_bins
        self.vel_bins = vel_bins
        self.v_max = v_max
        self.u_max = u_max
        self.n_actions = n_actions
        self.learn_rate = learn_rate
        self.discount = discount
        self.eps0 = eps0
        self.eps_decay = eps_decay
        self.eta_u = eta_u
        self.tick_hz = tick_hz
        self.seed = seed
        self.jobs = jobs

    def _config(self) -> AgentConfig:
        return AgentConfig(
            grid=StateGrid(self.pos_bins, self.vel_bins, self.v_max),
            actions=ActionSet.uniform(self.u_max, self.n_actions),
            learn_rate=self.learn_rate,
            discount=self.discount,
            eps0=self.eps0,
            eps_decay=self.eps_decay,
            eta_u=self.eta_u,
            tick_hz=self.tick_hz,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        players = list(X)
        if len(players) < 2:
            raise DegenerateInputError("fit needs a target plus at least one partner")
        self.config_ = self._config()
        self.table_, self.log_ = train_cp(
            self.config_,
            players[0],
            players[1:],
            n_trials=self.n_trials,
            trial_s=self.trial_s,
            role=self.role,
            jobs=self.jobs,
        )
        return self
