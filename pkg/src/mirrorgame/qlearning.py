"""Tabular Q-learning machinery for the cyber player.

The cyber player observes a coarse joint state (own position and
velocity, partner position and velocity), picks one of a small set of
accelerations, and is rewarded for matching a target's position and
velocity at low control effort. Everything is deliberately tabular: the
state space is a fixed grid, the value function a dense array, and the
whole learned artifact round-trips through one small binary file plus a
JSON sidecar.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, ShapeMismatchError
from .validation import check_in_range, check_int, check_positive

_MAGIC = b"MGQT"
_VERSION = 1
_HEADER = struct.Struct("<4sHHHHd12x")  # magic, version, pos/vel bins, actions, v_max


@dataclass(frozen=True)
class StateGrid:
    """Discretization grid over (x, v, x_partner, v_partner).

    Positions live on [0, 1] and split into ``pos_bins`` equal bins;
    velocities are clipped to [-v_max, v_max] and split into
    ``vel_bins`` equal bins (odd, so one bin is centered on zero).
    """

    pos_bins: int = 15
    vel_bins: int = 15
    v_max: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "pos_bins", check_int(self.pos_bins, "pos_bins", 2))
        object.__setattr__(self, "vel_bins", check_int(self.vel_bins, "vel_bins", 3))
        if self.vel_bins % 2 == 0:
            raise DegenerateInputError(f"vel_bins must be odd, got {self.vel_bins}")
        object.__setattr__(self, "v_max", check_positive(self.v_max, "v_max"))

    @property
    def n_states(self) -> int:
        return (self.pos_bins * self.vel_bins) ** 2

    def pos_bin(self, x: float) -> int:
        x = min(max(float(x), 0.0), 1.0)
        return min(int(x * self.pos_bins), self.pos_bins - 1)

    def vel_bin(self, v: float) -> int:
        v = min(max(float(v), -self.v_max), self.v_max)
        b = int((v + self.v_max) / (2.0 * self.v_max) * self.vel_bins)
        return min(b, self.vel_bins - 1)

    def coords(self, x: float, v: float, x_p: float, v_p: float) -> tuple[int, int, int, int]:
        return (self.pos_bin(x), self.vel_bin(v), self.pos_bin(x_p), self.vel_bin(v_p))

    def index(self, coords: tuple[int, int, int, int]) -> int:
        bx, bv, bxp, bvp = coords
        return ((bx * self.vel_bins + bv) * self.pos_bins + bxp) * self.vel_bins + bvp

    def unindex(self, s: int) -> tuple[int, int, int, int]:
        bvp = s % self.vel_bins
        s //= self.vel_bins
        bxp = s % self.pos_bins
        s //= self.pos_bins
        bv = s % self.vel_bins
        bx = s // self.vel_bins
        return (bx, bv, bxp, bvp)


def discretize(grid: StateGrid, x: float, v: float, x_p: float, v_p: float) -> int:
    """Map a continuous joint observation to a state index."""
    for name, val in (("x", x), ("v", v), ("x_p", x_p), ("v_p", v_p)):
        if not np.isfinite(val):
            raise DegenerateInputError(f"{name} must be finite, got {val}")
    return grid.index(grid.coords(x, v, x_p, v_p))


@dataclass(frozen=True)
class ActionSet:
    """Symmetric set of candidate accelerations."""

    accels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.accels, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise ShapeMismatchError("accels must be a 1-D array of >= 2 values")
        if not np.all(np.isfinite(a)):
            raise DegenerateInputError("accels must be finite")
        if np.any(np.diff(a) <= 0):
            raise DegenerateInputError("accels must be strictly increasing")
        if np.max(np.abs(a + a[::-1])) > 1e-12:
            raise DegenerateInputError("accels must be symmetric about zero")
        object.__setattr__(self, "accels", np.ascontiguousarray(a))

    @classmethod
    def uniform(cls, u_max: float = 10.0, n: int = 9) -> "ActionSet":
        """n equally spaced accelerations spanning [-u_max, u_max]."""
        check_positive(u_max, "u_max")
        n = check_int(n, "n", 3)
        if n % 2 == 0:
            raise DegenerateInputError(f"action count must be odd, got {n}")
        return cls(np.linspace(-u_max, u_max, n))

    @property
    def n_actions(self) -> int:
        return self.accels.size


@dataclass(frozen=True)
class AgentConfig:
    """Hyperparameters of the Q-learning agent."""

    grid: StateGrid = field(default_factory=StateGrid)
    actions: ActionSet = field(default_factory=ActionSet.uniform)
    learn_rate: float = 0.1
    discount: float = 0.9
    eps0: float = 1.0
    eps_decay: float = 200_000.0
    eta_u: float = 1e-4
    tick_hz: float = 10.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "learn_rate", check_in_range(self.learn_rate, "learn_rate", 0.0, 1.0))
        object.__setattr__(self, "discount", check_in_range(self.discount, "discount", 0.0, 1.0))
        object.__setattr__(self, "eps0", check_in_range(self.eps0, "eps0", 0.0, 1.0))
        object.__setattr__(self, "eps_decay", check_positive(self.eps_decay, "eps_decay"))
        object.__setattr__(self, "eta_u", check_in_range(self.eta_u, "eta_u", 0.0, np.inf))
        object.__setattr__(self, "tick_hz", check_positive(self.tick_hz, "tick_hz"))
        object.__setattr__(self, "seed", check_int(self.seed, "seed"))

    def to_dict(self) -> dict:
        return {
            "pos_bins": self.grid.pos_bins,
            "vel_bins": self.grid.vel_bins,
            "v_max": self.grid.v_max,
            "accels": [float(a) for a in self.actions.accels],
            "learn_rate": self.learn_rate,
            "discount": self.discount,
            "eps0": self.eps0,
            "eps_decay": self.eps_decay,
            "eta_u": self.eta_u,
            "tick_hz": self.tick_hz,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AgentConfig":
        try:
            return cls(
                grid=StateGrid(int(doc["pos_bins"]), int(doc["vel_bins"]), float(doc["v_max"])),
                actions=ActionSet(np.asarray(doc["accels"], dtype=float)),
                learn_rate=float(doc["learn_rate"]),
                discount=float(doc["discount"]),
                eps0=float(doc["eps0"]),
                eps_decay=float(doc["eps_decay"]),
                eta_u=float(doc["eta_u"]),
                tick_hz=float(doc["tick_hz"]),
                seed=int(doc["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DegenerateInputError(f"malformed agent config: {exc}") from exc


class QTable:
    """Dense action-value table with per-pair visit counts."""

    def __init__(self, values: np.ndarray, visits: np.ndarray | None = None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeMismatchError(f"values must be 2-D, got shape {values.shape}")
        if visits is None:
            visits = np.zeros(values.shape, dtype=np.int64)
        visits = np.asarray(visits, dtype=np.int64)
        if visits.shape != values.shape:
            raise ShapeMismatchError("visit counts must match the value table shape")
        self.values = np.ascontiguousarray(values)
        self.visits = np.ascontiguousarray(visits)

    @classmethod
    def initialize(cls, grid: StateGrid, actions: ActionSet, seed: int) -> "QTable":
        """Fresh table with small random values (deterministic per seed)."""
        rng = np.random.default_rng(seed)
        values = rng.uniform(-0.01, 0.0, size=(grid.n_states, actions.n_actions))
        return cls(values)

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]

    def save(self, path: str | os.PathLike, grid: StateGrid, v_max_check: bool = True) -> None:
        """Write the table as a small self-describing binary file."""
        if self.n_states != grid.n_states:
            raise ShapeMismatchError(
                f"table has {self.n_states} states, grid expects {grid.n_states}"
            )
        header = _HEADER.pack(
            _MAGIC, _VERSION, grid.pos_bins, grid.vel_bins, self.n_actions, grid.v_max
        )
        with open(path, "wb") as f:
            f.write(header)
            f.write(self.values.astype("<f8", copy=False).tobytes(order="C"))
            f.write(self.visits.astype("<i8", copy=False).tobytes(order="C"))

    @classmethod
    def load(cls, path: str | os.PathLike) -> tuple["QTable", StateGrid]:
        """Read a table written by :meth:`save`."""
        with open(path, "rb") as f:
            raw = f.read()
        if len(raw) < _HEADER.size:
            raise DegenerateInputError(f"{path} is too short to be a Q-table")
        magic, version, pos_bins, vel_bins, n_actions, v_max = _HEADER.unpack_from(raw)
        if magic != _MAGIC or version != _VERSION:
            raise DegenerateInputError(f"{path} is not a version-{_VERSION} Q-table")
        grid = StateGrid(pos_bins, vel_bins, v_max)
        n = grid.n_states * n_actions
        want = _HEADER.size + 8 * n + 8 * n
        if len(raw) != want:
            raise DegenerateInputError(
                f"{path} has {len(raw)} bytes, expected {want} for its header"
            )
        off = _HEADER.size
        values = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(
            grid.n_states, n_actions
        )
        visits = np.frombuffer(raw, dtype="<i8", count=n, offset=off + 8 * n).reshape(
            grid.n_states, n_actions
        )
        return cls(values.copy(), visits.copy()), grid


def reward(x: float, v: float, x_t: float, v_t: float, u: float, eta_u: float = 1e-4) -> float:
    """Tracking reward: negative quadratic error against the target state.

    rho = -(x - x_t)^2 - 0.1 (v - v_t)^2 - eta_u u^2
    """
    dx = x - x_t
    dv = v - v_t
    return -(dx * dx) - 0.1 * (dv * dv) - eta_u * (u * u)


def q_update(table: QTable, s: int, a: int, r: float, s_next: int, cfg: AgentConfig) -> float:
    """One temporal-difference backup; returns the updated value.

    q(s,a) <- q(s,a) + lr * (r + discount * max_a' q(s',a') - q(s,a))

    Also counts the visit to (s, a).
    """
    q = table.values
    best_next = q[s_next].max()
    q[s, a] += cfg.learn_rate * (r + cfg.discount * best_next - q[s, a])
    table.visits[s, a] += 1
    return float(q[s, a])


def epsilon(k: int, eps0: float, eps_decay: float) -> float:
    """Exploration rate at global tick k: eps0 * exp(-k / eps_decay)."""
    if k < 0:
        raise DegenerateInputError(f"tick index must be >= 0, got {k}")
    return float(eps0 * np.exp(-k / eps_decay))


def select_action(table: QTable, s: int, k: int, cfg: AgentConfig, rng: np.random.Generator) -> int:
    """Epsilon-greedy action choice at global tick k.

    Exploits with probability 1 - eps(k) (ties toward the lowest action
    index), explores uniformly otherwise.
    """
    if rng.random() < epsilon(k, cfg.eps0, cfg.eps_decay):
        return int(rng.integers(table.n_actions))
    return int(np.argmax(table.values[s]))


def greedy_action(table: QTable, grid: StateGrid, s: int) -> int:
    """Greedy action with a fallback for never-visited states.

    If no action was ever tried in state s, the policy of the nearest
    visited state (Manhattan distance on the grid coordinates, ties to
    the lowest state index) is used instead.
    """
    if table.visits[s].sum() == 0:
        visited = np.flatnonzero(table.visits.sum(axis=1) > 0)
        if visited.size:
            coords = np.array([grid.unindex(int(i)) for i in visited])
            target = np.array(grid.unindex(s))
            s = int(visited[np.abs(coords - target).sum(axis=1).argmin()])
    return int(np.argmax(table.values[s]))


def cp_tick(
    table: QTable,
    grid: StateGrid,
    actions: ActionSet,
    x: float,
    v: float,
    partner_pos: float,
    partner_vel: float,
    dt: float,
) -> tuple[float, float, int]:
    """Advance the cyber player one tick under its greedy policy.

    Applies the chosen acceleration with a semi-implicit Euler step
    (velocity first, then position) and keeps the body on the [0, 1]
    play axis, zeroing velocity at the walls. Returns (x, v, action).
    """
    check_positive(dt, "dt")
    s = discretize(grid, x, v, partner_pos, partner_vel)
    a = greedy_action(table, grid, s)
    u = float(actions.accels[a])
    v2 = v + u * dt
    x2 = x + v2 * dt
    if x2 < 0.0:
        x2, v2 = 0.0, 0.0
    elif x2 > 1.0:
        x2, v2 = 1.0, 0.0
    return x2, v2, a


class CyberPlayer:
    """Evaluation-mode player running a trained table greedily."""

    def __init__(self, table: QTable, cfg: AgentConfig, x0: float = 0.5, v0: float = 0.0):
        if table.n_states != cfg.grid.n_states or table.n_actions != cfg.actions.n_actions:
            raise ShapeMismatchError("table shape does not match the agent config")
        self.table = table
        self.cfg = cfg
        self._x0 = check_in_range(x0, "x0", 0.0, 1.0)
        self._v0 = float(v0)
        self.reset()

    @property
    def position(self) -> float:
        return self._x

    @property
    def velocity(self) -> float:
        return self._v

    def reset(self, seed: int | None = None) -> None:
        # greedy play is deterministic; seed accepted for protocol parity
        self._x = self._x0
        self._v = self._v0

    def tick(self, partner_pos: float, partner_vel: float = 0.0, t: float = 0.0) -> tuple[float, float]:
        self._x, self._v, _ = cp_tick(
            self.table, self.cfg.grid, self.cfg.actions,
            self._x, self._v, partner_pos, partner_vel, 1.0 / self.cfg.tick_hz,
        )
        return self._x, self._v


def save_agent(path: str | os.PathLike, table: QTable, cfg: AgentConfig, meta: dict | None = None) -> None:
    """Write table binary plus a JSON sidecar with the full agent config."""
    table.save(path, cfg.grid)
    doc = {"agent": cfg.to_dict(), "meta": dict(meta or {})}
    with open(_sidecar(path), "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_agent(path: str | os.PathLike) -> tuple[QTable, AgentConfig, dict]:
    """Read a table and its sidecar; the shapes must agree."""
    table, grid = QTable.load(path)
    try:
        with open(_sidecar(path), "r", encoding="ascii") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DegenerateInputError(f"cannot read agent sidecar for {path}: {exc}") from exc
    cfg = AgentConfig.from_dict(doc.get("agent", {}))
    if cfg.grid.n_states != grid.n_states or (cfg.grid.pos_bins, cfg.grid.vel_bins) != (
        grid.pos_bins,
        grid.vel_bins,
    ):
        raise ShapeMismatchError(f"sidecar grid disagrees with binary header for {path}")
    if table.n_actions != cfg.actions.n_actions:
        raise ShapeMismatchError(f"sidecar actions disagree with binary header for {path}")
    return table, cfg, doc.get("meta", {})


def _sidecar(path: str | os.PathLike) -> str:
    return os.fspath(path) + ".json"
