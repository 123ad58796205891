"""Shared fixtures and oracles for the test suite.

Everything here is deliberately independent of the library internals it
checks: corpus generators draw from plain numpy, oracles are brute-force
or closed-form recomputations.
"""

from __future__ import annotations

import numpy as np

from mirrorgame.controller import VtConfig, role_preset
from mirrorgame.hkb import HkbParams
from mirrorgame.metrics.distributions import DEFAULT_BINS, DEFAULT_RANGE, VelocityPdf
from mirrorgame.trajectory import Trajectory
from mirrorgame.virtual_trainer import VirtualTrainer

# Quasi-periodic corpus family used across pipeline tests. Frequencies
# come from small lattices so trial-to-trial spectra repeat (keeps the
# symbol chains dense), while amplitudes and offsets vary continuously
# enough that small codebooks visibly underfit.
F_LATTICES = (
    np.array([0.2, 0.3, 0.4, 0.5]),
    np.array([0.6, 0.8, 1.0]),
    np.array([1.2, 1.6, 2.0]),
)
C_LATTICE = np.array([0.40, 0.50, 0.60])


def corpus_trials(n: int, dur: float, seed: int, rate: float = 100.0) -> list[Trajectory]:
    """n quasi-periodic motion trials of dur seconds at the given rate."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        t = np.arange(int(dur * rate)) / rate
        x = np.zeros_like(t) + C_LATTICE[rng.integers(C_LATTICE.size)]
        total_amp = rng.uniform(0.12, 0.38)
        weights = rng.dirichlet(np.ones(3) * 1.5)
        for w, lat in zip(weights, F_LATTICES):
            f = lat[rng.integers(lat.size)]
            x += total_amp * w * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
        out.append(Trajectory(np.clip(x, 0.02, 0.98), rate))
    return out


def pooled_pdf(trials) -> VelocityPdf:
    """Velocity histogram over all samples of all trials, unit area."""
    v = np.concatenate([tr.velocity() for tr in trials])
    edges = np.linspace(DEFAULT_RANGE[0], DEFAULT_RANGE[1], DEFAULT_BINS + 1)
    hist, _ = np.histogram(np.clip(v, *DEFAULT_RANGE), bins=edges)
    return VelocityPdf(edges, hist / (v.size * (edges[1] - edges[0])))


def smooth_signal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Band-limited random signal: a handful of low-frequency sinusoids."""
    t = np.arange(n)
    x = np.zeros(n)
    for _ in range(rng.integers(3, 7)):
        f = rng.uniform(0.001, 0.03)
        x += rng.uniform(0.1, 1.0) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    return x


def make_vt(corpus_seed: int, role: str, seed: int = 0, n_levels: int = 64) -> VirtualTrainer:
    """Virtual player with a signature trained on a fresh corpus."""
    import mirrorgame as mg

    trials = corpus_trials(30, 30.0, corpus_seed)
    model = mg.train_signature_model(trials, n_levels=n_levels, seed=7)
    theta_p, omega = role_preset(role)
    cfg = VtConfig(hkb=HkbParams(omega=omega), theta_p=theta_p)
    return VirtualTrainer(cfg, model, seed=seed)


def play_pair(a, b, n_ticks: int, seed_a: int, seed_b: int):
    """Simultaneous-update game loop over the generic player protocol.

    At tick k each side reacts to the other's published state from
    tick k - 1. Returns (x_a, v_a, x_b, v_b), each of length n_ticks + 1.
    """
    a.reset(seed=seed_a)
    b.reset(seed=seed_b)
    xa = np.empty(n_ticks + 1)
    va = np.empty(n_ticks + 1)
    xb = np.empty(n_ticks + 1)
    vb = np.empty(n_ticks + 1)
    xa[0], va[0] = a.position, a.velocity
    xb[0], vb[0] = b.position, b.velocity
    for k in range(n_ticks):
        xa[k + 1], va[k + 1] = a.tick(xb[k], vb[k])
        xb[k + 1], vb[k + 1] = b.tick(xa[k], va[k])
    return xa, va, xb, vb


def eval_follower(follower, leader, n_sessions=10, trial_s=60.0, tick_hz=10.0, seed0=5000):
    """Mean coordination level and tracking error over seeded sessions."""
    from mirrorgame.metrics import circular_variance, relative_phase, rmse

    n_ticks = int(round(trial_s * tick_hz))
    cvs, rmss = [], []
    for i in range(n_sessions):
        xf, _, xl, _ = play_pair(follower, leader, n_ticks, seed0 + 2 * i, seed0 + 2 * i + 1)
        tf = Trajectory(xf, tick_hz)
        tl = Trajectory(xl, tick_hz)
        series, _ = relative_phase(tl, tf)
        cvs.append(circular_variance(series))
        rmss.append(rmse(tf, tl))
    return float(np.mean(cvs)), float(np.mean(rmss))


# Small deterministic decision processes with a value-iteration oracle.

class TinyMdp:
    """Finite MDP with deterministic transitions.

    next_state[s, a] and reward[s, a] are dense integer / float arrays.
    """

    def __init__(self, next_state: np.ndarray, reward: np.ndarray):
        self.next_state = np.asarray(next_state, dtype=np.int64)
        self.reward = np.asarray(reward, dtype=np.float64)
        self.n_states, self.n_actions = self.next_state.shape

    def q_fixed_point(self, discount: float, tol: float = 1e-13) -> np.ndarray:
        q = np.zeros((self.n_states, self.n_actions))
        for _ in range(100000):
            v = q.max(axis=1)
            q_new = self.reward + discount * v[self.next_state]
            if np.max(np.abs(q_new - q)) < tol:
                return q_new
            q = q_new
        raise AssertionError("value iteration did not converge")


def chain_mdp() -> TinyMdp:
    """4 states in a line, 2 actions (left, right), reward at the end."""
    ns = np.zeros((4, 2), dtype=np.int64)
    r = np.zeros((4, 2))
    for s in range(4):
        ns[s, 0] = max(s - 1, 0)
        ns[s, 1] = min(s + 1, 3)
    r[2, 1] = 1.0
    r[3, 1] = 1.0
    r[3, 0] = -0.1
    return TinyMdp(ns, r)


def cycle_mdp() -> TinyMdp:
    """6 states on a ring, 3 actions (back, stay, forward), one prize edge."""
    n = 6
    ns = np.zeros((n, 3), dtype=np.int64)
    r = np.full((n, 3), -0.05)
    for s in range(n):
        ns[s, 0] = (s - 1) % n
        ns[s, 1] = s
        ns[s, 2] = (s + 1) % n
    r[4, 2] = 1.0
    r[5, 0] = 0.3
    return TinyMdp(ns, r)


def grid_mdp() -> TinyMdp:
    """4x4 board, 9 composite moves, cost by distance to the far corner."""
    side = 4
    moves = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
    n = side * side
    ns = np.zeros((n, 9), dtype=np.int64)
    r = np.zeros((n, 9))
    for s in range(n):
        x, y = divmod(s, side)
        for a, (dx, dy) in enumerate(moves):
            nx = min(max(x + dx, 0), side - 1)
            ny = min(max(y + dy, 0), side - 1)
            ns[s, a] = nx * side + ny
            r[s, a] = -(abs(nx - (side - 1)) + abs(ny - (side - 1))) - 0.01 * (dx * dx + dy * dy)
    return TinyMdp(ns, r)
