"""Player implementations and the factory registry for sessions.

Every player exposes the same small protocol: ``position``/``velocity``
properties for its current state, ``reset(seed)``, and
``tick(partner_pos, partner_vel, t)`` advancing one game tick and
returning the new (position, velocity). Scripted players ignore the
partner; model-backed players react to it.
"""

from __future__ import annotations

import math
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .controller import load_vt_config, role_preset, vt_config_from_dict
from .errors import ConfigSchemaError, DegenerateInputError
from .qlearning import CyberPlayer, load_agent
from .signature import load_model
from .trajectory import Trajectory, load_csv
from .virtual_trainer import VirtualTrainer


@runtime_checkable
class Player(Protocol):
    position: float
    velocity: float

    def reset(self, seed: int | None = None) -> None: ...

    def tick(self, partner_pos: float, partner_vel: float = 0.0, t: float = 0.0) -> tuple[float, float]: ...


class SinusoidPlayer:
    """Scripted player tracing a single sinusoid on the play axis."""

    def __init__(self, center=0.5, amp=0.3, freq_hz=0.25, phase_rad=0.0):
        if not 0.0 <= center - abs(amp) <= center + abs(amp) <= 1.0:
            raise DegenerateInputError(
                f"sinusoid with center {center} and amplitude {amp} leaves [0, 1]"
            )
        if freq_hz <= 0:
            raise DegenerateInputError(f"freq_hz must be > 0, got {freq_hz}")
        self.center = float(center)
        self.amp = float(amp)
        self.freq_hz = float(freq_hz)
        self.phase_rad = float(phase_rad)
        self.reset()

    def _state_at(self, t: float) -> tuple[float, float]:
        w = 2.0 * math.pi * self.freq_hz
        arg = w * t + self.phase_rad
        return (
            self.center + self.amp * math.sin(arg),
            self.amp * w * math.cos(arg),
        )

    def reset(self, seed: int | None = None) -> None:
        self.position, self.velocity = self._state_at(0.0)

    def tick(self, partner_pos: float = 0.0, partner_vel: float = 0.0, t: float = 0.0) -> tuple[float, float]:
        self.position, self.velocity = self._state_at(t)
        return self.position, self.velocity


class MultiSinePlayer:
    """Scripted player tracing a sum of sinusoids.

    components is a sequence of (amp, freq_hz, phase_rad) triples; the
    sum is centered on ``center`` and must stay inside [0, 1] in the
    worst case (amplitudes summed).
    """

    def __init__(self, components, center=0.5):
        comps = [(float(a), float(f), float(p)) for a, f, p in components]
        if not comps:
            raise DegenerateInputError("need at least one sinusoid component")
        if any(f <= 0 for _, f, _ in comps):
            raise DegenerateInputError("component frequencies must be > 0")
        reach = sum(abs(a) for a, _, _ in comps)
        if not 0.0 <= center - reach <= center + reach <= 1.0:
            raise DegenerateInputError(
                f"components with total reach {reach} around {center} leave [0, 1]"
            )
        self.components = comps
        self.center = float(center)
        self.reset()

    def _state_at(self, t: float) -> tuple[float, float]:
        x = self.center
        v = 0.0
        for a, f, p in self.components:
            w = 2.0 * math.pi * f
            x += a * math.sin(w * t + p)
            v += a * w * math.cos(w * t + p)
        return x, v

    def reset(self, seed: int | None = None) -> None:
        self.position, self.velocity = self._state_at(0.0)

    def tick(self, partner_pos: float = 0.0, partner_vel: float = 0.0, t: float = 0.0) -> tuple[float, float]:
        self.position, self.velocity = self._state_at(t)
        return self.position, self.velocity


class PlaybackPlayer:
    """Scripted player replaying a recorded trajectory.

    Ticks sample the trajectory at the nearest recorded instant and hold
    the final sample once the recording runs out.
    """

    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory
        self._vel = trajectory.velocity()
        self.reset()

    def _state_at(self, t: float) -> tuple[float, float]:
        i = int(round((t - self.trajectory.t0) * self.trajectory.rate_hz))
        i = min(max(i, 0), len(self.trajectory) - 1)
        return float(self.trajectory.samples[i]), float(self._vel[i])

    def reset(self, seed: int | None = None) -> None:
        self.position, self.velocity = self._state_at(self.trajectory.t0)

    def tick(self, partner_pos: float = 0.0, partner_vel: float = 0.0, t: float = 0.0) -> tuple[float, float]:
        self.position, self.velocity = self._state_at(t)
        return self.position, self.velocity


def _build_scripted(params: dict, seed: int) -> Player:
    waveform = params.get("waveform", "sinusoid")
    if waveform == "sinusoid":
        return SinusoidPlayer(
            center=params.get("center", 0.5),
            amp=params.get("amp", 0.3),
            freq_hz=params.get("freq_hz", 0.25),
            phase_rad=params.get("phase_rad", 0.0),
        )
    if waveform == "multisine":
        return MultiSinePlayer(
            components=params.get("components", []),
            center=params.get("center", 0.5),
        )
    raise ConfigSchemaError(f"unknown scripted waveform {waveform!r}")


def _build_playback(params: dict, seed: int) -> Player:
    path = params.get("csv")
    if not path:
        raise ConfigSchemaError("playback player needs a 'csv' path")
    return PlaybackPlayer(load_csv(path))


def _build_virtual_trainer(params: dict, seed: int) -> Player:
    if "config" in params:
        cfg, model_path = load_vt_config(params["config"])
    else:
        cfg, model_path = vt_config_from_dict(params.get("inline", {}))
    if "role" in params:
        theta_p, omega = role_preset(params["role"])
        from dataclasses import replace

        cfg = replace(cfg, theta_p=theta_p, hkb=replace(cfg.hkb, omega=omega))
    model_path = params.get("ims_model", model_path)
    if not model_path:
        raise ConfigSchemaError("virtual player needs an ims_model_path")
    model = load_model(model_path)
    return VirtualTrainer(cfg, model, seed=params.get("seed", seed))


def _build_cyber_player(params: dict, seed: int) -> Player:
    path = params.get("qtable")
    if not path:
        raise ConfigSchemaError("cyber player needs a 'qtable' path")
    table, cfg, _meta = load_agent(path)
    return CyberPlayer(table, cfg)


PLAYER_REGISTRY: dict[str, Callable[[dict, int], Player]] = {
    "scripted": _build_scripted,
    "playback": _build_playback,
    "virtual_trainer": _build_virtual_trainer,
    "cyber_player": _build_cyber_player,
}


def register_player(kind: str, builder: Callable[[dict, int], Player]) -> None:
    """Add or replace a player factory (used by services and tests)."""
    PLAYER_REGISTRY[str(kind)] = builder


def build_player(kind: str, params: dict, seed: int, registry: dict | None = None) -> Player:
    """Instantiate a player by registry kind."""
    reg = PLAYER_REGISTRY if registry is None else registry
    if kind not in reg:
        raise ConfigSchemaError(
            f"unknown player kind {kind!r}; known: {sorted(reg)}"
        )
    return reg[kind](dict(params or {}), int(seed))
