"""Receding-horizon control for the oscillator-backed virtual player.

At each planning instant the controller picks a control input that is
held constant over a short horizon, trading off three terms: ending the
horizon close to the partner's position, tracking a reference velocity
stream over the horizon, and control effort. The virtual player's
personality lives in the weights: a leader weighs the terminal position
term lightly and its own velocity style heavily, a follower the
reverse.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigSchemaError, DegenerateInputError, ShapeMismatchError
from .hkb import HkbParams, HkbState
from .validation import check_in_range, check_int, check_positive

N_GRID = 33
TOL_FRAC = 1e-3

# follower tracks the partner hard; leader mostly plays its own style
LEADER_THETA_P = 0.1
LEADER_OMEGA = 0.8
FOLLOWER_THETA_P = 0.9
FOLLOWER_OMEGA = 0.1


@dataclass(frozen=True)
class VtConfig:
    """Virtual player configuration.

    Parameters
    ----------
    hkb : HkbParams
        Oscillator coefficients.
    theta_p : float
        Position-tracking weight in [0, 1]; the velocity-tracking weight
        is 1 - theta_p.
    eta : float
        Control effort weight (>= 0).
    horizon_s : float
        Planning horizon in seconds.
    u_max : float
        Control input bound; candidates live in [-u_max, u_max].
    tick_hz : float
        Game tick rate; the horizon is re-planned inside each tick.
    n_substeps : int
        Integration substeps per horizon (dt = horizon_s / n_substeps,
        must be <= 0.05 s).
    """

    hkb: HkbParams = field(default_factory=HkbParams)
    theta_p: float = FOLLOWER_THETA_P
    eta: float = 1e-4
    horizon_s: float = 0.03
    u_max: float = 10.0
    tick_hz: float = 10.0
    n_substeps: int = 3

    def __post_init__(self):
        object.__setattr__(self, "theta_p", check_in_range(self.theta_p, "theta_p", 0.0, 1.0))
        object.__setattr__(self, "eta", check_in_range(self.eta, "eta", 0.0, np.inf))
        object.__setattr__(self, "horizon_s", check_positive(self.horizon_s, "horizon_s"))
        object.__setattr__(self, "u_max", check_positive(self.u_max, "u_max"))
        object.__setattr__(self, "tick_hz", check_positive(self.tick_hz, "tick_hz"))
        object.__setattr__(self, "n_substeps", check_int(self.n_substeps, "n_substeps", 1))
        if self.dt_sub > 0.05:
            raise DegenerateInputError(
                f"substep dt {self.dt_sub} s exceeds 0.05 s; raise n_substeps"
            )
        ticks = (1.0 / self.tick_hz) / self.dt_sub
        if abs(ticks - round(ticks)) > 1e-9 or round(ticks) < 1:
            raise DegenerateInputError(
                "one tick must be a whole number of horizon substeps; "
                f"got {ticks} substeps per tick"
            )

    @property
    def dt_sub(self) -> float:
        return self.horizon_s / self.n_substeps

    @property
    def substeps_per_tick(self) -> int:
        return int(round((1.0 / self.tick_hz) / self.dt_sub))


def _check_sigma(sigma, n_substeps: int) -> np.ndarray:
    sigma = np.ascontiguousarray(np.asarray(sigma, dtype=float))
    if sigma.ndim != 1 or sigma.size != n_substeps + 1:
        raise ShapeMismatchError(
            f"reference velocity must have {n_substeps + 1} samples, got {sigma.shape}"
        )
    if not np.all(np.isfinite(sigma)):
        raise DegenerateInputError("reference velocity contains non-finite values")
    return sigma


def control_cost(
    u: float,
    x: float,
    v: float,
    hkb: HkbParams,
    r_p: float,
    sigma,
    *,
    w_pos: float,
    w_vel: float,
    w_u: float,
    horizon_s: float,
    n_substeps: int = 3,
) -> float:
    """Horizon cost of holding input ``u`` from state (x, v).

    The three weights multiply the terminal partner-position error, the
    running reference-velocity error, and the control effort. Scaling
    all three by one constant scales the cost by that constant, so the
    minimizing input depends only on their ratios.
    """
    sigma = _check_sigma(sigma, n_substeps)
    return float(
        _kernels.rollout_cost(
            float(x), float(v),
            hkb.alpha, hkb.beta, hkb.gamma, hkb.omega,
            float(u), horizon_s / n_substeps, n_substeps,
            float(r_p), sigma, float(w_pos), float(w_vel), float(w_u),
        )
    )


def minimize_control(
    x: float,
    v: float,
    hkb: HkbParams,
    r_p: float,
    sigma,
    *,
    w_pos: float,
    w_vel: float,
    w_u: float,
    horizon_s: float,
    u_max: float,
    n_substeps: int = 3,
) -> float:
    """Deterministic minimizer of :func:`control_cost` over [-u_max, u_max].

    Uniform grid scan (33 candidates, ties to the lower input) followed
    by golden-section narrowing of the winning bracket to a width below
    ``1e-3 * u_max``.
    """
    sigma = _check_sigma(sigma, n_substeps)
    check_positive(u_max, "u_max")
    return float(
        _kernels.choose_control(
            float(x), float(v),
            hkb.alpha, hkb.beta, hkb.gamma, hkb.omega,
            horizon_s / n_substeps, n_substeps,
            float(r_p), sigma, float(w_pos), float(w_vel), float(w_u),
            float(u_max), N_GRID, TOL_FRAC,
        )
    )


def cost_J(u: float, state: HkbState, cfg: VtConfig, partner_pos: float, sigma) -> float:
    """Horizon cost under a player configuration (see control_cost)."""
    return control_cost(
        u, state.x, state.v, cfg.hkb, partner_pos, sigma,
        w_pos=cfg.theta_p, w_vel=1.0 - cfg.theta_p, w_u=cfg.eta,
        horizon_s=cfg.horizon_s, n_substeps=cfg.n_substeps,
    )


def choose_control(state: HkbState, cfg: VtConfig, partner_pos: float, sigma) -> float:
    """Best control input for one horizon under a player configuration."""
    return minimize_control(
        state.x, state.v, cfg.hkb, partner_pos, sigma,
        w_pos=cfg.theta_p, w_vel=1.0 - cfg.theta_p, w_u=cfg.eta,
        horizon_s=cfg.horizon_s, u_max=cfg.u_max, n_substeps=cfg.n_substeps,
    )


VT_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
        "gamma": {"type": "number"},
        "omega": {"type": "number"},
        "theta_p": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "eta": {"type": "number", "minimum": 0.0},
        "horizon_s": {"type": "number", "exclusiveMinimum": 0.0},
        "u_max": {"type": "number", "exclusiveMinimum": 0.0},
        "tick_hz": {"type": "number", "exclusiveMinimum": 0.0},
        "ims_model_path": {"type": "string"},
    },
}


def vt_config_from_dict(doc: dict) -> tuple[VtConfig, str | None]:
    """Build a VtConfig from a plain JSON-style dict.

    Returns the config and the signature model path (None if absent).
    Unknown keys are rejected.
    """
    import jsonschema

    try:
        jsonschema.validate(doc, VT_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigSchemaError(f"bad virtual player config: {exc.message}") from exc
    hkb = HkbParams(
        alpha=doc.get("alpha", 1.0),
        beta=doc.get("beta", 2.0),
        gamma=doc.get("gamma", -1.0),
        omega=doc.get("omega", FOLLOWER_OMEGA),
    )
    cfg = VtConfig(
        hkb=hkb,
        theta_p=doc.get("theta_p", FOLLOWER_THETA_P),
        eta=doc.get("eta", 1e-4),
        horizon_s=doc.get("horizon_s", 0.03),
        u_max=doc.get("u_max", 10.0),
        tick_hz=doc.get("tick_hz", 10.0),
    )
    return cfg, doc.get("ims_model_path")


def load_vt_config(path: str | os.PathLike) -> tuple[VtConfig, str | None]:
    """Read a virtual player config JSON file.

    A relative ``ims_model_path`` is resolved against the config file's
    directory.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DegenerateInputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigSchemaError(f"config {path} must be a JSON object")
    cfg, model_path = vt_config_from_dict(doc)
    if model_path is not None and not os.path.isabs(model_path):
        model_path = os.path.join(os.path.dirname(os.fspath(path)), model_path)
    return cfg, model_path


def role_preset(role: str) -> tuple[float, float]:
    """(theta_p, omega) preset for a named role."""
    if role == "leader":
        return LEADER_THETA_P, LEADER_OMEGA
    if role == "follower":
        return FOLLOWER_THETA_P, FOLLOWER_OMEGA
    raise DegenerateInputError(f"role must be 'leader' or 'follower', got {role!r}")
