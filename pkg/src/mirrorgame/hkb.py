"""Driven nonlinear oscillator used as the virtual player's body.

The motion model is a second-order oscillator with amplitude- and
velocity-dependent damping (the HKB form familiar from coordination
dynamics):

    x'' = u - (alpha x^2 + beta x'^2 - gamma) x' - omega^2 x

With gamma > 0 the damping term is negative near the origin, so the
unforced oscillator settles into a stable limit cycle; the control
input u steers it. States are integrated with a classical fourth-order
Runge-Kutta step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, NumericBlowupError
from .validation import check_positive

# RK4 with the stiffness of this vector field degrades fast beyond this step
MAX_DT = 0.05


@dataclass(frozen=True)
class HkbParams:
    """Oscillator coefficients.

    alpha and beta shape the state-dependent damping, gamma its linear
    part (gamma > 0 destabilizes rest and sustains the limit cycle), and
    omega is the linear stiffness frequency in rad/s.
    """

    alpha: float = 1.0
    beta: float = 2.0
    gamma: float = -1.0
    omega: float = 0.1

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "omega"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise DegenerateInputError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, float(v))


@dataclass(frozen=True)
class HkbState:
    """Oscillator state: position and velocity."""

    x: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.v)):
            raise DegenerateInputError(f"state must be finite, got ({self.x}, {self.v})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "v", float(self.v))


def hkb_accel(x: float, v: float, p: HkbParams, u: float) -> float:
    """Acceleration of the driven oscillator at state (x, v) under input u."""
    return u - (p.alpha * x * x + p.beta * v * v - p.gamma) * v - p.omega * p.omega * x


def hkb_step(state: HkbState, p: HkbParams, u: float, dt: float) -> HkbState:
    """Advance the oscillator one RK4 step of size dt under constant input u.

    dt must lie in (0, 0.05]. Raises NumericBlowupError if the step
    produces a non-finite state.
    """
    check_positive(dt, "dt")
    if dt > MAX_DT:
        raise DegenerateInputError(f"dt must be <= {MAX_DT}, got {dt}")
    if not np.isfinite(u):
        raise DegenerateInputError(f"control input must be finite, got {u}")
    x, v = state.x, state.v

    a1 = hkb_accel(x, v, p, u)
    k1x, k1v = v, a1
    a2 = hkb_accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, p, u)
    k2x, k2v = v + 0.5 * dt * k1v, a2
    a3 = hkb_accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, p, u)
    k3x, k3v = v + 0.5 * dt * k2v, a3
    a4 = hkb_accel(x + dt * k3x, v + dt * k3v, p, u)
    k4x, k4v = v + dt * k3v, a4

    x2 = x + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
    v2 = v + dt * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
    if not (np.isfinite(x2) and np.isfinite(v2)):
        raise NumericBlowupError(
            f"integration diverged from ({x}, {v}) with u={u}, dt={dt}"
        )
    return HkbState(x2, v2)
