"""Temporal coordination metrics between two position signals.

Includes position RMSE, instantaneous relative phase through the
analytic signal, and the circular variance of the relative phase (1
means phase-locked, 0 means no preferred phase relation). Positive
relative phase means the first-named signal leads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import hilbert

from ..errors import DegenerateInputError, ShapeMismatchError, UndefinedPhaseError
from ..trajectory import Trajectory
from ..validation import as_float_array, check_positive

# analytic-signal envelope floor below which the angle carries no information
_ENVELOPE_TINY = 1e-6
# fraction trimmed from each end before phase summary statistics
_EDGE_TRIM = 0.05


@dataclass(frozen=True)
class PhaseSeries:
    """An unwrapped phase (or phase difference) series in radians."""

    phi: np.ndarray
    rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "phi", as_float_array(self.phi, "phi"))
        object.__setattr__(self, "rate_hz", check_positive(self.rate_hz, "rate_hz"))


class PhaseSummary(NamedTuple):
    mean: float
    std: float


def _pair(a: Trajectory, b: Trajectory) -> tuple[np.ndarray, np.ndarray, float]:
    if not isinstance(a, Trajectory) or not isinstance(b, Trajectory):
        raise ShapeMismatchError("expected two Trajectory inputs")
    if a.rate_hz != b.rate_hz:
        raise ShapeMismatchError(
            f"rates differ: {a.rate_hz} Hz vs {b.rate_hz} Hz"
        )
    if len(a) != len(b):
        raise ShapeMismatchError(f"lengths differ: {len(a)} vs {len(b)}")
    return a.samples, b.samples, a.rate_hz


def rmse(a: Trajectory, b: Trajectory) -> float:
    """Root mean squared position difference between two signals."""
    xa, xb, _ = _pair(a, b)
    return float(np.sqrt(np.mean((xa - xb) ** 2)))


def _analytic_phase(x: np.ndarray, name: str) -> np.ndarray:
    z = hilbert(x - x.mean())
    if np.abs(z).max() < _ENVELOPE_TINY:
        raise UndefinedPhaseError(
            f"{name} is too flat for a meaningful instantaneous phase"
        )
    return np.unwrap(np.angle(z))


def relative_phase(a: Trajectory, b: Trajectory) -> tuple[PhaseSeries, PhaseSummary]:
    """Instantaneous relative phase between two equally sampled signals.

    Each signal is mean-removed and lifted to its analytic signal; the
    relative phase is the difference of the unwrapped instantaneous
    angles, so a positive value means ``a`` leads ``b``. The summary
    (mean, standard deviation) is taken after trimming 5% of samples
    from each end, where the analytic signal is least reliable.
    """
    xa, xb, rate = _pair(a, b)
    if xa.size < 4:
        raise DegenerateInputError("relative phase needs at least 4 samples")
    dphi = _analytic_phase(xa, "first signal") - _analytic_phase(xb, "second signal")
    n_trim = int(np.floor(_EDGE_TRIM * dphi.size))
    core = dphi[n_trim : dphi.size - n_trim] if n_trim else dphi
    # edge ringing can absorb a 2 pi jump inside the trimmed zone and
    # park the whole series on the wrong branch; anchor it where the
    # analytic signal is reliable (first core sample into (-pi, pi])
    shift = 2.0 * np.pi * np.round(core[0] / (2.0 * np.pi))
    if shift != 0.0:
        dphi = dphi - shift
        core = core - shift
    return (
        PhaseSeries(dphi, rate),
        PhaseSummary(float(core.mean()), float(core.std())),
    )


def circular_variance(dphi) -> float:
    """Mean resultant length of a phase-difference series.

    ``|mean(exp(i * dphi))|``: 1 when the phase difference is constant
    (perfect coordination), near 0 when it is spread around the circle.
    """
    if isinstance(dphi, PhaseSeries):
        phi = dphi.phi
    else:
        phi = as_float_array(dphi, "dphi")
    return float(np.abs(np.exp(1j * phi).mean()))


def windowed_cv(
    x_a,
    x_b,
    rate_hz: float,
    window_s: float = 10.0,
    min_samples: int = 20,
) -> float:
    """Circular variance over the trailing window of two position streams.

    Used for the live coordination readout during play: takes the last
    ``window_s`` seconds of both streams, computes the relative phase on
    just that window, and returns its circular variance. Returns NaN
    while fewer than ``min_samples`` samples are available or when either
    window is too flat for a phase estimate.
    """
    xa = as_float_array(x_a, "x_a")
    xb = as_float_array(x_b, "x_b")
    if xa.size != xb.size:
        raise ShapeMismatchError(f"stream lengths differ: {xa.size} vs {xb.size}")
    check_positive(rate_hz, "rate_hz")
    check_positive(window_s, "window_s")
    n = min(xa.size, int(round(window_s * rate_hz)))
    if n < max(int(min_samples), 4):
        return float("nan")
    try:
        a = Trajectory(xa[-n:], rate_hz)
        b = Trajectory(xb[-n:], rate_hz)
        series, _ = relative_phase(a, b)
    except UndefinedPhaseError:
        return float("nan")
    return circular_variance(series)
