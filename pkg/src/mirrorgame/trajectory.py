"""Uniformly sampled 1-D position signals and resampling utilities.

The whole toolkit works on one-dimensional end-effector motion recorded
on a normalized play axis: position nominally in [0, 1], sampled at a
fixed rate. ``Trajectory`` is the carrier type for such signals and the
CSV format here is the on-disk interchange format for recorded trials.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateInputError, ShapeMismatchError
from .validation import as_float_array, check_positive


@dataclass(frozen=True)
class Trajectory:
    """A uniformly sampled 1-D position signal.

    Parameters
    ----------
    samples : numpy.ndarray
        Position samples, nominally normalized to the [0, 1] play axis.
    rate_hz : float
        Sampling rate in Hz.
    t0 : float
        Time of the first sample in seconds.
    """

    samples: np.ndarray
    rate_hz: float
    t0: float = 0.0

    def __post_init__(self):
        samples = as_float_array(self.samples, "samples", min_len=2).copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "rate_hz", check_positive(self.rate_hz, "rate_hz"))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def duration_s(self) -> float:
        """Time span between first and last sample."""
        return (len(self) - 1) / self.rate_hz

    def times(self) -> np.ndarray:
        """Sample instants in seconds."""
        return self.t0 + np.arange(len(self)) / self.rate_hz

    def velocity(self) -> np.ndarray:
        """Velocity by central differences, one-sided at the ends.

        Returns an array of the same length as ``samples`` so velocity
        series stay aligned with position series.
        """
        if len(self) < 2:
            raise DegenerateInputError("velocity needs at least 2 samples")
        return np.gradient(self.samples, self.dt)


def resample(tr: Trajectory, new_rate_hz: float) -> Trajectory:
    """Resample a trajectory to a new rate by cubic spline interpolation.

    The new grid starts at ``tr.t0`` and covers the original time span;
    instants shared with the original grid reproduce the original values.
    Resampling at the original rate is the identity.

    Parameters
    ----------
    tr : Trajectory
        Input signal with at least 2 samples.
    new_rate_hz : float
        Target sampling rate in Hz.
    """
    new_rate_hz = check_positive(new_rate_hz, "new_rate_hz")
    if len(tr) < 2:
        raise DegenerateInputError("resample needs at least 2 samples")
    if new_rate_hz == tr.rate_hz:
        return tr
    span = (len(tr) - 1) / tr.rate_hz
    # small epsilon so exact rate multiples keep their last grid point
    n_new = int(np.floor(span * new_rate_hz + 1e-9)) + 1
    t_old = np.arange(len(tr)) / tr.rate_hz
    t_new = np.arange(n_new) / new_rate_hz
    spline = CubicSpline(t_old, tr.samples)
    return Trajectory(spline(t_new), new_rate_hz, tr.t0)


def save_csv(tr: Trajectory, path: str | os.PathLike) -> None:
    """Write a trajectory as ``t,x`` CSV with a header row.

    Time is written with 6 decimal places; position with full float
    precision so load/save round-trips are lossless.
    """
    buf = io.StringIO()
    buf.write("t,x\n")
    for t, x in zip(tr.times(), tr.samples):
        buf.write(f"{t:.6f},{float(x)!r}\n")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(buf.getvalue())


def load_csv(path: str | os.PathLike) -> Trajectory:
    """Read a ``t,x`` CSV written by :func:`save_csv` (or compatible).

    The file must have a header row, at least 2 data rows, and uniformly
    spaced time stamps.
    """
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (ValueError, OSError) as exc:
        raise DegenerateInputError(f"cannot parse trajectory CSV {path}: {exc}") from exc
    if data.shape[0] < 2 or data.shape[1] != 2:
        raise DegenerateInputError(
            f"trajectory CSV {path} must have 2 columns and >= 2 rows, got {data.shape}"
        )
    t, x = data[:, 0], data[:, 1]
    dt = np.diff(t)
    if dt.min() <= 0 or (dt.max() - dt.min()) > 1e-4 * dt.mean():
        raise ShapeMismatchError(f"trajectory CSV {path} has non-uniform time stamps")
    rate = (len(t) - 1) / (t[-1] - t[0])
    # snap rates that are only off by text round-off (e.g. 9.9999999 -> 10)
    rate = float(f"{rate:.9g}")
    return Trajectory(x, rate, t0=float(t[0]))
