"""Velocity-profile distributions and the earth mover's distance.

The velocity PDF on a fixed support is the core "who is moving" or "who
does it feel like" descriptor: two motions are compared by how much
probability mass must be transported to turn one velocity histogram
into the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, ShapeMismatchError
from ..trajectory import Trajectory
from ..validation import check_int

DEFAULT_RANGE = (-2.0, 2.0)
DEFAULT_BINS = 101

_AREA_TOL = 1e-9


@dataclass(frozen=True)
class VelocityPdf:
    """A normalized histogram density over a velocity support.

    Parameters
    ----------
    bin_edges : numpy.ndarray
        Monotone array of length n_bins + 1.
    density : numpy.ndarray
        Per-bin density values; integrates to 1 over the support.
    """

    bin_edges: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if edges.ndim != 1 or dens.ndim != 1 or edges.size != dens.size + 1:
            raise ShapeMismatchError(
                f"need len(bin_edges) == len(density) + 1, got {edges.size} and {dens.size}"
            )
        if dens.size < 1 or np.any(np.diff(edges) <= 0):
            raise DegenerateInputError("bin_edges must be strictly increasing")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise DegenerateInputError("density must be finite and non-negative")
        area = float(np.sum(dens * np.diff(edges)))
        if abs(area - 1.0) > _AREA_TOL:
            raise DegenerateInputError(f"density must integrate to 1, got {area}")
        object.__setattr__(self, "bin_edges", np.ascontiguousarray(edges))
        object.__setattr__(self, "density", np.ascontiguousarray(dens))

    @property
    def n_bins(self) -> int:
        return self.density.size

    @property
    def support(self) -> tuple[float, float]:
        return float(self.bin_edges[0]), float(self.bin_edges[-1])

    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def cdf_at_edges(self) -> np.ndarray:
        """Cumulative distribution sampled at the bin edges (starts at 0)."""
        c = np.concatenate([[0.0], np.cumsum(self.density * np.diff(self.bin_edges))])
        c[-1] = min(c[-1], 1.0)
        return c


def velocity_pdf(
    tr: Trajectory,
    n_bins: int = DEFAULT_BINS,
    v_range: tuple[float, float] = DEFAULT_RANGE,
) -> VelocityPdf:
    """Histogram density of a trajectory's velocity profile.

    Velocity comes from central differences; samples outside the support
    are clipped onto the boundary bins so the density always integrates
    to 1 over the fixed support and distributions stay comparable.
    """
    n_bins = check_int(n_bins, "n_bins", 1)
    lo, hi = float(v_range[0]), float(v_range[1])
    if not lo < hi:
        raise DegenerateInputError(f"v_range must be increasing, got ({lo}, {hi})")
    v = tr.velocity()
    edges = np.linspace(lo, hi, n_bins + 1)
    v = np.clip(v, lo, hi)
    hist, _ = np.histogram(v, bins=edges)
    dens = hist / (v.size * (edges[1] - edges[0]))
    return VelocityPdf(edges, dens)


def emd(p: VelocityPdf, q: VelocityPdf) -> float:
    """Earth mover's distance between two densities on a shared support.

    Computed as the exact integral of the absolute difference between
    the two piecewise-linear CDFs, divided by the support width, so the
    result is a dimensionless value in [0, 1]. Symmetric, zero on
    identical inputs.
    """
    if p.bin_edges.shape != q.bin_edges.shape or not np.allclose(
        p.bin_edges, q.bin_edges, rtol=0, atol=1e-12
    ):
        raise ShapeMismatchError("EMD requires PDFs on the same bin grid")
    edges = p.bin_edges
    d = p.cdf_at_edges() - q.cdf_at_edges()
    width = np.diff(edges)
    a, b = d[:-1], d[1:]
    same = a * b >= 0
    seg = np.empty_like(width)
    seg[same] = 0.5 * width[same] * (np.abs(a[same]) + np.abs(b[same]))
    cross = ~same
    # linear segment changes sign inside the bin: integrate each triangle
    seg[cross] = 0.5 * width[cross] * (a[cross] ** 2 + b[cross] ** 2) / (
        np.abs(a[cross]) + np.abs(b[cross])
    )
    return float(seg.sum() / (edges[-1] - edges[0]))
