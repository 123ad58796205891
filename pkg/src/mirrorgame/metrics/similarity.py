"""Low-dimensional similarity space over velocity-profile distributions.

Pairwise earth mover's distances between velocity PDFs are embedded in
the plane by classical (Torgerson) multidimensional scaling. Repeated
observations of one player form a labeled cloud; each cloud is
summarized by its mean and a 2-sigma covariance ellipse, and two
players' similarity is scored by the overlap of their ellipses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, ShapeMismatchError
from ..validation import check_int
from .distributions import VelocityPdf, emd

# Mahalanobis radius of the drawn/integrated ellipse boundary
_ELLIPSE_NSIGMA = 2.0
_DEFAULT_RESOLUTION = 2048


@dataclass(frozen=True)
class Ellipse:
    """Mean and covariance of one labeled point cloud in the plane."""

    center: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        s = np.asarray(self.cov, dtype=float)
        if c.shape != (2,) or s.shape != (2, 2):
            raise ShapeMismatchError(
                f"center must be (2,) and cov (2, 2), got {c.shape} and {s.shape}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
            raise DegenerateInputError("ellipse parameters must be finite")
        if abs(s[0, 1] - s[1, 0]) > 1e-12 * max(1.0, abs(s[0, 1])):
            raise DegenerateInputError("covariance must be symmetric")
        eig = np.linalg.eigvalsh(s)
        if eig.min() <= 0:
            raise DegenerateInputError(
                f"covariance must be positive definite, eigenvalues {eig}"
            )
        object.__setattr__(self, "center", np.ascontiguousarray(c))
        object.__setattr__(self, "cov", np.ascontiguousarray(s))

    def contains(self, pts: np.ndarray, n_sigma: float = _ELLIPSE_NSIGMA) -> np.ndarray:
        """Membership test for an (n, 2) array of points."""
        d = pts - self.center
        sol = np.linalg.solve(self.cov, d.T).T
        return np.einsum("ij,ij->i", d, sol) <= n_sigma**2

    def bbox(self, n_sigma: float = _ELLIPSE_NSIGMA) -> tuple[float, float, float, float]:
        """Axis-aligned bounding box (xmin, xmax, ymin, ymax)."""
        ext = n_sigma * np.sqrt(np.diag(self.cov))
        return (
            float(self.center[0] - ext[0]),
            float(self.center[0] + ext[0]),
            float(self.center[1] - ext[1]),
            float(self.center[1] + ext[1]),
        )


@dataclass(frozen=True)
class SimilarityMap:
    """Planar embedding of velocity PDFs with per-label ellipses."""

    points: np.ndarray
    labels: tuple
    ellipses: dict

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ShapeMismatchError(f"points must be (n, 2), got {p.shape}")
        if p.shape[0] != len(self.labels):
            raise ShapeMismatchError("one label per point is required")
        object.__setattr__(self, "points", np.ascontiguousarray(p))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))


def _classical_mds_2d(dist: np.ndarray) -> np.ndarray:
    """Classical MDS: double-center the squared distances, take the top
    two non-negative eigenpairs, and fix each coordinate's sign so the
    first point with a non-zero value on that axis is positive."""
    n = dist.shape[0]
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (dist**2) @ j
    vals, vecs = np.linalg.eigh(b)
    order = np.argsort(vals)[::-1][:2]
    pts = np.zeros((n, 2))
    for k, idx in enumerate(order):
        lam = vals[idx]
        if lam <= 0:
            continue
        col = vecs[:, idx] * np.sqrt(lam)
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            col = -col
        pts[:, k] = col
    return pts


def similarity_space(pdfs, labels) -> SimilarityMap:
    """Embed velocity PDFs in the plane by their pairwise EMD.

    Parameters
    ----------
    pdfs : sequence of VelocityPdf
        One distribution per observation (all on the same bin grid).
    labels : sequence of str
        Player/source label per observation; every label that occurs at
        least 3 times with non-degenerate scatter gets a 2-sigma
        covariance ellipse in the result.
    """
    pdfs = list(pdfs)
    labels = [str(s) for s in labels]
    if len(pdfs) != len(labels):
        raise ShapeMismatchError("need exactly one label per distribution")
    if len(pdfs) < 2:
        raise DegenerateInputError("similarity space needs at least 2 distributions")
    for i, p in enumerate(pdfs):
        if not isinstance(p, VelocityPdf):
            raise ShapeMismatchError(f"input {i} is not a VelocityPdf")

    n = len(pdfs)
    dist = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            dist[i, k] = dist[k, i] = emd(pdfs[i], pdfs[k])

    pts = _classical_mds_2d(dist)

    ellipses = {}
    for lab in dict.fromkeys(labels):
        sel = pts[[i for i, s in enumerate(labels) if s == lab]]
        if sel.shape[0] < 3:
            continue
        cov = np.cov(sel, rowvar=False, ddof=1)
        if np.linalg.eigvalsh(cov).min() <= 1e-15:
            continue
        ellipses[lab] = Ellipse(sel.mean(axis=0), cov)
    return SimilarityMap(pts, tuple(labels), ellipses)


def ellipse_overlap(
    e1: Ellipse, e2: Ellipse, resolution: int = _DEFAULT_RESOLUTION
) -> float:
    """Area overlap of two 2-sigma ellipses.

    Returns intersection area divided by union area, evaluated by
    midpoint counting on a ``resolution x resolution`` grid over the
    joint bounding box: 1 for identical ellipses, 0 for disjoint ones.
    """
    check_int(resolution, "resolution", 16)
    b1 = e1.bbox()
    b2 = e2.bbox()
    xmin, xmax = min(b1[0], b2[0]), max(b1[1], b2[1])
    ymin, ymax = min(b1[2], b2[2]), max(b1[3], b2[3])
    xs = np.linspace(xmin, xmax, resolution + 1)
    ys = np.linspace(ymin, ymax, resolution + 1)
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    gx, gy = np.meshgrid(cx, cy)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    in1 = e1.contains(pts)
    in2 = e2.contains(pts)
    union = np.count_nonzero(in1 | in2)
    if union == 0:
        raise DegenerateInputError("both ellipses have vanishing area on the grid")
    return float(np.count_nonzero(in1 & in2) / union)
