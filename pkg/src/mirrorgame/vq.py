"""Vector quantization of spectral feature vectors (Lloyd clustering).

Feature vectors are one-sided complex spectra of windowed motion
frames. For clustering they are embedded in a real space by stacking
real and imaginary parts, and distances are plain Euclidean distances
in that space. The codebook maps every feature vector to the nearest
of ``n_levels`` prototype vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InsufficientDataError, ShapeMismatchError, SymbolRangeError
from .validation import as_complex_matrix, check_int, make_rng

# relative distortion improvement below which Lloyd iteration stops
_REL_TOL = 1e-6
_MAX_ITER = 500


@dataclass(frozen=True)
class Codebook:
    """A set of prototype feature vectors.

    Parameters
    ----------
    prototypes : numpy.ndarray
        Complex array of shape (n_levels, n_bins); rows are pairwise
        distinct.
    """

    prototypes: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "prototypes", as_complex_matrix(self.prototypes, "prototypes")
        )

    @property
    def n_levels(self) -> int:
        return self.prototypes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.prototypes.shape[1]


def _stack_real(features: np.ndarray) -> np.ndarray:
    """Embed complex feature vectors in R^(2*n_bins)."""
    return np.hstack([features.real, features.imag])


def _unstack_real(stacked: np.ndarray) -> np.ndarray:
    d = stacked.shape[1] // 2
    return stacked[:, :d] + 1j * stacked[:, d:]


def build_codebook(features, n_levels: int, seed) -> Codebook:
    """Fit a codebook to feature vectors by Lloyd iteration.

    Prototypes are initialized from a random sample of the distinct
    feature vectors, then alternately (a) features are assigned to the
    nearest prototype and (b) prototypes move to the mean of their
    assignment. A prototype whose cell empties (including one that has
    collapsed onto a duplicate) is re-seeded at the feature currently
    farthest from its assigned prototype. Iteration stops when the mean
    squared quantization distortion improves by less than a factor of
    1e-6, or after 500 sweeps.

    If the corpus holds fewer distinct feature vectors than requested
    levels, the codebook is shrunk to the number of distinct vectors.

    Parameters
    ----------
    features : array-like
        Complex array of shape (n_features, n_bins).
    n_levels : int
        Requested codebook size (>= 1).
    seed : int or numpy.random.Generator
        Source of randomness for initialization.
    """
    features = as_complex_matrix(features, "features")
    n_levels = check_int(n_levels, "n_levels", 1)
    pts = _stack_real(features)
    n = pts.shape[0]
    if n < n_levels:
        raise InsufficientDataError(
            f"{n} feature vectors cannot support a codebook of {n_levels} levels"
        )
    uniq = np.unique(pts, axis=0)
    n_levels = min(n_levels, uniq.shape[0])
    rng = make_rng(seed)

    init_idx = rng.choice(uniq.shape[0], size=n_levels, replace=False)
    protos = uniq[np.sort(init_idx)].copy()

    prev = np.inf
    for _ in range(_MAX_ITER):
        d2 = cdist(pts, protos, "sqeuclidean")
        assign = np.argmin(d2, axis=1)
        nearest = d2[np.arange(n), assign]
        distortion = float(nearest.mean())

        counts = np.bincount(assign, minlength=n_levels)
        for j in range(n_levels):
            if counts[j] > 0:
                protos[j] = pts[assign == j].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # re-seed each empty cell at the worst-quantized feature,
            # then keep iterating; never test convergence on this sweep
            order = np.argsort(nearest)[::-1]
            for j, k in zip(empty, order):
                protos[j] = pts[k]
            prev = distortion
            continue

        if np.unique(protos, axis=0).shape[0] < n_levels:
            # two cell means collapsed; the next assignment will empty one
            # and re-seed it, so do not stop here
            prev = distortion
            continue
        if distortion == 0.0:
            break
        if np.isfinite(prev) and (prev - distortion) <= _REL_TOL * prev:
            break
        prev = distortion

    return Codebook(_unstack_real(protos))


def quantize(features, codebook: Codebook) -> np.ndarray:
    """Map feature vectors to the index of the nearest prototype.

    Ties break toward the lowest index. Returns an int64 array of
    symbols in ``[0, n_levels)``.
    """
    features = as_complex_matrix(features, "features")
    if features.shape[1] != codebook.n_bins:
        raise ShapeMismatchError(
            f"features have {features.shape[1]} bins, codebook has {codebook.n_bins}"
        )
    d2 = cdist(_stack_real(features), _stack_real(codebook.prototypes), "sqeuclidean")
    return np.argmin(d2, axis=1).astype(np.int64)


def dequantize(symbols, codebook: Codebook) -> np.ndarray:
    """Look up prototype feature vectors for a symbol sequence."""
    symbols = np.asarray(symbols)
    if symbols.ndim != 1 or symbols.size == 0:
        raise ShapeMismatchError("symbols must be a non-empty 1-D integer array")
    if not np.issubdtype(symbols.dtype, np.integer):
        raise SymbolRangeError("symbols must be integers")
    if symbols.min() < 0 or symbols.max() >= codebook.n_levels:
        raise SymbolRangeError(
            f"symbols must lie in [0, {codebook.n_levels}), "
            f"got range [{symbols.min()}, {symbols.max()}]"
        )
    return codebook.prototypes[symbols]


def distortion(features, codebook: Codebook) -> float:
    """Mean squared distance from features to their nearest prototype."""
    features = as_complex_matrix(features, "features")
    d2 = cdist(_stack_real(features), _stack_real(codebook.prototypes), "sqeuclidean")
    return float(d2.min(axis=1).mean())
