"""Input validation helpers used across the public API.

These mirror the conventions of scikit-learn's ``check_array`` style
utilities but raise the toolkit's own exception types so the CLI can
map failures onto stable exit codes.
"""

from __future__ import annotations

import numbers

import numpy as np

from .errors import DegenerateInputError, ShapeMismatchError


def as_float_array(x, name: str = "array", min_len: int = 1) -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 array and validate it.

    Parameters
    ----------
    x : array-like
        Input values.
    name : str
        Name used in error messages.
    min_len : int
        Minimum number of elements required.

    Returns
    -------
    numpy.ndarray
        The input as a contiguous float64 array (copied only when a
        conversion is needed).
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < min_len:
        raise DegenerateInputError(
            f"{name} needs at least {min_len} samples, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def as_complex_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a 2-D complex128 array with finite entries."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DegenerateInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def check_positive(value, name: str, strict: bool = True) -> float:
    """Validate that ``value`` is a finite positive scalar and return it."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DegenerateInputError(f"{name} must be a real number, got {value!r}")
    v = float(value)
    if not np.isfinite(v):
        raise DegenerateInputError(f"{name} must be finite, got {v}")
    if strict and v <= 0:
        raise DegenerateInputError(f"{name} must be > 0, got {v}")
    if not strict and v < 0:
        raise DegenerateInputError(f"{name} must be >= 0, got {v}")
    return v


def check_in_range(value, name: str, lo: float, hi: float) -> float:
    """Validate that ``value`` lies in the closed interval [lo, hi]."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DegenerateInputError(f"{name} must be a real number, got {value!r}")
    v = float(value)
    if not (lo <= v <= hi):
        raise DegenerateInputError(f"{name} must lie in [{lo}, {hi}], got {v}")
    return v


def check_int(value, name: str, minimum: int | None = None) -> int:
    """Validate that ``value`` is an integer (optionally >= minimum)."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DegenerateInputError(f"{name} must be an integer, got {value!r}")
    v = int(value)
    if minimum is not None and v < minimum:
        raise DegenerateInputError(f"{name} must be >= {minimum}, got {v}")
    return v


def make_rng(seed) -> np.random.Generator:
    """Build a Generator from a seed, SeedSequence, or existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise DegenerateInputError("an explicit seed is required for reproducibility")
    return np.random.default_rng(seed)


def spawn_seed(base_seed: int, *key: int) -> np.random.SeedSequence:
    """Derive an independent child seed from ``base_seed`` and an index key.

    The same (base, key) pair always yields the same stream, and distinct
    keys yield statistically independent streams, which keeps batch runs
    reproducible regardless of execution order or parallelism.
    """
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))
