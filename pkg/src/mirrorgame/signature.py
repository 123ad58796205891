"""Individual motor signature models: training and trajectory synthesis.

A player's motor signature is captured as the distribution of their
velocity profiles. Recorded solo trials are resampled to a common rate,
cut into windowed spectral feature vectors, quantized against a learned
codebook, and the symbol stream is summarized by a first-order Markov
chain. Sampling the chain and resynthesizing by overlap-add produces
new motion with the same spectral habit as the recordings: an endless,
non-repeating stand-in for the original player.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    ShapeMismatchError,
)
from .spectral import FrameSpec, istft_ola, stft
from .trajectory import Trajectory, resample
from .validation import check_int, check_positive, make_rng
from .vq import Codebook, build_codebook, dequantize, quantize

_ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MarkovChainModel:
    """First-order Markov chain over codebook symbols.

    Parameters
    ----------
    codebook : Codebook
        Prototype feature vectors; state i is the i-th prototype.
    transition : numpy.ndarray
        Row-stochastic matrix of shape (n_levels, n_levels).
    initial_state : int
        Starting symbol for synthesis (the most frequent training symbol).
    frame_spec : FrameSpec
        Framing geometry the features were computed with.
    rate_hz : float
        Sampling rate of the analyzed (and synthesized) signals.
    """

    codebook: Codebook
    transition: np.ndarray
    initial_state: int
    frame_spec: FrameSpec
    rate_hz: float

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        n = self.codebook.n_levels
        if t.shape != (n, n):
            raise ShapeMismatchError(
                f"transition must be ({n}, {n}) to match the codebook, got {t.shape}"
            )
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise DegenerateInputError("transition entries must be finite and >= 0")
        if np.max(np.abs(t.sum(axis=1) - 1.0)) > _ROW_SUM_TOL:
            raise DegenerateInputError("transition rows must each sum to 1")
        object.__setattr__(self, "transition", np.ascontiguousarray(t))
        object.__setattr__(
            self, "initial_state", check_int(self.initial_state, "initial_state", 0)
        )
        if self.initial_state >= n:
            raise DegenerateInputError(
                f"initial_state {self.initial_state} outside [0, {n})"
            )
        object.__setattr__(self, "rate_hz", check_positive(self.rate_hz, "rate_hz"))

    @property
    def n_levels(self) -> int:
        return self.codebook.n_levels

    def stationary_distribution(self, tol: float = 1e-12, max_iter: int = 100000) -> np.ndarray:
        """Stationary distribution by power iteration from the uniform vector."""
        p = np.full(self.n_levels, 1.0 / self.n_levels)
        for _ in range(max_iter):
            nxt = p @ self.transition
            if np.abs(nxt - p).max() < tol:
                return nxt
            p = nxt
        return p


def estimate_transitions(sequences, n_levels: int) -> tuple[np.ndarray, int]:
    """Maximum-likelihood transition matrix from symbol sequences.

    Bigram counts are accumulated within each sequence (never across
    sequence boundaries) and rows are normalized. A symbol that never
    appears as a bigram source keeps a self-loop row so the matrix stays
    stochastic.

    Returns
    -------
    (transition, initial_state)
        The row-stochastic matrix and the most frequent symbol overall
        (ties break toward the lowest symbol).
    """
    n_levels = check_int(n_levels, "n_levels", 1)
    seqs = []
    for s in sequences:
        s = np.asarray(s)
        if s.ndim != 1:
            raise ShapeMismatchError("each symbol sequence must be 1-D")
        if s.size == 0:
            continue
        if not np.issubdtype(s.dtype, np.integer):
            raise ShapeMismatchError("symbol sequences must be integer arrays")
        if s.min() < 0 or s.max() >= n_levels:
            raise DegenerateInputError(
                f"symbols must lie in [0, {n_levels}), got [{s.min()}, {s.max()}]"
            )
        seqs.append(s.astype(np.int64))
    if not seqs:
        raise InsufficientDataError("no symbols to estimate transitions from")

    counts = np.zeros((n_levels, n_levels))
    occur = np.zeros(n_levels, dtype=np.int64)
    for s in seqs:
        np.add.at(occur, s, 1)
        if s.size >= 2:
            np.add.at(counts, (s[:-1], s[1:]), 1)

    transition = np.zeros_like(counts)
    row_tot = counts.sum(axis=1)
    has = row_tot > 0
    transition[has] = counts[has] / row_tot[has, None]
    dead = np.flatnonzero(~has)
    transition[dead, dead] = 1.0
    initial_state = int(np.argmax(occur))
    return transition, initial_state


def sample_symbols(model: MarkovChainModel, n: int, seed, start: int | None = None) -> np.ndarray:
    """Draw a symbol path of length ``n`` from the chain.

    The path starts at ``start`` (default: the model's initial state) and
    is advanced by inverse-CDF sampling of each row, so a given seed
    always yields the same path.
    """
    n = check_int(n, "n", 1)
    rng = make_rng(seed)
    state = model.initial_state if start is None else check_int(start, "start", 0)
    if state >= model.n_levels:
        raise DegenerateInputError(f"start symbol {state} outside [0, {model.n_levels})")
    cum = np.cumsum(model.transition, axis=1)
    cum[:, -1] = 1.0
    out = np.empty(n, dtype=np.int64)
    out[0] = state
    u = rng.random(n - 1) if n > 1 else ()
    for i in range(1, n):
        state = int(np.searchsorted(cum[state], u[i - 1], side="right"))
        out[i] = state
    return out


def train_signature_model(
    trials,
    n_levels: int = 256,
    frame_spec: FrameSpec = FrameSpec(),
    rate_hz: float = 100.0,
    seed=0,
) -> MarkovChainModel:
    """Fit a motor signature model to recorded solo trials.

    Each trial is resampled to ``rate_hz``, transformed to spectral
    feature vectors, and quantized against a codebook fit on the pooled
    features of all trials; the per-trial symbol sequences then drive
    the transition estimate.

    Parameters
    ----------
    trials : sequence of Trajectory
        Recorded position signals, each long enough for one window after
        resampling.
    n_levels : int
        Codebook size to request (the fit may shrink it if the corpus
        has fewer distinct feature vectors).
    frame_spec : FrameSpec
        Analysis framing geometry.
    rate_hz : float
        Common analysis rate.
    seed : int or numpy.random.Generator
        Randomness for codebook initialization.
    """
    rate_hz = check_positive(rate_hz, "rate_hz")
    trials = list(trials)
    if not trials:
        raise InsufficientDataError("no trials given")
    per_trial = []
    for i, tr in enumerate(trials):
        if not isinstance(tr, Trajectory):
            raise ShapeMismatchError(f"trial {i} is not a Trajectory")
        r = tr if tr.rate_hz == rate_hz else resample(tr, rate_hz)
        if len(r) < frame_spec.window_len:
            raise DegenerateInputError(
                f"trial {i} has {len(r)} samples at {rate_hz} Hz, "
                f"shorter than one window ({frame_spec.window_len})"
            )
        per_trial.append(stft(r, frame_spec))

    pooled = np.vstack(per_trial)
    codebook = build_codebook(pooled, n_levels, seed)
    sequences = [quantize(f, codebook) for f in per_trial]
    transition, initial_state = estimate_transitions(sequences, codebook.n_levels)
    return MarkovChainModel(codebook, transition, initial_state, frame_spec, rate_hz)


def synthesize(model: MarkovChainModel, duration_s: float, seed) -> Trajectory:
    """Generate a new trajectory from a signature model.

    A symbol path long enough to cover ``duration_s`` is sampled from
    the chain, prototype feature vectors are resynthesized by
    overlap-add, and the result is trimmed to ``round(duration_s *
    rate_hz)`` samples, re-centered on 0.5, and clipped to the [0, 1]
    play axis.
    """
    check_positive(duration_s, "duration_s")
    spec = model.frame_spec
    n_target = int(round(duration_s * model.rate_hz))
    if n_target < spec.window_len:
        raise DegenerateInputError(
            f"duration {duration_s} s gives {n_target} samples, "
            f"shorter than one window ({spec.window_len})"
        )
    n_frames = int(np.ceil((n_target - spec.window_len) / spec.hop)) + 1
    symbols = sample_symbols(model, n_frames, seed)
    frames = dequantize(symbols, model.codebook)
    full = istft_ola(frames, spec, model.rate_hz)
    x = full.samples[:n_target]
    x = x - x.mean() + 0.5
    return Trajectory(np.clip(x, 0.0, 1.0), model.rate_hz)


def save_model(model: MarkovChainModel, path: str | os.PathLike) -> None:
    """Write a signature model as a self-contained JSON document."""
    doc = {
        "n_levels": model.n_levels,
        "window_len": model.frame_spec.window_len,
        "hop": model.frame_spec.hop,
        "rate_hz": model.rate_hz,
        "initial_state": model.initial_state,
        "prototypes": [
            [[float(c.real), float(c.imag)] for c in row] for row in model.codebook.prototypes
        ],
        "transition": [float(v) for v in model.transition.ravel(order="C")],
    }
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_model(path: str | os.PathLike) -> MarkovChainModel:
    """Read a signature model written by :func:`save_model`."""
    try:
        with open(path, "r", encoding="ascii") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DegenerateInputError(f"cannot read model {path}: {exc}") from exc
    try:
        n = int(doc["n_levels"])
        spec = FrameSpec(int(doc["window_len"]), int(doc["hop"]))
        protos = np.array(
            [[complex(re, im) for re, im in row] for row in doc["prototypes"]]
        )
        transition = np.array(doc["transition"], dtype=float).reshape(n, n)
        return MarkovChainModel(
            Codebook(protos),
            transition,
            int(doc["initial_state"]),
            spec,
            float(doc["rate_hz"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DegenerateInputError(f"model {path} is malformed: {exc}") from exc


class MotorSignatureGenerator(BaseEstimator):
    """Estimator-style front end for signature training and synthesis.

    Follows the scikit-learn parameter conventions: constructor stores
    hyperparameters untouched, ``fit`` learns the model and exposes it
    as ``model_``, and ``get_params``/``set_params``/``clone`` work as
    usual.

    Parameters
    ----------
    n_levels : int
        Codebook size.
    window_len, hop : int
        Framing geometry in samples at ``rate_hz``.
    rate_hz : float
        Common analysis rate trials are resampled to.
    seed : int
        Randomness for codebook initialization.
    """

    def __init__(self, n_levels=256, window_len=60, hop=15, rate_hz=100.0, seed=0):
        self.n_levels = n_levels
        self.window_len = window_len
        self.hop = hop
        self.rate_hz = rate_hz
        self.seed = seed

    def fit(self, X, y=None):
        """Fit the signature model on a sequence of Trajectory trials."""
        self.model_ = train_signature_model(
            X,
            n_levels=self.n_levels,
            frame_spec=FrameSpec(self.window_len, self.hop),
            rate_hz=self.rate_hz,
            seed=self.seed,
        )
        return self

    def sample(self, duration_s: float, seed) -> Trajectory:
        """Synthesize a new trajectory from the fitted model."""
        if not hasattr(self, "model_"):
            raise InsufficientDataError("generator is not fitted; call fit() first")
        return synthesize(self.model_, duration_s, seed)
