"""Lag-similarity continuity of token sequences, and the eta-embedding.

For a dataset of token sequences, the lag-t continuity score is

    mu_t = (mean_k K(u_k, u_{k+t}) - beta) / (mean_k K(u_k, u_k) - beta)

with the cosine kernel ``K(x, y) = (1 + cos angle(x, y)) / 2`` and a
background level ``beta`` estimated from seeded random within-sequence
pairs separated by more than a gap.  Numerator and denominator are full
enumerations pooled over all sequences; only beta is Monte-Carlo.  The
aggregate score is a weighted sum over lags 1..T with beta shared.

The eta-embedding interpolates between a continuous scalar embedding
(``u * v`` for a fixed unit vector v) and a quantized one (the orthonormal
basis vector of the bin containing u), with weight eta on the continuous
part.  Trajectories are min-max normalized to [-1, 1] per trajectory
before embedding.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .rng import Stream, normals, stream
from .ssm_core import Trajectory

__all__ = [
    "SequenceSample",
    "EmbeddingSpec",
    "MetricConfig",
    "DegenerateSimilarityError",
    "kernel_cosine",
    "make_embedding_spec",
    "estimate_background",
    "mu_lag",
    "mu_aggregate",
    "embed",
    "embed_trajectory",
]

EMBED_DIM = 16
_ZERO_NORM = 1e-15


class DegenerateSimilarityError(ValueError):
    """Similarity contrast vanished (e.g. constant sequences)."""


@dataclasses.dataclass(frozen=True)
class SequenceSample:
    """A length-L sequence of d-dimensional token vectors."""

    tokens: np.ndarray

    def __post_init__(self):
        tokens = np.asarray(self.tokens, dtype=float)
        if tokens.ndim != 2 or tokens.shape[0] < 2 or tokens.shape[1] < 1:
            raise ValueError("tokens must be (L >= 2, d >= 1)")
        object.__setattr__(self, "tokens", tokens)

    @property
    def length(self) -> int:
        return self.tokens.shape[0]


@dataclasses.dataclass(frozen=True)
class EmbeddingSpec:
    """Unit vector for the continuous part, orthonormal basis for the bins."""

    v: np.ndarray
    basis: np.ndarray  # rows are the 16 orthonormal bin vectors
    dim: int = EMBED_DIM

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        basis = np.asarray(self.basis, dtype=float)
        if self.dim != EMBED_DIM:
            raise ValueError(f"embedding dimension is fixed at {EMBED_DIM}")
        if v.shape != (EMBED_DIM,):
            raise ValueError("v must be a 16-vector")
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("v must be a unit vector")
        if basis.shape != (EMBED_DIM, EMBED_DIM):
            raise ValueError("basis must be 16 x 16")
        if np.max(np.abs(basis @ basis.T - np.eye(EMBED_DIM))) > 1e-12:
            raise ValueError("basis rows must be orthonormal")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "basis", basis)


def make_embedding_spec(rng_seed: int, random_basis: bool = False) -> EmbeddingSpec:
    """Seeded spec: random unit v; identity bin basis by default.

    With ``random_basis`` a uniformly random orthonormal basis is drawn
    (QR of a Gaussian matrix, sign-fixed for determinism) after the v
    draw, so the v stream is unchanged either way.
    """
    gen = stream(rng_seed, Stream.EMBED_SPEC, 0)
    v = normals(gen, EMBED_DIM)
    v = v / np.linalg.norm(v)
    if random_basis:
        m = normals(gen, EMBED_DIM * EMBED_DIM).reshape(EMBED_DIM, EMBED_DIM)
        q, r = np.linalg.qr(m)
        basis = (q * np.sign(np.diag(r))).T
    else:
        basis = np.eye(EMBED_DIM)
    return EmbeddingSpec(v=v, basis=basis)


@dataclasses.dataclass(frozen=True)
class MetricConfig:
    """Knobs of the continuity score."""

    max_lag: int = 16
    weights: np.ndarray | None = None
    gap: int | None = None
    far_pair_samples: int = 10_000
    kernel: str = "Cosine"

    def __post_init__(self):
        if self.max_lag < 1:
            raise ValueError("max_lag must be >= 1")
        if self.kernel != "Cosine":
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.far_pair_samples < 1:
            raise ValueError("far_pair_samples must be >= 1")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.max_lag,) or np.any(w < 0) or not np.sum(w) > 0:
                raise ValueError("weights must be max_lag nonnegative reals with positive sum")
            object.__setattr__(self, "weights", w)

    def resolved_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.max_lag, 1.0 / self.max_lag)
        return self.weights

    def resolved_gap(self, min_length: int) -> int:
        """Far-pair separation: max(4T, L/4), kept below L - 1 and above T."""
        gap = self.gap if self.gap is not None else max(4 * self.max_lag, min_length // 4)
        gap = min(gap, min_length - 2)
        if gap <= self.max_lag:
            raise ValueError(f"gap {gap} must exceed max_lag {self.max_lag}; sequences too short")
        return gap


def kernel_cosine(x, y) -> float:
    """(1 + cos angle)/2; 0.5 (neutral) if either vector is numerically zero."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx < _ZERO_NORM or ny < _ZERO_NORM:
        return 0.5
    return 0.5 * (1.0 + float(np.dot(x, y)) / (nx * ny))


def _kernel_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-paired cosine kernel with the zero-norm convention."""
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    dot = np.sum(x * y, axis=1)
    ok = (nx > _ZERO_NORM) & (ny > _ZERO_NORM)
    out = np.full(len(x), 0.5)
    out[ok] = 0.5 * (1.0 + dot[ok] / (nx[ok] * ny[ok]))
    return out


def _tokens(data) -> list[np.ndarray]:
    return [d.tokens if isinstance(d, SequenceSample) else np.asarray(d, dtype=float) for d in data]


def estimate_background(data, cfg: MetricConfig, rng_seed: int) -> float:
    """Mean kernel over seeded within-sequence pairs with |k - k'| > gap."""
    mats = _tokens(data)
    if not mats:
        raise ValueError("empty dataset")
    gap = cfg.resolved_gap(min(len(m) for m in mats))
    gen = stream(rng_seed, Stream.METRIC_FAR_PAIRS, 0)
    n_seq = len(mats)
    vals = np.empty(cfg.far_pair_samples)
    for i in range(cfg.far_pair_samples):
        mat = mats[int(gen.integers(0, n_seq))]
        length = len(mat)
        while True:
            k = int(gen.integers(0, length))
            kp = int(gen.integers(0, length))
            if abs(k - kp) > gap:
                break
        vals[i] = _kernel_rows(mat[k : k + 1], mat[kp : kp + 1])[0]
    return float(np.mean(vals))


def _mu_lag_given_beta(mats: list[np.ndarray], t: int, beta: float) -> float:
    num_sum = den_sum = 0.0
    num_count = den_count = 0
    for mat in mats:
        if len(mat) <= t:
            raise ValueError(f"sequence length {len(mat)} too short for lag {t}")
        num_sum += float(np.sum(_kernel_rows(mat[:-t], mat[t:])))
        num_count += len(mat) - t
        den_sum += float(np.sum(_kernel_rows(mat, mat)))
        den_count += len(mat)
    denominator = den_sum / den_count - beta
    if abs(denominator) < 1e-9:
        raise DegenerateSimilarityError("self-similarity minus background vanished (constant tokens?)")
    return (num_sum / num_count - beta) / denominator


def mu_lag(data, t: int, cfg: MetricConfig, rng_seed: int) -> float:
    """Background-corrected lag-t similarity ratio (full enumeration)."""
    if t < 1:
        raise ValueError("lag must be >= 1")
    mats = _tokens(data)
    beta = estimate_background(data, cfg, rng_seed)
    return _mu_lag_given_beta(mats, t, beta)


def mu_aggregate(data, cfg: MetricConfig, rng_seed: int) -> float:
    """Weighted sum of mu_t over t = 1..max_lag with one shared beta."""
    mats = _tokens(data)
    beta = estimate_background(data, cfg, rng_seed)
    weights = cfg.resolved_weights()
    return float(sum(w * _mu_lag_given_beta(mats, t + 1, beta) for t, w in enumerate(weights)))


def _bin_index(u: np.ndarray) -> np.ndarray:
    """0-based index of the interval of [-1, 1] containing u (last bin closed)."""
    return np.clip(np.floor((u + 1.0) * (EMBED_DIM / 2.0)).astype(int), 0, EMBED_DIM - 1)


def embed(u: float, eta: float, spec: EmbeddingSpec) -> np.ndarray:
    """eta * u * v + (1 - eta) * basis[bin(u)] for one scalar u in [-1, 1]."""
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"embedding input must lie in [-1, 1], got {u}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    idx = int(_bin_index(np.asarray([u]))[0])
    return eta * u * spec.v + (1.0 - eta) * spec.basis[idx]


def embed_trajectory(traj, eta: float, spec: EmbeddingSpec) -> SequenceSample:
    """Min-max normalize a trajectory to [-1, 1], then embed each sample.

    Constant trajectories normalize to 0 (middle bin).
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    values = traj.values if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    lo = float(np.min(values))
    hi = float(np.max(values))
    if hi - lo < _ZERO_NORM:
        u = np.zeros_like(values)
    else:
        u = 2.0 * (values - lo) / (hi - lo) - 1.0
    tokens = eta * u[:, None] * spec.v[None, :] + (1.0 - eta) * spec.basis[_bin_index(u)]
    return SequenceSample(tokens=tokens)
