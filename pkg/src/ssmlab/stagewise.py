"""Stage-wise training on temporally subsampled sequences.

A schedule visits strides r_1 > ... > r_S = 1; stage s trains on every
r_s-th sample (or on block means, for the pooling strategy) with the
feature system's step size rescaled to ``delta_init * r_s / r_1``, so the
features of coarse stages approximate those of fine stages and each stage
warm-starts the next.

The bundled trainer is gradient-free: a frozen random diagonal
state-space feature map (final hidden state's real and imaginary parts)
followed by a closed-form ridge regression with an unpenalized intercept.
One "epoch" is one full refit, so a single epoch per stage suffices.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from ._csv import write_csv
from .continuity_metric import SequenceSample
from .dynsys import _draw_params, _rk4_batch
from .rng import Stream, normals, stream
from .ssm_core import default_diag

__all__ = [
    "StageSchedule",
    "StageReport",
    "RidgeTrainer",
    "subsample_index",
    "subsample_pool",
    "delta_schedule",
    "train_val_split",
    "run_stagewise",
    "omega_recovery_dataset",
    "STAGE_CSV_HEADER",
    "write_stage_csv",
]

STAGE_CSV_HEADER = ["stage", "stride", "delta", "epochs", "cum_wall_time_s", "train_mse", "val_mse"]


@dataclasses.dataclass(frozen=True)
class StageSchedule:
    """Strides (strictly decreasing, ending at 1), per-stage epochs, strategy."""

    strides: tuple
    epochs: tuple
    strategy: str = "Indexing"

    def __post_init__(self):
        strides = tuple(int(r) for r in self.strides)
        epochs = tuple(int(e) for e in self.epochs)
        if not strides or strides[-1] != 1:
            raise ValueError("strides must end at 1")
        if any(r2 >= r1 for r1, r2 in zip(strides, strides[1:])):
            raise ValueError("strides must be strictly decreasing")
        if any(r < 1 for r in strides):
            raise ValueError("strides must be positive")
        if len(epochs) != len(strides) or any(e < 1 for e in epochs):
            raise ValueError("epochs must list one positive count per stage")
        if self.strategy not in ("Indexing", "Pooling"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        object.__setattr__(self, "strides", strides)
        object.__setattr__(self, "epochs", epochs)

    @property
    def n_stages(self) -> int:
        return len(self.strides)

    @property
    def delta_multipliers(self) -> tuple:
        """m_s = r_s / r_{s-1} with r_0 = r_1 (so m_1 = 1)."""
        prev = (self.strides[0],) + self.strides[:-1]
        return tuple(r / p for r, p in zip(self.strides, prev))


def _subsample_array(values: np.ndarray, r: int, pooling: bool) -> np.ndarray:
    if r == 1:
        return values
    if not pooling:
        return values[::r]
    length = values.shape[0]
    starts = np.arange(0, length, r)
    sums = np.add.reduceat(values, starts, axis=0)
    counts = np.diff(np.append(starts, length))
    if values.ndim > 1:
        counts = counts.reshape((-1,) + (1,) * (values.ndim - 1))
    return sums / counts


def _subsample(seq, r: int, pooling: bool):
    if isinstance(seq, SequenceSample):
        return SequenceSample(tokens=_subsample_array(seq.tokens, r, pooling))
    return _subsample_array(np.asarray(seq, dtype=float), r, pooling)


def subsample_index(seq, r: int):
    """Every r-th element: indices 0, r, 2r, ...; length floor((L-1)/r)+1."""
    if r < 1:
        raise ValueError("stride must be >= 1")
    return _subsample(seq, r, pooling=False)


def subsample_pool(seq, r: int):
    """Block means of length-r blocks; a trailing partial block is averaged
    over its actual length."""
    if r < 1:
        raise ValueError("stride must be >= 1")
    return _subsample(seq, r, pooling=True)


def delta_schedule(sched: StageSchedule, delta_init: float) -> list[float]:
    """Per-stage step sizes delta_init * r_s / r_1 (telescoped multipliers)."""
    if not delta_init > 0:
        raise ValueError("delta_init must be positive")
    return [delta_init * r / sched.strides[0] for r in sched.strides]


class RidgeTrainer:
    """Frozen random state-space feature map + closed-form ridge readout.

    The feature system has ``n_states`` diagonal states with the standard
    stable initialization and a seeded Gaussian input projection; a
    sequence's feature vector is the real and imaginary parts of the final
    hidden state (2 * n_states dims).  ``fit`` solves the ridge normal
    equations with an unpenalized intercept column.
    """

    def __init__(self, rng_seed: int, n_states: int = 32, ridge_lambda: float = 1e-3, delta: float = 0.01):
        self.n_states = int(n_states)
        self.ridge_lambda = float(ridge_lambda)
        self._a = default_diag(self.n_states)
        gen = stream(rng_seed, Stream.TRAINER_INIT, 0)
        self._b = normals(gen, self.n_states).astype(complex)
        self.delta = float(delta)
        self.weights: np.ndarray | None = None

    def set_delta(self, delta: float) -> None:
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.delta = float(delta)

    def features(self, sequences) -> np.ndarray:
        """(N, 2*n_states) features; equal-length batches run vectorized."""
        arrays = [s.tokens[:, 0] if isinstance(s, SequenceSample) else np.asarray(s, dtype=float) for s in sequences]
        if not arrays:
            raise ValueError("empty sequence batch")
        abar = np.exp(self.delta * self._a)
        bbar = (abar - 1.0) / self._a * self._b
        lengths = {a.shape[0] for a in arrays}
        if len(lengths) == 1:
            batch = np.stack(arrays)  # (N, L)
            x = np.zeros((batch.shape[0], self.n_states), dtype=complex)
            for k in range(batch.shape[1]):
                x = abar[None, :] * x + bbar[None, :] * batch[:, k, None]
            return np.hstack([x.real, x.imag])
        feats = np.empty((len(arrays), 2 * self.n_states))
        for i, seq in enumerate(arrays):
            x = np.zeros(self.n_states, dtype=complex)
            for u_k in seq:
                x = abar * x + bbar * u_k
            feats[i] = np.concatenate([x.real, x.imag])
        return feats

    @staticmethod
    def _with_intercept(feats: np.ndarray) -> np.ndarray:
        return np.hstack([feats, np.ones((len(feats), 1))])

    def fit(self, sequences, targets) -> None:
        feats = self._with_intercept(self.features(sequences))
        y = np.asarray(targets, dtype=float)
        reg = self.ridge_lambda * np.eye(feats.shape[1])
        reg[-1, -1] = 0.0  # intercept unpenalized
        self.weights = np.linalg.solve(feats.T @ feats + reg, feats.T @ y)

    def predict(self, sequences) -> np.ndarray:
        if self.weights is None:
            raise RuntimeError("trainer is not fitted")
        return self._with_intercept(self.features(sequences)) @ self.weights

    def mse(self, sequences, targets) -> float:
        residual = self.predict(sequences) - np.asarray(targets, dtype=float)
        return float(np.mean(residual**2))


@dataclasses.dataclass(frozen=True)
class StageReport:
    """Losses and cumulative wall time after one schedule stage."""

    stage: int
    stride: int
    delta: float
    epochs: int
    cum_wall_time_s: float
    train_mse: float
    val_mse: float


def train_val_split(n: int, rng_seed: int):
    """Seeded 90/10 permutation split; at least one validation sample."""
    if n < 2:
        raise ValueError("need at least 2 samples to split")
    perm = stream(rng_seed, Stream.STAGEWISE_SPLIT, 0).permutation(n)
    n_val = max(1, n // 10)
    return perm[: n - n_val], perm[n - n_val :]


def run_stagewise(dataset, sched: StageSchedule, trainer, rng_seed: int, delta_init: float = 0.01):
    """Run the schedule over (sequence, target) pairs; report each stage.

    Stage s subsamples every sequence by stride r_s (per the schedule's
    strategy), sets the trainer step to the stage's delta, and refits for
    the stage's epoch count, warm-started from the previous stage's state.
    """
    if not dataset:
        raise ValueError("empty dataset")
    sequences = [seq for seq, _ in dataset]
    targets = np.asarray([target for _, target in dataset], dtype=float)
    train_idx, val_idx = train_val_split(len(dataset), rng_seed)
    deltas = delta_schedule(sched, delta_init)
    pooling = sched.strategy == "Pooling"

    reports = []
    elapsed = 0.0
    for s, (stride, delta, epochs) in enumerate(zip(sched.strides, deltas, sched.epochs)):
        start = time.perf_counter()
        trainer.set_delta(delta)
        staged = [_subsample(seq, stride, pooling) for seq in sequences]
        train_seqs = [staged[i] for i in train_idx]
        val_seqs = [staged[i] for i in val_idx]
        if not train_seqs or not val_seqs:
            raise ValueError("empty stage dataset")
        for _ in range(epochs):
            trainer.fit(train_seqs, targets[train_idx])
        train_mse = trainer.mse(train_seqs, targets[train_idx])
        val_mse = trainer.mse(val_seqs, targets[val_idx])
        if not np.isfinite(train_mse) or not np.isfinite(val_mse):
            raise ArithmeticError(f"trainer diverged at stage {s + 1}")
        elapsed += time.perf_counter() - start
        reports.append(
            StageReport(
                stage=s + 1,
                stride=stride,
                delta=delta,
                epochs=epochs,
                cum_wall_time_s=elapsed,
                train_mse=train_mse,
                val_mse=val_mse,
            )
        )
    return reports


def omega_recovery_dataset(count: int, rng_seed: int, horizon: float = 1.0, tau0: float = 0.01):
    """Frequency-recovery task: damped oscillations from a fixed start.

    Draws (omega, zeta) per sample from the documented ranges but pins the
    initial condition to (1, 0) so a linear readout can identify omega;
    targets are the true omega values.  Returns a list of
    (position sequence, omega) pairs.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    params = [_draw_params("DampedHarmonic", stream(rng_seed, Stream.DYNSYS_PARAMS, i)) for i in range(count)]
    batch = {
        "omega": np.asarray([p.omega for p in params]),
        "zeta": np.asarray([p.zeta for p in params]),
    }
    positions = _rk4_batch(
        "DampedHarmonic", batch, np.ones(count), np.zeros(count), horizon, tau0
    )
    return [(positions[i], float(batch["omega"][i])) for i in range(count)]


def write_stage_csv(reports, path) -> None:
    """Emit the per-stage report CSV."""
    rows = [
        (r.stage, r.stride, r.delta, r.epochs, r.cum_wall_time_s, r.train_mse, r.val_mse) for r in reports
    ]
    write_csv(path, STAGE_CSV_HEADER, rows)
