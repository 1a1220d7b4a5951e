"""Trajectory generators for four benchmark dynamical systems.

Kinds: a Van der Pol oscillator (nonlinear limit cycle), a damped harmonic
oscillator (linear), an Ornstein-Uhlenbeck process (stochastic
mean-reverting), and a sinusoidally forced Duffing oscillator (chaotic
regime).  Deterministic kinds are integrated with classical RK4 at an
internal step of ``tau0 / 10`` and emitted at multiples of the sampling
interval ``tau0``; only the position coordinate is emitted.  The
Ornstein-Uhlenbeck process uses Euler-Maruyama at the same internal step
with seeded Gaussian increments; its linear recursion is evaluated with
``scipy.signal.lfilter``.

``sample_dataset`` draws parameters uniformly from documented ranges and
initial conditions uniformly from [-1, 1] per coordinate, integrating all
deterministic trajectories of a batch in one vectorized RK4 pass.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import lfilter

from .rng import Stream, normals, stream, uniforms
from .ssm_core import Trajectory

__all__ = [
    "VanDerPolParams",
    "DampedHarmonicParams",
    "OrnsteinUhlenbeckParams",
    "ForcedDuffingParams",
    "DynSysSpec",
    "DivergenceError",
    "KINDS",
    "KIND_ALIASES",
    "PARAM_RANGES",
    "generate",
    "make_params",
    "sample_dataset",
    "ou_ensemble",
]

KINDS = ("VanDerPol", "DampedHarmonic", "OrnsteinUhlenbeck", "ForcedDuffing")
KIND_ALIASES = {
    "vdp": "VanDerPol",
    "damped": "DampedHarmonic",
    "ou": "OrnsteinUhlenbeck",
    "duffing": "ForcedDuffing",
}

# Uniform sampling ranges for randomized parameters (fixed Duffing shape
# constants live in _draw_params).
PARAM_RANGES = {
    "VanDerPol": {"mu": (0.5, 3.0)},
    "DampedHarmonic": {"omega": (math.pi, 4.0 * math.pi), "zeta": (0.05, 0.5)},
    "OrnsteinUhlenbeck": {"theta": (0.5, 3.0), "sigma": (0.1, 1.0)},
    "ForcedDuffing": {"gamma": (0.2, 0.65)},
}

DUFFING_FIXED = {"delta": 0.3, "alpha": -1.0, "beta": 1.0, "omega_f": 1.2}


class DivergenceError(RuntimeError):
    """Raised when a simulated state stops being finite."""


@dataclasses.dataclass(frozen=True)
class VanDerPolParams:
    mu: float

    def validate(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")


@dataclasses.dataclass(frozen=True)
class DampedHarmonicParams:
    omega: float
    zeta: float

    def validate(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.zeta < 0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")


@dataclasses.dataclass(frozen=True)
class OrnsteinUhlenbeckParams:
    theta: float
    sigma: float

    def validate(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


@dataclasses.dataclass(frozen=True)
class ForcedDuffingParams:
    delta: float
    alpha: float
    beta: float
    gamma: float
    omega_f: float

    def validate(self):
        pass  # all sign combinations are integrable


_PARAM_TYPES = {
    "VanDerPol": VanDerPolParams,
    "DampedHarmonic": DampedHarmonicParams,
    "OrnsteinUhlenbeck": OrnsteinUhlenbeckParams,
    "ForcedDuffing": ForcedDuffingParams,
}

_SECOND_ORDER = {"VanDerPol", "DampedHarmonic", "ForcedDuffing"}


@dataclasses.dataclass(frozen=True)
class DynSysSpec:
    """One trajectory request: kind, parameters, initial state, grid."""

    kind: str
    params: object
    init: tuple
    horizon: float
    tau0: float = 0.01

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if not isinstance(self.params, _PARAM_TYPES[self.kind]):
            raise ValueError(f"params type mismatch for kind {self.kind}")
        self.params.validate()
        want = 2 if self.kind in _SECOND_ORDER else 1
        if len(self.init) != want:
            raise ValueError(f"{self.kind} needs {want} initial condition(s), got {len(self.init)}")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if self.horizon < self.tau0:
            raise ValueError("horizon must be at least tau0")


def _n_emit(horizon: float, tau0: float) -> int:
    return int(math.floor(horizon / tau0 + 1e-9)) + 1


def _deriv(kind: str, t: float, x: np.ndarray, v: np.ndarray, params: dict[str, np.ndarray]):
    """Batched vector field for second-order kinds; returns (dx, dv)."""
    if kind == "VanDerPol":
        return v, params["mu"] * (1.0 - x * x) * v - x
    if kind == "DampedHarmonic":
        omega = params["omega"]
        return v, -2.0 * params["zeta"] * omega * v - omega * omega * x
    if kind == "ForcedDuffing":
        drive = params["gamma"] * np.cos(params["omega_f"] * t)
        return v, drive - params["delta"] * v - params["alpha"] * x - params["beta"] * x * x * x
    raise ValueError(f"no vector field for kind {kind!r}")


def _rk4_batch(kind: str, params: dict[str, np.ndarray], x0: np.ndarray, v0: np.ndarray, horizon: float, tau0: float) -> np.ndarray:
    """Integrate a batch of second-order systems; returns positions (N, n_emit)."""
    n_emit = _n_emit(horizon, tau0)
    h = tau0 / 10.0
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    out = np.empty((x.size, n_emit))
    out[:, 0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_emit - 1):
            t = k * tau0
            for sub in range(10):
                ts = t + sub * h
                k1x, k1v = _deriv(kind, ts, x, v, params)
                k2x, k2v = _deriv(kind, ts + h / 2.0, x + (h / 2.0) * k1x, v + (h / 2.0) * k1v, params)
                k3x, k3v = _deriv(kind, ts + h / 2.0, x + (h / 2.0) * k2x, v + (h / 2.0) * k2v, params)
                k4x, k4v = _deriv(kind, ts + h, x + h * k3x, v + h * k3v, params)
                x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            out[:, k + 1] = x
    return out


def _ou_path(params: OrnsteinUhlenbeckParams, x0: float, horizon: float, tau0: float, gen) -> np.ndarray:
    """Euler-Maruyama path emitted at multiples of tau0 (lfilter recursion)."""
    h = tau0 / 10.0
    n_emit = _n_emit(horizon, tau0)
    n_sub = (n_emit - 1) * 10
    drive = np.empty(n_sub + 1)
    drive[0] = x0
    if params.sigma > 0:
        drive[1:] = params.sigma * math.sqrt(h) * normals(gen, n_sub)
    else:
        drive[1:] = 0.0
    path = lfilter([1.0], [1.0, -(1.0 - params.theta * h)], drive)
    return path[::10]


def _check_finite(kind: str, positions: np.ndarray, tau0: float):
    """Raise DivergenceError naming the first non-finite emission time."""
    bad = ~np.isfinite(positions)
    if bad.any():
        k = int(np.argmax(bad))
        raise DivergenceError(f"{kind} state became non-finite at t = {k * tau0:.6g}")


def generate(spec: DynSysSpec, rng_seed: int) -> Trajectory:
    """Simulate one trajectory of the requested system."""
    return _generate_indexed(spec, rng_seed, noise_index=0)


def _generate_indexed(spec: DynSysSpec, rng_seed: int, noise_index: int) -> Trajectory:
    n_emit = _n_emit(spec.horizon, spec.tau0)
    times = np.arange(n_emit) * spec.tau0
    if spec.kind == "OrnsteinUhlenbeck":
        gen = stream(rng_seed, Stream.DYNSYS_NOISE, noise_index)
        positions = _ou_path(spec.params, float(spec.init[0]), spec.horizon, spec.tau0, gen)
    else:
        params = {k: np.asarray([v]) for k, v in dataclasses.asdict(spec.params).items()}
        positions = _rk4_batch(
            spec.kind, params, np.asarray([spec.init[0]], dtype=float), np.asarray([spec.init[1]], dtype=float), spec.horizon, spec.tau0
        )[0]
    _check_finite(spec.kind, positions, spec.tau0)
    return Trajectory(times=times, values=positions)


def ou_ensemble(
    params: OrnsteinUhlenbeckParams, x0: float, horizon: float, count: int, rng_seed: int, tau0: float = 0.01
) -> np.ndarray:
    """``count`` independent Ornstein-Uhlenbeck paths with shared parameters.

    Path p uses noise stream index p, so the ensemble is embarrassingly
    parallel and any single path can be replayed in isolation.  Returns
    positions with shape (count, floor(horizon/tau0) + 1).
    """
    params.validate()
    n_emit = _n_emit(horizon, tau0)
    out = np.empty((count, n_emit))
    for p in range(count):
        gen = stream(rng_seed, Stream.DYNSYS_NOISE, p)
        out[p] = _ou_path(params, x0, horizon, tau0, gen)
    return out


def _draw_params(kind: str, gen):
    ranges = PARAM_RANGES[kind]
    if kind == "VanDerPol":
        return VanDerPolParams(mu=float(uniforms(gen, *ranges["mu"])))
    if kind == "DampedHarmonic":
        omega = float(uniforms(gen, *ranges["omega"]))
        zeta = float(uniforms(gen, *ranges["zeta"]))
        return DampedHarmonicParams(omega=omega, zeta=zeta)
    if kind == "OrnsteinUhlenbeck":
        theta = float(uniforms(gen, *ranges["theta"]))
        sigma = float(uniforms(gen, *ranges["sigma"]))
        return OrnsteinUhlenbeckParams(theta=theta, sigma=sigma)
    if kind == "ForcedDuffing":
        gamma = float(uniforms(gen, *ranges["gamma"]))
        return ForcedDuffingParams(gamma=gamma, **DUFFING_FIXED)
    raise ValueError(f"unknown kind {kind!r}")


def make_params(kind: str, **values):
    """Build the parameter record for ``kind`` from keyword values.

    ForcedDuffing fills unspecified shape constants from DUFFING_FIXED,
    so only the forcing amplitude is mandatory there.
    """
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "ForcedDuffing":
        values = {**DUFFING_FIXED, **values}
    try:
        params = _PARAM_TYPES[kind](**{key: float(v) for key, v in values.items()})
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind}: {exc}") from None
    params.validate()
    return params


def _draw_init(kind: str, gen) -> tuple:
    if kind in _SECOND_ORDER:
        return (float(uniforms(gen, -1.0, 1.0)), float(uniforms(gen, -1.0, 1.0)))
    return (float(uniforms(gen, -1.0, 1.0)),)


def sample_dataset(kind: str, count: int, rng_seed: int, horizon: float = 1.0, tau0: float = 0.01, params=None):
    """Draw ``count`` seeded (trajectory, parameter-record) pairs.

    Parameter draws use one stream index per sample; a sample whose
    simulation diverges is redrawn from reserved indices
    ``count + 10*i + retry`` (up to 10 retries) so other samples are
    unaffected.  Passing ``params`` pins that record for every sample
    (initial conditions stay randomized); only inits are then redrawn on
    divergence.
    """
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if count < 1:
        raise ValueError("count must be >= 1")

    n_emit = _n_emit(horizon, tau0)
    times = np.arange(n_emit) * tau0
    pinned = params is not None
    if pinned:
        if not isinstance(params, _PARAM_TYPES[kind]):
            raise ValueError(f"params type mismatch for kind {kind}")
        params.validate()
        param_list = [params] * count
    else:
        param_list = [_draw_params(kind, stream(rng_seed, Stream.DYNSYS_PARAMS, i)) for i in range(count)]
    init_list = [_draw_init(kind, stream(rng_seed, Stream.DYNSYS_INIT, i)) for i in range(count)]

    if kind == "OrnsteinUhlenbeck":
        positions = np.empty((count, n_emit))
        for i in range(count):
            gen = stream(rng_seed, Stream.DYNSYS_NOISE, i)
            positions[i] = _ou_path(param_list[i], init_list[i][0], horizon, tau0, gen)
    else:
        fields = [f.name for f in dataclasses.fields(_PARAM_TYPES[kind])]
        param_arrays = {
            name: np.asarray([getattr(p, name) for p in param_list], dtype=float) for name in fields
        }
        x0 = np.asarray([init[0] for init in init_list], dtype=float)
        v0 = np.asarray([init[1] for init in init_list], dtype=float)
        positions = _rk4_batch(kind, param_arrays, x0, v0, horizon, tau0)

    out = []
    for i in range(count):
        row = positions[i]
        retry = 0
        while not np.all(np.isfinite(row)):
            if retry >= 10:
                _check_finite(kind, row, tau0)  # raises with the failure time
            redraw_index = count + 10 * i + retry
            if not pinned:
                param_list[i] = _draw_params(kind, stream(rng_seed, Stream.DYNSYS_PARAMS, redraw_index))
            init_list[i] = _draw_init(kind, stream(rng_seed, Stream.DYNSYS_INIT, redraw_index))
            spec = DynSysSpec(kind=kind, params=param_list[i], init=init_list[i], horizon=horizon, tau0=tau0)
            try:
                row = _generate_indexed(spec, rng_seed, noise_index=redraw_index).values
            except DivergenceError:
                row = np.full(n_emit, np.nan)
            retry += 1
        out.append((Trajectory(times=times, values=row), param_list[i]))
    return out
