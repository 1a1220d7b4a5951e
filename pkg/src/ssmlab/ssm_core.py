"""Continuous-time diagonal state-space systems and their discretizations.

The continuous dynamics are ``x'(t) = delta(u)(a * x + B(u) u)`` with output
``y = Re(C(u) . x) + D u`` and ``x(0) = 0``, where ``a`` is a complex
diagonal.  Two flavors:

* S4  — B, C constant vectors and a constant positive step ``delta``;
* S6  — input-dependent maps ``B(u) = b * u``, ``C(u) = c * u`` and
  ``delta(u) = softplus(w_delta * u + b_delta)``.

Discretization produces per-step matrices at refinement ``tau`` by either
zero-order hold (elementwise ``exp``) or the bilinear/Tustin map
(elementwise resolvent).  The reference continuous trajectory integrates
the same dynamics with classical fixed-step RK4; because the system is
linear in the state, each RK4 step collapses to an exact affine update
``x_{k+1} = M_k x_k + G_k`` whose coefficients are assembled from the four
stage slopes — identical arithmetic to textbook RK4, vectorized over the
diagonal.

Step-end input values inside the integrator are taken as left limits
(``eval_left``) so that piecewise-constant inputs with breakpoints on the
step grid are integrated exactly; for continuous signals the left limit
coincides with the ordinary evaluation.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

__all__ = [
    "ConstantStep",
    "SelectiveStep",
    "ContinuousSSM",
    "DiscreteSSM",
    "Trajectory",
    "DegeneratePoleError",
    "SingularResolventError",
    "OffGridError",
    "softplus",
    "softplus_inv",
    "default_diag",
    "make_s4",
    "make_s6",
    "eval_maps",
    "discretize",
    "run_discrete",
    "run_discrete_complex",
    "simulate_continuous",
    "sample_at",
    "affine_scan",
]


class DegeneratePoleError(ValueError):
    """Zero-order hold requires invertible a (no zero diagonal entries)."""


class SingularResolventError(ValueError):
    """Bilinear map undefined when some 1 - delta*a/2 entry vanishes."""


class OffGridError(ValueError):
    """Requested timestamp does not lie on the trajectory grid."""


def softplus(x):
    """Overflow-safe ln(1 + e^x); for x > 30 returns x."""
    x_arr = np.asarray(x, dtype=float)
    out = np.where(x_arr > 30.0, x_arr, np.log1p(np.exp(np.minimum(x_arr, 30.0))))
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def softplus_inv(y: float) -> float:
    """Inverse softplus ln(e^y - 1), guarded for tiny and large y."""
    if y <= 0:
        raise ValueError(f"softplus_inv requires y > 0, got {y}")
    if y < 1e-10:
        return math.log(y)
    if y > 30.0:
        return y
    return math.log(math.expm1(y))


def default_diag(n: int) -> np.ndarray:
    """Stable complex-diagonal initialization a_j = -1/2 + i*pi*j."""
    if n < 1:
        raise ValueError("state dimension must be >= 1")
    return -0.5 + 1j * np.pi * np.arange(n)


@dataclasses.dataclass(frozen=True)
class ConstantStep:
    """Constant positive step size (S4 flavor)."""

    constant: float

    def __post_init__(self):
        if not self.constant > 0:
            raise ValueError(f"step constant must be positive, got {self.constant}")


@dataclasses.dataclass(frozen=True)
class SelectiveStep:
    """Input-dependent step softplus(w_delta * u + b_delta) (S6 flavor)."""

    w_delta: float
    b_delta: float


@dataclasses.dataclass(frozen=True)
class ContinuousSSM:
    """Immutable diagonal continuous-time system in S4 or S6 flavor."""

    a_diag: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    delta_params: ConstantStep | SelectiveStep
    flavor: str

    def __post_init__(self):
        a = np.asarray(self.a_diag, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        c = np.asarray(self.c, dtype=complex)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("a_diag must be a nonempty vector")
        if b.shape != a.shape or c.shape != a.shape:
            raise ValueError("a_diag, b, c must share one shape")
        if np.any(a.real >= 0):
            raise ValueError("all a_diag real parts must be strictly negative")
        if self.flavor not in ("S4", "S6"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.flavor == "S4" and not isinstance(self.delta_params, ConstantStep):
            raise ValueError("S4 flavor requires a ConstantStep")
        if self.flavor == "S6" and not isinstance(self.delta_params, SelectiveStep):
            raise ValueError("S6 flavor requires a SelectiveStep")
        object.__setattr__(self, "a_diag", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.a_diag.size

    @property
    def a_norm(self) -> float:
        """Spectral norm of the diagonal state matrix: max |a_j|."""
        return float(np.max(np.abs(self.a_diag)))

    def delta_of(self, u):
        """Step size at input value(s) u."""
        if self.flavor == "S4":
            const = self.delta_params.constant
            return const if np.isscalar(u) else np.full(np.shape(u), const)
        return softplus(self.delta_params.w_delta * np.asarray(u, dtype=float) + self.delta_params.b_delta)

    def b_of(self, u):
        """Input map B(u): (n,) for scalar u, (L, n) for a length-L vector."""
        if self.flavor == "S4":
            if np.isscalar(u):
                return self.b
            return np.broadcast_to(self.b, (np.size(u), self.n))
        if np.isscalar(u):
            return self.b * u
        return np.asarray(u, dtype=float)[:, None] * self.b[None, :]

    def c_of(self, u):
        """Output map C(u), same shape convention as b_of."""
        if self.flavor == "S4":
            if np.isscalar(u):
                return self.c
            return np.broadcast_to(self.c, (np.size(u), self.n))
        if np.isscalar(u):
            return self.c * u
        return np.asarray(u, dtype=float)[:, None] * self.c[None, :]


def make_s4(a_diag, b, c, d: float = 0.0, delta: float = 0.01) -> ContinuousSSM:
    return ContinuousSSM(a_diag=a_diag, b=b, c=c, d=d, delta_params=ConstantStep(delta), flavor="S4")


def make_s6(a_diag, b, c, d: float = 0.0, w_delta: float = 0.0, b_delta: float = 0.0) -> ContinuousSSM:
    return ContinuousSSM(a_diag=a_diag, b=b, c=c, d=d, delta_params=SelectiveStep(w_delta, b_delta), flavor="S6")


def eval_maps(sys: ContinuousSSM, u: float):
    """Evaluate (B(u), C(u), delta(u)) at one scalar input value."""
    return sys.b_of(u), sys.c_of(u), float(sys.delta_of(u))


@dataclasses.dataclass(frozen=True)
class DiscreteSSM:
    """Per-step discrete system: x_{k+1} = abar_k x_k + bbar_k u_k."""

    abar: np.ndarray  # (L, n) complex
    bbar: np.ndarray  # (L, n) complex
    cbar: np.ndarray  # (L, n) complex
    dbar: float
    tau: float

    def __post_init__(self):
        if not (self.abar.shape == self.bbar.shape == self.cbar.shape):
            raise ValueError("abar, bbar, cbar must share one shape")
        if self.abar.ndim != 2 or self.abar.shape[0] < 1:
            raise ValueError("per-step matrices must be (L, n) with L >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def length(self) -> int:
        return self.abar.shape[0]


def discretize(sys: ContinuousSSM, u_samples, tau: float, method: str) -> DiscreteSSM:
    """Build per-step matrices at refinement tau by ZOH or the bilinear map."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    u = np.asarray(u_samples, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("u_samples must be a nonempty 1-D sequence")
    a = sys.a_diag
    delta = np.asarray(sys.delta_of(u), dtype=float)
    dlt = tau * delta  # per-step effective step, (L,)
    b_u = sys.b_of(u)  # (L, n)
    c_u = np.array(sys.c_of(u), dtype=complex)  # (L, n), materialized
    if method == "ZOH":
        if np.any(a == 0):
            raise DegeneratePoleError("zero diagonal entry: a^{-1} undefined under ZOH")
        abar = np.exp(dlt[:, None] * a[None, :])
        bbar = (abar - 1.0) / a[None, :] * b_u
    elif method == "Bilinear":
        half = dlt[:, None] * a[None, :] / 2.0
        denom = 1.0 - half
        if np.any(denom == 0):
            raise SingularResolventError("bilinear resolvent singular: some 1 - delta*a/2 = 0")
        abar = (1.0 + half) / denom
        bbar = dlt[:, None] * b_u / denom
    else:
        raise ValueError(f"unknown discretization method {method!r}")
    return DiscreteSSM(abar=abar, bbar=bbar, cbar=c_u, dbar=float(sys.d), tau=float(tau))


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Sampled scalar output: strictly increasing times, matching values."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be equal-length vectors")
        if times.size >= 2 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if times.size and times[0] < 0:
            raise ValueError("times must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.times.size


def affine_scan(mult: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """States x_0=0, x_{k+1} = mult_k x_k + offset_k; returns (L+1, n)."""
    length, n = mult.shape
    states = np.zeros((length + 1, n), dtype=complex)
    x = np.zeros(n, dtype=complex)
    for k in range(length):
        x = mult[k] * x + offset[k]
        states[k + 1] = x
    return states


def run_discrete_complex(dsys: DiscreteSSM, u_samples) -> np.ndarray:
    """Full complex outputs C_k . x_k + D u_k (plain dot, no conjugation)."""
    u = np.asarray(u_samples, dtype=float)
    if u.shape != (dsys.length,):
        raise ValueError(f"expected {dsys.length} input samples, got {u.shape}")
    states = affine_scan(dsys.abar, dsys.bbar * u[:, None])[:-1]  # x_0 .. x_{L-1}
    return np.sum(dsys.cbar * states, axis=1) + dsys.dbar * u


def run_discrete(dsys: DiscreteSSM, u_samples) -> Trajectory:
    """Run the discrete recursion from x_0 = 0; y_k = Re(C_k . x_k) + D u_k."""
    y = run_discrete_complex(dsys, u_samples).real
    times = dsys.tau * np.arange(dsys.length)
    return Trajectory(times=times, values=y)


def _rk4_affine_coeffs(p1, pm, p2, q1, qm, q2, h: float):
    """Exact affine form of one classical RK4 step for x' = p(t) x + q(t).

    The four stage slopes k_i are affine in x; collecting terms gives the
    per-step multiplier M and offset G with x_next = M x + G.
    """
    k1c = p1
    k2c = pm * (1.0 + (h / 2.0) * k1c)
    k3c = pm * (1.0 + (h / 2.0) * k2c)
    k4c = p2 * (1.0 + h * k3c)
    mult = 1.0 + (h / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)

    k1a = q1
    k2a = pm * (h / 2.0) * k1a + qm
    k3a = pm * (h / 2.0) * k2a + qm
    k4a = p2 * h * k3a + q2
    offset = (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    return mult, offset


def simulate_continuous(sys: ContinuousSSM, u, tau_fine: float) -> Trajectory:
    """Integrate the continuous system over [0, 1] with fixed-step RK4.

    ``u`` must expose ``eval(t)`` on [0, 1]; an optional ``eval_left(t)``
    supplies left limits at step-end evaluations (falls back to ``eval``).
    Returns the output trajectory on the fine grid {0, tau_fine, ..., 1}.
    """
    if not tau_fine > 0:
        raise ValueError("tau_fine must be positive")
    n_steps = round(1.0 / tau_fine)
    if abs(n_steps * tau_fine - 1.0) > 1e-9:
        raise ValueError("tau_fine must divide the unit horizon")
    h = tau_fine
    eval_left = getattr(u, "eval_left", u.eval)

    grid_half = np.arange(2 * n_steps + 1) * (h / 2.0)
    grid_half[-1] = 1.0  # guard float drift at the right endpoint
    u_half = np.asarray(u.eval(grid_half), dtype=float)
    u_half_left = np.asarray(eval_left(grid_half), dtype=float)

    u_start = u_half[0 : 2 * n_steps : 2]  # u(t_k), right limit
    u_mid = u_half[1 : 2 * n_steps : 2]  # u(t_k + h/2)
    u_end = u_half_left[2 : 2 * n_steps + 1 : 2]  # u(t_{k+1}^-), left limit

    a = sys.a_diag[None, :]

    def p_of(u_vals):
        return np.asarray(sys.delta_of(u_vals), dtype=float)[:, None] * a

    def q_of(u_vals):
        delta = np.asarray(sys.delta_of(u_vals), dtype=float)
        return (delta * np.asarray(u_vals, dtype=float))[:, None] * sys.b_of(u_vals)

    mult, offset = _rk4_affine_coeffs(
        p_of(u_start), p_of(u_mid), p_of(u_end), q_of(u_start), q_of(u_mid), q_of(u_end), h
    )
    states = affine_scan(mult, offset)  # (n_steps + 1, n)

    u_grid = u_half[0::2]  # right-limit input values on the output grid
    c_grid = np.array(sys.c_of(u_grid), dtype=complex)
    y = np.real(np.sum(c_grid * states, axis=1)) + sys.d * u_grid
    times = np.arange(n_steps + 1) * h
    return Trajectory(times=times, values=y)


def sample_at(traj: Trajectory, timestamps) -> np.ndarray:
    """Trajectory values at requested timestamps; exact grid hits only.

    A hit means the timestamp matches a grid time within 1e-12 relative
    tolerance; anything else raises OffGridError (no interpolation).
    """
    ts = np.atleast_1d(np.asarray(timestamps, dtype=float))
    upper = np.clip(np.searchsorted(traj.times, ts), 0, len(traj) - 1)
    lower = np.clip(upper - 1, 0, len(traj) - 1)
    pick = np.where(
        np.abs(traj.times[lower] - ts) < np.abs(traj.times[upper] - ts), lower, upper
    )
    miss = np.abs(traj.times[pick] - ts) > 1e-12 * np.maximum(1.0, np.abs(ts))
    if np.any(miss):
        bad = ts[miss][0]
        raise OffGridError(f"timestamp {bad!r} is not on the trajectory grid")
    return traj.values[pick]
