"""Smooth random input signals on [0, 1] as Chebyshev expansions.

A signal is ``u(t) = scale * sum_{j=1..20} C_j T_j(2t - 1)`` with the
coefficients drawn i.i.d. standard normal.  The degree-j Chebyshev
polynomial of the first kind is evaluated by the stable three-term
recurrence; the derivative uses ``T_j'(s) = j U_{j-1}(s)`` (second kind)
with a chain-rule factor 2 from the domain map ``s = 2t - 1``.

Lipschitz and max-modulus constants are grid-estimated upper bounds
(2**14 + 1 uniform points, 1% safety factor) — cheap, deterministic, and
tight enough for the error-bound dominance checks.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .rng import Stream, normals, stream

__all__ = [
    "N_COEFFS",
    "ChebyshevSignal",
    "HeldSignal",
    "sample_signal",
    "hold",
    "lipschitz_bound",
    "max_modulus",
    "grid_max_abs",
]

N_COEFFS = 20
_GRID_POINTS = 2**14 + 1
_SAFETY = 1.01


@dataclasses.dataclass(frozen=True)
class ChebyshevSignal:
    """Degree-20 Chebyshev expansion on [0, 1] times a positive scale."""

    coeffs: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (N_COEFFS,):
            raise ValueError(f"expected {N_COEFFS} coefficients, got shape {coeffs.shape}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "coeffs", coeffs)

    def eval(self, t):
        """Evaluate u(t) for scalar or array t in [0, 1]."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
            raise ValueError("signal evaluated outside [0, 1]")
        s = 2.0 * t_arr - 1.0
        # T_1 = s, T_2 = 2s^2 - 1, T_{j+1} = 2 s T_j - T_{j-1}
        t_prev = np.ones_like(s)  # T_0
        t_cur = s  # T_1
        acc = self.coeffs[0] * t_cur
        for j in range(1, N_COEFFS):
            t_prev, t_cur = t_cur, 2.0 * s * t_cur - t_prev
            acc = acc + self.coeffs[j] * t_cur
        out = self.scale * acc
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def eval_left(self, t):
        """Left-limit evaluation; identical to eval for continuous signals."""
        return self.eval(t)

    def derivative(self, t):
        """Evaluate u'(t) via T_j'(s) = j U_{j-1}(s) and ds/dt = 2."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
            raise ValueError("signal evaluated outside [0, 1]")
        s = 2.0 * t_arr - 1.0
        # U_0 = 1, U_1 = 2s, U_{j+1} = 2 s U_j - U_{j-1}
        u_prev = np.ones_like(s)  # U_0
        u_cur = 2.0 * s  # U_1
        acc = self.coeffs[0] * 1.0 * u_prev  # j=1 term: 1 * U_0
        for j in range(2, N_COEFFS + 1):
            acc = acc + self.coeffs[j - 1] * j * u_cur
            u_prev, u_cur = u_cur, 2.0 * s * u_cur - u_prev
        out = 2.0 * self.scale * acc
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def with_scale(self, scale: float) -> "ChebyshevSignal":
        return dataclasses.replace(self, scale=float(scale))


def sample_signal(rng_seed: int, index: int = 0) -> ChebyshevSignal:
    """Draw 20 i.i.d. standard-normal coefficients; scale = 1."""
    gen = stream(rng_seed, Stream.SIGNAL_COEFFS, index)
    return ChebyshevSignal(coeffs=normals(gen, N_COEFFS), scale=1.0)


@dataclasses.dataclass(frozen=True)
class HeldSignal:
    """Piecewise-constant hold v(t) = u(tau * floor(t / tau)).

    ``eval`` takes the right limit at breakpoints (a breakpoint starts its
    own interval); ``eval_left`` assigns breakpoints to the preceding
    interval, which is what an integrator needs when a step ends exactly on
    a breakpoint.  The 1e-12 floor guard keeps grid points on their own
    interval despite float roundoff.
    """

    base: ChebyshevSignal
    tau: float

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"hold interval must be in (0, 1], got {self.tau}")

    def _knots(self, t, left: bool):
        t_arr = np.asarray(t, dtype=float)
        k = np.floor(t_arr / self.tau + 1e-12)
        if left:
            is_breakpoint = np.abs(t_arr - k * self.tau) < 1e-12
            k = np.where(is_breakpoint & (t_arr > 0), k - 1, k)
        return np.clip(k * self.tau, 0.0, 1.0)

    def eval(self, t):
        out = self.base.eval(self._knots(t, left=False))
        return float(out) if np.isscalar(t) else out

    def eval_left(self, t):
        out = self.base.eval(self._knots(t, left=True))
        return float(out) if np.isscalar(t) else out


def hold(sig: ChebyshevSignal, tau: float) -> HeldSignal:
    """Piecewise-constant hold of ``sig`` with interval ``tau``."""
    return HeldSignal(base=sig, tau=tau)


def _grid(n_points: int = _GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_points)


def grid_max_abs(sig: ChebyshevSignal, n_points: int = _GRID_POINTS) -> float:
    """Raw grid max of |u| (no safety factor); also used for normalization."""
    return float(np.max(np.abs(sig.eval(_grid(n_points)))))


def lipschitz_bound(sig: ChebyshevSignal, n_points: int = _GRID_POINTS) -> float:
    """Grid-estimated Lipschitz constant: 1.01 * max |u'| on the uniform grid."""
    return _SAFETY * float(np.max(np.abs(sig.derivative(_grid(n_points)))))


def max_modulus(sig: ChebyshevSignal, n_points: int = _GRID_POINTS) -> float:
    """Grid-estimated sup |u|: 1.01 * max |u| on the uniform grid."""
    return _SAFETY * grid_max_abs(sig, n_points)
