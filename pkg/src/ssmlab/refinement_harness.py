"""Grid-refinement convergence experiment and first-order error bounds.

For seeded pairs of (random input signal, random S4/S6 system) the study
discretizes at each refinement ``tau``, runs the discrete recursion, and
compares against one shared RK4 reference per (pair, flavor, scale) on the
``2**-14`` grid.  Errors are reported as the max absolute deviation over
steps k >= 1, both raw and relative to the reference's own max.

The input-scale sweep multiplies a unit-sup-norm version of each signal by
the scale factor, so the scale is (up to the 1% grid-estimation margin)
the max modulus of the input — the quantity the S6 error coefficient is
sensitive to.

Bound calculators return the coefficient of ``tau`` in the first-order
error bound; values that overflow double precision are returned as IEEE
``inf`` (they still dominate any finite measured error).
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._csv import write_csv
from .rng import Stream, normals, stream
from .signals import ChebyshevSignal, grid_max_abs, lipschitz_bound, max_modulus, sample_signal
from .ssm_core import (
    ContinuousSSM,
    default_diag,
    discretize,
    make_s4,
    make_s6,
    run_discrete,
    simulate_continuous,
    softplus,
    softplus_inv,
)

__all__ = [
    "TAU_REF",
    "DEFAULT_TAUS",
    "DEFAULT_SCALES",
    "BoundInputs",
    "ConvergenceRecord",
    "StudyResult",
    "DegenerateReferenceError",
    "abs_max_error",
    "rel_max_error",
    "bound_general",
    "bound_s4",
    "bound_s4_from_norms",
    "bound_s6",
    "bound_s6_from_norms",
    "run_convergence_study",
    "fit_order",
    "median_table",
    "CSV_HEADER",
    "write_convergence_csv",
]

TAU_REF = 2.0**-14
DEFAULT_TAUS = tuple(2.0**-k for k in range(10, 1, -1))  # 2^-10 .. 2^-2
DEFAULT_SCALES = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
DEFAULT_METHODS = ("ZOH", "Bilinear")
_EXP_CUTOFF = 700.0  # beyond this, exp overflows double anyway

CSV_HEADER = [
    "pair_id",
    "flavor",
    "method",
    "tau",
    "scale",
    "rel_max_error",
    "abs_max_error",
    "bound",
    "order_fit_group",
]


class DegenerateReferenceError(ValueError):
    """Reference output is identically zero past the first step."""


@dataclasses.dataclass(frozen=True)
class BoundInputs:
    """Constants of the general first-order error coefficient."""

    l_u: float
    l_b: float
    l_c: float
    l_delta: float
    m_u: float
    m_b: float
    m_c: float
    m_delta: float
    a_norm: float

    def __post_init__(self):
        for name, value in dataclasses.asdict(self).items():
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")
        if not self.m_delta > 0:
            raise ValueError("m_delta must be positive")
        if not self.a_norm > 0:
            raise ValueError("a_norm must be positive")


@dataclasses.dataclass(frozen=True)
class ConvergenceRecord:
    """One (pair, flavor, method, tau, scale) measurement."""

    pair_id: int
    flavor: str
    method: str
    tau: float
    scale: float
    rel_max_error: float
    abs_max_error: float
    bound: float
    order_fit_group: str

    def __post_init__(self):
        if not (math.isfinite(self.rel_max_error) and self.rel_max_error >= 0):
            raise ValueError("rel_max_error must be finite and nonnegative")


@dataclasses.dataclass(frozen=True)
class StudyResult:
    """All retained records plus the count of flagged-and-dropped runs."""

    records: list
    divergence_warnings: int


def abs_max_error(y_disc, y_ref) -> float:
    """max_k |y_disc[k] - y_ref[k]| over k >= 1."""
    yd = np.asarray(y_disc, dtype=float)
    yr = np.asarray(y_ref, dtype=float)
    if yd.shape != yr.shape or yd.ndim != 1 or yd.size < 2:
        raise ValueError("need equal-length 1-D sequences with at least 2 samples")
    return float(np.max(np.abs(yd[1:] - yr[1:])))


def rel_max_error(y_disc, y_ref) -> float:
    """abs_max_error normalized by max_k |y_ref[k]| over k >= 1."""
    yr = np.asarray(y_ref, dtype=float)
    numerator = abs_max_error(y_disc, y_ref)
    denominator = float(np.max(np.abs(yr[1:])))
    if denominator == 0.0:
        raise DegenerateReferenceError("reference is zero past the first step")
    return numerator / denominator


def _safe_exp(x: float) -> float:
    return float(np.exp(x)) if x < _EXP_CUTOFF else math.inf


def bound_general(inp: BoundInputs) -> float:
    """Coefficient of tau in the general first-order error bound."""
    e = _safe_exp(inp.m_delta * inp.a_norm)
    linear = inp.m_delta * (inp.l_b * inp.m_u + inp.m_b) * inp.l_u
    cross = inp.l_delta * inp.l_u * inp.m_b * inp.m_u
    if not math.isfinite(e):
        return 0.0 if inp.m_c == 0.0 or (linear == 0.0 and cross == 0.0) else math.inf
    total = linear + cross * e
    if inp.m_c == 0.0 or total == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(inp.m_c * total / (inp.m_delta * inp.a_norm) * (e - 1.0))


def _check_nonneg(**named: float) -> None:
    for name, value in named.items():
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"{name} must be finite and >= 0, got {value}")


def bound_s4_from_norms(b_norm: float, c_norm: float, delta: float, a_norm: float, l_u: float) -> float:
    """||B|| ||C|| L_u (e^{delta ||A||} - 1) / ||A||."""
    _check_nonneg(b_norm=b_norm, c_norm=c_norm, delta=delta, l_u=l_u)
    if not (math.isfinite(a_norm) and a_norm > 0):
        raise ValueError(f"a_norm must be finite and > 0, got {a_norm}")
    e = _safe_exp(delta * a_norm)
    if not math.isfinite(e):
        return math.inf if b_norm * c_norm * l_u > 0 else 0.0
    with np.errstate(over="ignore"):
        return float(b_norm * c_norm * l_u * (e - 1.0) / a_norm)


def bound_s4(sys: ContinuousSSM, l_u: float) -> float:
    """First-order error coefficient of a constant-parameter (S4) system."""
    if sys.flavor != "S4":
        raise ValueError(f"bound_s4 requires an S4 system, got {sys.flavor}")
    return bound_s4_from_norms(
        float(np.linalg.norm(sys.b)), float(np.linalg.norm(sys.c)), sys.delta_params.constant, sys.a_norm, l_u
    )


def bound_s6_from_norms(
    b_norm: float, c_norm: float, w_delta: float, b_delta: float, a_norm: float, l_u: float, m_u: float
) -> float:
    """Input-dependent (S6) coefficient with m_delta = softplus(|w| m_u + b)."""
    _check_nonneg(b_norm=b_norm, c_norm=c_norm, l_u=l_u, m_u=m_u)
    if not (math.isfinite(a_norm) and a_norm > 0):
        raise ValueError(f"a_norm must be finite and > 0, got {a_norm}")
    if not (math.isfinite(w_delta) and math.isfinite(b_delta)):
        raise ValueError("w_delta and b_delta must be finite")
    m_delta = float(softplus(abs(w_delta) * m_u + b_delta))
    e = _safe_exp(m_delta * a_norm)
    if not math.isfinite(e):
        return 0.0 if b_norm * c_norm * m_u * l_u == 0.0 else math.inf
    with np.errstate(over="ignore"):
        return float(
            b_norm * c_norm * m_u**2 * l_u * (2.0 * m_delta + abs(w_delta) * m_u * e) / (m_delta * a_norm) * (e - 1.0)
        )


def bound_s6(sys: ContinuousSSM, l_u: float, m_u: float) -> float:
    """First-order error coefficient of an input-gated (S6) system."""
    if sys.flavor != "S6":
        raise ValueError(f"bound_s6 requires an S6 system, got {sys.flavor}")
    return bound_s6_from_norms(
        float(np.linalg.norm(sys.b)),
        float(np.linalg.norm(sys.c)),
        sys.delta_params.w_delta,
        sys.delta_params.b_delta,
        sys.a_norm,
        l_u,
        m_u,
    )


def _order_fit_group(pair_id: int, flavor: str, method: str, scale: float) -> str:
    return f"pair{pair_id}-{flavor}-{method}-s{scale:g}"


def _validate_taus(taus) -> list[float]:
    out = []
    for tau in taus:
        ratio = tau / TAU_REF
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(f"tau {tau} is not a multiple of the reference step {TAU_REF}")
        out.append(float(tau))
    if not out:
        raise ValueError("need at least one tau")
    return out


def _pair_records(rng_seed: int, pair: int, taus, scales, methods, n_states: int):
    """All records for one (signal, system) pair; returns (records, warnings)."""
    sig = sample_signal(rng_seed, pair)
    gen = stream(rng_seed, Stream.SYSTEM_SAMPLER, pair)
    b = normals(gen, n_states).astype(complex)
    c = normals(gen, n_states).astype(complex)
    w_delta = float(normals(gen, 1)[0])
    a = default_diag(n_states)
    b_delta = softplus_inv(0.01)
    systems = (
        ("S4", make_s4(a, b, c, d=0.0, delta=0.01)),
        ("S6", make_s6(a, b, c, d=0.0, w_delta=w_delta, b_delta=b_delta)),
    )
    base = grid_max_abs(sig)  # raw sup-norm of the unscaled draw

    records = []
    warnings = 0
    for flavor, system in systems:
        for scale in scales:
            scaled = ChebyshevSignal(sig.coeffs, scale=float(scale) / base)
            reference = simulate_continuous(system, scaled, TAU_REF)
            l_u = lipschitz_bound(scaled)
            if flavor == "S4":
                bound = bound_s4(system, l_u)
            else:
                bound = bound_s6(system, l_u, max_modulus(scaled))
            for tau in taus:
                length = int(round(1.0 / tau)) + 1
                u_samples = scaled.eval(np.arange(length) * tau)
                stride = int(round(tau / TAU_REF))
                # both grids are dyadic, so plain striding hits exactly
                y_ref = reference.values[::stride][:length]
                for method in methods:
                    y_disc = run_discrete(discretize(system, u_samples, tau, method), u_samples).values
                    deviation = float(np.max(np.abs(y_disc[1:] - y_ref[1:])))
                    reference_max = float(np.max(np.abs(y_ref[1:])))
                    rel = deviation / reference_max if reference_max > 0 else math.inf
                    if not math.isfinite(rel):
                        warnings += 1  # flagged and excluded from aggregates
                        continue
                    records.append(
                        ConvergenceRecord(
                            pair_id=pair,
                            flavor=flavor,
                            method=method,
                            tau=float(tau),
                            scale=float(scale),
                            rel_max_error=rel,
                            abs_max_error=deviation,
                            bound=bound,
                            order_fit_group=_order_fit_group(pair, flavor, method, float(scale)),
                        )
                    )
    return records, warnings


def run_convergence_study(
    rng_seed: int,
    n_pairs: int = 20,
    taus=None,
    scales=None,
    methods=DEFAULT_METHODS,
    n_states: int = 8,
    threads: int = 1,
) -> StudyResult:
    """Full Cartesian sweep; one RK4 reference per (pair, flavor, scale).

    Pairs are independent, so ``threads > 1`` maps them over a thread pool;
    record content and order are identical for any thread count.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    taus = _validate_taus(DEFAULT_TAUS if taus is None else taus)
    scales = list(DEFAULT_SCALES if scales is None else scales)
    for method in methods:
        if method not in DEFAULT_METHODS:
            raise ValueError(f"unknown method {method!r}")

    def worker(pair: int):
        return _pair_records(rng_seed, pair, taus, scales, methods, n_states)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, range(n_pairs)))
    else:
        results = [worker(pair) for pair in range(n_pairs)]
    records = [record for pair_records, _ in results for record in pair_records]
    warnings = sum(w for _, w in results)
    return StudyResult(records=records, divergence_warnings=warnings)


def fit_order(records) -> float:
    """Least-squares slope of log(rel error) vs log(tau) for one curve."""
    taus = [r.tau for r in records]
    errors = [r.rel_max_error for r in records]
    if len(set(taus)) < 3:
        raise ValueError("order fit needs at least 3 distinct tau values")
    if any(e <= 0 for e in errors):
        raise ValueError("order fit needs strictly positive errors")
    return float(np.polyfit(np.log(taus), np.log(errors), 1)[0])


def median_table(records) -> dict:
    """Median relative error per (flavor, scale) cell, pooled over the rest."""
    cells: dict = {}
    for record in records:
        cells.setdefault((record.flavor, record.scale), []).append(record.rel_max_error)
    return {key: float(np.median(vals)) for key, vals in sorted(cells.items())}


def write_convergence_csv(records, path) -> None:
    """Emit records sorted by (pair_id, flavor, method, tau, scale)."""
    ordered = sorted(records, key=lambda r: (r.pair_id, r.flavor, r.method, r.tau, r.scale))
    rows = [
        (r.pair_id, r.flavor, r.method, r.tau, r.scale, r.rel_max_error, r.abs_max_error, r.bound, r.order_fit_group)
        for r in ordered
    ]
    write_csv(path, CSV_HEADER, rows)
