import math

import numpy as np
import pytest

from ssmlab.refinement_harness import (
    BoundInputs,
    ConvergenceRecord,
    CSV_HEADER,
    DEFAULT_TAUS,
    DegenerateReferenceError,
    TAU_REF,
    abs_max_error,
    bound_general,
    bound_s4,
    bound_s4_from_norms,
    bound_s6,
    bound_s6_from_norms,
    fit_order,
    median_table,
    rel_max_error,
    run_convergence_study,
    write_convergence_csv,
)
from ssmlab.ssm_core import softplus, softplus_inv

SMALL_TAUS = (2.0**-4, 2.0**-5, 2.0**-6)


@pytest.fixture(scope="module")
def small_study():
    return run_convergence_study(3, n_pairs=2, taus=SMALL_TAUS, scales=(1.0, 4.0))


def test_error_helpers_examples():
    assert abs_max_error([0.0, 1.0, 2.0], [0.0, 1.0, 1.0]) == 1.0
    assert rel_max_error([0.0, 1.0, 2.0], [0.0, 1.0, 1.0]) == 1.0
    assert abs_max_error([5.0, 1.0, 1.0], [0.0, 1.0, 1.0]) == 0.0  # step 0 ignored
    assert rel_max_error([0.0, 2.0, 4.0], [0.0, 1.0, 2.0]) == pytest.approx(1.0, rel=1e-15)


def test_error_helpers_validation():
    with pytest.raises(ValueError):
        abs_max_error([0.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        abs_max_error(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(DegenerateReferenceError):
        rel_max_error([0.0, 1.0, 1.0], [5.0, 0.0, 0.0])


def test_constant_coefficient_bound_unit_example():
    assert bound_s4_from_norms(1.0, 1.0, 1.0, 1.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-12)
    assert bound_s4_from_norms(1.0, 1.0, 1.0, 1.0, 0.0) == 0.0
    assert bound_s4_from_norms(2.0, 3.0, 0.0, 1.0, 1.0) == 0.0  # exp(0) - 1
    assert bound_s4_from_norms(1.0, 1.0, 1000.0, 1.0, 1.0) == math.inf
    assert bound_s4_from_norms(1.0, 1.0, 1000.0, 1.0, 0.0) == 0.0  # zero factor wins


def test_bound_input_validation():
    with pytest.raises(ValueError):
        bound_s4_from_norms(-1.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        bound_s4_from_norms(1.0, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        bound_s6_from_norms(1.0, 1.0, 0.5, 0.5, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        bound_s6_from_norms(1.0, 1.0, math.nan, 0.5, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        bound_s6_from_norms(1.0, 1.0, 0.5, 0.5, 1.0, -1.0, 1.0)


def test_gated_bound_without_step_gating_matches_general_formula():
    b_norm, c_norm, a_norm, l_u, m_u = 1.3, 0.7, 2.0, 3.0, 1.5
    b_delta = softplus_inv(0.01)
    direct = bound_s6_from_norms(b_norm, c_norm, 0.0, b_delta, a_norm, l_u, m_u)
    general = bound_general(
        BoundInputs(
            l_u=l_u,
            l_b=b_norm,
            l_c=c_norm,
            l_delta=0.0,
            m_u=m_u,
            m_b=b_norm * m_u,
            m_c=c_norm * m_u,
            m_delta=float(softplus(b_delta)),
            a_norm=a_norm,
        )
    )
    assert direct == pytest.approx(general, rel=1e-12)


def test_gated_bound_grows_with_input_amplitude():
    b_delta = softplus_inv(0.01)
    lo = bound_s6_from_norms(1.0, 1.0, 0.5, b_delta, 1.0, 1.0, 1.0)
    hi = bound_s6_from_norms(1.0, 1.0, 0.5, b_delta, 1.0, 1.0, 2.0)
    assert 0.0 < lo < hi
    assert bound_s6_from_norms(1.0, 1.0, 0.5, b_delta, 1.0, 1.0, 0.0) == 0.0


def test_general_bound_zero_readout_kills_overflow():
    inputs = BoundInputs(l_u=1.0, l_b=1.0, l_c=1.0, l_delta=1.0, m_u=1.0, m_b=1.0, m_c=0.0, m_delta=1000.0, a_norm=1.0)
    assert bound_general(inputs) == 0.0


def test_bound_inputs_validation():
    good = dict(l_u=1.0, l_b=1.0, l_c=1.0, l_delta=0.0, m_u=1.0, m_b=1.0, m_c=1.0, m_delta=0.01, a_norm=1.0)
    BoundInputs(**good)
    with pytest.raises(ValueError):
        BoundInputs(**{**good, "l_u": -1.0})
    with pytest.raises(ValueError):
        BoundInputs(**{**good, "m_delta": 0.0})
    with pytest.raises(ValueError):
        BoundInputs(**{**good, "a_norm": 0.0})
    with pytest.raises(ValueError):
        BoundInputs(**{**good, "m_u": math.inf})


def test_system_level_bounds_check_flavor(pair_sampler):
    _, s4, s6 = pair_sampler(3, 0)
    assert bound_s4(s4, 1.0) > 0.0
    assert bound_s6(s6, 1.0, 1.0) > 0.0
    with pytest.raises(ValueError):
        bound_s4(s6, 1.0)
    with pytest.raises(ValueError):
        bound_s6(s4, 1.0, 1.0)


def synthetic_records(power: float):
    return [
        ConvergenceRecord(
            pair_id=0,
            flavor="S4",
            method="ZOH",
            tau=tau,
            scale=1.0,
            rel_max_error=3.0 * tau**power,
            abs_max_error=tau**power,
            bound=1.0,
            order_fit_group="g",
        )
        for tau in (2.0**-4, 2.0**-6, 2.0**-8)
    ]


def test_fit_order_recovers_synthetic_slopes():
    assert fit_order(synthetic_records(1.0)) == pytest.approx(1.0, abs=1e-12)
    assert fit_order(synthetic_records(2.0)) == pytest.approx(2.0, abs=1e-12)


def test_fit_order_validation():
    records = synthetic_records(1.0)
    with pytest.raises(ValueError):
        fit_order(records[:2])
    zeroed = records[:2] + [
        ConvergenceRecord(
            pair_id=0,
            flavor="S4",
            method="ZOH",
            tau=2.0**-8,
            scale=1.0,
            rel_max_error=0.0,
            abs_max_error=0.0,
            bound=1.0,
            order_fit_group="g",
        )
    ]
    with pytest.raises(ValueError):
        fit_order(zeroed)


def test_study_validation():
    with pytest.raises(ValueError):
        run_convergence_study(0, n_pairs=0)
    with pytest.raises(ValueError):
        run_convergence_study(0, n_pairs=1, threads=0)
    with pytest.raises(ValueError):
        run_convergence_study(0, n_pairs=1, taus=(0.3,))
    with pytest.raises(ValueError):
        run_convergence_study(0, n_pairs=1, methods=("Euler",))


def test_default_grids():
    assert TAU_REF == 2.0**-14
    assert DEFAULT_TAUS == tuple(2.0**-k for k in range(10, 1, -1))
    for tau in DEFAULT_TAUS:
        assert (tau / TAU_REF) == round(tau / TAU_REF)


def test_small_study_shape(small_study):
    # 2 pairs x 2 flavors x 2 scales x 3 taus x 2 methods
    assert len(small_study.records) == 48
    assert small_study.divergence_warnings == 0
    flavors = {r.flavor for r in small_study.records}
    methods = {r.method for r in small_study.records}
    assert flavors == {"S4", "S6"}
    assert methods == {"ZOH", "Bilinear"}
    for record in small_study.records:
        assert record.rel_max_error > 0.0
        assert record.bound > 0.0


def test_study_is_deterministic_and_thread_invariant(small_study):
    repeat = run_convergence_study(3, n_pairs=2, taus=SMALL_TAUS, scales=(1.0, 4.0))
    threaded = run_convergence_study(3, n_pairs=2, taus=SMALL_TAUS, scales=(1.0, 4.0), threads=3)
    assert repeat.records == small_study.records
    assert threaded.records == small_study.records


def test_csv_roundtrip(small_study, tmp_path):
    path = tmp_path / "records.csv"
    write_convergence_csv(small_study.records, path)
    first = path.read_bytes()
    lines = first.decode().splitlines()
    assert len(lines) == 49
    assert lines[0] == ",".join(CSV_HEADER)
    write_convergence_csv(list(reversed(small_study.records)), path)
    assert path.read_bytes() == first  # sorted output is order-insensitive


def test_median_table():
    def rec(flavor, scale, rel):
        return ConvergenceRecord(
            pair_id=0,
            flavor=flavor,
            method="ZOH",
            tau=0.25,
            scale=scale,
            rel_max_error=rel,
            abs_max_error=rel,
            bound=1.0,
            order_fit_group="g",
        )

    records = [rec("S4", 1.0, 0.1), rec("S4", 1.0, 0.3), rec("S4", 1.0, 0.2), rec("S6", 2.0, 5.0)]
    table = median_table(records)
    assert table == {("S4", 1.0): 0.2, ("S6", 2.0): 5.0}


def test_errors_shrink_with_tau(small_study):
    by_group: dict = {}
    for record in small_study.records:
        by_group.setdefault(record.order_fit_group, []).append(record)
    assert len(by_group) == 16
    for group in by_group.values():
        ordered = sorted(group, key=lambda r: r.tau)
        assert ordered[0].rel_max_error < ordered[-1].rel_max_error
