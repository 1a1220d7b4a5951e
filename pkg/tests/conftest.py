import pytest
from hypothesis import HealthCheck, settings

from ssmlab import signals, ssm_core
from ssmlab.rng import Stream, normals, stream

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")


@pytest.fixture(scope="session")
def pair_sampler():
    """The seeded (signal, systems) draw used by the refinement harness.

    Returns a function mapping (seed, pair) to a unit-amplitude signal and
    the matching constant-step and input-dependent-step systems.
    """

    def draw(seed: int, pair: int, n_states: int = 8):
        sig = signals.sample_signal(seed, index=pair)
        unit = signals.ChebyshevSignal(sig.coeffs, scale=1.0 / signals.grid_max_abs(sig))
        gen = stream(seed, Stream.SYSTEM_SAMPLER, pair)
        b = normals(gen, n_states).astype(complex)
        c = normals(gen, n_states).astype(complex)
        w_delta = float(normals(gen, 1)[0])
        a = ssm_core.default_diag(n_states)
        s4 = ssm_core.make_s4(a, b, c, d=0.0, delta=0.01)
        s6 = ssm_core.make_s6(a, b, c, d=0.0, w_delta=w_delta, b_delta=ssm_core.softplus_inv(0.01))
        return unit, s4, s6

    return draw
