from hypothesis import given, settings
from hypothesis import strategies as st

from crossing_histories.classical import BathParams, determinant_prefactor, restricted_fp_kernel
from crossing_histories.ensemble import OneParticleHistoryData, brute_force_dnn, contour_dnn, exact_dnn, exact_log_epsilon
from crossing_histories.numerics import Grid1D, fft_friendly_odd
from crossing_histories.unitary import ParticleParams, crossing_amplitude_direct, decoherence_table, gaussian_packet, restricted_amplitude, superposition

GRID = Grid1D.symmetric(30.0, fft_friendly_odd(1801))

packet = st.tuples(st.floats(-4, 4), st.floats(0.4, 1.5), st.floats(-2, 2))


@settings(max_examples=25, deadline=None)
@given(st.lists(packet, min_size=1, max_size=3), st.floats(0.05, 2.0), st.floats(0.5, 3.0))
def test_sum_rule_any_state(packets, t, m):
    psi = superposition(GRID, [1.0 + 0.3j * k for k in range(len(packets))], [gaussian_packet(GRID, *p) for p in packets])
    params = ParticleParams(m, 1.0, t)
    tab = decoherence_table(psi, params)
    assert abs(tab.sum_rule_residual) < 1e-10
    direct = crossing_amplitude_direct(psi, params)
    assert abs(direct.norm2() - tab.p_cross) < 1e-10
    assert tab.p_nocross <= 1 + 1e-12 and tab.p_nocross == restricted_amplitude(psi, params).norm2()


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 6), st.floats(-3, 3), st.floats(0.01, 3), st.floats(0.1, 3), st.floats(0.2, 4))
def test_absorbing_condition_everywhere(p, p0, x0, t, D):
    bath = BathParams.from_diffusion(1.0, D)
    assert abs(float(restricted_fp_kernel(p, 0.0, p0, x0, t, bath))) <= 1e-12 * determinant_prefactor(t, bath)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.6, 1e4), st.floats(0.05, 0.95), st.floats(-1.2, 1.2), st.integers(1, 7))
def test_ensemble_methods_agree(alpha, frac, phase, N):
    try:
        one = OneParticleHistoryData.from_alpha(alpha, frac, phase)
    except Exception:
        return
    bf = brute_force_dnn(N, one)
    for n in range(N + 1):
        for k in range(N + 1):
            ref = bf.entry(n, k).value
            if abs(ref) < 1e-280:
                continue
            assert abs(exact_dnn(N, n, k, one).value - ref) <= 1e-10 * abs(ref)
            assert abs(contour_dnn(N, n, k, one).value - ref) <= 1e-9 * abs(ref)
    assert abs(bf.total().value - 1) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 1e8), st.floats(0.05, 0.95), st.floats(-3.0, 3.0), st.integers(2, 60), st.data())
def test_decoherence_measure_never_exceeds_one(alpha, frac, phase, N, data):
    one = OneParticleHistoryData.from_alpha(alpha, frac, phase)
    n = data.draw(st.integers(0, N))
    k = data.draw(st.integers(0, N))
    assert exact_log_epsilon(N, n, k, one) <= 1e-9
