import math

import pytest

from crossing_histories import DomainError, RegimeWarning, ResolutionError
from crossing_histories.ensemble import (
    BinSpec,
    OneParticleHistoryData,
    asymptotic_dnn,
    binned_matrix,
    brute_force_dnn,
    candidate_probabilities,
    contour_dnn,
    exact_dnn,
    exact_log_epsilon,
    exact_matrix,
    large_alpha_log_epsilon,
    near_one_regime,
    saddle_rho,
)

ONE = OneParticleHistoryData.from_alpha(3.7, 0.3, 0.8)


def test_one_particle_validation():
    with pytest.raises(DomainError):
        OneParticleHistoryData(0.5, 0.6, 0.0)
    one = OneParticleHistoryData.from_alpha(2.0, 0.25, 0.4)
    assert one.alpha == pytest.approx(2.0)
    assert one.p / one.pbar == pytest.approx(1 / 3)
    assert one.p + one.pbar + 2 * one.d.real == pytest.approx(1.0)
    assert OneParticleHistoryData(0.3, 0.7, 0).alpha == math.inf


def test_two_particles_closed_form():
    bf = brute_force_dnn(2, ONE)
    assert bf.entry(2, 0).value == pytest.approx(ONE.d**2, rel=1e-13)
    assert bf.entry(0, 0).value == pytest.approx(ONE.pbar**2, rel=1e-13)
    assert exact_dnn(2, 2, 0, ONE).value == pytest.approx(ONE.d**2, rel=1e-13)


@pytest.mark.parametrize("N", [1, 4, 9])
def test_three_methods_agree(N):
    bf = brute_force_dnn(N, ONE)
    ex = exact_matrix(N, ONE)
    for n in range(N + 1):
        for k in range(N + 1):
            ref = bf.entry(n, k).value
            assert exact_dnn(N, n, k, ONE).value == pytest.approx(ref, rel=1e-12)
            assert contour_dnn(N, n, k, ONE).value == pytest.approx(ref, rel=1e-12)
    assert ex.total().value == pytest.approx(1.0, abs=1e-13)
    assert ex.hermiticity_error() < 1e-13


def test_contour_radius_invariance_and_resolution_guard():
    ref = exact_dnn(50, 20, 30, ONE).value
    for r in (0.5, 2.0):
        assert contour_dnn(50, 20, 30, ONE, radius=r).value == pytest.approx(ref, rel=1e-10)
    with pytest.raises(ResolutionError):
        contour_dnn(50, 20, 30, ONE, m_points=10)


def test_diagonal_deficit_shrinks_like_inverse_sqrt_alpha():
    # off-diagonal mass is O(N / sqrt(alpha)); the candidate probabilities absorb the rest
    deficit = [1.0 - candidate_probabilities(300, OneParticleHistoryData.from_alpha(a, 0.4)).sum() for a in (1e8, 1e10)]
    assert deficit[0] > 0
    assert deficit[0] / deficit[1] == pytest.approx(10.0, rel=0.05)


def test_alpha_one_pure_coherence():
    one = OneParticleHistoryData.from_alpha(1.0, 0.4, 0.3)
    for n, k in [(0, 50), (30, 170), (100, 101)]:
        assert abs(exact_log_epsilon(200, n, k, one)) < 1e-11


def test_large_alpha_estimate():
    one = OneParticleHistoryData.from_alpha(1e6, 0.4)
    assert exact_log_epsilon(40, 10, 20, one) == pytest.approx(large_alpha_log_epsilon(40, 10, 20, 1e6), abs=0.1)


def test_binning_preserves_total():
    mat = exact_matrix(20, ONE)
    bins = BinSpec(20, 2)
    assert bins.n_bins == 6 and bins.members(5).tolist() == [20]
    bm = binned_matrix(mat, bins)
    assert bm.total().value == pytest.approx(mat.total().value, rel=1e-13)


def test_saddle_root_and_asymptotic_error_shrinks():
    s = saddle_rho(100, 30, 60, 5.0)
    assert s.rho == pytest.approx(s.quadratic_rho, rel=1e-12)
    assert s.residual < 1e-10
    one = OneParticleHistoryData.from_alpha(5.0, 0.4)
    errs = [abs(asymptotic_dnn(N, int(0.3 * N), int(0.6 * N), one).log_mag - exact_dnn(N, int(0.3 * N), int(0.6 * N), one).log_mag) for N in (100, 400)]
    assert errs[1] < errs[0] / 3
    with pytest.raises(DomainError):
        saddle_rho(100, 0, 60, 5.0)


def test_near_one_regime():
    one = OneParticleHistoryData.from_alpha(1.02, 0.3)
    r = near_one_regime(1000, 250, 750, one)
    assert r.log_epsilon_exact / r.log_epsilon_estimate == pytest.approx(1.0, abs=0.3)
    with pytest.warns(RegimeWarning):
        near_one_regime(50, 10, 20, OneParticleHistoryData.from_alpha(3.0, 0.3), compare=False)


def test_huge_ensembles_stay_finite():
    one = OneParticleHistoryData.from_alpha(1e3, 0.3)
    v = exact_dnn(20000, 6000, 6010, one)
    assert math.isfinite(v.log_mag) and v.log_mag < 0
