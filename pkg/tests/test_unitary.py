import numpy as np
import pytest

from crossing_histories import CoverageError, DomainError
from crossing_histories.numerics import Grid1D, fft_friendly_odd
from crossing_histories.unitary import (
    ParticleParams,
    antisymmetric_gaussian,
    apply_kernel,
    brute_force_restricted,
    crossing_amplitude,
    crossing_amplitude_direct,
    crossing_propagator,
    decoherence_table,
    free_amplitude,
    free_propagator,
    gaussian_packet,
    half_line_gaussian,
    restricted_amplitude,
    restricted_propagator,
    superposition,
)

GRID = Grid1D.symmetric(25.0, fft_friendly_odd(2001))
P = ParticleParams(1.0, 1.0, 1.0)


def test_kernel_path_decomposition():
    x = np.linspace(-3, 3, 13)[:, None]
    x0 = np.array([-1.3, -0.2, 0.4, 2.0])[None, :]
    total = restricted_propagator(x, x0, P) + crossing_propagator(x, x0, P)
    assert np.allclose(total, free_propagator(x, x0, P), atol=1e-14)


def test_restricted_kernel_vanishes_at_origin():
    assert np.allclose(restricted_propagator(np.array([0.0]), np.array([0.7, -1.1]), P), 0.0, atol=1e-15)


def test_free_evolution_matches_analytic_spreading():
    psi = gaussian_packet(GRID, 1.0, 0.8, 1.5)
    out = free_amplitude(psi, P)
    x = GRID.points
    prob = np.abs(out.samples) ** 2
    mean = np.trapezoid(prob * x, x)
    var = np.trapezoid(prob * (x - mean) ** 2, x)
    assert mean == pytest.approx(1.0 + 1.5, abs=1e-10)
    assert var == pytest.approx(0.64 * (1 + (1 / (2 * 0.64)) ** 2), rel=1e-10)


def test_spectral_vs_kernel_quadrature():
    # the half-line cut leaves a small kink at 0 that limits the quadrature
    psi = half_line_gaussian(GRID, 3.0, 0.5, -1.0)
    idx = [int(np.argmin(abs(GRID.points - v))) for v in (0.5, 1.5, 3.0)]
    spec = restricted_amplitude(psi, P).samples[idx]
    quad = apply_kernel(restricted_propagator, psi, P, x_out=GRID.points[idx])
    assert np.allclose(spec, quad, atol=1e-5)
    free_quad = apply_kernel(free_propagator, psi, P, x_out=GRID.points[idx])
    assert np.allclose(free_amplitude(psi, P).samples[idx], free_quad, atol=1e-10)


def test_direct_crossing_equals_difference():
    psi = superposition(GRID, [1.0, 0.5j], [gaussian_packet(GRID, 1.0, 0.6, -2.0), gaussian_packet(GRID, -2.0, 0.9, 0.5)])
    d = crossing_amplitude_direct(psi, P).samples - crossing_amplitude(psi, P).samples
    assert np.max(np.abs(d)) < 1e-12


def test_sum_rule_and_table_fields():
    psi = gaussian_packet(GRID, 0.5, 1.0, -1.0)
    tab = decoherence_table(psi, P)
    assert abs(tab.sum_rule_residual) < 1e-12
    assert tab.epsilon_ratio == pytest.approx(abs(tab.d_offdiag) ** 2 / (tab.p_cross * tab.p_nocross))


def test_antisymmetric_state_is_exactly_consistent():
    tab = decoherence_table(antisymmetric_gaussian(GRID, 2.0, 0.7), P)
    assert tab.p_cross < 1e-12 and tab.p_nocross > 1 - 1e-12


def test_inbound_packet_reflects():
    # the restricted amplitude of a packet heading for the wall is reflected, not absorbed
    g = Grid1D.symmetric(30.0, fft_friendly_odd(3001))
    tab = decoherence_table(gaussian_packet(g, 4.0, 1.0, -6.0), P)
    assert tab.p_nocross > 0.99
    assert tab.p_cross > 1.9


def test_brute_force_slicing_approaches_image_result():
    psi = half_line_gaussian(GRID, 2.0, 0.7, 0.5)
    ref = restricted_amplitude(psi, P)
    errs = [brute_force_restricted(psi, P, n).distance(ref) for n in (64, 1024)]
    assert errs[1] < errs[0]


def test_coverage_error_when_grid_too_small():
    g = Grid1D.symmetric(3.0, 301)
    with pytest.raises(CoverageError):
        free_amplitude(gaussian_packet(g, 2.0, 1.0), P)


def test_params_validation():
    with pytest.raises(DomainError):
        ParticleParams(0.0)
    assert ParticleParams(2.0, 1.0, 8.0).small_time_scale == pytest.approx(2.0)
