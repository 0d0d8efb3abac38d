import numpy as np
import pytest

from crossing_histories import DomainError, RegimeError, RegimeWarning, StepSizeError
from crossing_histories.classical import BathParams
from crossing_histories.numerics import Grid1D
from crossing_histories.quantum import (
    DensityMatrixGrid,
    branch_densities,
    coarse_nodes,
    decoherence_regime,
    evolve,
    gaussian_density,
    master_step,
    max_step,
    offdiagonal_decay_profile,
    pure_density,
    quantum_crossing_probabilities,
)
from crossing_histories.unitary import ParticleParams, decoherence_table, gaussian_packet
from crossing_histories.wigner import wigner_transform

GRID = Grid1D.symmetric(10.0, 201)
PART = ParticleParams(1.0, 1.0)


def test_density_validation():
    with pytest.raises(DomainError):
        DensityMatrixGrid(GRID, np.zeros((3, 3)))
    s = gaussian_density(GRID, 0.0, 1.0).samples.copy()
    s[0, 1] += 1e-3
    with pytest.raises(DomainError):
        DensityMatrixGrid(GRID, s)


def test_step_bound():
    rho = gaussian_density(GRID, 0.0, 1.0)
    with pytest.raises(StepSizeError):
        master_step(rho, 2 * max_step(GRID, PART), None, PART)


def test_free_limit_matches_wavefunction_evolution():
    psi = gaussian_packet(GRID, 1.0, 1.0, 1.0)
    rho = evolve(pure_density(psi), 0.5, None, PART)
    from crossing_histories.unitary import free_amplitude

    out = free_amplitude(psi, PART.at(0.5)).samples
    assert np.max(np.abs(rho.samples - np.outer(out, out.conj()))) < 1e-12


def test_trace_and_hermiticity_preserved():
    bath = BathParams.from_diffusion(1.0, 0.5)
    rho = evolve(gaussian_density(GRID, 0.0, 1.0, 1.0), 0.5, bath, PART, n_steps=200)
    assert abs(rho.trace() - 1) < 1e-9
    assert rho.hermiticity_error(rho.samples) < 1e-13


def test_momentum_diffusion_heats_at_rate_two_dp():
    bath = BathParams.from_diffusion(1.0, 0.5)
    g = Grid1D.symmetric(20.0, 401)
    rho0 = gaussian_density(g, 0.0, 1.0)
    t = 0.5
    rho = evolve(rho0, t, bath, PART)
    W0, W = wigner_transform(rho0), wigner_transform(rho)
    p = W.grid.p_axis.points

    def var(w):
        m = w.momentum_marginal()
        return np.trapezoid(m * p**2, p) / np.trapezoid(m, p)

    assert var(W) - var(W0) == pytest.approx(2 * bath.diffusion * t, rel=1e-6)


def test_offdiagonal_decay_rate_frozen_kinetics():
    bath = BathParams.from_diffusion(1.0, 0.1)
    from crossing_histories.quantum import cat_density

    fit = offdiagonal_decay_profile(cat_density(GRID, 2.0, 0.5), np.linspace(0, 1, 6), bath, PART, kinetic=False)
    assert fit.rate == pytest.approx(fit.expected_rate, rel=1e-10)
    assert fit.r_squared > 0.999999


def test_branches_reproduce_unitary_at_zero_coupling():
    m = 4.0
    part = ParticleParams(m, 1.0, 0.5)
    g = Grid1D.symmetric(12.0, 243)
    psi = gaussian_packet(g, 2.0, 0.7, -6.0)
    br = branch_densities(pure_density(psi), 0.5, 16, None, part)
    ref = decoherence_table(psi, part)
    tr = br.traces()
    assert br.completeness_error() < 1e-12
    assert tr["rho_rr"].real == pytest.approx(ref.p_nocross, abs=1e-9)
    assert tr["rho_cc"].real == pytest.approx(ref.p_cross, abs=1e-9)
    assert tr["rho_cr"] == pytest.approx(ref.d_offdiag, abs=1e-9)


def test_branch_projection_mode_and_validation():
    part = ParticleParams(1.0, 1.0, 0.2)
    rho = gaussian_density(GRID, 2.0, 0.7, -1.0)
    br = branch_densities(rho, 0.2, 32, BathParams.from_diffusion(1.0, 1.0), part, mode="projection")
    assert br.completeness_error() < 1e-12
    with pytest.raises(DomainError):
        branch_densities(rho, 0.2, 8, None, part)
    with pytest.raises(DomainError):
        branch_densities(gaussian_density(Grid1D(0, 10, 101), 5, 1), 0.2, 16, None, part)


def test_coarse_nodes_preserve_mass_and_mean():
    g = Grid1D(0.0, 10.0, 201)
    W = wigner_transform(gaussian_density(g, 5.0, 1.0, 2.0))
    p, x, w = coarse_nodes(W, 0.5, 0.5)
    assert w.sum() == pytest.approx(W.total(), abs=1e-12)
    assert np.dot(w, x) / w.sum() == pytest.approx(5.0, abs=1e-3)


def test_regime_flags():
    g = Grid1D(0.0, 20.0, 401)
    rho = gaussian_density(g, 10.0, 1.0)
    assert not decoherence_regime(rho, 1.0, BathParams.from_diffusion(1.0, 1.0)).ok
    assert decoherence_regime(rho, 1.0, BathParams.from_diffusion(1.0, 144.0)).ok
    weak = BathParams.from_diffusion(1.0, 1.0)
    with pytest.raises(RegimeError):
        quantum_crossing_probabilities(rho, 1.0, weak, PART, strict=True)
    with pytest.warns(RegimeWarning):
        quantum_crossing_probabilities(rho, 1.0, weak, PART)


def test_crossing_requires_positive_support():
    rho = gaussian_density(GRID, 0.0, 1.0)
    with pytest.raises(DomainError):
        quantum_crossing_probabilities(rho, 1.0, BathParams.from_diffusion(1.0, 100.0), PART)


def test_crossing_outbound_and_mixture_linearity():
    m = 4.0
    bath = BathParams.from_diffusion(m, 144.0)
    part = ParticleParams(m, 1.0, 1.0)
    g = Grid1D(0.0, 20.0, 801)
    out = quantum_crossing_probabilities(gaussian_density(g, 10.0, 1.0, 20.0), 1.0, bath, part)
    assert out.p_nocross > 0.95
    assert out.d_offdiag == 0
    assert out.notes["clamp"] < 1e-6
