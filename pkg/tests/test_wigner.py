import math

import numpy as np
import pytest

from crossing_histories.numerics import Grid1D
from crossing_histories.quantum import cat_density, gaussian_density, mixed_gaussian_density
from crossing_histories.wigner import inverse_wigner, wigner_grids, wigner_transform

GRID = Grid1D.symmetric(10.0, 401)


def test_gaussian_wigner_matches_closed_form():
    W = wigner_transform(gaussian_density(GRID, 1.0, 1.0, 2.0))
    P, X = W.grid.mesh()
    exact = np.exp(-((X - 1) ** 2) / 2 - 2 * (P - 2) ** 2) / math.pi
    assert np.max(np.abs(W.samples - exact)) < 1e-9
    assert W.total() == pytest.approx(1.0, abs=1e-9)


def test_marginals():
    rho = gaussian_density(GRID, 1.0, 1.0, 2.0)
    W = wigner_transform(rho)
    assert np.max(np.abs(W.position_marginal()[::2] - rho.diagonal())) < 1e-12
    p = W.grid.p_axis.points
    exact = np.exp(-((p - 2) ** 2) / 0.5) / math.sqrt(0.5 * math.pi)
    assert np.max(np.abs(W.momentum_marginal() - exact)) < 1e-8


def test_odd_cat_is_negative_at_origin():
    W = wigner_transform(cat_density(GRID, 3.0, 0.7, -1))
    assert W.min() == pytest.approx(-1 / math.pi, abs=1e-3)


@pytest.mark.parametrize(
    "rho",
    [gaussian_density(GRID, 1.0, 1.0, 2.0), cat_density(GRID, 3.0, 0.7, -1), mixed_gaussian_density(GRID, 0.0, 1.5, 0.5)],
    ids=["gaussian", "odd-cat", "mixed"],
)
def test_round_trip(rho):
    back = inverse_wigner(wigner_transform(rho))
    assert np.max(np.abs(back - rho.samples)) < 1e-12


def test_grid_layout():
    g = wigner_grids(GRID)
    assert g.x_axis.n_points == 2 * GRID.n_points - 1
    assert g.x_axis.spacing == pytest.approx(GRID.spacing / 2)
    assert g.p_axis.n_points == 2 * GRID.n_points - 1
