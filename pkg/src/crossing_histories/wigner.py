"""Discrete Wigner transform pair for density matrices sampled on a uniform grid.

With grid spacing h, the centre X = (x + y)/2 of a node pair lives on a grid of
spacing h/2 (2n - 1 points) and the separation xi = x - y takes values 2kh on
integer centres and (2k + 1)h on half-integer centres.  The momentum axis has
M = 2n - 1 points with spacing 2 pi hbar / (2 h M); every node pair maps to
exactly one (X, xi) so the pair of transforms is exactly invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import Grid1D, Grid2D, integrate_grid


@dataclass(frozen=True)
class WignerGrid:
    """W(p, X) on a (p, X) grid; ``grid.x_axis`` has half the density-matrix spacing."""

    grid: Grid2D
    samples: np.ndarray
    hbar: float = 1.0
    source_grid: Grid1D | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != self.grid.shape:
            raise DomainError(f"samples shape {s.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "samples", s)

    def total(self) -> float:
        return float(integrate_grid(self.samples, self.grid))

    def position_marginal(self) -> np.ndarray:
        """Integral over p at every X node."""
        return np.sum(self.samples, axis=0) * self.grid.p_axis.spacing

    def momentum_marginal(self) -> np.ndarray:
        return integrate_grid(self.samples, self.grid.x_axis)

    def min(self) -> float:
        return float(self.samples.min())


def _pair_indices(n: int):
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    j = a + b
    k = np.where(j % 2 == 0, (a - b) // 2, (a - b - 1) // 2)
    return a, b, j, k


def _momentum_axis(n: int, h: float, hbar: float):
    M = 2 * n - 1
    dp = 2.0 * np.pi * hbar / (2.0 * h * M)
    half = (M - 1) // 2
    return M, dp, np.arange(-half, half + 1)


def wigner_grids(grid: Grid1D, hbar: float = 1.0) -> Grid2D:
    n, h = grid.n_points, grid.spacing
    M, dp, l = _momentum_axis(n, h, hbar)
    return Grid2D(Grid1D(l[0] * dp, l[-1] * dp, M), Grid1D(grid.x_min, grid.x_max, 2 * n - 1))


def wigner_transform(rho, hbar: float | None = None) -> WignerGrid:
    """W(p, X) = (1 / 2 pi hbar) * integral dxi exp(-i p xi / hbar) rho(X + xi/2, X - xi/2).

    ``rho`` is a DensityMatrixGrid (or anything with ``grid``, ``samples`` and
    optionally ``hbar``).
    """
    grid = rho.grid
    hbar = hbar if hbar is not None else getattr(rho, "hbar", 1.0)
    n, h = grid.n_points, grid.spacing
    M, dp, l = _momentum_axis(n, h, hbar)
    a, b, j, k = _pair_indices(n)
    F = np.zeros((2 * n - 1, M), dtype=complex)
    F[j, k % M] = np.asarray(rho.samples)[a, b]
    spec = np.fft.fftshift(np.fft.fft(F, axis=1), axes=1)
    # half-integer centres carry xi = (2k + 1) h: extra phase exp(-i p h / hbar)
    odd = (np.arange(2 * n - 1) % 2 == 1)[:, None]
    spec = np.where(odd, spec * np.exp(-1j * np.pi * l / M)[None, :], spec)
    W = (h / (np.pi * hbar)) * spec.real.T
    return WignerGrid(wigner_grids(grid, hbar), W, hbar, grid)


def inverse_wigner(w: WignerGrid, source_grid: Grid1D | None = None) -> np.ndarray:
    """rho(x, y) from W(p, (x + y)/2); returns the complex sample matrix.

    Hermiticity holds by construction because W is real.
    """
    grid = source_grid or w.source_grid
    if grid is None:
        n = (w.grid.x_axis.n_points + 1) // 2
        grid = Grid1D(w.grid.x_axis.x_min, w.grid.x_axis.x_max, n)
    n, h = grid.n_points, grid.spacing
    M, dp, l = _momentum_axis(n, h, w.hbar)
    if w.grid.shape != (M, 2 * n - 1):
        raise DomainError("Wigner grid does not match the density-matrix grid")
    spec = np.asarray(w.samples, dtype=complex).T / (h / (np.pi * w.hbar))
    odd = (np.arange(2 * n - 1) % 2 == 1)[:, None]
    spec = np.where(odd, spec * np.exp(1j * np.pi * l / M)[None, :], spec)
    F = np.fft.ifft(np.fft.ifftshift(spec, axes=1), axis=1)
    a, b, j, k = _pair_indices(n)
    out = F[j, k % M]
    # W real => F(j, -xi) = conj F(j, xi); enforce to round-off
    return 0.5 * (out + out.conj().T)
