"""Shared numeric kernels: grids, quadrature, Gaussian tails, log-binomials, RNG streams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with both endpoints included."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise DomainError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise DomainError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise DomainError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")

    @classmethod
    def symmetric(cls, half_width: float, n_points: int) -> "Grid1D":
        """Grid on [-half_width, half_width]; odd n_points puts a node at 0."""
        return cls(-float(half_width), float(half_width), int(n_points))

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, spacing: float, odd: bool = False) -> "Grid1D":
        n = int(math.ceil((x_max - x_min) / spacing)) + 1
        if odd and n % 2 == 0:
            n += 1
        return cls(float(x_min), float(x_max), n)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def is_symmetric(self) -> bool:
        """True when the grid is mirror-symmetric about 0 with a node at 0."""
        return self.n_points % 2 == 1 and math.isclose(self.x_min, -self.x_max, rel_tol=0, abs_tol=1e-12 * self.x_max)

    @property
    def zero_index(self) -> int:
        if not self.is_symmetric:
            raise DomainError("grid has no node at the origin")
        return self.n_points // 2


@dataclass(frozen=True)
class Grid2D:
    """Rectangular (p, x) grid; arrays on it have shape (p_axis.n_points, x_axis.n_points)."""

    p_axis: Grid1D
    x_axis: Grid1D

    @property
    def shape(self) -> tuple[int, int]:
        return (self.p_axis.n_points, self.x_axis.n_points)

    @property
    def cell_area(self) -> float:
        return self.p_axis.spacing * self.x_axis.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.p_axis.points, self.x_axis.points, indexing="ij")


@dataclass(frozen=True)
class RandomStream:
    """Reproducible, independent stream of random draws.

    Streams with the same seed and different ``stream_index`` are statistically
    independent (SeedSequence spawn keys over a counter-based Philox generator),
    so Monte Carlo work can be split across streams without changing results.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.stream_index < 0:
            raise DomainError("stream_index must be non-negative")

    def generator(self, sub: int | None = None) -> np.random.Generator:
        """Philox generator for this stream; ``sub`` selects an independent chunk stream."""
        key = (int(self.stream_index),) if sub is None else (int(self.stream_index), int(sub))
        seq = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.Philox(seq))

    def spawn(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, index)


def fft_friendly_odd(n: int) -> int:
    """Smallest odd integer >= n whose prime factors are 3, 5 and 7."""
    m = max(int(n), 1) | 1
    while True:
        k = m
        for f in (3, 5, 7):
            while k % f == 0:
                k //= f
        if k == 1:
            return m
        m += 2


def gauss_tail_integral(a):
    """Integral of exp(-lambda**2) from -inf to ``a``, i.e. (sqrt(pi)/2) * erfc(-a).

    erfc is used instead of 1 + erf so that large negative ``a`` keeps full
    relative accuracy.
    """
    val = 0.5 * SQRT_PI * special.erfc(-np.asarray(a, dtype=float))
    return float(val) if val.ndim == 0 else val


def log_binomial(N, n):
    """ln(N choose n) via log-gamma; vectorised over array arguments."""
    N_arr = np.asarray(N)
    n_arr = np.asarray(n)
    if np.any(n_arr < 0) or np.any(N_arr < 0) or np.any(n_arr > N_arr):
        raise DomainError(f"log_binomial requires 0 <= n <= N, got N={N}, n={n}")
    out = special.gammaln(N_arr + 1.0) - special.gammaln(n_arr + 1.0) - special.gammaln(N_arr - n_arr + 1.0)
    return float(out) if out.ndim == 0 else out


def integrate_grid(values, grid):
    """Composite trapezoidal rule over a Grid1D or Grid2D (second-order in spacing)."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise NumericError("integrand contains non-finite samples")
    if isinstance(grid, Grid1D):
        if values.shape[-1] != grid.n_points:
            raise DomainError("sample count does not match the grid")
        return np.trapezoid(values, dx=grid.spacing, axis=-1)
    if isinstance(grid, Grid2D):
        if values.shape[-2:] != grid.shape:
            raise DomainError("sample shape does not match the grid")
        inner = np.trapezoid(values, dx=grid.x_axis.spacing, axis=-1)
        return np.trapezoid(inner, dx=grid.p_axis.spacing, axis=-1)
    raise TypeError(f"unsupported grid type {type(grid).__name__}")


def trapezoid_weights(grid: Grid1D) -> np.ndarray:
    w = np.full(grid.n_points, grid.spacing)
    w[0] = w[-1] = 0.5 * grid.spacing
    return w


def gaussian_draws(stream: RandomStream, count: int) -> np.ndarray:
    """``count`` i.i.d. standard normal draws; identical for identical streams."""
    if count < 1:
        raise DomainError("count must be >= 1")
    return stream.generator().standard_normal(int(count))


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = 16):
    """Nodes and weights of composite Gauss-Legendre quadrature on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def logsumexp_complex(log_mag: np.ndarray, phase: np.ndarray) -> tuple[float, float]:
    """Sum of terms exp(log_mag + i*phase); returns (ln|sum|, arg sum)."""
    log_mag = np.asarray(log_mag, dtype=float)
    if log_mag.size == 0 or np.all(np.isneginf(log_mag)):
        return -math.inf, 0.0
    peak = np.max(log_mag)
    total = np.sum(np.exp(log_mag - peak) * np.exp(1j * np.asarray(phase, dtype=float)))
    if total == 0:
        return -math.inf, 0.0
    return float(peak + math.log(abs(total))), float(np.angle(total))
