"""Free-particle histories that cross or never cross x = 0.

The restricted (never-crossing) propagator is built by the method of images.
On a grid symmetric about the origin the image construction is applied to the
odd extension of each half-line piece of the state, and free evolution is done
spectrally, which makes it exactly unitary on the grid.  The crossing amplitude
is the free amplitude minus the restricted one, so the two-history sum rule
p + pbar + 2 Re D = 1 holds to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CoverageError, DomainError
from .numerics import Grid1D, fft_friendly_odd, integrate_grid


@dataclass(frozen=True)
class ParticleParams:
    mass: float = 1.0
    hbar: float = 1.0
    duration: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("mass must be positive")
        if not self.hbar > 0:
            raise DomainError("hbar must be positive")
        if not self.duration >= 0:
            raise DomainError("duration must be non-negative")

    def at(self, duration: float) -> "ParticleParams":
        return replace(self, duration=float(duration))

    @property
    def small_time_scale(self) -> float:
        """(hbar t / m)**0.5, the width of the boundary layer at short times."""
        return math.sqrt(self.hbar * self.duration / self.mass)


@dataclass(frozen=True)
class Amplitude:
    """Complex samples on a Grid1D; no normalisation implied."""

    grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_points,):
            raise DomainError(f"expected {self.grid.n_points} samples, got shape {s.shape}")
        object.__setattr__(self, "samples", s)

    def norm2(self) -> float:
        return float(integrate_grid(np.abs(self.samples) ** 2, self.grid))

    def inner(self, other: "Amplitude") -> complex:
        """Integral of self * conj(other)."""
        return complex(integrate_grid(self.samples * np.conj(other.samples), self.grid))

    def __add__(self, other: "Amplitude") -> "Amplitude":
        return Amplitude(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Amplitude") -> "Amplitude":
        return Amplitude(self.grid, self.samples - other.samples)

    def distance(self, other: "Amplitude") -> float:
        return math.sqrt((self - other).norm2())


@dataclass(frozen=True)
class Wavefunction(Amplitude):
    """Normalised state; samples are rescaled to unit trapezoidal norm on construction."""

    def __post_init__(self):
        super().__post_init__()
        n2 = self.norm2()
        if not n2 > 0:
            raise DomainError("cannot normalise a zero wavefunction")
        object.__setattr__(self, "samples", self.samples / math.sqrt(n2))


@dataclass(frozen=True)
class CrossingDecoherenceTable:
    p_cross: float
    p_nocross: float
    d_offdiag: complex
    epsilon_ratio: float
    sum_rule_residual: float
    notes: dict = field(default_factory=dict)

    @classmethod
    def from_amplitudes(cls, crossing: Amplitude, restricted: Amplitude) -> "CrossingDecoherenceTable":
        p = crossing.norm2()
        pbar = restricted.norm2()
        d = crossing.inner(restricted)
        return cls.from_values(p, pbar, d)

    @classmethod
    def from_values(cls, p: float, pbar: float, d: complex, **notes) -> "CrossingDecoherenceTable":
        denom = p * pbar
        ratio = abs(d) ** 2 / denom if denom > 0 else math.nan
        return cls(float(p), float(pbar), complex(d), ratio, float(p + pbar + 2.0 * d.real - 1.0), dict(notes))


def heaviside(x):
    """Step function with the value 1/2 at the origin."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, 1.0, np.where(x < 0, 0.0, 0.5))


# --- state constructors -----------------------------------------------------

def gaussian_samples(grid: Grid1D, x0: float, sigma: float, p0: float = 0.0, hbar: float = 1.0) -> np.ndarray:
    """exp(-(x-x0)^2/(4 sigma^2) + i p0 x / hbar); sigma is the std of |psi|^2."""
    x = grid.points
    return np.exp(-((x - x0) ** 2) / (4.0 * sigma**2) + 1j * p0 * x / hbar)


def gaussian_packet(grid: Grid1D, x0: float, sigma: float, p0: float = 0.0, hbar: float = 1.0) -> Wavefunction:
    return Wavefunction(grid, gaussian_samples(grid, x0, sigma, p0, hbar))


def antisymmetric_gaussian(grid: Grid1D, a: float, sigma: float, p0: float = 0.0, hbar: float = 1.0) -> Wavefunction:
    """psi(x) = G(x - a) - G(-x - a): odd about the origin."""
    plus = gaussian_samples(grid, a, sigma, p0, hbar)
    minus = plus[::-1] if grid.is_symmetric else gaussian_samples(grid, -a, sigma, -p0, hbar)
    return Wavefunction(grid, plus - minus)


def half_line_gaussian(grid: Grid1D, x0: float, sigma: float, p0: float = 0.0, hbar: float = 1.0) -> Wavefunction:
    """Gaussian truncated to x > 0 (half weight on the node at 0)."""
    return Wavefunction(grid, gaussian_samples(grid, x0, sigma, p0, hbar) * heaviside(grid.points))


def superposition(grid: Grid1D, coefficients, states) -> Wavefunction:
    """Normalised sum of coefficient * state; states are used as given (each normalised)."""
    total = np.zeros(grid.n_points, dtype=complex)
    for c, s in zip(coefficients, states):
        total += c * s.samples
    return Wavefunction(grid, total)


def suggest_grid(x0: float, sigma: float, p0: float, params: ParticleParams, spacing: float | None = None) -> Grid1D:
    """Symmetric grid wide enough to hold the packet, its drift and its spreading."""
    t, m, hbar = params.duration, params.mass, params.hbar
    spread = sigma * math.sqrt(1.0 + (hbar * t / (2.0 * m * sigma**2)) ** 2)
    half = abs(x0) + 3.0 * abs(p0) * t / m + 10.0 * max(sigma, spread)
    half = max(half, abs(x0) + 5 * sigma + 3 * abs(p0) * t / m + 5 * math.sqrt(hbar * t / (m * sigma)))
    if spacing is None:
        kmax = abs(p0) / hbar + 10.0 / (2.0 * sigma)
        spacing = min(sigma / 20.0, math.pi / (2.0 * kmax))
    return Grid1D.symmetric(half, fft_friendly_odd(int(math.ceil(2 * half / spacing)) + 1))


# --- propagators --------------------------------------------------------------

def free_propagator(x, x0, params: ParticleParams, eta: float = 0.0):
    """Free kernel (m / 2 pi i hbar t)^(1/2) exp(i m (x - x0)^2 / 2 hbar t).

    ``eta`` > 0 replaces t by t (1 - i eta), which damps the Fresnel tails; it
    exists for quadrature self-tests only.
    """
    t = params.duration
    if t <= 0:
        raise DomainError("free kernel is singular at t = 0; use the identity limit")
    m, hbar = params.mass, params.hbar
    t_eff = t * (1.0 - 1j * eta)
    dx = np.asarray(x, dtype=float) - np.asarray(x0, dtype=float)
    return np.sqrt(m / (2j * math.pi * hbar * t_eff)) * np.exp(1j * m * dx**2 / (2.0 * hbar * t_eff))


def restricted_propagator(x, x0, params: ParticleParams, eta: float = 0.0):
    """Sum over paths that stay on one side of the origin (method of images)."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    same_side = heaviside(x) * heaviside(x0) + heaviside(-x) * heaviside(-x0)
    return same_side * (free_propagator(x, x0, params, eta) - free_propagator(x, -x0, params, eta))


def crossing_propagator(x, x0, params: ParticleParams, eta: float = 0.0):
    """Sum over paths that cross the origin at least once."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    opposite = heaviside(x) * heaviside(-x0) + heaviside(-x) * heaviside(x0)
    same_side = heaviside(x) * heaviside(x0) + heaviside(-x) * heaviside(-x0)
    return opposite * free_propagator(x, x0, params, eta) + same_side * free_propagator(-x, x0, params, eta)


# --- amplitudes -------------------------------------------------------------------

def _wavenumbers(grid: Grid1D) -> np.ndarray:
    return 2.0 * math.pi * np.fft.fftfreq(grid.n_points, grid.spacing)


def spectral_free_step(samples: np.ndarray, grid: Grid1D, params: ParticleParams, axis: int = -1) -> np.ndarray:
    """Free evolution over params.duration by the exact spectral propagator (periodic grid)."""
    t = params.duration
    if t == 0:
        return np.array(samples, dtype=complex, copy=True)
    k = _wavenumbers(grid)
    phase = np.exp(-0.5j * params.hbar * k**2 * t / params.mass)
    shape = [1] * np.ndim(samples)
    shape[axis] = -1
    return np.fft.ifft(phase.reshape(shape) * np.fft.fft(samples, axis=axis), axis=axis)


def dirichlet_half_line_step(samples: np.ndarray, grid: Grid1D, params: ParticleParams, axis: int = -1) -> np.ndarray:
    """Evolve with an absorbing wall at x = 0 on each half-line separately.

    Each half-line piece is oddly extended, freely evolved and cut back to its
    own side.  This is the kernel g_r applied to the samples.
    """
    if not grid.is_symmetric:
        raise DomainError("the image construction needs a grid symmetric about x = 0 with a node at 0")
    shape = [1] * np.ndim(samples)
    shape[axis] = -1
    th = heaviside(grid.points).reshape(shape)
    out = np.zeros(np.shape(samples), dtype=complex)
    for side in (th, 1.0 - th):
        piece = samples * side
        if not np.any(piece):
            continue
        out += side * spectral_free_step(piece - np.flip(piece, axis=axis), grid, params, axis)
    return out


def _check_support(psi0: Amplitude, tol: float = 1e-8):
    edge = max(abs(psi0.samples[0]), abs(psi0.samples[-1]))
    if edge >= tol:
        raise CoverageError(f"|psi0| = {edge:.3g} at the grid edge; widen the grid (need < {tol:g})")


def free_amplitude(psi0: Amplitude, params: ParticleParams) -> Amplitude:
    _check_support(psi0)
    return Amplitude(psi0.grid, spectral_free_step(psi0.samples, psi0.grid, params))


def restricted_amplitude(psi0: Amplitude, params: ParticleParams) -> Amplitude:
    """Amplitude for never crossing x = 0 during [0, t]."""
    _check_support(psi0)
    return Amplitude(psi0.grid, dirichlet_half_line_step(psi0.samples, psi0.grid, params))


def crossing_amplitude(psi0: Amplitude, params: ParticleParams) -> Amplitude:
    """Amplitude for crossing x = 0 at least once: free minus restricted."""
    return free_amplitude(psi0, params) - restricted_amplitude(psi0, params)


def crossing_amplitude_direct(psi0: Amplitude, params: ParticleParams) -> Amplitude:
    """Crossing amplitude from the crossing kernel itself, not as a difference.

    At a final point on one side, g_c propagates the opposite half freely and
    the same half through its mirror image.  Agreement with
    free - restricted is a test of the path decomposition.
    """
    _check_support(psi0)
    grid = psi0.grid
    if not grid.is_symmetric:
        raise DomainError("the image construction needs a grid symmetric about x = 0 with a node at 0")
    th = heaviside(grid.points)
    s = psi0.samples
    out = np.zeros(grid.n_points, dtype=complex)
    for side in (th, 1.0 - th):
        source = (1.0 - side) * s + np.flip(side * s)
        out += side * spectral_free_step(source, grid, params)
    return Amplitude(grid, out)


def decoherence_table(psi0: Amplitude, params: ParticleParams) -> CrossingDecoherenceTable:
    free = free_amplitude(psi0, params)
    restricted = Amplitude(psi0.grid, dirichlet_half_line_step(psi0.samples, psi0.grid, params))
    return CrossingDecoherenceTable.from_amplitudes(free - restricted, restricted)


def brute_force_restricted(psi0: Amplitude, params: ParticleParams, n_slices: int) -> Amplitude:
    """Restricted amplitude from repeated free steps and half-line projections.

    Pieces starting on each side are projected onto their own open half-line
    after every one of ``n_slices`` free steps of length t / n_slices.  The
    result approaches restricted_amplitude as n_slices grows, slowly (the
    L2 error falls roughly like n_slices**-0.25).
    """
    if n_slices < 1:
        raise DomainError("n_slices must be >= 1")
    _check_support(psi0)
    x = psi0.grid.points
    right = (x > 0).astype(float)
    left = (x < 0).astype(float)
    step = params.at(params.duration / n_slices)
    a = psi0.samples * right
    b = psi0.samples * left
    for _ in range(n_slices):
        a = spectral_free_step(a, psi0.grid, step) * right
        b = spectral_free_step(b, psi0.grid, step) * left
    return Amplitude(psi0.grid, a + b)


def apply_kernel(kernel, psi0: Amplitude, params: ParticleParams, x_out=None, eta: float = 0.0) -> np.ndarray:
    """Direct trapezoidal quadrature of a kernel against psi0 (for oracle checks)."""
    x0 = psi0.grid.points
    xs = x0 if x_out is None else np.asarray(x_out, dtype=float)
    K = kernel(xs[:, None], x0[None, :], params, eta)
    return integrate_grid(K * psi0.samples[None, :], psi0.grid)
