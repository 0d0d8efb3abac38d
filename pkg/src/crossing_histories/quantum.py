"""Quantum Brownian motion without dissipation: density-matrix evolution and crossing.

The master equation

    i hbar d(rho)/dt = -(hbar^2/2m)(d_x^2 - d_y^2) rho - (i/hbar) Dp (x - y)^2 rho

is integrated by Strang splitting.  Two exact factors are used: the
pointwise decay exp(-Dp (x - y)^2 dt / hbar^2), and the free kinetic
propagator applied spectrally along each index.  The crossing probabilities
of the decoherent regime come from the classical restricted propagator
applied to the initial Wigner function.  branch_densities is the direct
oracle: restricted evolution of both indices of rho.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import classical
from .classical import BathParams, PhaseSpaceDistribution
from .errors import DomainError, RegimeError, RegimeWarning, StepSizeError
from .numerics import Grid1D, integrate_grid, trapezoid_weights
from .unitary import (
    CrossingDecoherenceTable,
    ParticleParams,
    Wavefunction,
    dirichlet_half_line_step,
    gaussian_samples,
    heaviside,
    spectral_free_step,
)
from .wigner import WignerGrid, wigner_transform

log = logging.getLogger(__name__)

# dt <= KINETIC_C * m dx^2 / hbar.  The spectral kinetic factor is exact, so
# this is an accuracy guard on the splitting for grid-scale structure: the
# Nyquist mode turns by at most pi^2 / 2 radians per step.
KINETIC_C = 1.0


@dataclass(frozen=True)
class DensityMatrixGrid:
    """rho(x, y) sampled on grid x grid (rows x, columns y)."""

    grid: Grid1D
    samples: np.ndarray
    hbar: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        n = self.grid.n_points
        if s.shape != (n, n):
            raise DomainError(f"density matrix must be {n}x{n}, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise DomainError("density matrix has non-finite samples")
        herm = self.hermiticity_error(s)
        if self.normalized:
            if herm > 1e-10:
                raise DomainError(f"density matrix is not Hermitian (sup error {herm:.3g})")
            diag = np.diagonal(s).real
            if diag.min() < -1e-10:
                raise DomainError("density matrix has a negative diagonal entry")
            tr = float(integrate_grid(diag, self.grid))
            if abs(tr - 1.0) > 1e-6:
                raise DomainError(f"trace is {tr:.8f}, not 1")
        object.__setattr__(self, "samples", s)

    @staticmethod
    def hermiticity_error(s) -> float:
        return float(np.max(np.abs(s - s.conj().T)))

    def trace(self) -> complex:
        t = integrate_grid(np.diagonal(self.samples), self.grid)
        return complex(t)

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.samples).real.copy()

    def with_samples(self, samples, normalized: bool | None = None) -> "DensityMatrixGrid":
        return DensityMatrixGrid(self.grid, samples, self.hbar, self.normalized if normalized is None else normalized)

    def position_std(self) -> float:
        x = self.grid.points
        d = self.diagonal()
        tot = integrate_grid(d, self.grid)
        mean = integrate_grid(d * x, self.grid) / tot
        return float(math.sqrt(max(integrate_grid(d * (x - mean) ** 2, self.grid) / tot, 0.0)))

    def __add__(self, other):
        return DensityMatrixGrid(self.grid, self.samples + other.samples, self.hbar, normalized=False)

    def __sub__(self, other):
        return DensityMatrixGrid(self.grid, self.samples - other.samples, self.hbar, normalized=False)


def pure_density(psi: Wavefunction, hbar: float = 1.0) -> DensityMatrixGrid:
    s = psi.samples
    return DensityMatrixGrid(psi.grid, np.outer(s, s.conj()), hbar)


def gaussian_density(grid: Grid1D, x0: float, sigma: float, p0: float = 0.0, hbar: float = 1.0) -> DensityMatrixGrid:
    return pure_density(Wavefunction(grid, gaussian_samples(grid, x0, sigma, p0, hbar)), hbar)


def cat_density(grid: Grid1D, a: float, sigma: float, sign: int = 1, p0: float = 0.0, hbar: float = 1.0) -> DensityMatrixGrid:
    """Superposition of Gaussians at +a and -a; sign = -1 gives the odd cat."""
    s = gaussian_samples(grid, a, sigma, p0, hbar) + sign * gaussian_samples(grid, -a, sigma, p0, hbar)
    return pure_density(Wavefunction(grid, s), hbar)


def superposed_density(grid: Grid1D, coefficients, packets, hbar: float = 1.0) -> DensityMatrixGrid:
    """Pure state sum_i c_i psi_i for packets given as (x0, sigma, p0) triples (each normalised first)."""
    total = np.zeros(grid.n_points, dtype=complex)
    for c, (x0, sigma, p0) in zip(coefficients, packets):
        total += c * Wavefunction(grid, gaussian_samples(grid, x0, sigma, p0, hbar)).samples
    return pure_density(Wavefunction(grid, total), hbar)


def mixed_gaussian_density(grid: Grid1D, x0: float, sigma: float, coherence: float, hbar: float = 1.0) -> DensityMatrixGrid:
    """rho(x, y) = exp(-((x+y)/2 - x0)^2 / 2 sigma^2 - (x - y)^2 / 2 coherence^2), normalised.

    Its Wigner function is Gaussian in p with standard deviation hbar / coherence.
    """
    x = grid.points
    X = 0.5 * (x[:, None] + x[None, :])
    xi = x[:, None] - x[None, :]
    s = np.exp(-((X - x0) ** 2) / (2 * sigma**2) - xi**2 / (2 * coherence**2)).astype(complex)
    s /= integrate_grid(np.diagonal(s).real, grid)
    return DensityMatrixGrid(grid, s, hbar)


def _diffusion(bath: BathParams | None) -> float:
    return 0.0 if bath is None else bath.diffusion


def max_step(grid: Grid1D, particle: ParticleParams) -> float:
    return KINETIC_C * particle.mass * grid.spacing**2 / particle.hbar


def _decay_factor(grid: Grid1D, dt: float, bath, hbar: float) -> np.ndarray:
    x = grid.points
    return np.exp(-_diffusion(bath) * (x[:, None] - x[None, :]) ** 2 * dt / hbar**2)


def _two_sided(samples, step_x, step_y):
    """Apply step_x along rows (x) and conj of step_y along columns (y): U rho V^dagger."""
    out = step_x(samples, 0)
    return step_y(out.conj(), 1).conj()


def _kinetic(kind: str, grid: Grid1D, params: ParticleParams):
    if kind == "free":
        return lambda s, axis: spectral_free_step(s, grid, params, axis)
    if kind == "dirichlet":
        return lambda s, axis: dirichlet_half_line_step(s, grid, params, axis)
    if kind == "none":
        return lambda s, axis: s
    raise DomainError(f"unknown kinetic step {kind!r}")


def _check_step(dt, grid, particle, kinetic=True):
    if not dt > 0:
        raise StepSizeError("time step must be positive")
    if kinetic and dt > max_step(grid, particle) * (1 + 1e-12):
        raise StepSizeError(
            f"dt = {dt:.4g} exceeds {KINETIC_C:g} * m dx^2 / hbar = {max_step(grid, particle):.4g}; use more steps or a coarser grid"
        )


def _strang(samples, grid, dt, bath, particle, x_kind="free", y_kind="free", decay=None):
    half = decay if decay is not None else _decay_factor(grid, 0.5 * dt, bath, particle.hbar)
    p = particle.at(dt)
    out = _two_sided(samples * half, _kinetic(x_kind, grid, p), _kinetic(y_kind, grid, p))
    return out * half


def master_step(rho: DensityMatrixGrid, dt: float, bath: BathParams | None, particle: ParticleParams, kinetic: bool = True) -> DensityMatrixGrid:
    """One Strang step: half decay, exact free kinetic step on both indices, half decay.

    ``bath=None`` means no environment (Dp = 0); ``kinetic=False`` freezes
    the kinetic term (infinite-mass limit) so that only the decay factor acts.
    """
    _check_step(dt, rho.grid, particle, kinetic)
    kind = "free" if kinetic else "none"
    out = _strang(rho.samples, rho.grid, dt, bath, particle, kind, kind)
    return rho.with_samples(out)


def evolve(rho: DensityMatrixGrid, t: float, bath, particle: ParticleParams, n_steps: int | None = None, kinetic: bool = True) -> DensityMatrixGrid:
    """Repeated master steps up to time t (step count chosen from the bound when not given)."""
    if t == 0:
        return rho
    if n_steps is None:
        n_steps = max(1, math.ceil(t / max_step(rho.grid, particle) - 1e-9)) if kinetic else 1
    dt = t / n_steps
    _check_step(dt, rho.grid, particle, kinetic)
    decay = _decay_factor(rho.grid, 0.5 * dt, bath, particle.hbar)
    kind = "free" if kinetic else "none"
    s = rho.samples
    for _ in range(n_steps):
        s = _strang(s, rho.grid, dt, bath, particle, kind, kind, decay)
    return rho.with_samples(s)


# --- branch densities -----------------------------------------------------------

@dataclass(frozen=True)
class BranchDensities:
    rho_rr: DensityMatrixGrid
    rho_rc: DensityMatrixGrid
    rho_cr: DensityMatrixGrid
    rho_cc: DensityMatrixGrid
    full: DensityMatrixGrid
    mode: str = "dirichlet"

    def traces(self) -> dict:
        return {k: getattr(self, k).trace() for k in ("rho_rr", "rho_rc", "rho_cr", "rho_cc")}

    def completeness_error(self) -> float:
        total = self.rho_rr.samples + self.rho_rc.samples + self.rho_cr.samples + self.rho_cc.samples
        return float(np.max(np.abs(total - self.full.samples)))

    def table(self) -> CrossingDecoherenceTable:
        tr = self.traces()
        return CrossingDecoherenceTable.from_values(
            tr["rho_cc"].real, tr["rho_rr"].real, tr["rho_cr"], source="branch_densities", mode=self.mode
        )


def branch_densities(
    rho0: DensityMatrixGrid, t: float, n_slices: int, bath: BathParams | None, particle: ParticleParams, mode: str = "dirichlet"
) -> BranchDensities:
    """Restricted and crossing branches of the evolved density matrix.

    rr has both indices confined to their initial half-line throughout, r.
    confines only x, .r only y.  Then rc = r. - rr, cr = .r - rr and
    cc = rho - r. - .r + rr, so the four branches add up to rho exactly.

    mode='dirichlet' confines an index by evolving it with the absorbing-wall
    propagator over each slice, which is the many-slice limit of repeated
    projection.  mode='projection' multiplies by theta(x) after each free
    master step, the literal time-sliced construction; it converges slowly in
    n_slices.
    """
    if n_slices < 16:
        raise DomainError("n_slices must be >= 16")
    if not rho0.grid.is_symmetric:
        raise DomainError("branch densities need a grid symmetric about x = 0 with a node at 0")
    if not t > 0:
        raise DomainError("t must be positive")
    grid = rho0.grid
    dt = t / n_slices
    _check_step(dt, grid, particle)
    decay = _decay_factor(grid, 0.5 * dt, bath, particle.hbar)
    full = rho0.samples
    r_dot = rho0.samples
    rr = rho0.samples
    if mode == "dirichlet":
        for _ in range(n_slices):
            full = _strang(full, grid, dt, bath, particle, "free", "free", decay)
            r_dot = _strang(r_dot, grid, dt, bath, particle, "dirichlet", "free", decay)
            rr = _strang(rr, grid, dt, bath, particle, "dirichlet", "dirichlet", decay)
    elif mode == "projection":
        side = heaviside(grid.points)
        inside = rho0.diagonal() @ (side - 0.5)
        # project onto the half-line that carries the initial state
        proj = side if inside >= 0 else 1.0 - side
        for _ in range(n_slices):
            full = _strang(full, grid, dt, bath, particle, "free", "free", decay)
            r_dot = _strang(r_dot, grid, dt, bath, particle, "free", "free", decay) * proj[:, None]
            rr = _strang(rr, grid, dt, bath, particle, "free", "free", decay) * proj[:, None] * proj[None, :]
    else:
        raise DomainError(f"unknown mode {mode!r}")
    dot_r = r_dot.conj().T
    mk = lambda s: DensityMatrixGrid(grid, s, rho0.hbar, normalized=False)
    return BranchDensities(
        rho_rr=mk(rr),
        rho_rc=mk(r_dot - rr),
        rho_cr=mk(dot_r - rr),
        rho_cc=mk(full - r_dot - dot_r + rr),
        full=mk(full),
        mode=mode,
    )


# --- decoherent-regime crossing probabilities -----------------------------------------

def coarse_nodes(w: WignerGrid | PhaseSpaceDistribution, dp: float, dx: float):
    """Aggregate a phase-space density into cells of size dp x dx.

    Returns (p, x, weight): weight is the signed integral over the cell and
    (p, x) the |W|-weighted centroid, so first moments of positive parts are kept.
    """
    g = w.grid
    wts = w.samples * trapezoid_weights(g.p_axis)[:, None] * trapezoid_weights(g.x_axis)[None, :]
    P, X = g.mesh()
    ip = np.floor((P - g.p_axis.x_min) / dp).astype(np.int64)
    ix = np.floor((X - g.x_axis.x_min) / dx).astype(np.int64)
    nx = int(ix.max()) + 1
    cell = (ip * nx + ix).ravel()
    size = int(cell.max()) + 1
    absw = np.abs(wts).ravel()
    signed = np.bincount(cell, wts.ravel(), size)
    mag = np.bincount(cell, absw, size)
    keep = mag > 1e-14 * mag.sum()
    mp = np.bincount(cell, absw * P.ravel(), size)[keep] / mag[keep]
    mx = np.bincount(cell, absw * X.ravel(), size)[keep] / mag[keep]
    return mp, mx, signed[keep]


@dataclass(frozen=True)
class RegimeCheck:
    decay_length: float
    packet_width: float
    ok: bool


def decoherence_regime(rho0: DensityMatrixGrid, t: float, bath: BathParams) -> RegimeCheck:
    """Off-diagonal decay length hbar / sqrt(Dp t) against a tenth of the packet width."""
    length = rho0.hbar / math.sqrt(bath.diffusion * t)
    width = rho0.position_std()
    return RegimeCheck(length, width, length <= width / 10.0)


def quantum_crossing_probabilities(
    rho0: DensityMatrixGrid,
    t: float,
    bath: BathParams,
    particle: ParticleParams,
    strict: bool = False,
    cell_fraction: float = 0.1,
) -> CrossingDecoherenceTable:
    """Crossing probabilities with the classical restricted propagator acting on W0.

    Negative values of W0 are kept.  The result is clamped to [0, 1], and the
    clamp size is returned in the notes.  d_offdiag is 0 by construction, since
    the cross branches vanish in this regime.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if abs(particle.mass - bath.mass) > 1e-12 * bath.mass:
        raise DomainError("particle and bath masses differ")
    grid = rho0.grid
    x = grid.points
    diag = rho0.diagonal()
    below = float(integrate_grid(np.where(x <= 0, np.abs(diag), 0.0), grid))
    if below > 1e-8:
        raise DomainError(f"initial state has weight {below:.3g} at x <= 0; it must be supported in x > 0")
    regime = decoherence_regime(rho0, t, bath)
    if not regime.ok:
        msg = (
            f"off-diagonal decay length {regime.decay_length:.3g} exceeds a tenth of the packet width "
            f"{regime.packet_width:.3g}; the classical-propagator approximation is not justified"
        )
        if strict:
            raise RegimeError(msg)
        warnings.warn(msg, RegimeWarning, stacklevel=2)
    W0 = wigner_transform(rho0, particle.hbar)
    m, D = bath.mass, bath.diffusion
    dp = cell_fraction * math.sqrt(2 * D * t)
    dx = cell_fraction * math.sqrt(2 * D * t**3 / 3) / m
    P0, X0, wts = coarse_nodes(W0, dp, dx)
    inside = X0 > 0
    dropped = float(np.abs(wts[~inside]).sum())
    raw = float(np.dot(wts[inside], classical.survival_map(P0[inside], X0[inside], t, bath)))
    pbar = min(max(raw, 0.0), 1.0)
    return CrossingDecoherenceTable.from_values(
        1.0 - pbar,
        pbar,
        0j,
        source="wigner_classical",
        raw_nocross=raw,
        clamp=abs(raw - pbar),
        wigner_min=W0.min(),
        dropped_weight=dropped,
        n_nodes=int(inside.sum()),
        regime_ok=regime.ok,
        decay_length=regime.decay_length,
        packet_width=regime.packet_width,
        d_offdiag_reason="rho_rc ~ 0 in the decoherent regime",
    )


# --- off-diagonal decay ---------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    rate: float
    expected_rate: float
    r_squared: float
    x_probe: float
    ratios: np.ndarray
    times: np.ndarray
    insufficient_range: bool
    extras: dict = field(default_factory=dict)


def offdiagonal_decay_profile(
    rho0: DensityMatrixGrid, times, bath: BathParams | None, particle: ParticleParams, kinetic: bool = True, x_probe: float | None = None
) -> DecayFit:
    """Fit |rho_t(x, -x)| / |rho_0(x, -x)| to exp(-rate t) at a probe point x > 0.

    The probe defaults to the x > 0 node where |rho_0(x, -x)| is largest.
    expected_rate is Dp (2x)^2 / hbar^2.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise DomainError("times must be an increasing sequence of non-negative values")
    if not rho0.grid.is_symmetric:
        raise DomainError("decay profile needs a grid symmetric about x = 0")
    grid = rho0.grid
    x = grid.points
    n = grid.n_points
    anti = np.abs(rho0.samples[np.arange(n), np.arange(n)[::-1]])
    if x_probe is None:
        i = int(np.argmax(np.where(x > 0, anti, -1.0)))
    else:
        i = int(np.argmin(np.abs(x - x_probe)))
    xi = float(x[i])
    ref = anti[i]
    ratios = []
    rho = rho0
    prev = 0.0
    for t in times:
        rho = evolve(rho, t - prev, bath, particle, kinetic=kinetic)
        prev = t
        ratios.append(abs(rho.samples[i, n - 1 - i]) / ref)
    ratios = np.asarray(ratios)
    logs = np.log(np.maximum(ratios, 1e-300))
    A = np.vstack([times, np.ones_like(times)]).T
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    span = logs.max() - logs.min()
    return DecayFit(
        rate=float(-coef[0]),
        expected_rate=_diffusion(bath) * (2 * xi) ** 2 / particle.hbar**2,
        r_squared=r2,
        x_probe=xi,
        ratios=ratios,
        times=times,
        insufficient_range=bool(span < 0.1 or ratios.min() < 1e-250),
    )
