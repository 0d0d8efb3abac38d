"""First passage through x = 0 for a free classical Brownian particle.

Dynamics: dw/dt = -(p/m) dw/dx + Dp d^2w/dp^2 with Dp = 2 m gamma kT
(dissipative drift neglected).  The unrestricted propagator is a correlated
Gaussian; the restricted one is the two-sheeted image construction in
the sheared coordinates

    X = p/m - 3x/2t,          Y = sqrt(3) x / 2t,
    X0 = -p0/2m - 3x0/2t,     Y0 = (sqrt(3)/2)(p0/m + x0/t),

in which K = (jacobian / pi t~) exp(-|Z - Z0|^2 / t~), t~ = Dp t / m^2 and
jacobian = sqrt(3) / (2 m t) = |d(X, Y) / d(p, x)|.

Note that the image-construction kernel is not an exact solution of the Fokker-Planck
equation away from the absorbing ray; langevin_survival is the independent
check of how far survival probabilities built from it are off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import (
    Grid1D,
    Grid2D,
    RandomStream,
    gauss_legendre_panels,
    integrate_grid,
    trapezoid_weights,
)

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BathParams:
    mass: float = 1.0
    gamma: float = 0.5
    kT: float = 1.0

    def __post_init__(self):
        for name in ("mass", "gamma", "kT"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @classmethod
    def from_diffusion(cls, mass: float, diffusion: float, kT: float = 1.0) -> "BathParams":
        return cls(mass=mass, gamma=diffusion / (2.0 * mass * kT), kT=kT)

    @property
    def diffusion(self) -> float:
        """Momentum diffusion coefficient Dp = 2 m gamma kT."""
        return 2.0 * self.mass * self.gamma * self.kT


@dataclass(frozen=True)
class PhaseSpacePoint:
    p: float
    x: float


@dataclass(frozen=True)
class PhaseSpaceDistribution:
    """Samples on a (p, x) grid; shape (n_p, n_x).  kind is 'classical' or 'wigner'."""

    grid: Grid2D
    samples: np.ndarray
    kind: str = "classical"
    norm_tol: float = 1e-6

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != self.grid.shape:
            raise DomainError(f"samples shape {s.shape} does not match grid {self.grid.shape}")
        if self.kind not in ("classical", "wigner"):
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "classical" and s.min() < -1e-12:
            raise DomainError("classical phase-space density has negative samples")
        mass = integrate_grid(s, self.grid)
        if abs(mass - 1.0) > self.norm_tol:
            raise DomainError(f"distribution integrates to {mass:.8f}, not 1")
        object.__setattr__(self, "samples", s)

    def node_weights(self) -> np.ndarray:
        """Quadrature weight (density times trapezoid cell) of each node."""
        wp = trapezoid_weights(self.grid.p_axis)
        wx = trapezoid_weights(self.grid.x_axis)
        return self.samples * wp[:, None] * wx[None, :]

    def mass_at_or_below(self, x_cut: float = 0.0) -> float:
        w = self.node_weights()
        return float(np.abs(w[:, self.grid.x_axis.points <= x_cut]).sum())


def gaussian_phase_space(grid: Grid2D, p0: float, x0: float, sigma_p: float, sigma_x: float) -> PhaseSpaceDistribution:
    """Uncorrelated Gaussian renormalised on the grid."""
    P, X = grid.mesh()
    w = np.exp(-0.5 * ((P - p0) / sigma_p) ** 2 - 0.5 * ((X - x0) / sigma_x) ** 2)
    w /= integrate_grid(w, grid)
    return PhaseSpaceDistribution(grid, w)


def gaussian_phase_space_grid(p0: float, x0: float, sigma_p: float, sigma_x: float, n: int = 41, width: float = 6.0) -> Grid2D:
    return Grid2D(
        Grid1D(p0 - width * sigma_p, p0 + width * sigma_p, n),
        Grid1D(x0 - width * sigma_x, x0 + width * sigma_x, n),
    )


# --- unrestricted propagator ------------------------------------------------

def _check_time(t):
    if not t > 0:
        raise DomainError(f"propagation time must be positive, got {t}")


def quadratic_form_coefficients(t: float, bath: BathParams) -> tuple[float, float, float]:
    """(alpha, beta, epsilon) of the Gaussian exponent."""
    D, m = bath.diffusion, bath.mass
    return 1.0 / (D * t), 3.0 * m**2 / (D * t**3), 3.0 * m / (D * t**2)


def printed_prefactor(t: float, bath: BathParams) -> float:
    """(3 m^2 / (4 pi Dp^2 t^4))^(1/2), the normalisation as usually printed."""
    return math.sqrt(3.0 * bath.mass**2 / (4.0 * math.pi * bath.diffusion**2 * t**4))


def determinant_prefactor(t: float, bath: BathParams) -> float:
    """sqrt(4 alpha beta - epsilon^2) / 2 pi = sqrt(3) m / (2 pi Dp t^2)."""
    a, b, e = quadratic_form_coefficients(t, bath)
    return math.sqrt(4.0 * a * b - e * e) / TWO_PI


def fp_kernel(p, x, p0, x0, t: float, bath: BathParams):
    """Vectorised Fokker-Planck propagator K(p, x, t | p0, x0, 0)."""
    _check_time(t)
    a, b, e = quadratic_form_coefficients(t, bath)
    dp = np.asarray(p, dtype=float) - p0
    dx = np.asarray(x, dtype=float) - x0 - np.asarray(p0, dtype=float) * t / bath.mass
    return determinant_prefactor(t, bath) * np.exp(-a * dp * dp - b * dx * dx + e * dp * dx)


def fp_propagator(final: PhaseSpacePoint, t: float, initial: PhaseSpacePoint, bath: BathParams):
    return fp_kernel(final.p, final.x, initial.p, initial.x, t, bath)


def normalization_check(t: float, bath: BathParams, n: int = 801) -> dict:
    """Integrate the kernel with the printed and determinant prefactors on a wide grid."""
    D, m = bath.diffusion, bath.mass
    sp = math.sqrt(2 * D * t)
    sx = math.sqrt(2 * D * t**3 / 3) / m
    grid = Grid2D(Grid1D(-12 * sp, 12 * sp, n), Grid1D(-12 * sx, 12 * sx, n))
    P, X = grid.mesh()
    shape = fp_kernel(P, X, 0.0, 0.0, t, bath) / determinant_prefactor(t, bath)
    integral = integrate_grid(shape, grid)
    result = {
        "printed": printed_prefactor(t, bath) * integral,
        "determinant": determinant_prefactor(t, bath) * integral,
        "printed_over_determinant": printed_prefactor(t, bath) / determinant_prefactor(t, bath),
    }
    if abs(result["printed"] - 1.0) > 1e-4:
        log.info("printed prefactor integrates to %.6f; using the determinant normalisation", result["printed"])
    return result


# --- Image coordinates and the restricted propagator ---------------------------

@dataclass(frozen=True)
class ImageCoords:
    """Polar coordinates of final (r, theta) and initial (r0, theta0) points.

    Angles live on [0, 2 pi): the plane is cut along theta = 0, the image of
    the absorbing half-line x = 0, p > 0.  ``jacobian`` converts densities in
    (X, Y) to densities in (p, x).
    """

    r: np.ndarray
    theta: np.ndarray
    r0: np.ndarray
    theta0: np.ndarray
    t_tilde: float
    jacobian: float
    degenerate: bool = False


def sheared_final(p, x, t: float, m: float):
    return np.asarray(p) / m - 1.5 * np.asarray(x) / t, SQRT3 * np.asarray(x) / (2.0 * t)


def sheared_initial(p0, x0, t: float, m: float):
    p0 = np.asarray(p0, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    return -p0 / (2.0 * m) - 1.5 * x0 / t, 0.5 * SQRT3 * (p0 / m + x0 / t)


def sheet_angle(Y, X):
    return np.mod(np.arctan2(Y, X), TWO_PI)


def image_coords_map(final: PhaseSpacePoint, initial: PhaseSpacePoint, t: float, bath: BathParams) -> ImageCoords:
    _check_time(t)
    m = bath.mass
    X, Y = sheared_final(final.p, final.x, t, m)
    x0 = np.asarray(initial.x, dtype=float)
    X0, Y0 = sheared_initial(initial.p, x0, t, m)
    degenerate = bool(np.any(np.hypot(X0, Y0) == 0.0))
    if degenerate:
        x0 = np.where(np.hypot(X0, Y0) == 0.0, x0 + 1e-12, x0)
        X0, Y0 = sheared_initial(initial.p, x0, t, m)
    return ImageCoords(
        r=np.hypot(X, Y),
        theta=sheet_angle(Y, X),
        r0=np.hypot(X0, Y0),
        theta0=sheet_angle(Y0, X0),
        t_tilde=bath.diffusion * t / m**2,
        jacobian=SQRT3 / (2.0 * m * t),
        degenerate=degenerate,
    )


def _green_xy(r, theta, r0, theta0, tt):
    """Two-sheeted heat kernel, density in (X, Y)."""
    # (r - r0)^2 + 4 r r0 sin^2(dtheta/2) avoids cancellation far from the origin
    dist2 = (r - r0) ** 2 + 4.0 * r * r0 * np.sin(0.5 * (theta - theta0)) ** 2
    a = 2.0 * np.sqrt(r * r0 / tt) * np.cos(0.5 * (theta - theta0))
    # exp(-dist2/tt) * (sqrt(pi)/2) erfc(-a) / (pi^(3/2) tt)
    return np.exp(-dist2 / tt) * special.erfc(-a) / (TWO_PI * tt)


def multiform_green(c: ImageCoords):
    """The 4 pi-periodic Green function, as a density in (p, x).

    Angle differences are not reduced modulo 2 pi.  For large positive tail
    argument it reduces to the unrestricted kernel; at zero argument to half of it.
    """
    return c.jacobian * _green_xy(c.r, c.theta, c.r0, c.theta0, c.t_tilde)


def restricted_xy(X, Y, X0, Y0, tt):
    """Image difference g(theta0) - g(-theta0) in (X, Y) density units."""
    r, th = np.hypot(X, Y), sheet_angle(Y, X)
    r0, th0 = np.hypot(X0, Y0), sheet_angle(Y0, X0)
    return _green_xy(r, th, r0, th0, tt) - _green_xy(r, th, r0, -th0, tt)


def restricted_fp_propagator(final: PhaseSpacePoint, t: float, initial: PhaseSpacePoint, bath: BathParams):
    """K_r: propagator with absorption on x = 0, p > 0 (initial point must have x > 0)."""
    if np.any(np.asarray(initial.x) <= 0):
        raise DomainError("restricted propagator needs an initial point with x > 0")
    c = image_coords_map(final, initial, t, bath)
    return c.jacobian * (_green_xy(c.r, c.theta, c.r0, c.theta0, c.t_tilde) - _green_xy(c.r, c.theta, c.r0, -c.theta0, c.t_tilde))


def restricted_fp_kernel(p, x, p0, x0, t: float, bath: BathParams):
    return restricted_fp_propagator(PhaseSpacePoint(p, x), t, PhaseSpacePoint(p0, x0), bath)


# --- survival and crossing probabilities ------------------------------------------

def _initial_nodes(w0: PhaseSpaceDistribution, prune: float = 1e-15):
    grid = w0.grid
    below = w0.mass_at_or_below(0.0)
    if below > 1e-8:
        raise DomainError(f"initial distribution has mass {below:.3g} at x <= 0; it must be supported in x > 0")
    weights = w0.node_weights()
    P, X = grid.mesh()
    keep = (X > 0) & (np.abs(weights) > prune * np.abs(weights).sum())
    return P[keep], X[keep], weights[keep]


def corner_rule(order: int = 10, graded: int = 8, uniform: int = 4):
    """Gauss-Legendre rule on [0, 1] with panels graded geometrically toward 0.

    Panels on [0, 1/2] halve in width toward the origin and [1/2, 1] is split
    uniformly, so a sqrt-type singularity at 0 is integrated to ~1e-10 while
    a smooth integrand loses nothing.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate([[0.0], 0.5 ** np.arange(graded, 0, -1), 0.5 + 0.5 * np.arange(1, uniform + 1) / uniform])
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def survival_map(p0, x0, t: float, bath: BathParams, order: int = 10, chunk: int = 16) -> np.ndarray:
    """Probability of never crossing for each initial point: integral of K_r over x > 0.

    The integral is done in (X, Y), where the region x > 0 is Y > 0 and both
    the direct and the image Gaussians are covered by the box
    |X - X0| < W, ||Y| - |Y0|| < W with W = 6 sqrt(t~).  The X range is split
    at X = 0 and panels are graded toward the split and toward the lower Y
    edge, where the kernel has its branch point.
    """
    _check_time(t)
    m = bath.mass
    tt = bath.diffusion * t / m**2
    p0 = np.atleast_1d(np.asarray(p0, dtype=float)).ravel()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).ravel()
    if np.any(x0 <= 0):
        raise DomainError("initial points must have x > 0")
    X0, Y0 = sheared_initial(p0, x0, t, m)
    W = 6.0 * math.sqrt(tt)
    u, wu = corner_rule(order)
    out = np.empty(p0.size)
    for s in range(0, p0.size, chunk):
        sl = slice(s, s + chunk)
        lo, hi = X0[sl] - W, X0[sl] + W
        c = np.clip(0.0, lo, hi)
        Xq = np.concatenate([c[:, None] - (c - lo)[:, None] * u, c[:, None] + (hi - c)[:, None] * u], axis=1)
        Wx = np.concatenate([(c - lo)[:, None] * wu, (hi - c)[:, None] * wu], axis=1)
        y_lo = np.maximum(0.0, np.abs(Y0[sl]) - W)
        y_hi = np.abs(Y0[sl]) + W
        Yq = y_lo[:, None] + (y_hi - y_lo)[:, None] * u
        Wy = (y_hi - y_lo)[:, None] * wu
        vals = restricted_xy(Xq[:, :, None], Yq[:, None, :], X0[sl][:, None, None], Y0[sl][:, None, None], tt)
        out[sl] = np.einsum("nij,ni,nj->n", vals, Wx, Wy)
    return out


def survival_probability(w0: PhaseSpaceDistribution, t: float, bath: BathParams, **quad) -> float:
    """Probability of not crossing x = 0 during [0, t] for initial density w0."""
    _check_time(t)
    P0, X0, weights = _initial_nodes(w0)
    return float(np.dot(weights, survival_map(P0, X0, t, bath, **quad)))


def flux_map(p0, x0, t: float, bath: BathParams, time_panels: int = 24, order: int = 16, chunk: int = 16) -> np.ndarray:
    """Time-integrated outflow through x = 0 (p < 0) for each initial point.

    F = int_0^t dt' int_{p<0} dp (|p|/m) K_r(p, 0, t' | p0, x0).  At x = 0 with
    p < 0 the final point sits at theta = pi, r = |p|/m.
    """
    _check_time(t)
    m = bath.mass
    p0 = np.atleast_1d(np.asarray(p0, dtype=float)).ravel()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).ravel()
    if np.any(x0 <= 0):
        raise DomainError("initial points must have x > 0")
    ts, wt = gauss_legendre_panels(0.0, t, time_panels, order)
    u, wu = corner_rule()
    out = np.zeros(p0.size)
    for s in range(0, p0.size, chunk):
        sl = slice(s, s + chunk)
        tq = ts[None, :, None]
        X0, Y0 = sheared_initial(p0[sl][:, None, None], x0[sl][:, None, None], tq, m)
        tt = bath.diffusion * tq / m**2
        W = 6.0 * np.sqrt(tt)
        r_lo = np.maximum(0.0, -X0 - W)
        r_hi = np.maximum(0.0, -X0 + W)
        width = r_hi - r_lo
        r = r_lo + width * u[None, None, :]
        vals = restricted_xy(-r, np.zeros_like(r), X0, Y0, tt)
        # dp = m dr, |p|/m = r, jacobian sqrt(3)/(2 m t')
        inner = (SQRT3 / (2.0 * tq)) * width * np.sum(r * vals * wu[None, None, :], axis=2, keepdims=True)
        out[sl] = np.sum(inner[:, :, 0] * wt[None, :], axis=1)
    return out


def crossing_probability_flux(w0: PhaseSpaceDistribution, t: float, bath: BathParams, **quad) -> float:
    """Crossing probability from the boundary outflow, integrated over [0, t]."""
    _check_time(t)
    P0, X0, weights = _initial_nodes(w0)
    return float(np.dot(weights, flux_map(P0, X0, t, bath, **quad)))


def compose(final: PhaseSpacePoint, t: float, initial: PhaseSpacePoint, t1: float, bath: BathParams, grid: Grid2D, restricted: bool = False) -> float:
    """Intermediate-point integral of K(final | mid) K(mid | initial) over ``grid``.

    With ``restricted`` the restricted kernels are used and only x1 > 0 contributes.
    """
    P1, X1 = grid.mesh()
    if restricted:
        inside = X1 > 0
        X1s = np.where(inside, X1, 1.0)
        second = np.where(inside, restricted_fp_kernel(P1, X1s, initial.p, initial.x, t1, bath), 0.0)
        first = np.where(inside, restricted_fp_kernel(final.p, final.x, P1, X1s, t - t1, bath), 0.0)
    else:
        second = fp_kernel(P1, X1, initial.p, initial.x, t1, bath)
        first = fp_kernel(final.p, final.x, P1, X1, t - t1, bath)
    return float(integrate_grid(first * second, grid))


# --- Langevin oracle ---------------------------------------------------------------

@dataclass(frozen=True)
class LangevinEstimate:
    mean: float
    stderr: float
    n_paths: int
    n_steps: int
    coarse_mean: float
    bias_estimate: float
    coarse_steps_flag: bool
    extras: dict = field(default_factory=dict)


def _sample_initial(w0: PhaseSpaceDistribution, n: int, rng: np.random.Generator):
    if w0.kind != "classical":
        raise DomainError("Langevin sampling needs a non-negative classical distribution")
    weights = np.clip(w0.node_weights(), 0.0, None).ravel()
    idx = rng.choice(weights.size, size=n, p=weights / weights.sum())
    ip, ix = np.unravel_index(idx, w0.grid.shape)
    gp, gx = w0.grid.p_axis, w0.grid.x_axis
    p = gp.points[ip] + gp.spacing * (rng.random(n) - 0.5)
    x = gx.points[ix] + gx.spacing * (rng.random(n) - 0.5)
    return p, x


def langevin_survival(
    w0: PhaseSpaceDistribution,
    t: float,
    bath: BathParams,
    n_paths: int = 100_000,
    n_steps: int = 1000,
    stream: RandomStream | None = None,
    chunk_size: int = 25_000,
    initial_points: tuple[np.ndarray, np.ndarray] | None = None,
) -> LangevinEstimate:
    """Monte Carlo survival from Euler-Maruyama paths of dx = p/m dt, dp = sqrt(2 Dp) dW.

    Paths are killed when x <= 0 at a step boundary.  A coarse path with twice
    the step, driven by the same noise (pairwise-summed increments), is run
    alongside; the difference of the two means estimates the time-step bias.
    Chunks use independent sub-streams and are reduced in fixed order.
    """
    _check_time(t)
    if n_paths < 1000:
        raise DomainError("n_paths must be >= 1000")
    if n_steps < 100:
        raise DomainError("n_steps must be >= 100")
    if n_steps % 2:
        n_steps += 1
    stream = stream or RandomStream(0)
    m, D = bath.mass, bath.diffusion
    dt = t / n_steps
    kick = math.sqrt(2.0 * D * dt)
    alive_total = 0
    coarse_total = 0
    p_scale = 0.0
    x_scale = math.inf
    for c, start in enumerate(range(0, n_paths, chunk_size)):
        n = min(chunk_size, n_paths - start)
        rng = stream.generator(sub=c)
        if initial_points is None:
            p, x = _sample_initial(w0, n, rng)
        else:
            p = np.full(n, float(initial_points[0]))
            x = np.full(n, float(initial_points[1]))
        p_scale = max(p_scale, float(np.abs(p).mean()))
        x_scale = min(x_scale, float(x.mean()))
        pc, xc = p.copy(), x.copy()
        alive = x > 0
        alive_c = alive.copy()
        for _ in range(n_steps // 2):
            xi1 = rng.standard_normal(n)
            xi2 = rng.standard_normal(n)
            x = x + p * dt / m
            p = p + kick * xi1
            alive &= x > 0
            x = x + p * dt / m
            p = p + kick * xi2
            alive &= x > 0
            xc = xc + pc * 2 * dt / m
            pc = pc + kick * (xi1 + xi2)
            alive_c &= xc > 0
        alive_total += int(alive.sum())
        coarse_total += int(alive_c.sum())
    mean = alive_total / n_paths
    coarse = coarse_total / n_paths
    stderr = math.sqrt(max(mean * (1 - mean), 1.0 / n_paths) / n_paths)
    drift = (p_scale + 3.0 * math.sqrt(2.0 * D * t)) * dt / m
    return LangevinEstimate(
        mean=mean,
        stderr=stderr,
        n_paths=n_paths,
        n_steps=n_steps,
        coarse_mean=coarse,
        bias_estimate=mean - coarse,
        coarse_steps_flag=bool(drift > 0.02 * x_scale),
    )


# --- stationary path of the unrestricted path integral ------------------------------

@dataclass(frozen=True)
class StationaryPath:
    """Cubic X(t) = c0 + c1 t + c2 t^2 + c3 t^3 on [0, tau] solving X'''' = 0."""

    coefficients: tuple[float, float, float, float]
    tau: float

    def position(self, t):
        c0, c1, c2, c3 = self.coefficients
        return c0 + t * (c1 + t * (c2 + t * c3))

    def velocity(self, t):
        _, c1, c2, c3 = self.coefficients
        return c1 + t * (2 * c2 + 3 * c3 * t)

    def acceleration(self, t):
        return 2 * self.coefficients[2] + 6 * self.coefficients[3] * np.asarray(t)

    def acceleration_action(self) -> float:
        """Closed form of the integral of X''(t)^2 over [0, tau]."""
        _, _, c2, c3 = self.coefficients
        tau = self.tau
        return 4 * c2**2 * tau + 12 * c2 * c3 * tau**2 + 12 * c3**2 * tau**3

    def exponent(self, bath: BathParams) -> float:
        """-(m / 8 gamma kT) * action, equal to -(m^2 / 4 Dp) * action."""
        return -bath.mass / (8.0 * bath.gamma * bath.kT) * self.acceleration_action()

    def propagator(self, bath: BathParams) -> float:
        return determinant_prefactor(self.tau, bath) * math.exp(self.exponent(bath))


def stationary_path(X0: float, V0: float, Xf: float, Vf: float, tau: float) -> StationaryPath:
    if not tau > 0:
        raise DomainError("tau must be positive")
    shortfall = Xf - X0 - tau * V0
    quad = shortfall / tau**2
    cubic = (Vf - V0) / tau**2 - 2.0 * shortfall / tau**3
    # X0 + V0 t + quad t^2 + cubic t^2 (t - tau)
    return StationaryPath((X0, V0, quad - cubic * tau, cubic), tau)
