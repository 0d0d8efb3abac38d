"""N-particle crossing counts built from one-particle decoherence data.

For N independent copies with one-particle values (p, pbar, d), the
decoherence matrix D(n, n') for "n particles cross" versus "n' particles
cross" is the coefficient of u^n v^n' in (pbar + d u + d* v + p u v)^N.
Entries are held as (ln|D|, arg D) so that N in the thousands neither
overflows nor underflows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, NumericError, RegimeWarning, ResolutionError
from .numerics import log_binomial, logsumexp_complex


@dataclass(frozen=True)
class OneParticleHistoryData:
    """Candidate probabilities p (cross), pbar (never cross) and off-diagonal d."""

    p: float
    pbar: float
    d: complex
    tol: float = 1e-8

    def __post_init__(self):
        if self.p < 0 or self.pbar < 0:
            raise DomainError("p and pbar must be non-negative")
        object.__setattr__(self, "d", complex(self.d))
        resid = self.p + self.pbar + 2 * self.d.real - 1.0
        if abs(resid) > self.tol:
            raise DomainError(f"p + pbar + 2 Re d = {1 + resid:.12f}, not 1")

    @property
    def alpha(self) -> float:
        """p pbar / |d|^2; +inf when d = 0."""
        d2 = abs(self.d) ** 2
        return math.inf if d2 == 0 else self.p * self.pbar / d2

    @classmethod
    def from_alpha(cls, alpha: float, fraction: float = 0.5, phase: float = 0.0) -> "OneParticleHistoryData":
        """Valid data with p : pbar = fraction : (1 - fraction), arg d = phase and the given alpha."""
        if not (0 < fraction < 1) or not alpha > 0:
            raise DomainError("need 0 < fraction < 1 and alpha > 0")
        rel = math.sqrt(fraction * (1 - fraction) / alpha)
        denom = 1.0 + 2.0 * math.cos(phase) * rel
        if denom <= 0:
            raise DomainError("no normalised data with this alpha and phase")
        a = 1.0 / denom
        return cls(a * fraction, a * (1 - fraction), a * rel * complex(math.cos(phase), math.sin(phase)))

    @classmethod
    def from_table(cls, table, tol: float = 1e-8) -> "OneParticleHistoryData":
        """Take (p_cross, p_nocross, d_offdiag) from a CrossingDecoherenceTable."""
        return cls(table.p_cross, table.p_nocross, table.d_offdiag, tol)

    def renormalized(self) -> tuple[float, float]:
        s = self.p + self.pbar
        return self.p / s, self.pbar / s


@dataclass(frozen=True)
class LogComplex:
    log_mag: float
    phase: float

    @property
    def value(self) -> complex:
        if self.log_mag == -math.inf:
            return 0j
        return complex(math.exp(self.log_mag) * math.cos(self.phase), math.exp(self.log_mag) * math.sin(self.phase))


@dataclass(frozen=True)
class EnsembleDecoherenceMatrix:
    """D(n, n') for n, n' = 0..N (or for bin labels after binning)."""

    N: int
    log_mag: np.ndarray
    phase: np.ndarray
    labels: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.log_mag.shape[0]

    def entry(self, n: int, nprime: int) -> LogComplex:
        return LogComplex(float(self.log_mag[n, nprime]), float(self.phase[n, nprime]))

    def values(self) -> np.ndarray:
        return np.exp(self.log_mag) * np.exp(1j * self.phase)

    def total(self) -> LogComplex:
        return LogComplex(*logsumexp_complex(self.log_mag.ravel(), self.phase.ravel()))

    def hermiticity_error(self) -> float:
        """Largest relative mismatch between D(n, n') and conj D(n', n)."""
        v = self.values()
        scale = np.maximum(np.abs(v), np.abs(v.T))
        diff = np.abs(v - v.conj().T)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, diff / scale, 0.0)
        return float(rel.max())


# --- exact finite sums --------------------------------------------------------------------

def _xlog(k, x: float):
    """k * ln x with 0 * ln 0 = 0."""
    return special.xlogy(k, x)


def _wrap(phase: float) -> float:
    return float(math.remainder(phase, 2 * math.pi))


def _check_indices(N, n, nprime):
    if N < 0 or not (0 <= n <= N) or not (0 <= nprime <= N):
        raise DomainError(f"need 0 <= n, n' <= N, got N={N}, n={n}, n'={nprime}")


def _sum_lower(N, n, nprime, one):
    """Finite sum for n <= n'; returns ln|D|."""
    k = np.arange(max(0, n + nprime - N), n + 1)
    log_terms = (
        log_binomial(N - n, nprime - k)
        + log_binomial(n, k)
        + _xlog(N - n - nprime + k, one.pbar)
        + _xlog(k, one.p)
        + _xlog(n + nprime - 2 * k, abs(one.d))
    )
    return log_binomial(N, n) + special.logsumexp(log_terms)


def _sum_upper(N, n, nprime, one):
    """Finite sum for n >= n'; returns ln|D|."""
    k = np.arange(0, min(N - n, nprime) + 1)
    log_terms = (
        log_binomial(N - n, k)
        + log_binomial(n, nprime - k)
        + _xlog(N - n - k, one.pbar)
        + _xlog(nprime - k, one.p)
        + _xlog(2 * k + n - nprime, abs(one.d))
    )
    return log_binomial(N, n) + special.logsumexp(log_terms)


def exact_dnn(N: int, n: int, nprime: int, one: OneParticleHistoryData) -> LogComplex:
    """D(n, n') from the closed finite sums, in log form.

    Every term carries the phase of d^n (d*)^n', so magnitudes are summed
    with logsumexp and the phase is attached afterwards.  At n = n' both
    sums are evaluated and must agree.
    """
    _check_indices(N, n, nprime)
    phase = _wrap((n - nprime) * float(np.angle(one.d)))
    if n < nprime:
        return LogComplex(float(_sum_lower(N, n, nprime, one)), phase)
    upper = float(_sum_upper(N, n, nprime, one))
    if n == nprime:
        lower = float(_sum_lower(N, n, nprime, one))
        if not (upper == lower == -math.inf) and abs(upper - lower) > 1e-9 * max(1.0, abs(upper)):
            raise NumericError(f"branch sums disagree at n = n' = {n}: {upper} vs {lower}")
    return LogComplex(upper, phase)


def exact_matrix(N: int, one: OneParticleHistoryData, indices=None) -> EnsembleDecoherenceMatrix:
    """Full matrix (or the sub-matrix on ``indices``) from exact_dnn."""
    idx = np.arange(N + 1) if indices is None else np.asarray(indices, dtype=int)
    lm = np.empty((idx.size, idx.size))
    ph = np.empty_like(lm)
    for a, n in enumerate(idx):
        for b, npr in enumerate(idx):
            e = exact_dnn(N, int(n), int(npr), one)
            lm[a, b], ph[a, b] = e.log_mag, e.phase
    return EnsembleDecoherenceMatrix(N, lm, ph, idx)


def candidate_probabilities(N: int, one: OneParticleHistoryData) -> np.ndarray:
    """p(n) = D(n, n) for n = 0..N."""
    return np.exp(np.array([exact_dnn(N, n, n, one).log_mag for n in range(N + 1)]))


def log_candidate_probabilities(N: int, one: OneParticleHistoryData) -> np.ndarray:
    return np.array([exact_dnn(N, n, n, one).log_mag for n in range(N + 1)])


# --- contour integral ---------------------------------------------------------------------

def contour_dnn(N: int, n: int, nprime: int, one: OneParticleHistoryData, m_points: int | None = None, radius: float | None = None) -> LogComplex:
    """D(n, n') by the trapezoidal rule for the contour integral about the origin.

    The integrand is z^(-n'-1) (pbar + d* z)^(N-n) (d + p z)^n.  ``radius``
    is given in the rescaled variable z pbar / d* (where the saddle lives);
    it defaults to the saddle radius when it exists, else 1.
    """
    _check_indices(N, n, nprime)
    need = N + nprime + 2
    if m_points is None:
        m_points = need
    if m_points < need:
        raise ResolutionError(f"m_points must be >= N + n' + 2 = {need}")
    if radius is None:
        radius = 1.0
        if N > 0 and math.isfinite(one.alpha) and one.alpha > 0:
            radius = _saddle_radius(N, min(max(n, 0.5), N - 0.5), min(max(nprime, 0.5), N - 0.5), one.alpha)
    scale = one.pbar / abs(one.d) if one.d != 0 and one.pbar > 0 else 1.0
    r = radius * scale
    theta = 2 * np.pi * np.arange(m_points) / m_points
    z = r * np.exp(1j * theta)
    with np.errstate(divide="ignore"):
        log_f = (N - n) * np.log(one.pbar + np.conj(one.d) * z) + n * np.log(one.d + one.p * z) - nprime * np.log(z)
    log_f = np.where(np.isnan(log_f.real), -np.inf + 0j, log_f)
    lm, ph = logsumexp_complex(log_f.real, log_f.imag)
    lm += log_binomial(N, n) - math.log(m_points)
    return LogComplex(lm, ph)


# --- brute force ------------------------------------------------------------------------------

def brute_force_dnn(N: int, one: OneParticleHistoryData) -> EnsembleDecoherenceMatrix:
    """Expand (pbar + d u + d* v + p u v)^N coefficient by coefficient (N <= 12)."""
    if N > 12:
        raise DomainError("brute force is limited to N <= 12")
    A = np.zeros((N + 1, N + 1), dtype=complex)
    A[0, 0] = 1.0
    for _ in range(N):
        B = one.pbar * A
        B[1:, :] += one.d * A[:-1, :]
        B[:, 1:] += np.conj(one.d) * A[:, :-1]
        B[1:, 1:] += one.p * A[:-1, :-1]
        A = B
    with np.errstate(divide="ignore"):
        return EnsembleDecoherenceMatrix(N, np.log(np.abs(A)), np.angle(A), np.arange(N + 1))


# --- binning and decoherence measures --------------------------------------------------------

@dataclass(frozen=True)
class BinSpec:
    """Bins of width 2*delta_n covering 0..N; the last bin may be shorter."""

    N: int
    delta_n: int

    def __post_init__(self):
        if self.delta_n < 1:
            raise DomainError("delta_n must be >= 1")
        if self.N < 0:
            raise DomainError("N must be non-negative")

    @property
    def width(self) -> int:
        return 2 * self.delta_n

    @property
    def n_bins(self) -> int:
        return self.N // self.width + 1 if (self.N + 1) % self.width else (self.N + 1) // self.width

    def bin_of(self, n):
        return np.asarray(n) // self.width

    def members(self, b: int) -> np.ndarray:
        return np.arange(b * self.width, min((b + 1) * self.width, self.N + 1))

    def centre(self, b: int) -> float:
        return float(self.members(b).mean())


@dataclass(frozen=True)
class UnitBins:
    """Width-1 bins (identity coarse graining)."""

    N: int

    @property
    def n_bins(self) -> int:
        return self.N + 1

    def members(self, b: int) -> np.ndarray:
        return np.array([b])


def binned_matrix(matrix: EnsembleDecoherenceMatrix, bins) -> EnsembleDecoherenceMatrix:
    """D(nbar, nbar') = sum over n in nbar, n' in nbar' of D(n, n')."""
    if matrix.labels is not None and not np.array_equal(matrix.labels, np.arange(matrix.N + 1)):
        raise DomainError("binning needs the full matrix over n = 0..N")
    nb = bins.n_bins
    lm = np.empty((nb, nb))
    ph = np.empty((nb, nb))
    for a in range(nb):
        ia = bins.members(a)
        for b in range(nb):
            ib = bins.members(b)
            lm[a, b], ph[a, b] = logsumexp_complex(matrix.log_mag[np.ix_(ia, ib)].ravel(), matrix.phase[np.ix_(ia, ib)].ravel())
    return EnsembleDecoherenceMatrix(matrix.N, lm, ph, np.arange(nb))


def log_epsilon(matrix: EnsembleDecoherenceMatrix, n: int, nprime: int) -> float:
    dn, dnp = matrix.log_mag[n, n], matrix.log_mag[nprime, nprime]
    if not (math.isfinite(dn) and math.isfinite(dnp)):
        raise DomainError("decoherence measure undefined: zero diagonal entry")
    return float(2 * matrix.log_mag[n, nprime] - dn - dnp)


def epsilon_measure(matrix: EnsembleDecoherenceMatrix, n: int, nprime: int) -> float:
    """|D(n, n')|^2 / (D(n, n) D(n', n')), computed in log space."""
    return math.exp(log_epsilon(matrix, n, nprime))


def exact_log_epsilon(N: int, n: int, nprime: int, one: OneParticleHistoryData) -> float:
    a = exact_dnn(N, n, nprime, one).log_mag
    return float(2 * a - exact_dnn(N, n, n, one).log_mag - exact_dnn(N, nprime, nprime, one).log_mag)


def large_alpha_log_epsilon(N: int, n: int, nprime: int, alpha: float) -> float:
    """Leading large-alpha estimate for n < n':
    alpha^-(n'-n) n'! (N-n)! / (n! (N-n')! ((n'-n)!)^2), as a logarithm."""
    if nprime < n:
        n, nprime = nprime, n
    g = special.gammaln
    return float(-(nprime - n) * math.log(alpha) + g(nprime + 1) + g(N - n + 1) - g(n + 1) - g(N - nprime + 1) - 2 * g(nprime - n + 1))


# --- saddle-point asymptotics ----------------------------------------------------------------

@dataclass(frozen=True)
class SaddleState:
    rho: float
    kappa2: float
    log_f: float
    residual: float
    quadratic_rho: float


def _f_derivatives(z, N, n, alpha):
    """f, f', f'' for f(z) = (1 + z)^(1 - n/N) (1 + alpha z)^(n/N)."""
    nu = n / N
    f = (1 + z) ** (1 - nu) * (1 + alpha * z) ** nu
    g1 = (1 - nu) / (1 + z) + nu * alpha / (1 + alpha * z)
    g2 = -(1 - nu) / (1 + z) ** 2 - nu * alpha**2 / (1 + alpha * z) ** 2
    f1 = f * g1
    f2 = f * (g2 + g1 * g1)
    return f, f1, f2


def _saddle_radius(N, n, nprime, alpha) -> float:
    a = alpha * (N - nprime)
    b = N - n - nprime + alpha * (n - nprime)
    c = -float(nprime)
    disc = math.sqrt(b * b - 4 * a * c)
    return (-b + disc) / (2 * a) if b <= 0 else (2 * c) / (-b - disc)


def saddle_rho(N: int, n: int, nprime: int, alpha: float) -> SaddleState:
    """Positive root of alpha (N - n') rho^2 + (N - n - n' + alpha (n - n')) rho - n' = 0.

    The root is taken in the cancellation-free form 2c / (-b - sqrt(b^2 - 4ac))
    when b > 0, and checked against the displayed closed form.
    """
    if not (0 < n < N and 0 < nprime < N):
        raise DomainError("saddle needs interior indices 0 < n, n' < N")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    a = alpha * (N - nprime)
    b = N - n - nprime + alpha * (n - nprime)
    c = -float(nprime)
    closed = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    rho = _saddle_radius(N, n, nprime, alpha)
    f, f1, f2 = _f_derivatives(rho, N, n, alpha)
    kappa2 = rho * f1 / f + rho**2 * (f2 / f - (f1 / f) ** 2)
    residual = abs(N * rho * f1 / f - nprime)
    return SaddleState(rho, kappa2, float(math.log(f)), residual, closed)


def asymptotic_dnn(N: int, n: int, nprime: int, one: OneParticleHistoryData) -> LogComplex:
    """Saddle-point approximation to D(n, n') including the Gaussian width factor."""
    if not (0 < n < N and 0 < nprime < N):
        raise DomainError("asymptotic form is invalid at boundary indices")
    alpha = one.alpha
    s = saddle_rho(N, n, nprime, alpha)
    rho = s.rho
    log_J = (N - n) * math.log1p(rho) + n * math.log1p(alpha * rho) - nprime * math.log(rho)
    log_J -= 0.5 * math.log(2 * math.pi * N * s.kappa2)
    log_pre = log_binomial(N, n) + (N - n - nprime) * math.log(one.pbar) + (n + nprime) * math.log(abs(one.d))
    return LogComplex(log_pre + log_J, _wrap((n - nprime) * float(np.angle(one.d))))


# --- alpha = 1 + delta ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NearOneResult:
    log_epsilon_estimate: float
    log_p_estimate: np.ndarray
    log_epsilon_exact: float | None = None
    log_p_exact: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def epsilon_estimate(self) -> float:
        return math.exp(self.log_epsilon_estimate)


def near_one_regime(N: int, n: int, nprime: int, one: OneParticleHistoryData, compare: bool = True) -> NearOneResult:
    """Leading-order estimates for alpha = 1 + delta, delta small.

    ln eps ~ -(n - n')^2 delta / N and
    ln p(n) ~ 2 ln C(N, n) + (N - n) ln pbar + n ln p + delta n^2 / N.
    """
    _check_indices(N, n, nprime)
    delta = one.alpha - 1.0
    if not (0 < delta < 0.5):
        warnings.warn(f"delta = {delta:.3g} is outside (0, 0.5); the near-unity expansion may not hold", RegimeWarning, stacklevel=2)
    k = np.arange(N + 1)
    log_p = 2 * log_binomial(N, k) + _xlog(N - k, one.pbar) + _xlog(k, one.p) + delta * k**2 / N
    est = -((n - nprime) ** 2) * delta / N
    if not compare:
        return NearOneResult(est, log_p)
    return NearOneResult(est, log_p, exact_log_epsilon(N, n, nprime, one), log_candidate_probabilities(N, one))
