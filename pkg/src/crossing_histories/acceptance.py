"""The acceptance suite: seventeen numbered checks, each with a measured and required value."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import classical, ensemble, quantum, unitary, wigner
from .numerics import Grid1D, Grid2D, RandomStream, fft_friendly_odd
from .results import ResultTable


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    measured: dict
    required: str
    runtime: float = 0.0
    budget: float = math.inf
    notes: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.id:2d} {self.name}: {shown} | required {self.required} | {self.runtime:.1f}s"


def _short(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4g}"
    if isinstance(v, complex):
        return f"{v.real:.4g}{v.imag:+.4g}j"
    return str(v)


# --- 1-3: unitary ------------------------------------------------------------------------

def _random_state(grid, rng, hbar):
    k = int(rng.integers(1, 4))
    coeffs = rng.normal(size=k) + 1j * rng.normal(size=k)
    packets = [
        unitary.gaussian_packet(grid, rng.uniform(-4, 4), rng.uniform(0.3, 1.5), rng.uniform(-3, 3), hbar)
        for _ in range(k)
    ]
    return unitary.superposition(grid, coeffs, packets)


def sum_rule(perturb_hbar: float = 0.0):
    """Random superpositions, with the crossing amplitude taken from its own kernel.

    ``perturb_hbar`` = delta evolves the crossing branch with hbar (1 + delta),
    a deliberate error the check must catch.
    """
    rng = np.random.default_rng(20240917)
    grid = Grid1D.symmetric(30.0, fft_friendly_odd(2401))
    params = unitary.ParticleParams(1.0, 1.0, 1.0)
    wrong = unitary.ParticleParams(1.0, 1.0 + perturb_hbar, 1.0)
    worst = 0.0
    for _ in range(50):
        psi = _random_state(grid, rng, params.hbar)
        restricted = unitary.restricted_amplitude(psi, params)
        crossing = unitary.crossing_amplitude_direct(psi, wrong)
        tab = unitary.CrossingDecoherenceTable.from_amplitudes(crossing, restricted)
        worst = max(worst, abs(tab.sum_rule_residual))
    return worst <= 1e-8, {"max_residual": worst}


def exact_consistency():
    params = unitary.ParticleParams(1.0, 1.0, 1.0)
    grid = Grid1D.symmetric(25.0, fft_friendly_odd(2001))
    psi = unitary.antisymmetric_gaussian(grid, 2.0, 0.7, 0.5)
    tab = unitary.decoherence_table(psi, params)
    ok = tab.p_cross <= 1e-6 and tab.p_nocross >= 1 - 1e-6 and abs(tab.d_offdiag.real) <= 1e-6
    return ok, {"p_cross": tab.p_cross, "p_nocross": tab.p_nocross, "re_d": tab.d_offdiag.real}


def small_time_scaling():
    grid = Grid1D.symmetric(12.0, fft_friendly_odd(2**15 + 1))
    psi = unitary.half_line_gaussian(grid, 0.5, 1.0)
    params = unitary.ParticleParams(1.0, 1.0)
    ts = np.logspace(-4, -2, 9)
    rows = [unitary.decoherence_table(psi, params.at(t)) for t in ts]
    p = np.array([r.p_cross for r in rows])
    d = np.array([abs(r.d_offdiag) for r in rows])
    slope_p = float(np.polyfit(np.log(ts), np.log(p), 1)[0])
    slope_d = float(np.polyfit(np.log(ts), np.log(d), 1)[0])
    pbar_min = min(r.p_nocross for r in rows)
    ratio_max = max(r.epsilon_ratio for r in rows)
    ok = abs(slope_p - 0.5) <= 0.05 and abs(slope_d - 0.5) <= 0.05 and pbar_min >= 0.99 and ratio_max <= 1.0
    return ok, {"slope_p_cross": slope_p, "slope_abs_d": slope_d, "min_p_nocross": pbar_min, "max_ratio": ratio_max}


# --- 4-6: classical ------------------------------------------------------------------------

def fp_normalization_composition():
    bath = classical.BathParams.from_diffusion(1.0, 1.0)
    norm = classical.normalization_check(1.0, bath)["determinant"]
    t, t1 = 1.0, 0.4
    grid = Grid2D(Grid1D(-12.0, 12.0, 481), Grid1D(-8.0, 8.0, 481))
    pairs = [((0.0, 0.0), (0.3, 0.5)), ((1.0, -0.5), (0.5, 0.2)), ((-0.7, 0.3), (-1.2, -0.4)), ((0.2, 1.0), (1.0, 1.5)), ((0.5, 0.0), (-0.5, 0.4))]
    worst = 0.0
    for (p0, x0), (p, x) in pairs:
        direct = float(classical.fp_kernel(p, x, p0, x0, t, bath))
        composed = classical.compose(classical.PhaseSpacePoint(p, x), t, classical.PhaseSpacePoint(p0, x0), t1, bath, grid)
        worst = max(worst, abs(composed - direct) / direct)
    return abs(norm - 1) <= 1e-4 and worst <= 1e-4, {"normalization": norm, "max_composition_residual": worst}


def absorbing_boundary():
    bath = classical.BathParams.from_diffusion(1.0, 1.0)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(1e-3, 5.0)
        p0, x0, t = rng.uniform(-3, 3), rng.uniform(0.05, 3), rng.uniform(0.2, 2.0)
        scale = classical.determinant_prefactor(t, bath)
        worst = max(worst, abs(float(classical.restricted_fp_kernel(p, 0.0, p0, x0, t, bath))) / scale)
    return worst <= 1e-12, {"max_relative_boundary_value": worst}


LANGEVIN_SETS = ((2.0, 1.0), (1.0, 0.5), (0.0, 0.3), (-1.0, 1.0), (-4.0, 1.0))


def langevin_oracle(seed: int = 7):
    bath = classical.BathParams.from_diffusion(1.0, 1.0)
    t = 1.0
    measured = {}
    ok = True
    for i, (p0, x0) in enumerate(LANGEVIN_SETS):
        exact = float(classical.survival_map(p0, x0, t, bath)[0])
        est = classical.langevin_survival(None, t, bath, 100_000, 1000, RandomStream(seed, i), initial_points=(p0, x0))
        z = (est.mean - exact) / est.stderr
        ok &= abs(z) <= 3.0
        measured[f"S({p0:g},{x0:g})"] = exact
        measured[f"MC({p0:g},{x0:g})"] = est.mean
        measured[f"z({p0:g},{x0:g})"] = z
        measured[f"halving_bias({p0:g},{x0:g})"] = est.bias_estimate
    return bool(ok), measured


# --- 7-10: quantum Brownian motion --------------------------------------------------------

def master_integrity():
    grid = Grid1D.symmetric(10.0, 401)
    particle = unitary.ParticleParams(1.0, 1.0)
    bath = classical.BathParams.from_diffusion(1.0, 0.5)
    rho0 = quantum.gaussian_density(grid, 1.0, 1.0, 2.0)
    rho = quantum.evolve(rho0, 1.0, bath, particle, n_steps=1000)
    trace_drift = abs(rho.trace() - 1.0)
    herm = rho.hermiticity_error(rho.samples)
    frozen = quantum.evolve(rho0, 0.7, bath, particle, n_steps=1, kinetic=False)
    x = grid.points
    closed = rho0.samples * np.exp(-bath.diffusion * (x[:, None] - x[None, :]) ** 2 * 0.7 / particle.hbar**2)
    decay_err = float(np.max(np.abs(frozen.samples - closed)))
    ok = trace_drift <= 1e-6 and herm <= 1e-10 and decay_err <= 1e-14
    return ok, {"trace_drift": trace_drift, "hermiticity": herm, "pure_decay_error": decay_err}


def wigner_round_trip():
    grid = Grid1D.symmetric(10.0, 401)
    worst = {}
    for name, rho in (("gaussian", quantum.gaussian_density(grid, 1.0, 1.0, 2.0)), ("cat", quantum.cat_density(grid, 3.0, 0.7, -1))):
        back = wigner.inverse_wigner(wigner.wigner_transform(rho))
        worst[name] = float(np.max(np.abs(back - rho.samples)))
    return max(worst.values()) <= 1e-8, worst


def wavepacket_phenomenology():
    m, t = 4.0, 1.0
    bath = classical.BathParams.from_diffusion(m, 144.0)
    particle = unitary.ParticleParams(m, 1.0, t)
    grid = Grid1D(0.0, 20.0, 1601)
    states = {
        "inbound": quantum.gaussian_density(grid, 10.0, 1.0, -80.0),
        "outbound": quantum.gaussian_density(grid, 10.0, 1.0, 20.0),
        "superposition": quantum.superposed_density(grid, [math.sqrt(0.3), math.sqrt(0.7)], [(10.0, 1.0, -80.0), (10.0, 1.0, 20.0)]),
    }
    out = {}
    regime = True
    for name, rho in states.items():
        tab = quantum.quantum_crossing_probabilities(rho, t, bath, particle, strict=True)
        regime &= tab.notes["regime_ok"]
        out[name] = tab
    measured = {
        "inbound_p_nocross": out["inbound"].p_nocross,
        "outbound_p_nocross": out["outbound"].p_nocross,
        "superposition_p_cross": out["superposition"].p_cross,
        "regime_ok": bool(regime),
    }
    ok = (
        out["inbound"].p_nocross <= 0.05
        and out["outbound"].p_nocross >= 0.95
        and abs(out["superposition"].p_cross - 0.30) <= 0.03
        and regime
    )
    return ok, measured


def branch_suppression():
    """Dirichlet-limit branches for an inbound packet at Dp = 0 and at strong decoherence."""
    m, t = 4.0, 1.0
    particle = unitary.ParticleParams(m, 1.0, t)
    grid = Grid1D.symmetric(16.0, 875)
    psi = unitary.gaussian_packet(grid, 4.0, 1.0, -24.0)
    rho0 = quantum.pure_density(psi)
    n_slices = math.ceil(t / quantum.max_step(grid, particle))
    ref = unitary.decoherence_table(psi, particle)
    free = quantum.branch_densities(rho0, t, n_slices, None, particle)
    tr0 = free.traces()
    unitary_err = max(abs(tr0["rho_rr"] - ref.p_nocross), abs(tr0["rho_cc"] - ref.p_cross), abs(tr0["rho_cr"] - ref.d_offdiag))
    bath = classical.BathParams.from_diffusion(m, 121.0)
    strong = quantum.branch_densities(rho0, t, n_slices, bath, particle)
    tr = strong.traces()
    ratio = abs(tr["rho_rc"]) / abs(tr["rho_rr"])
    completeness = max(free.completeness_error(), strong.completeness_error())
    ok = completeness <= 1e-6 and ratio <= 1e-3 and unitary_err <= 2e-3
    return ok, {
        "completeness": completeness,
        "rc_over_rr_strong": ratio,
        "tr_rr_strong": tr["rho_rr"].real,
        "dp0_unitary_mismatch": unitary_err,
        "unitary_p_nocross": ref.p_nocross,
    }


# --- 11-16: ensemble ------------------------------------------------------------------------

def triple_identity():
    rng = np.random.default_rng(11)
    worst_rel, worst_total = 0.0, 0.0
    for N in (1, 2, 3, 5, 8, 12):
        one = ensemble.OneParticleHistoryData.from_alpha(rng.uniform(0.5, 50.0), rng.uniform(0.1, 0.9), rng.uniform(-1.0, 1.0))
        bf = ensemble.brute_force_dnn(N, one)
        ex = ensemble.exact_matrix(N, one)
        for n in range(N + 1):
            for npr in range(N + 1):
                b = bf.entry(n, npr).value
                for v in (ex.entry(n, npr).value, ensemble.contour_dnn(N, n, npr, one).value):
                    worst_rel = max(worst_rel, abs(v - b) / abs(b))
        worst_total = max(worst_total, abs(ex.total().value - 1.0))
    return worst_rel <= 1e-10 and worst_total <= 1e-8, {"max_relative": worst_rel, "max_total_error": worst_total}


def alpha_one():
    one = ensemble.OneParticleHistoryData.from_alpha(1.0, 0.4, 0.3)
    N = 200
    worst = 0.0
    for n in range(0, N + 1, 10):
        for npr in range(0, N + 1, 10):
            worst = max(worst, abs(ensemble.exact_log_epsilon(N, n, npr, one)))
    # |ln eps| is the log of |D|^2 / (D(n,n) D(n',n')), i.e. the relative error
    return worst <= 1e-12, {"max_abs_log_epsilon": worst}


def large_alpha():
    N, alpha = 40, 1e6
    one = ensemble.OneParticleHistoryData.from_alpha(alpha, 0.4)
    exact = ensemble.exact_log_epsilon(N, 10, 20, one)
    printed = ensemble.large_alpha_log_epsilon(N, 10, 20, alpha)
    mat = ensemble.exact_matrix(N, one)
    measured = {"log_eps_exact": exact, "log_eps_formula": printed}
    ok = abs(exact - printed) <= 0.1
    peak = int(round(N * one.renormalized()[0]))
    for dn in (2, 4):
        bins = ensemble.BinSpec(N, dn)
        b = int(bins.bin_of(peak))
        bm = ensemble.binned_matrix(mat, bins)
        expo = ensemble.log_epsilon(bm, b, b + 1) / math.log(alpha)
        measured[f"exponent_dn{dn}"] = expo
        measured[f"exponent_dn{dn}_bins_two_apart"] = ensemble.log_epsilon(bm, b, b + 2) / math.log(alpha)
        ok &= abs(expo / (-2 * dn) - 1) <= 0.15
    return bool(ok), measured


def frequency_peak():
    N = 1000
    one = ensemble.OneParticleHistoryData.from_alpha(1e9, 0.3)
    lp = ensemble.log_candidate_probabilities(N, one)
    p = np.exp(lp - lp.max())
    p /= p.sum()
    n = np.arange(N + 1)
    argmax = int(np.argmax(p))
    target = N * one.p / (one.p + one.pbar)
    mean = float(np.dot(p, n))
    var = float(np.dot(p, (n - mean) ** 2))
    var_target = N * one.p * one.pbar / (one.p + one.pbar) ** 2
    ok = abs(argmax - target) <= 1 and abs(var / var_target - 1) <= 0.1
    return ok, {"argmax": argmax, "target": target, "variance": var, "variance_target": var_target}


def saddle_asymptotics():
    one = ensemble.OneParticleHistoryData.from_alpha(5.0, 0.4)
    Ns = np.array([50, 100, 200, 400, 800])
    errs, resid = [], 0.0
    for N in Ns:
        n, npr = int(0.3 * N), int(0.6 * N)
        resid = max(resid, ensemble.saddle_rho(int(N), n, npr, one.alpha).residual / npr)
        errs.append(abs(ensemble.asymptotic_dnn(int(N), n, npr, one).log_mag - ensemble.exact_dnn(int(N), n, npr, one).log_mag))
    slope = float(np.polyfit(np.log(Ns), np.log(errs), 1)[0])
    ok = resid <= 1e-10 and abs(slope + 1) <= 0.3
    return ok, {"saddle_residual": resid, "error_slope": slope, "error_N50": errs[0], "error_N800": errs[-1]}


def near_unity():
    N = 1000
    one = ensemble.OneParticleHistoryData.from_alpha(1.02, 0.3)
    lp = ensemble.log_candidate_probabilities(N, one)
    argmax = int(np.argmax(lp))
    sp, sq = math.sqrt(one.p), math.sqrt(one.pbar)
    target = N * sp / (sp + sq)
    worst = 0.0
    for n in (250, argmax - 250):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = ensemble.near_one_regime(N, n, n + N // 2, one)
        worst = max(worst, abs(r.log_epsilon_exact / r.log_epsilon_estimate - 1))
    ok = abs(argmax - target) <= 2 and worst <= 0.3
    return ok, {"argmax": argmax, "target": target, "max_log_eps_relative_error": worst}


# --- 17: determinism -------------------------------------------------------------------------

def determinism():
    from .config import load_config
    from .pipelines import run_scenario
    from .results import to_csv

    cfg = ["pipeline = classical", "x0 = 1.0", "p0 = -1.0", "t = 1.0", "n_paths = 2000", "n_steps = 200", "seed = 99"]
    a = to_csv(run_scenario(load_config(overrides=cfg)))
    b = to_csv(run_scenario(load_config(overrides=cfg)))
    return a == b, {"identical": a == b, "bytes": len(a)}


CRITERIA = [
    (1, "sum rule", "|p + pbar + 2 Re D - 1| <= 1e-8 on 50 states", 10),
    (2, "exact consistency of the antisymmetric state", "p_cross <= 1e-6, p_nocross >= 1 - 1e-6, |Re D| <= 1e-6", 5),
    (3, "small-time scaling", "slopes 0.50 +- 0.05, p_nocross >= 0.99, ratio <= 1", 60),
    (4, "Fokker-Planck normalization and composition", "integral 1 +- 1e-4, composition residual <= 1e-4", 60),
    (5, "absorbing boundary", "|K_r(p>0, x=0)| <= 1e-12 K-scale", 5),
    (6, "classical first passage vs Langevin", "|z| <= 3 for all 5 sets", 300),
    (7, "master-equation integrity", "trace drift <= 1e-6, Hermiticity <= 1e-10, pure decay exact", 120),
    (8, "Wigner round trip", "sup error <= 1e-8", 30),
    (9, "wavepacket phenomenology", "inbound <= 0.05, outbound >= 0.95, p_cross 0.30 +- 0.03, regime ok", 120),
    (10, "branch completeness and interference suppression", "completeness <= 1e-6, |Tr rc| <= 1e-3 Tr rr, Dp=0 mismatch <= 2e-3", 300),
    (11, "brute force = exact = contour", "relative <= 1e-10, total 1 +- 1e-8", 30),
    (12, "alpha = 1 anti-decoherence", "|ln eps| <= 1e-12", 30),
    (13, "large-alpha decoherence", "ln eps within 0.1; binned exponent within 15% of -2 dn", 60),
    (14, "relative-frequency peak", "argmax within 1, variance within 10%", 60),
    (15, "saddle-point asymptotics", "residual <= 1e-10, error slope -1 +- 0.3", 120),
    (16, "near-unity regime", "argmax within 2, ln eps within 30%", 60),
    (17, "determinism", "byte-identical CSV", 10),
]

_CHECKS = {
    1: sum_rule, 2: exact_consistency, 3: small_time_scaling, 4: fp_normalization_composition,
    5: absorbing_boundary, 6: langevin_oracle, 7: master_integrity, 8: wigner_round_trip,
    9: wavepacket_phenomenology, 10: branch_suppression, 11: triple_identity, 12: alpha_one,
    13: large_alpha, 14: frequency_peak, 15: saddle_asymptotics, 16: near_unity, 17: determinism,
}


def parse_ids(spec) -> list[int]:
    if spec is None or spec == "":
        return [c[0] for c in CRITERIA]
    if isinstance(spec, str):
        return [int(s) for s in spec.replace(",", " ").split()]
    return [int(s) for s in spec]


def run_criterion(cid: int, perturb_hbar: float = 0.0) -> CriterionResult:
    _, name, required, budget = CRITERIA[cid - 1]
    t0 = time.perf_counter()
    check = _CHECKS[cid]
    passed, measured = check(perturb_hbar) if cid == 1 else check()
    runtime = time.perf_counter() - t0
    return CriterionResult(cid, name, bool(passed), measured, required, runtime, budget)


def run_acceptance(ids=None, perturb_hbar: float = 0.0, echo=None) -> list[CriterionResult]:
    """Run the selected criteria (all by default); ``echo`` receives each result line."""
    out = []
    for cid in parse_ids(ids):
        r = run_criterion(cid, perturb_hbar)
        if echo is not None:
            echo(r.line)
        out.append(r)
    return out


def report_table(results, meta=None) -> ResultTable:
    """Machine-readable report: one row per criterion; measured values go to the metadata."""
    meta = dict(meta or {})
    meta["measured"] = {str(r.id): r.measured for r in results}
    meta["required"] = {str(r.id): r.required for r in results}
    cols = {
        "id": np.array([r.id for r in results], dtype=int),
        "name": np.array([r.name for r in results]),
        "passed": np.array([r.passed for r in results], dtype=bool),
        "runtime": np.array([r.runtime for r in results]),
        "budget": np.array([r.budget for r in results]),
    }
    return ResultTable(cols, meta)
