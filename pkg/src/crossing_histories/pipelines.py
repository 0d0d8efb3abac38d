"""Scenario pipelines: dispatch a ScenarioConfig to the owning module and tabulate."""

from __future__ import annotations

import math
import platform

import numpy as np
import scipy

from . import __version__, classical, ensemble, quantum, unitary
from .config import ConfigError, ScenarioConfig
from .numerics import Grid1D, RandomStream
from .results import ResultTable


def base_meta(config: ScenarioConfig) -> dict:
    """Config echo, versions, seed and unit annotation (no wall-clock data)."""
    return {
        "config": config.echo(),
        "seed": config.seed if config.seed >= 0 else None,
        "units": f"natural units, hbar = {config.hbar:g}, m = {config.m:g}",
        "versions": {
            "crossing_histories": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _fit_slope(t, y) -> float | None:
    t, y = np.asarray(t, float), np.asarray(y, float)
    ok = (t > 0) & (y > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(t[ok]), np.log(y[ok]), 1)[0])


# --- unitary ---------------------------------------------------------------------

def unitary_state(config: ScenarioConfig, grid: Grid1D) -> unitary.Wavefunction:
    c = config
    if c.state == "gaussian":
        return unitary.gaussian_packet(grid, c.x0, c.sigma, c.p0, c.hbar)
    if c.state == "half-line-gaussian":
        return unitary.half_line_gaussian(grid, c.x0, c.sigma, c.p0, c.hbar)
    if c.state == "antisymmetric-gaussian":
        return unitary.antisymmetric_gaussian(grid, c.x0, c.sigma, c.p0, c.hbar)
    if c.state == "superposition":
        return unitary.superposition(
            grid,
            [c.coef_a, c.coef_b],
            [unitary.gaussian_packet(grid, c.x0, c.sigma, c.p0, c.hbar), unitary.gaussian_packet(grid, c.x0_b, c.sigma_b, c.p0_b, c.hbar)],
        )
    raise ConfigError(f"state {c.state!r} is not a wavefunction", ["state"])


def unitary_grid(config: ScenarioConfig) -> Grid1D:
    c = config
    params = unitary.ParticleParams(c.m, c.hbar, max(config.times))
    if c.state == "superposition":
        auto = unitary.suggest_grid(max(abs(c.x0), abs(c.x0_b)), min(c.sigma, c.sigma_b), max(abs(c.p0), abs(c.p0_b)), params)
    else:
        auto = unitary.suggest_grid(c.x0, c.sigma, c.p0, params)
    half = c.grid_half_width or auto.x_max
    n = c.grid_points or auto.n_points
    return Grid1D.symmetric(half, n | 1)


def run_unitary(config: ScenarioConfig) -> ResultTable:
    grid = unitary_grid(config)
    psi = unitary_state(config, grid)
    params = unitary.ParticleParams(config.m, config.hbar)
    rows = [unitary.decoherence_table(psi, params.at(t)) for t in config.times]
    cols = {
        "t": np.array(config.times),
        "p_cross": np.array([r.p_cross for r in rows]),
        "p_nocross": np.array([r.p_nocross for r in rows]),
        "d_offdiag": np.array([r.d_offdiag for r in rows]),
        "epsilon_ratio": np.array([r.epsilon_ratio for r in rows]),
        "sum_rule_residual": np.array([r.sum_rule_residual for r in rows]),
    }
    meta = base_meta(config)
    meta["grid"] = {"x_min": grid.x_min, "x_max": grid.x_max, "n_points": grid.n_points}
    if len(rows) > 2:
        meta["slope_abs_d"] = _fit_slope(cols["t"], np.abs(cols["d_offdiag"]))
        meta["slope_p_cross"] = _fit_slope(cols["t"], cols["p_cross"])
    return ResultTable(cols, meta)


# --- classical -------------------------------------------------------------------

def run_classical(config: ScenarioConfig) -> ResultTable:
    c = config
    if c.state != "gaussian":
        raise ConfigError("the classical pipeline takes a gaussian (or point, sigma_p = 0) initial state", ["state"])
    bath = classical.BathParams(c.m, c.gamma, c.kT)
    point = c.sigma_p == 0
    if point:
        w0 = None
    else:
        g2 = classical.gaussian_phase_space_grid(c.p0, c.x0, c.sigma_p, c.sigma)
        w0 = classical.gaussian_phase_space(g2, c.p0, c.x0, c.sigma_p, c.sigma)
    cols = {k: [] for k in ("t", "survival", "crossing_flux")}
    if c.n_paths:
        cols.update({k: [] for k in ("langevin_mean", "langevin_stderr", "langevin_bias")})
    for i, t in enumerate(c.times):
        if point:
            s = float(classical.survival_map(c.p0, c.x0, t, bath)[0])
            f = float(classical.flux_map(c.p0, c.x0, t, bath)[0])
        else:
            s = classical.survival_probability(w0, t, bath)
            f = classical.crossing_probability_flux(w0, t, bath)
        cols["t"].append(t)
        cols["survival"].append(s)
        cols["crossing_flux"].append(f)
        if c.n_paths:
            est = classical.langevin_survival(
                w0, t, bath, n_paths=c.n_paths, n_steps=c.n_steps,
                stream=RandomStream(c.seed, i), initial_points=(c.p0, c.x0) if point else None,
            )
            cols["langevin_mean"].append(est.mean)
            cols["langevin_stderr"].append(est.stderr)
            cols["langevin_bias"].append(est.bias_estimate)
    meta = base_meta(c)
    meta["diffusion"] = bath.diffusion
    return ResultTable({k: np.array(v) for k, v in cols.items()}, meta)


# --- quantum Brownian motion -----------------------------------------------------------

def qbm_grid(config: ScenarioConfig) -> Grid1D:
    c = config
    if c.grid_half_width and c.grid_points:
        return Grid1D(0.0, c.grid_half_width, c.grid_points)
    sig = min(c.sigma, c.sigma_b) if c.state == "superposition" else c.sigma
    far = max(c.x0, c.x0_b if c.state == "superposition" else c.x0)
    length = c.grid_half_width or (2.0 * far if far > 10 * sig else far + 10 * sig)
    pmax = max(abs(c.p0), abs(c.p0_b)) if c.state == "superposition" else abs(c.p0)
    kmax = pmax / c.hbar + 5.0 / sig
    spacing = min(sig / 10.0, math.pi / (2.0 * kmax))
    n = c.grid_points or int(math.ceil(length / spacing)) + 1
    return Grid1D(0.0, length, n)


def run_qbm(config: ScenarioConfig, strict: bool = False) -> ResultTable:
    c = config
    bath = classical.BathParams(c.m, c.gamma, c.kT)
    particle = unitary.ParticleParams(c.m, c.hbar)
    grid = qbm_grid(c)
    if c.state == "gaussian":
        rho = quantum.gaussian_density(grid, c.x0, c.sigma, c.p0, c.hbar)
    elif c.state == "superposition":
        rho = quantum.superposed_density(grid, [c.coef_a, c.coef_b], [(c.x0, c.sigma, c.p0), (c.x0_b, c.sigma_b, c.p0_b)], c.hbar)
    else:
        raise ConfigError("the qbm pipeline takes a gaussian or superposition state supported in x > 0", ["state"])
    keys = ("t", "p_cross", "p_nocross", "clamp", "wigner_min", "decay_length", "regime_ok")
    cols = {k: [] for k in keys}
    for t in c.times:
        tab = quantum.quantum_crossing_probabilities(rho, t, bath, particle.at(t), strict=strict, cell_fraction=c.cell_fraction)
        cols["t"].append(t)
        cols["p_cross"].append(tab.p_cross)
        cols["p_nocross"].append(tab.p_nocross)
        for k in keys[3:]:
            cols[k].append(tab.notes[k])
    meta = base_meta(c)
    meta["diffusion"] = bath.diffusion
    meta["grid"] = {"x_min": grid.x_min, "x_max": grid.x_max, "n_points": grid.n_points}
    return ResultTable({k: np.array(v) for k, v in cols.items()}, meta)


# --- ensemble ----------------------------------------------------------------------------

def one_particle(config: ScenarioConfig) -> ensemble.OneParticleHistoryData:
    c = config
    if c.state == "synthetic-one-particle":
        if c.alpha > 0:
            return ensemble.OneParticleHistoryData.from_alpha(c.alpha, c.fraction, math.atan2(c.d_im, c.d_re) if (c.d_re or c.d_im) else 0.0)
        return ensemble.OneParticleHistoryData(c.p_one, c.pbar_one, complex(c.d_re, c.d_im), tol=1e-8)
    # one-particle data from the unitary calculation at time t
    tab = run_unitary_single(c)
    return ensemble.OneParticleHistoryData.from_table(tab, tol=1e-6)


def run_unitary_single(config: ScenarioConfig):
    grid = unitary_grid(config)
    return unitary.decoherence_table(unitary_state(config, grid), unitary.ParticleParams(config.m, config.hbar, config.t))


def run_ensemble(config: ScenarioConfig) -> ResultTable:
    c = config
    one = one_particle(c)
    meta = base_meta(c)
    meta["one_particle"] = {"p": one.p, "pbar": one.pbar, "d": [one.d.real, one.d.imag], "alpha": one.alpha}
    if c.ensemble_view == "histogram":
        lp = ensemble.log_candidate_probabilities(c.N, one)
        n = np.arange(c.N + 1)
        meta["peak_estimate"] = c.N * one.renormalized()[0]
        return ResultTable({"n": n, "p_n": np.exp(lp), "log_p_n": lp}, meta)
    if c.delta_n:
        bins = ensemble.BinSpec(c.N, c.delta_n)
        mat = ensemble.binned_matrix(ensemble.exact_matrix(c.N, one), bins)
        labels = np.arange(bins.n_bins)
        meta["bin_width"] = bins.width
    else:
        labels = np.arange(0, c.N + 1, c.stride)
        mat = ensemble.exact_matrix(c.N, one, labels)
    rows = []
    for a, n in enumerate(labels):
        for b, npr in enumerate(labels):
            le = ensemble.log_epsilon(mat, a, b) if a != b else 0.0
            rows.append((int(n), int(npr), mat.log_mag[a, b], mat.phase[a, b], le))
    arr = list(zip(*rows))
    cols = {
        "n": np.array(arr[0]),
        "nprime": np.array(arr[1]),
        "log_abs_d": np.array(arr[2]),
        "phase": np.array(arr[3]),
        "log_epsilon": np.array(arr[4]),
        "epsilon": np.exp(np.array(arr[4])),
    }
    return ResultTable(cols, meta)


def run_scenario(config: ScenarioConfig, strict: bool = False) -> ResultTable:
    """Run one pipeline; identical config and seed give identical tables."""
    config.validate()
    if config.pipeline == "unitary":
        return run_unitary(config)
    if config.pipeline == "classical":
        return run_classical(config)
    if config.pipeline == "qbm":
        return run_qbm(config, strict)
    if config.pipeline == "ensemble":
        return run_ensemble(config)
    if config.pipeline == "acceptance":
        from .acceptance import report_table, run_acceptance

        return report_table(run_acceptance(config.criteria or None, config.perturb_hbar), base_meta(config))
    raise ConfigError(f"unknown pipeline {config.pipeline!r}", ["pipeline"])
