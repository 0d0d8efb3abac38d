"""Scenario configuration: flat ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DomainError

PIPELINES = ("unitary", "classical", "qbm", "ensemble", "acceptance")
STATES = ("gaussian", "half-line-gaussian", "antisymmetric-gaussian", "superposition", "synthetic-one-particle")
ENSEMBLE_VIEWS = ("histogram", "pairs")


class ConfigError(DomainError):
    """Invalid scenario configuration; ``fields`` names the offending keys."""

    def __init__(self, message: str, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


@dataclass
class ScenarioConfig:
    """Everything a pipeline run depends on.  Natural units (hbar = m = 1) by default."""

    pipeline: str = "unitary"
    # physical parameters
    m: float = 1.0
    hbar: float = 1.0
    gamma: float = 0.5
    kT: float = 1.0
    t: float = 1.0
    t_min: float = 0.0
    t_max: float = 0.0
    n_times: int = 1
    # initial state
    state: str = "gaussian"
    x0: float = 1.0
    p0: float = 0.0
    sigma: float = 0.5
    sigma_p: float = 0.0
    coef_a: float = 1.0
    coef_b: float = 0.0
    x0_b: float = 1.0
    p0_b: float = 0.0
    sigma_b: float = 0.5
    p_one: float = 0.0
    pbar_one: float = 0.0
    d_re: float = 0.0
    d_im: float = 0.0
    alpha: float = 0.0
    fraction: float = 0.5
    # numerical parameters
    grid_points: int = 0
    grid_half_width: float = 0.0
    n_slices: int = 0
    n_paths: int = 0
    n_steps: int = 1000
    seed: int = -1
    N: int = 20
    delta_n: int = 0
    stride: int = 1
    ensemble_view: str = "pairs"
    cell_fraction: float = 0.1
    # acceptance options
    criteria: str = ""
    perturb_hbar: float = 0.0
    # output
    out_name: str = ""

    @property
    def times(self) -> list[float]:
        """The time sweep: log-spaced on [t_min, t_max] when n_times > 1, else [t]."""
        if self.n_times <= 1:
            return [self.t]
        k = self.n_times
        a, b = math.log(self.t_min), math.log(self.t_max)
        return [math.exp(a + (b - a) * i / (k - 1)) for i in range(k)]

    @property
    def diffusion(self) -> float:
        """Dp = 2 m gamma kT."""
        return 2.0 * self.m * self.gamma * self.kT

    @property
    def stochastic(self) -> bool:
        return self.pipeline == "classical" and self.n_paths > 0

    def echo(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> "ScenarioConfig":
        bad = []

        def need(ok, name, why):
            if not ok:
                bad.append((name, why))

        need(self.pipeline in PIPELINES, "pipeline", f"must be one of {', '.join(PIPELINES)}")
        need(self.state in STATES, "state", f"must be one of {', '.join(STATES)}")
        need(self.ensemble_view in ENSEMBLE_VIEWS, "ensemble_view", f"must be one of {', '.join(ENSEMBLE_VIEWS)}")
        for name in ("m", "hbar", "sigma", "sigma_b"):
            need(getattr(self, name) > 0, name, "must be positive")
        need(self.gamma >= 0 and self.kT >= 0, "gamma", "gamma and kT must be non-negative")
        need(self.t > 0, "t", "must be positive")
        need(self.sigma_p >= 0, "sigma_p", "must be non-negative")
        need(self.n_times >= 1, "n_times", "must be >= 1")
        if self.n_times > 1:
            need(0 < self.t_min < self.t_max, "t_min", "a sweep needs 0 < t_min < t_max")
        need(self.grid_points == 0 or self.grid_points >= 16, "grid_points", "0 (automatic) or >= 16")
        need(self.grid_half_width >= 0, "grid_half_width", "must be non-negative")
        need(self.n_slices == 0 or self.n_slices >= 16, "n_slices", "0 (automatic) or >= 16")
        need(self.n_paths == 0 or self.n_paths >= 1000, "n_paths", "0 (no Monte Carlo) or >= 1000")
        need(self.n_steps >= 100, "n_steps", "must be >= 100")
        need(self.seed < 2**64, "seed", "must fit in 64 bits")
        if self.stochastic:
            need(self.seed >= 0, "seed", "stochastic runs need an explicit seed (--seed or seed = ...)")
        need(self.N >= 1, "N", "must be >= 1")
        need(self.delta_n >= 0, "delta_n", "must be non-negative")
        need(self.stride >= 1, "stride", "must be >= 1")
        need(0 < self.fraction < 1, "fraction", "must lie in (0, 1)")
        need(self.alpha >= 0, "alpha", "must be non-negative (0 means use p_one, pbar_one, d)")
        need(0 < self.cell_fraction <= 1, "cell_fraction", "must lie in (0, 1]")
        if self.pipeline == "ensemble":
            need(self.state == "synthetic-one-particle" or self.state in STATES, "state", "ensemble needs one-particle data")
        if self.pipeline == "qbm":
            need(self.gamma > 0 and self.kT > 0, "gamma", "qbm needs gamma > 0 and kT > 0")
        if bad:
            names = [b[0] for b in bad]
            detail = "; ".join(f"{n}: {why}" for n, why in bad)
            raise ConfigError(f"invalid configuration ({detail})", names)
        return self


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    raw = raw.strip()
    try:
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind == "float":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
    except ValueError:
        raise ConfigError(f"{name}: cannot read {raw!r} as {kind}", [name]) from None
    return raw


def parse_assignments(lines, source: str = "<overrides>") -> dict:
    """Parse ``key = value`` (or ``key=value``) entries; '#' starts a comment."""
    out = {}
    unknown = []
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {line.strip()!r}")
        key, _, val = text.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            unknown.append(key)
            continue
        out[key] = _coerce(key, val)
    if unknown:
        raise ConfigError(f"{source}: unknown keys {', '.join(unknown)}", unknown)
    return out


def load_config(path=None, overrides=(), **explicit) -> ScenarioConfig:
    """Build a config from an optional file, then ``--set`` overrides, then explicit flags.

    Later sources win.  Explicit values of None are ignored.
    """
    values = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}", ["config"]) from exc
        values.update(parse_assignments(text.splitlines(), str(p)))
    values.update(parse_assignments(overrides))
    values.update({k: v for k, v in explicit.items() if v is not None})
    return ScenarioConfig(**values).validate()
