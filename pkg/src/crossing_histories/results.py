"""Result tables, CSV/JSON emitters and plot-script generation."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

PLOT_KINDS = ("smalltime-scaling", "survival-vs-t", "pn-histogram", "epsilon-heatmap")


@dataclass
class ResultTable:
    """Named equal-length columns (real or complex) plus a metadata block."""

    columns: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(np.atleast_1d(v)) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DomainError(f"column lengths differ: {sorted(lengths)}")
        self.columns = {k: np.atleast_1d(np.asarray(v)) for k, v in self.columns.items()}

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def flat_columns(self) -> dict:
        """Complex columns split into <name>_re and <name>_im."""
        out = {}
        for k, v in self.columns.items():
            if np.iscomplexobj(v):
                out[k + "_re"] = v.real
                out[k + "_im"] = v.imag
            else:
                out[k] = v
        return out


def _fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _meta_value(v) -> str:
    return json.dumps(v, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for k in sorted(table.meta):
        buf.write(f"# {k}: {_meta_value(table.meta[k])}\n")
    flat = table.flat_columns()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(flat))
    for i in range(len(table)):
        w.writerow([_fmt(col[i]) for col in flat.values()])
    return buf.getvalue()


def to_json(table: ResultTable) -> str:
    flat = table.flat_columns()
    cols = {k: [None if (isinstance(x, float) and not math.isfinite(x)) else x for x in np.asarray(v).tolist()] for k, v in flat.items()}
    return json.dumps({"meta": table.meta, "columns": cols}, sort_keys=True, indent=1, default=_json_default) + "\n"


def emit(table: ResultTable, fmt: str, path) -> Path:
    path = Path(path)
    if fmt == "csv":
        text = to_csv(table)
    elif fmt == "json":
        text = to_json(table)
    else:
        raise DomainError(f"unknown format {fmt!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> ResultTable:
    """Parse a CSV written by emit; re/im column pairs are recombined."""
    meta = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        else:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return ResultTable({}, meta)
    header, data = rows[0], rows[1:]
    raw = {h: _parse_column([r[i] for r in data]) for i, h in enumerate(header)}
    cols = {}
    for h in header:
        if h.endswith("_re") and h[:-3] + "_im" in raw:
            cols[h[:-3]] = raw[h] + 1j * raw[h[:-3] + "_im"]
        elif h.endswith("_im") and h[:-3] + "_re" in raw:
            continue
        else:
            cols[h] = raw[h]
    return ResultTable(cols, meta)


def _parse_column(cells):
    try:
        return np.array([float(c) for c in cells])
    except ValueError:
        return np.array(cells, dtype=str)


_LOADER = """import csv
import os

import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, {csv!r})


def load(path):
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    data = np.array([[float(x) for x in r] for r in reader])
    return {{h: data[:, i] if data.size else np.array([]) for i, h in enumerate(header)}}


cols = load(CSV)
fig, ax = plt.subplots()
"""

_BODIES = {
    "smalltime-scaling": """t = cols["t"]
ax.loglog(t, np.abs(cols["d_offdiag_re"] + 1j * cols["d_offdiag_im"]), "o-", label="|D|")
ax.loglog(t, cols["p_cross"], "s-", label="p_cross")
guide = cols["p_cross"][0] * np.sqrt(t / t[0])
ax.loglog(t, guide, "k--", label="slope 0.5 guide")
ax.annotate("fitted slopes: |D| {slope_d}, p_cross {slope_p}", xy=(0.05, 0.92), xycoords="axes fraction")
ax.set_xlabel("t")
ax.legend()
""",
    "survival-vs-t": """t = cols["t"]
ax.plot(t, cols["survival"], "o-", label="survival (restricted propagator)")
if "langevin_mean" in cols:
    ax.errorbar(t, cols["langevin_mean"], yerr=3 * cols["langevin_stderr"], fmt="s", label="Langevin (3 s.e.)")
ax.set_xlabel("t")
ax.set_ylabel("probability of not crossing")
ax.legend()
""",
    "pn-histogram": """n = cols["n"]
ax.bar(n, cols["p_n"], width=1.0)
ax.set_xlabel("n (number crossing)")
ax.set_ylabel("p(n)")
""",
    "epsilon-heatmap": """n = cols["n"].astype(int)
m = cols["nprime"].astype(int)
labels_n = np.unique(n)
labels_m = np.unique(m)
grid = np.full((labels_n.size, labels_m.size), np.nan)
grid[np.searchsorted(labels_n, n), np.searchsorted(labels_m, m)] = cols["log_epsilon"]
im = ax.imshow(grid, origin="lower", extent=(labels_m[0], labels_m[-1], labels_n[0], labels_n[-1]), aspect="auto")
fig.colorbar(im, label="ln epsilon")
ax.set_xlabel("n'")
ax.set_ylabel("n")
""",
}


def emit_plot_script(table: ResultTable, kind: str, path, csv_name: str) -> Path:
    """Write a matplotlib script that plots the CSV ``csv_name`` (relative to the script)."""
    if kind not in _BODIES:
        raise DomainError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    body = _BODIES[kind]
    if kind == "smalltime-scaling":
        body = body.format(
            slope_d=_fmt_slope(table.meta.get("slope_abs_d")),
            slope_p=_fmt_slope(table.meta.get("slope_p_cross")),
        )
    out = Path(path)
    stem = out.stem
    script = _LOADER.format(csv=os.path.basename(csv_name)) + body + f'ax.set_title({kind!r})\nfig.savefig(os.path.join(HERE, "{stem}.png"), dpi=150)\n'
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(script, encoding="utf-8")
    return out


def _fmt_slope(v) -> str:
    return "n/a" if v is None else f"{float(v):.3f}"
