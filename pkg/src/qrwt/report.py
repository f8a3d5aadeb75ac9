"""Deterministic report emission: JSON summaries, CSV sweep tables, figures.

Report files are byte-identical for identical (config, seed); anything
nondeterministic (wall-clock timings) goes to the console only.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.complexfloating, complex)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def matrix_entry(m: np.ndarray):
    """A matrix as row-major [re, im] nested lists for JSON output."""
    m = np.asarray(m, dtype=complex)
    return [[[float(c.real), float(c.imag)] for c in row] for row in m]


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(c) for c in row])


def _cell(c):
    if isinstance(c, (np.floating, float)):
        return repr(float(c))
    if isinstance(c, (np.integer, int)):
        return int(c)
    return c


def ensure_outdir(out: str) -> str:
    os.makedirs(out, exist_ok=True)
    return out


def save_loglog_figure(path: str, taus, errors, slope: float | None,
                       title: str, ylabel: str = "error") -> None:
    """Log-log error-vs-tau plot with the fitted slope in the legend."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    taus = np.asarray(taus, dtype=float)
    errors = np.asarray(errors, dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    label = "error" if slope is None else f"error (slope {slope:.3f})"
    ax.loglog(taus, np.maximum(errors, 1e-300), "o-", label=label)
    if slope is not None and np.any(errors > 0):
        ref = errors.max() * (taus / taus.max()) ** 0.5
        ax.loglog(taus, ref, "--", color="gray", label="slope 1/2 reference")
    ax.set_xlabel("tau")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": "qrwt"})
    plt.close(fig)


def save_trajectory_figure(path: str, t_grid, series: dict[str, np.ndarray],
                           title: str) -> None:
    """Real/imaginary parts of matrix-element trajectories over the t grid."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4))
    for name, vals in series.items():
        vals = np.asarray(vals, dtype=complex)
        ax.plot(t_grid, vals.real, "-", label=f"{name} (re)")
        ax.plot(t_grid, vals.imag, "--", label=f"{name} (im)")
    ax.set_xlabel("t")
    ax.set_ylabel("matrix element")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": "qrwt"})
    plt.close(fig)
