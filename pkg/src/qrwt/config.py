"""Experiment configuration: JSON ingestion with field-level validation.

Complex scalars are written as plain numbers or [re, im] pairs; matrices are
row-major nested lists of such entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class ConfigError(Exception):
    """A configuration problem, carrying the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config field '{path}': {message}")


def parse_complex(value: Any, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(c, (int, float)) for c in value)):
        return complex(value[0], value[1])
    raise ConfigError(path, f"expected a number or [re, im] pair, got {value!r}")


def parse_vector(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a nonempty list")
    return np.array([parse_complex(v, f"{path}[{i}]") for i, v in enumerate(value)])


def parse_matrix(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a nonempty list of rows")
    rows = []
    width = None
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ConfigError(f"{path}[{i}]", "expected a list (matrix row)")
        parsed = [parse_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)]
        if width is None:
            width = len(parsed)
        elif len(parsed) != width:
            raise ConfigError(f"{path}[{i}]", "ragged matrix rows")
        rows.append(parsed)
    return np.array(rows)


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}{key}", "missing required field")
        return default
    return d[key]


@dataclass
class GeneratorSpec:
    """One of: a raw factor matrix, a Hamiltonian block set, or a kind tag."""

    kind: str                       # "raw-f", "hamiltonian"
    conjugation: bool = False
    F: np.ndarray | None = None
    H_d: np.ndarray | None = None
    H_o: np.ndarray | None = None
    L: np.ndarray | None = None
    H_times: np.ndarray | None = None
    R00: np.ndarray | None = None
    R0x: np.ndarray | None = None
    Rxx: np.ndarray | None = None
    seed: int | None = None


@dataclass
class ExperimentConfig:
    """All inputs for a run; every subcommand reads the subset it needs."""

    rho: np.ndarray | None = None
    blocks: list | None = None            # 1-based partition of support indices
    dim_h: int = 1
    generator: GeneratorSpec | None = None
    f_breakpoints: list[float] | None = None
    f_values: np.ndarray | None = None    # rows = interval values, mu coordinates
    g_breakpoints: list[float] | None = None
    g_values: np.ndarray | None = None
    observable: np.ndarray | None = None
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    tau_list: list[float] = field(default_factory=list)
    t_grid: list[float] = field(default_factory=list)
    seed: int = 0
    tol: float = 1e-10
    noise: dict | None = None             # {"N":..., "k":..., "l":...}
    lambdas: list[float] | None = None    # example preset weights
    params: dict | None = None            # example preset coefficients
    raw: dict = field(default_factory=dict)


def _parse_generator(d: dict, path: str) -> GeneratorSpec:
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    kind = _get(d, "kind", f"{path}.", required=True)
    conj = bool(d.get("conjugation", False))
    if kind == "raw-f":
        return GeneratorSpec(kind=kind, conjugation=conj,
                             F=parse_matrix(_get(d, "F", f"{path}."), f"{path}.F"))
    if kind == "hamiltonian":
        if "seed" in d and "H_d" not in d:
            return GeneratorSpec(kind=kind, conjugation=conj, seed=int(d["seed"]))
        gs = GeneratorSpec(
            kind=kind, conjugation=conj,
            H_d=parse_matrix(_get(d, "H_d", f"{path}."), f"{path}.H_d"),
            H_o=parse_matrix(_get(d, "H_o", f"{path}."), f"{path}.H_o"),
            L=parse_matrix(_get(d, "L", f"{path}."), f"{path}.L"),
            H_times=parse_matrix(_get(d, "H_times", f"{path}."), f"{path}.H_times"),
        )
        for key in ("R00", "R0x", "Rxx"):
            if key in d:
                object.__setattr__(gs, key, parse_matrix(d[key], f"{path}.{key}"))
        return gs
    raise ConfigError(f"{path}.kind", f"unknown generator kind {kind!r}")


def _parse_step(d: dict, name: str) -> tuple[list[float], np.ndarray]:
    bp = _get(d, "breakpoints", f"{name}.")
    vals = _get(d, "values", f"{name}.")
    if not isinstance(bp, list) or not all(isinstance(b, (int, float)) for b in bp):
        raise ConfigError(f"{name}.breakpoints", "expected a list of numbers")
    return [float(b) for b in bp], parse_matrix(vals, f"{name}.values")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(path, f"cannot read file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    cfg = ExperimentConfig(raw=raw)

    if "rho" in raw:
        cfg.rho = parse_matrix(raw["rho"], "rho")
    if "blocks" in raw:
        blocks = raw["blocks"]
        if (not isinstance(blocks, list)
                or not all(isinstance(b, list) and b
                           and all(isinstance(i, int) for i in b) for b in blocks)):
            raise ConfigError("blocks", "expected a list of lists of 1-based indices")
        cfg.blocks = blocks
    if "dim_h" in raw:
        if not isinstance(raw["dim_h"], int) or raw["dim_h"] < 1:
            raise ConfigError("dim_h", "expected a positive integer")
        cfg.dim_h = raw["dim_h"]
    if "generator" in raw:
        cfg.generator = _parse_generator(raw["generator"], "generator")
    if "f" in raw:
        cfg.f_breakpoints, cfg.f_values = _parse_step(raw["f"], "f")
    if "g" in raw:
        cfg.g_breakpoints, cfg.g_values = _parse_step(raw["g"], "g")
    if "observable" in raw:
        cfg.observable = parse_matrix(raw["observable"], "observable")
    if "u" in raw:
        cfg.u = parse_vector(raw["u"], "u")
    if "v" in raw:
        cfg.v = parse_vector(raw["v"], "v")
    if "tau_list" in raw:
        taus = raw["tau_list"]
        if (not isinstance(taus, list) or not taus
                or not all(isinstance(t, (int, float)) and t > 0 for t in taus)):
            raise ConfigError("tau_list", "expected a nonempty list of positive numbers")
        if any(b >= a for a, b in zip(taus, taus[1:])):
            raise ConfigError("tau_list", "expected strictly decreasing values")
        cfg.tau_list = [float(t) for t in taus]
    if "t_grid" in raw:
        ts = raw["t_grid"]
        if (not isinstance(ts, list)
                or not all(isinstance(t, (int, float)) and t >= 0 for t in ts)):
            raise ConfigError("t_grid", "expected a list of nonnegative numbers")
        cfg.t_grid = [float(t) for t in ts]
    if "seed" in raw:
        if not isinstance(raw["seed"], int) or raw["seed"] < 0:
            raise ConfigError("seed", "expected a nonnegative integer")
        cfg.seed = raw["seed"]
    if "tol" in raw:
        if not isinstance(raw["tol"], (int, float)) or raw["tol"] <= 0:
            raise ConfigError("tol", "expected a positive number")
        cfg.tol = float(raw["tol"])
    if "noise" in raw:
        noise = raw["noise"]
        if (not isinstance(noise, dict)
                or not all(k in noise and isinstance(noise[k], int)
                           for k in ("N", "k", "l"))):
            raise ConfigError("noise", "expected an object with integer N, k, l")
        cfg.noise = noise
    if "lambdas" in raw:
        lams = raw["lambdas"]
        if (not isinstance(lams, list) or len(lams) != 2
                or not all(isinstance(x, (int, float)) and 0 < x < 1 for x in lams)
                or abs(sum(lams) - 1.0) > 1e-12):
            raise ConfigError("lambdas", "expected two weights in (0,1) summing to 1")
        cfg.lambdas = [float(x) for x in lams]
    if "params" in raw:
        params = raw["params"]
        if not isinstance(params, dict):
            raise ConfigError("params", "expected an object")
        parsed = {}
        for key, val in params.items():
            if key not in ("b", "c", "g", "l", "m", "h"):
                raise ConfigError(f"params.{key}", "unknown coefficient")
            parsed[key] = parse_complex(val, f"params.{key}")
        cfg.params = parsed
    return cfg
