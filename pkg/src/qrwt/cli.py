"""Command-line entry point: experiment orchestration and report emission.

Exit codes: 0 pass, 1 tolerance/certification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import report
from .cocycle import (
    HamiltonianSpec,
    cocycle_matrix_element,
    eh_generator,
    f_from_hamiltonian,
    generator_convergence,
    hp_check,
    lindblad,
    lindblad_closed_form,
    loglog_slope,
    random_hamiltonian_spec,
    right_mult_seed,
)
from .condexp import build_cond_exp, choi_matrix
from .config import ConfigError, ExperimentConfig, load_config
from .generators import (
    KIND_CONJUGATION,
    KIND_RIGHT_MULT,
    effective_noise_count,
    inverse_modify,
    limit_generator,
    noise_bound,
    walk_generator_from_superop,
)
from .gns import build_gns
from .linalg import DimensionError, slice_op
from .walk import WalkRun, step_function, walk_matrix_element, zero_step_function

SUBCOMMANDS = ("gns", "noise-count", "limit-gen", "check-hp", "simulate",
               "converge", "lindblad", "example-c3")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qrwt",
        description="Thermalisation limits of embedded quantum random walks: "
                    "GNS data, limit generators, certification and simulation.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--out", default=".", help="output directory for reports")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for sweeps (default: QRWT_THREADS or 1)")
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("QRWT_THREADS", "1"))
    if threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed

    out = report.ensure_outdir(args.out)
    handler = _HANDLERS[args.subcommand]
    started = time.perf_counter()
    try:
        code = handler(cfg, out, threads)
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.subcommand}: finished in {time.perf_counter() - started:.2f} s "
          f"(exit {code})")
    return code


# ---------------------------------------------------------------------------
# shared setup


def _require(cfg: ExperimentConfig, *names: str):
    for name in names:
        if getattr(cfg, name, None) is None:
            raise ConfigError(name, "required by this subcommand")


def _build_context(cfg: ExperimentConfig):
    _require(cfg, "rho")
    g = build_gns(cfg.rho)
    blocks = cfg.blocks
    if blocks is None:
        blocks = [[i + 1] for i in range(g.support_dim)]
    c = build_cond_exp(g, blocks)
    return g, c


def _build_spec(cfg: ExperimentConfig, g, c) -> HamiltonianSpec:
    gen = cfg.generator
    if gen is None or gen.kind != "hamiltonian":
        raise ConfigError("generator", "a Hamiltonian generator spec is required")
    if gen.seed is not None:
        return random_hamiltonian_spec(g, c, cfg.dim_h, gen.seed)
    return HamiltonianSpec(dim_h=cfg.dim_h, gns=g, cond=c,
                           H_d=gen.H_d, H_o=gen.H_o, L=gen.L, H_times=gen.H_times,
                           R00=gen.R00, R0x=gen.R0x, Rxx=gen.Rxx)


def _limit_from_config(cfg: ExperimentConfig, g, c):
    """(limit generator, walk kind, F) from the generator section."""
    gen = cfg.generator
    if gen is None:
        raise ConfigError("generator", "required by this subcommand")
    if gen.kind == "raw-f":
        f = gen.F
        if f.shape != (cfg.dim_h * g.dim_k,) * 2:
            raise ConfigError("generator.F", "dimension inconsistent with dim_h * k")
        lg = limit_generator(right_mult_seed(f, g, cfg.dim_h), g, c, f=f)
        return lg, KIND_RIGHT_MULT, f
    spec = _build_spec(cfg, g, c)
    f, _ = f_from_hamiltonian(spec)
    if gen.conjugation:
        return eh_generator(f, g, c, cfg.dim_h).limit, KIND_CONJUGATION, f
    return limit_generator(right_mult_seed(f, g, cfg.dim_h), g, c, f=f), KIND_RIGHT_MULT, f


def _step_from_config(breakpoints, values, g):
    """A step function from per-interval coefficient rows in mu coordinates."""
    if breakpoints is None:
        return zero_step_function(g.khat_dim)
    if values.shape[1] != g.mu_basis.shape[1]:
        raise ConfigError("f/g values", f"expected {g.mu_basis.shape[1]} mu coordinates")
    vals = [g.mu_basis @ row for row in values]
    return step_function(breakpoints, vals, g)


# ---------------------------------------------------------------------------
# subcommands


def _run_gns(cfg: ExperimentConfig, out: str, threads: int) -> int:
    g, c = _build_context(cfg)
    gram = g.mu_basis.conj().T @ g.mu_basis
    payload = {
        "dim_k": g.dim_k,
        "support_dim": g.support_dim,
        "khat_dim": g.khat_dim,
        "eigenvalues": g.state.eigenvalues,
        "omega": [[float(z.real), float(z.imag)] for z in g.Omega],
        "mu_dim": g.mu_basis.shape[1],
        "mu_orthonormality_residual": float(
            np.linalg.norm(gram - np.eye(g.mu_basis.shape[1]))),
        "pinching_blocks": [list(b) for b in c.blocks],
        "rank_l": c.rank_l,
    }
    report.write_json(os.path.join(out, "gns.json"), payload)
    return 0


def _run_noise_count(cfg: ExperimentConfig, out: str, threads: int) -> int:
    _require(cfg, "noise")
    n, k, l = cfg.noise["N"], cfg.noise["k"], cfg.noise["l"]
    bound = noise_bound(n, k, l)
    vector_max = n * n * k * k - 1
    payload = {
        "N": n, "k": k, "l": l,
        "bound": bound,
        "vector_state_max": vector_max,
        "achieves_vector_state_max": bound == vector_max,
        "thermalises": bound < vector_max,
    }
    report.write_json(os.path.join(out, "noise_count.json"), payload)
    return 0


def _run_limit_gen(cfg: ExperimentConfig, out: str, threads: int) -> int:
    g, c = _build_context(cfg)
    lg, kind, f = _limit_from_config(cfg, g, c)
    count = effective_noise_count(lg, g, c, seed=cfg.seed)
    bound = noise_bound(g.dim_k, g.support_dim, c.rank_l)
    payload = {
        "walk_kind": kind,
        "dim_h": cfg.dim_h,
        "psi_norm": lg.psi.norm(),
        "multiplication_form": lg.G is not None,
        "effective_noise_count": count,
        "noise_bound": bound,
        "within_bound": count <= bound,
    }
    if lg.G is not None:
        payload["G"] = report.matrix_entry(lg.G)
    report.write_json(os.path.join(out, "limit_gen.json"), payload)
    return 0 if count <= bound else 1


def _run_check_hp(cfg: ExperimentConfig, out: str, threads: int) -> int:
    g, c = _build_context(cfg)
    lg, _, f = _limit_from_config(cfg, g, c)
    if lg.G is None:
        raise ConfigError("generator", "certification needs a multiplication-form limit")
    rep = hp_check(lg.G, g, cfg.dim_h, f=f, c=c, tol=cfg.tol)
    payload = {
        "residual_isometry": rep.residual_isometry,
        "residual_coisometry": rep.residual_coisometry,
        "isometric": rep.isometric,
        "coisometric": rep.coisometric,
        "unitary": rep.unitary,
        "block_residuals": rep.block_residuals,
    }
    report.write_json(os.path.join(out, "hp_check.json"), payload)
    return 0 if rep.unitary else 1


def _fixtures(cfg: ExperimentConfig, g):
    dh = cfg.dim_h
    a = cfg.observable if cfg.observable is not None else np.eye(dh, dtype=complex)
    u = cfg.u if cfg.u is not None else _unit(dh)
    v = cfg.v if cfg.v is not None else _unit(dh)
    f_sf = _step_from_config(cfg.f_breakpoints, cfg.f_values, g)
    g_sf = _step_from_config(cfg.g_breakpoints, cfg.g_values, g)
    return a, u, v, f_sf, g_sf


def _unit(d):
    e = np.zeros(d, dtype=complex)
    e[0] = 1.0
    return e


def _run_simulate(cfg: ExperimentConfig, out: str, threads: int) -> int:
    g, c = _build_context(cfg)
    lg, kind, _ = _limit_from_config(cfg, g, c)
    a, u, v, f_sf, g_sf = _fixtures(cfg, g)
    t_grid = cfg.t_grid or [0.25, 0.5, 0.75, 1.0]
    taus = cfg.tau_list or [2.0 ** -p for p in range(2, 7)]
    spec = _build_spec(cfg, g, c) if cfg.generator.kind == "hamiltonian" else None

    limit_vals = [cocycle_matrix_element(lg, g, a, u, v, f_sf, g_sf, t)
                  for t in t_grid]

    def one_tau(tau):
        if spec is not None:
            w = spec.walk_generator(tau, kind)
        else:
            phi = inverse_modify(right_mult_seed(cfg.generator.F, g, cfg.dim_h),
                                 tau, g, c)
            w = walk_generator_from_superop(g, cfg.dim_h, phi)
        run = WalkRun(generator=w, gns=g, tau=tau, horizon=max(t_grid))
        return [walk_matrix_element(run, a, u, v, f_sf, g_sf, t) for t in t_grid]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        walk_vals = list(pool.map(one_tau, taus))

    rows = []
    series = {"limit": np.array(limit_vals)}
    for t, z in zip(t_grid, limit_vals):
        rows.append([0.0, t, z.real, z.imag, 0.0])
    for tau, vals in zip(taus, walk_vals):
        series[f"tau={tau:g}"] = np.array(vals)
        for t, z, zl in zip(t_grid, vals, limit_vals):
            rows.append([tau, t, z.real, z.imag, abs(z - zl)])
    report.write_csv(os.path.join(out, "simulate.csv"),
                     ["tau", "t", "re", "im", "abs_err"], rows)
    report.save_trajectory_figure(os.path.join(out, "simulate.png"), t_grid, series,
                                  "walk vs limit matrix elements")
    return 0


def _run_converge(cfg: ExperimentConfig, out: str, threads: int) -> int:
    g, c = _build_context(cfg)
    lg, kind, _ = _limit_from_config(cfg, g, c)
    a, u, v, f_sf, g_sf = _fixtures(cfg, g)
    t = cfg.t_grid[-1] if cfg.t_grid else 1.0
    taus = cfg.tau_list or [2.0 ** -p for p in range(2, 10)]
    spec = _build_spec(cfg, g, c) if cfg.generator.kind == "hamiltonian" else None

    limit_val = cocycle_matrix_element(lg, g, a, u, v, f_sf, g_sf, t)

    def one_tau(tau):
        if spec is not None:
            w = spec.walk_generator(tau, kind)
        else:
            phi = inverse_modify(right_mult_seed(cfg.generator.F, g, cfg.dim_h),
                                 tau, g, c)
            w = walk_generator_from_superop(g, cfg.dim_h, phi)
        run = WalkRun(generator=w, gns=g, tau=tau, horizon=t)
        return walk_matrix_element(run, a, u, v, f_sf, g_sf, t)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        walk_vals = list(pool.map(one_tau, taus))

    errors = [abs(z - limit_val) for z in walk_vals]
    slope = loglog_slope(taus, errors)
    rows = [[tau, t, z.real, z.imag, e] for tau, z, e in zip(taus, walk_vals, errors)]
    report.write_csv(os.path.join(out, "converge.csv"),
                     ["tau", "t", "re", "im", "abs_err"], rows)
    flat = all(e <= 1e-12 for e in errors)
    payload = {
        "t": t,
        "limit_value": [limit_val.real, limit_val.imag],
        "taus": taus,
        "errors": errors,
        "slope": slope if slope is not None else "flat",
        "passed": flat or (slope is not None and slope >= 0.4),
    }
    report.write_json(os.path.join(out, "converge.json"), payload)
    report.save_loglog_figure(os.path.join(out, "converge.png"), taus, errors, slope,
                              "walk-to-cocycle convergence", "|walk ME - limit ME|")
    return 0 if payload["passed"] else 1


def _run_lindblad(cfg: ExperimentConfig, out: str, threads: int) -> int:
    g, c = _build_context(cfg)
    spec = _build_spec(cfg, g, c)
    f, blocks = f_from_hamiltonian(spec)
    eh = eh_generator(f, g, c, cfg.dim_h)
    lsup = lindblad(eh.limit, g)
    closed = lindblad_closed_form(blocks, g, c, cfg.dim_h)
    scale = max(1.0, lsup.norm())
    residual = lsup.distance(closed) / scale
    unit_norm = float(np.linalg.norm(lsup(np.eye(cfg.dim_h)))) / scale
    choi_mins = {}
    for t in (0.1, 1.0):
        choi_mins[str(t)] = float(np.linalg.eigvalsh(choi_matrix(lsup.expm(t))).min())
    ok = (residual <= cfg.tol and unit_norm <= 1e-11
          and all(m >= -1e-8 for m in choi_mins.values()))
    payload = {
        "closed_form_residual": residual,
        "unital_residual": unit_norm,
        "choi_min_eigenvalues": choi_mins,
        "lindblad_matrix": report.matrix_entry(lsup.matrix),
        "passed": ok,
    }
    report.write_json(os.path.join(out, "lindblad.json"), payload)
    return 0 if ok else 1


def _run_example_c3(cfg: ExperimentConfig, out: str, threads: int) -> int:
    lam1, lam2 = cfg.lambdas if cfg.lambdas else (0.7, 0.3)
    if lam1 <= lam2:
        # the displayed basis assumes the eigenvalue order matches e1, e2
        raise ConfigError("lambdas", "expected lambda1 > lambda2")
    params = dict(cfg.params or {})
    rng = np.random.default_rng(cfg.seed)
    for key in ("b", "c", "h"):
        if key not in params:
            params[key] = complex(rng.standard_normal())
        elif abs(params[key].imag) > 1e-12:
            raise ConfigError(f"params.{key}", "must be real (self-adjoint coefficient)")
    for key in ("g", "l", "m"):
        if key not in params:
            params[key] = complex(rng.standard_normal(), rng.standard_normal())
    b, cc, gg = params["b"], params["c"], params["g"]
    ll, mm, hh = params["l"], params["m"], params["h"]

    rho = np.diag([lam1, lam2, 0.0]).astype(complex)
    g = build_gns(rho)
    c = build_cond_exp(g, [[1], [2]])
    spec = HamiltonianSpec(
        dim_h=1, gns=g, cond=c,
        H_d=np.array([[b, 0], [0, cc]]),
        H_o=np.array([[0, np.conj(gg)], [gg, 0]]),
        L=np.array([[ll, mm]]),
        H_times=np.array([[hh]]),
    )
    f, _ = f_from_hamiltonian(spec)

    # the closed-form 3x3 entries of F
    e1 = _scalar_decap(1, hh)
    e2 = _scalar_decap(2, hh)
    f_display = np.array([
        [-1j * b - 0.5 * np.conj(gg) * gg - np.conj(ll) * e2 * ll,
         -1j * np.conj(gg), -1j * np.conj(ll) * e1],
        [-1j * gg, -1j * cc - 0.5 * np.conj(gg) * gg - np.conj(mm) * e2 * mm,
         -1j * np.conj(mm) * e1],
        [-1j * e1 * ll, -1j * e1 * mm, np.exp(-1j * hh.real) - 1.0],
    ])
    f_residual = float(np.linalg.norm(f - f_display))

    lg = limit_generator(right_mult_seed(f, g, 1), g, c, f=f)
    a = complex(rng.standard_normal(), rng.standard_normal())
    a_mat = np.array([[a]])
    psi_a = lg.psi(a_mat)

    def bra(i, j):
        # [f_ij] = e_i tensor conj(e_j), khat coordinates (i std, j eigen)
        vec6 = np.zeros(6, dtype=complex)
        vec6[(i - 1) * 2 + (j - 1)] = 1.0
        return vec6

    lam = {1: lam1, 2: lam2}
    residuals = {}
    residuals["vacuum_slice"] = abs(
        slice_op(psi_a, g.Omega, g.Omega, 1)[0, 0]
        - a * (lam1 * f_display[0, 0] + lam2 * f_display[1, 1]))
    pairs = [(1, 2), (2, 1), (3, 1), (3, 2)]
    residuals["creation_slices"] = max(
        abs(slice_op(psi_a, bra(i, j), g.Omega, 1)[0, 0]
            - np.sqrt(lam[j]) * a * f_display[i - 1, j - 1])
        for i, j in pairs)
    residuals["annihilation_slices"] = max(
        abs(slice_op(psi_a, g.Omega, bra(i, j), 1)[0, 0]
            - np.sqrt(lam[j]) * a * f_display[j - 1, i - 1])
        for i, j in pairs)
    residuals["gauge_slices"] = max(
        abs(slice_op(psi_a, bra(3, k), bra(3, l), 1)[0, 0]
            - (1.0 if k == l else 0.0) * a * f_display[2, 2])
        for k in (1, 2) for l in (1, 2))

    count = effective_noise_count(lg, g, c, seed=cfg.seed)
    bound = noise_bound(3, 2, 2)
    ok = (f_residual <= cfg.tol and all(r <= cfg.tol for r in residuals.values())
          and count == 10 and bound == 12)
    payload = {
        "lambdas": [lam1, lam2],
        "params": {k: [z.real, z.imag] for k, z in sorted(params.items())},
        "F_display_residual": f_residual,
        "slice_residuals": {k: float(r) for k, r in residuals.items()},
        "effective_noise_count": count,
        "noise_bound": bound,
        "passed": ok,
    }
    report.write_json(os.path.join(out, "example_c3.json"), payload)
    return 0 if ok else 1


def _scalar_decap(order: int, h: complex) -> complex:
    from .linalg import decap_exp
    return complex(decap_exp(order, -1j * h.real))


_HANDLERS = {
    "gns": _run_gns,
    "noise-count": _run_noise_count,
    "limit-gen": _run_limit_gen,
    "check-hp": _run_check_hp,
    "simulate": _run_simulate,
    "converge": _run_converge,
    "lindblad": _run_lindblad,
    "example-c3": _run_example_c3,
}


if __name__ == "__main__":
    sys.exit(main())
