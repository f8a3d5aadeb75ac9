"""Limit dynamics: cocycle matrix elements, the right driving equation,
Hudson-Parthasarathy certification, Hamiltonian-built generators,
Evans-Hudson generators and Lindblad extraction.

Block coordinates: Hamiltonian data lives on h tensor k0 / h tensor k0_perp
in the eigenbasis of the particle state; ambient operators on h tensor k are
assembled through the isometries id_h tensor (support / kernel eigenvectors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .condexp import CondExp
from .generators import (
    KIND_CONJUGATION,
    KIND_RIGHT_MULT,
    LimitGenerator,
    WalkGenerator,
    limit_generator,
    modify,
    walk_generator_conjugation,
    walk_generator_right_unitary,
)
from .gns import GnsData, ampliate_pi, delta_projections, p0_projections, slice_state0
from .linalg import (
    DimensionError,
    Superoperator,
    as_matrix,
    dagger,
    decap_exp,
    kron,
    require_hermitian,
    slice_op,
    vec,
    unvec,
)
from .walk import StepFunction, exp_inner

STRUCT_TOL = 1e-12


def _interval_cuts(f: StepFunction, g: StepFunction, t: float) -> list[float]:
    cuts = sorted({0.0, t, *(b for b in f.breakpoints if 0.0 < b < t),
                   *(b for b in g.breakpoints if 0.0 < b < t)})
    return cuts


def cocycle_matrix_element(lg: LimitGenerator, g: GnsData, a, u, v,
                           f: StepFunction, gf: StepFunction, t: float) -> complex:
    """<u eps(f), j_t(a) v eps(g)> via piecewise superoperator exponentials.

    On each interval where f and g are constant, the sliced family evolves
    by exp(dt psi^{x,y}); later intervals are applied innermost.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = as_matrix(a)
    dh = lg.dim_h
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    cuts = _interval_cuts(f, gf, t)
    b = vec(a)
    for lo, hi in reversed(list(zip(cuts, cuts[1:]))):
        mid = 0.5 * (lo + hi)
        xh = g.Omega + f.value_at(mid)
        yh = g.Omega + gf.value_at(mid)
        s = _sliced_psi(lg, xh, yh)
        b = scipy.linalg.expm((hi - lo) * s) @ b
    val = complex(np.vdot(u, unvec(b, (dh, dh)) @ v))
    return val * exp_inner(f, gf)


def _sliced_psi(lg: LimitGenerator, xh: np.ndarray, yh: np.ndarray) -> np.ndarray:
    dh = lg.dim_h
    cols = []
    for j in range(dh):
        for i in range(dh):
            e = np.zeros((dh, dh), dtype=complex)
            e[i, j] = 1.0
            cols.append(vec(slice_op(lg.psi(e), xh, yh, dh)))
    return np.column_stack(cols)


def hp_solve(g_mat: np.ndarray, g: GnsData, f: StepFunction, gf: StepFunction,
             t: float, dim_h: int | None = None) -> np.ndarray:
    """x_t = E^{eps(f)} X_t E_{eps(g)} for the right driving equation
    dX = dLambda_G X; piecewise matrix exponentials, later slices leftmost."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    g_mat = as_matrix(g_mat)
    if dim_h is None:
        dim_h = g_mat.shape[0] // g.khat_dim
    x = exp_inner(f, gf) * np.eye(dim_h, dtype=complex)
    cuts = _interval_cuts(f, gf, t)
    for lo, hi in zip(cuts, cuts[1:]):
        mid = 0.5 * (lo + hi)
        xh = g.Omega + f.value_at(mid)
        yh = g.Omega + gf.value_at(mid)
        gxy = slice_op(g_mat, xh, yh, dim_h)
        x = scipy.linalg.expm((hi - lo) * gxy) @ x
    return x


@dataclass(frozen=True)
class HpReport:
    """Algebraic certification of the driving process built from G."""

    residual_isometry: float        # ||G + G* + G* Delta G||
    residual_coisometry: float      # ||G + G* + G Delta G*||
    isometric: bool
    coisometric: bool
    unitary: bool
    block_residuals: dict | None = None   # from F, when supplied


def hp_check(g_mat: np.ndarray, g: GnsData, dim_h: int | None = None,
             f: np.ndarray | None = None, c: CondExp | None = None,
             tol: float = 1e-10) -> HpReport:
    """Evaluate the isometry/co-isometry conditions on G, and optionally the
    equivalent block conditions on F."""
    g_mat = as_matrix(g_mat)
    if dim_h is None:
        dim_h = g_mat.shape[0] // g.khat_dim
    delta, _ = delta_projections(g, dim_h)
    r_iso = float(np.linalg.norm(g_mat + dagger(g_mat) + dagger(g_mat) @ delta @ g_mat))
    r_co = float(np.linalg.norm(g_mat + dagger(g_mat) + g_mat @ delta @ dagger(g_mat)))
    blocks = None
    if f is not None:
        if c is None:
            raise ValueError("block conditions need the conditional expectation")
        blocks = _block_conditions(as_matrix(f), g, c, dim_h)
    return HpReport(
        residual_isometry=r_iso,
        residual_coisometry=r_co,
        isometric=r_iso <= tol,
        coisometric=r_co <= tol,
        unitary=r_iso <= tol and r_co <= tol,
        block_residuals=blocks,
    )


def _embeddings(g: GnsData, dim_h: int) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(dim_h)
    return kron(eye, g.k0_basis), kron(eye, g.kernel_basis)


def _block_conditions(f: np.ndarray, g: GnsData, c: CondExp, dim_h: int) -> dict:
    w0, w1 = _embeddings(g, dim_h)
    ab = dagger(w0) @ f @ w0
    a_blk = c.apply_E0(ab)
    b_blk = ab - a_blk
    c_blk = dagger(w0) @ f @ w1
    d_blk = dagger(w1) @ f @ w0
    e_blk = dagger(w1) @ f @ w1
    v_blk = e_blk + np.eye(e_blk.shape[0])
    eye_perp = np.eye(v_blk.shape[0])
    k_lhs = slice_state0(g, a_blk + dagger(a_blk))
    k_rhs = -slice_state0(g, dagger(b_blk) @ b_blk + dagger(d_blk) @ d_blk)
    return {
        "B_antihermitian": float(np.linalg.norm(b_blk + dagger(b_blk))),
        "C_plus_DstarV": float(np.linalg.norm(c_blk + dagger(d_blk) @ v_blk)),
        "K_balance": float(np.linalg.norm(k_lhs - k_rhs)),
        "V_isometric": float(np.linalg.norm(dagger(v_blk) @ v_blk - eye_perp)),
        "V_coisometric": float(np.linalg.norm(v_blk @ dagger(v_blk) - eye_perp)),
    }


def hp_proof_blocks(f: np.ndarray, g: GnsData, c: CondExp, dim_h: int):
    """The operators F1, F2, F3 reducing G + G* + G* Delta G to block form."""
    f = as_matrix(f)
    p0t, p0p = p0_projections(g, dim_h)
    ef = c.apply_E(f)
    epf = f - ef
    efs = c.apply_E(dagger(f))
    epfs = dagger(f) - efs
    f1 = c.apply_E(f + dagger(f) + epfs @ epf)
    f2 = p0t @ (c.apply_E_perp(f + dagger(f)) + epfs @ (p0p @ f @ p0p))
    f3 = p0p @ (f + dagger(f) + dagger(f) @ p0p @ f) @ p0p
    return f1, f2, f3


# ---------------------------------------------------------------------------
# Hamiltonian-built generators


@dataclass(frozen=True)
class HamiltonianSpec:
    """Blocks of the total Hamiltonian in support/kernel coordinates.

    The perturbation family, when present, is R(tau) = sqrt(tau) * (fixed
    blocks), which satisfies the smallness conditions by construction.
    """

    dim_h: int
    gns: GnsData
    cond: CondExp
    H_d: np.ndarray       # on h tensor k0, E0-diagonal, Hermitian
    H_o: np.ndarray       # on h tensor k0, E0-off-diagonal, Hermitian
    L: np.ndarray         # h tensor k0 -> h tensor k0_perp
    H_times: np.ndarray   # on h tensor k0_perp, Hermitian
    R00: np.ndarray | None = None
    R0x: np.ndarray | None = None
    Rxx: np.ndarray | None = None

    def __post_init__(self):
        g = self.gns
        d0 = self.dim_h * g.support_dim
        dx = self.dim_h * (g.dim_k - g.support_dim)
        require_hermitian(self.H_d)
        require_hermitian(self.H_o)
        require_hermitian(self.H_times)
        if self.H_d.shape != (d0, d0) or self.H_o.shape != (d0, d0):
            raise DimensionError("H_d / H_o must act on h tensor k0")
        if self.L.shape != (dx, d0):
            raise DimensionError(f"L shape {self.L.shape}, expected {(dx, d0)}")
        if self.H_times.shape != (dx, dx):
            raise DimensionError("H_times must act on h tensor k0_perp")
        c = self.cond
        if np.linalg.norm(c.apply_E0(self.H_d) - self.H_d) > STRUCT_TOL * max(1.0, np.linalg.norm(self.H_d)):
            raise ValueError("H_d must be E0-diagonal")
        if np.linalg.norm(c.apply_E0(self.H_o)) > STRUCT_TOL * max(1.0, np.linalg.norm(self.H_o)):
            raise ValueError("H_o must be E0-off-diagonal")
        if self.R00 is not None:
            require_hermitian(self.R00)
        if self.Rxx is not None:
            require_hermitian(self.Rxx)

    def total_hamiltonian(self, tau: float) -> np.ndarray:
        """The ambient Hamiltonian on h tensor k at step size tau."""
        if tau <= 0:
            raise ValueError("tau must be positive")
        g = self.gns
        w0, w1 = _embeddings(g, self.dim_h)
        rt = tau ** -0.5
        r00 = np.sqrt(tau) * self.R00 if self.R00 is not None else 0.0
        r0x = np.sqrt(tau) * self.R0x if self.R0x is not None else 0.0
        rxx = np.sqrt(tau) * self.Rxx if self.Rxx is not None else 0.0
        top = self.H_d + rt * self.H_o + r00
        off = self.L + r0x
        h = (w0 @ top @ dagger(w0)
             + rt * (w0 @ dagger(off) @ dagger(w1) + w1 @ off @ dagger(w0))
             + (1.0 / tau) * (w1 @ (self.H_times + rxx) @ dagger(w1)))
        return h

    def step_unitary(self, tau: float) -> np.ndarray:
        """exp(-i tau H(tau)) via the Hermitian eigendecomposition."""
        h = self.total_hamiltonian(tau)
        w, vmat = np.linalg.eigh(h)
        return (vmat * np.exp(-1j * tau * w)) @ dagger(vmat)

    def walk_generator(self, tau: float, kind: str) -> WalkGenerator:
        u = self.step_unitary(tau)
        if kind == KIND_RIGHT_MULT:
            return walk_generator_right_unitary(self.gns, self.dim_h, u)
        if kind == KIND_CONJUGATION:
            return walk_generator_conjugation(self.gns, self.dim_h, u)
        raise ValueError(f"unsupported walk kind {kind!r}")


def random_hamiltonian_spec(g: GnsData, c: CondExp, dim_h: int, seed: int,
                            with_r: bool = False,
                            scale: float = 1.0) -> HamiltonianSpec:
    """A seeded Hamiltonian block set with the required structure."""
    rng = np.random.default_rng(seed)
    d0 = dim_h * g.support_dim
    dx = dim_h * (g.dim_k - g.support_dim)

    def herm(d):
        m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return scale * 0.5 * (m + dagger(m))

    h_full = herm(d0)
    h_d = c.apply_E0(h_full)
    h_o = h_full - h_d
    l_blk = scale * (rng.standard_normal((dx, d0)) + 1j * rng.standard_normal((dx, d0)))
    h_x = herm(dx)
    r00 = r0x = rxx = None
    if with_r:
        r00 = herm(d0)
        r0x = scale * (rng.standard_normal((dx, d0)) + 1j * rng.standard_normal((dx, d0)))
        rxx = herm(dx)
    return HamiltonianSpec(dim_h=dim_h, gns=g, cond=c, H_d=h_d, H_o=h_o,
                           L=l_blk, H_times=h_x, R00=r00, R0x=r0x, Rxx=rxx)


@dataclass(frozen=True)
class HpBlocks:
    """The identified blocks of the limit factor F."""

    H_d_prime: np.ndarray
    H_o: np.ndarray
    K: np.ndarray
    D: np.ndarray
    V: np.ndarray


def f_from_hamiltonian(spec: HamiltonianSpec) -> tuple[np.ndarray, HpBlocks]:
    """The ambient limit factor F and its block data, via decapitated
    exponentials of the fast block."""
    g, c = spec.gns, spec.cond
    hx = spec.H_times
    e1 = decap_exp(1, hx)            # exp_1(-i H_times)
    e2 = decap_exp(2, hx)            # exp_2(-i H_times)
    e2c = decap_exp(2, -hx)          # exp_2(+i H_times)
    wx, vx = np.linalg.eigh(hx)
    v_fac = (vx * np.exp(-1j * wx)) @ dagger(vx)
    eye_x = np.eye(hx.shape[0])
    ls = dagger(spec.L)

    f00 = (-1j * (spec.H_d + spec.H_o)
           - c.apply_E0(0.5 * spec.H_o @ spec.H_o + ls @ e2 @ spec.L))
    f01 = -1j * ls @ e1
    f10 = -1j * e1 @ spec.L
    f11 = v_fac - eye_x

    w0, w1 = _embeddings(g, spec.dim_h)
    f = (w0 @ f00 @ dagger(w0) + w0 @ f01 @ dagger(w1)
         + w1 @ f10 @ dagger(w0) + w1 @ f11 @ dagger(w1))

    h_d_prime = spec.H_d - 0.5j * c.apply_E0(ls @ (e2 - e2c) @ spec.L)
    k_blk = c.apply_E0(spec.H_o @ spec.H_o + ls @ (e2 + e2c) @ spec.L)
    d_blk = -1j * e1 @ spec.L
    return f, HpBlocks(H_d_prime=h_d_prime, H_o=spec.H_o, K=k_blk, D=d_blk, V=v_fac)


def right_mult_seed(f: np.ndarray, g: GnsData, dim_h: int) -> Superoperator:
    """Psi(a) = (a tensor id) F as a superoperator."""
    f = as_matrix(f)
    eye = np.eye(g.dim_k)
    d = dim_h * g.dim_k

    def fn(a):
        return kron(a, eye) @ f

    return Superoperator.from_function(fn, dim_h, (d, d))


# ---------------------------------------------------------------------------
# Evans-Hudson generators


@dataclass(frozen=True)
class EhGenerator:
    """The Evans-Hudson limit data built from a factor F."""

    F: np.ndarray
    G: np.ndarray
    Psi: Superoperator
    limit: LimitGenerator
    gns: GnsData
    cond: CondExp

    def upsilon(self, a) -> np.ndarray:
        """The quadratic part of Psi."""
        return _upsilon(self.F, self.gns, self.cond, as_matrix(a))


def _upsilon(f: np.ndarray, g: GnsData, c: CondExp, a: np.ndarray) -> np.ndarray:
    dim_h = a.shape[0]
    eye_k = np.eye(g.dim_k)
    amp = kron(a, eye_k)
    _, p0p = p0_projections(g, dim_h)
    p0t = np.eye(p0p.shape[0]) - p0p
    epf = c.apply_E_perp(f)
    quad = dagger(f) @ p0p @ amp @ p0p @ f
    return (c.apply_E(dagger(epf) @ amp @ epf)
            + quad
            - p0t @ quad @ p0t)


def eh_generator(f: np.ndarray, g: GnsData, c: CondExp, dim_h: int,
                 tol: float = 1e-11) -> EhGenerator:
    """Build the Evans-Hudson seed Psi, the limit generator psi and the
    factor G, and verify psi(a) = (a ox 1)G + G*(a ox 1) + G* Delta (a ox 1) Delta G."""
    f = as_matrix(f)
    eye_k = np.eye(g.dim_k)

    def psi_seed(a):
        amp = kron(a, eye_k)
        return amp @ f + dagger(f) @ amp + _upsilon(f, g, c, a)

    d = dim_h * g.dim_k
    seed = Superoperator.from_function(psi_seed, dim_h, (d, d))
    lg = limit_generator(seed, g, c)
    # the factor G is the Delta-assembly of F alone
    g_factor = limit_generator(right_mult_seed(f, g, dim_h), g, c, f=f).G

    delta, _ = delta_projections(g, dim_h)
    eye_kh = np.eye(g.khat_dim)
    scale = max(1.0, np.linalg.norm(g_factor)) ** 2
    for i in range(dim_h):
        for j in range(dim_h):
            a = np.zeros((dim_h, dim_h), dtype=complex)
            a[i, j] = 1.0
            amp = kron(a, eye_kh)
            rhs = amp @ g_factor + dagger(g_factor) @ amp \
                + dagger(g_factor) @ delta @ amp @ delta @ g_factor
            dev = np.linalg.norm(lg.psi(a) - rhs)
            if dev > tol * scale:
                raise ValueError(f"Evans-Hudson identity violated (deviation {dev:.3e})")
    lg = LimitGenerator(psi=lg.psi, dim_h=dim_h, G=g_factor)
    return EhGenerator(F=f, G=g_factor, Psi=seed, limit=lg, gns=g, cond=c)


def lindblad(lg: LimitGenerator, g: GnsData) -> Superoperator:
    """The vacuum expectation L(a) = E^Omega psi(a) E_Omega."""
    dh = lg.dim_h

    def fn(a):
        return slice_op(lg.psi(a), g.Omega, g.Omega, dh)

    return Superoperator.from_function(fn, dh, (dh, dh))


def lindblad_closed_form(blocks: HpBlocks, g: GnsData, c: CondExp,
                         dim_h: int) -> Superoperator:
    """The explicit Lindblad form from the identified blocks of F."""
    k0 = g.support_dim
    kx = g.dim_k - k0
    s0_hd = slice_state0(g, blocks.H_d_prime)
    s0_dd = slice_state0(g, dagger(blocks.D) @ blocks.D)
    s0_ho2 = slice_state0(g, blocks.H_o @ blocks.H_o)

    def fn(a):
        amp0 = kron(a, np.eye(k0))
        ampx = kron(a, np.eye(kx))
        return (-1j * (a @ s0_hd - s0_hd @ a)
                - 0.5 * (a @ s0_dd + s0_dd @ a)
                + slice_state0(g, dagger(blocks.D) @ ampx @ blocks.D)
                - 0.5 * (a @ s0_ho2 + s0_ho2 @ a)
                + slice_state0(g, blocks.H_o @ amp0 @ blocks.H_o))

    return Superoperator.from_function(fn, dim_h, (dim_h, dim_h))


def generator_convergence(spec: HamiltonianSpec, kind: str,
                          tau_list) -> list[float]:
    """Distances of the modified walk generators to the limit seed over taus."""
    tau_list = list(tau_list)
    if not tau_list:
        raise ValueError("tau_list must be nonempty")
    g, c = spec.gns, spec.cond
    f, _ = f_from_hamiltonian(spec)
    if kind == KIND_RIGHT_MULT:
        psi_seed = right_mult_seed(f, g, spec.dim_h)
    elif kind == KIND_CONJUGATION:
        psi_seed = eh_generator(f, g, c, spec.dim_h).Psi
    else:
        raise ValueError(f"unsupported kind {kind!r}")
    out = []
    for tau in tau_list:
        w = spec.walk_generator(tau, kind)
        out.append(modify(w, tau, c).distance(psi_seed))
    return out


def loglog_slope(taus, errors, floor: float = 1e-13) -> float | None:
    """Least-squares slope of log error against log tau; None when flat."""
    taus = np.asarray(taus, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= floor):
        return None
    mask = errors > floor
    if mask.sum() < 2:
        return None
    return float(np.polyfit(np.log(taus[mask]), np.log(errors[mask]), 1)[0])
