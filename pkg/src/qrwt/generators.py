"""Modification maps, the limit-generator construction, and noise counting.

The modification rescales a walk generator blockwise relative to the support
decomposition k = k0 + k0_perp: the faithful-state regime (1/tau on the range
of the conditional expectation, 1/sqrt(tau) off it) on the support corner,
the vector-state regime elsewhere.  Its tau -> 0 limit feeds the cocycle
generator on the enlarged space h tensor khat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .condexp import CondExp
from .gns import GnsData, ampliate_pi, delta_projections, p0_projections
from .linalg import DimensionError, Superoperator, as_matrix, dagger, kron, slice_op

KIND_RAW_MATRIX = "raw-matrix"
KIND_RIGHT_MULT = "hamiltonian-right-multiplication"
KIND_CONJUGATION = "hamiltonian-conjugation"
KIND_SUPEROP = "explicit-superoperator"


@dataclass(frozen=True)
class WalkGenerator:
    """A walk generator phi: B(h) -> B(h tensor k) with its construction tag."""

    dim_h: int
    gns: GnsData
    phi: Superoperator
    kind: str
    F: np.ndarray | None = None          # right-multiplication factor, if any
    unitary: np.ndarray | None = None    # per-step unitary for hamiltonian kinds

    def phi_of(self, a) -> np.ndarray:
        return self.phi(a)

    def phi_prime(self, a) -> np.ndarray:
        a = as_matrix(a)
        return self.phi(a) - kron(a, np.eye(self.gns.dim_k))


def walk_generator_from_matrix(g: GnsData, dim_h: int, f,
                               kind: str = KIND_RAW_MATRIX) -> WalkGenerator:
    """phi(a) = (a tensor id) F for a fixed matrix F on h tensor k."""
    f = as_matrix(f)
    d = dim_h * g.dim_k
    if f.shape != (d, d):
        raise DimensionError(f"F shape {f.shape}, expected {(d, d)}")
    eye = np.eye(g.dim_k)

    def fn(a):
        return kron(a, eye) @ f

    phi = Superoperator.from_function(fn, dim_h, (d, d))
    return WalkGenerator(dim_h=dim_h, gns=g, phi=phi, kind=kind, F=f)


def walk_generator_right_unitary(g: GnsData, dim_h: int, u) -> WalkGenerator:
    """phi(a) = (a tensor id) U for a per-step unitary U."""
    w = walk_generator_from_matrix(g, dim_h, u, kind=KIND_RIGHT_MULT)
    return WalkGenerator(dim_h=dim_h, gns=g, phi=w.phi, kind=KIND_RIGHT_MULT,
                         F=w.F, unitary=as_matrix(u))


def walk_generator_conjugation(g: GnsData, dim_h: int, u) -> WalkGenerator:
    """phi(a) = U* (a tensor id) U for a per-step unitary U."""
    u = as_matrix(u)
    d = dim_h * g.dim_k
    if u.shape != (d, d):
        raise DimensionError(f"U shape {u.shape}, expected {(d, d)}")
    eye = np.eye(g.dim_k)
    ustar = dagger(u)

    def fn(a):
        return ustar @ kron(a, eye) @ u

    phi = Superoperator.from_function(fn, dim_h, (d, d))
    return WalkGenerator(dim_h=dim_h, gns=g, phi=phi, kind=KIND_CONJUGATION,
                         unitary=u)


def walk_generator_from_superop(g: GnsData, dim_h: int, phi: Superoperator) -> WalkGenerator:
    d = dim_h * g.dim_k
    if phi.in_dim != dim_h or phi.out_shape != (d, d):
        raise DimensionError("superoperator shape inconsistent with dims")
    return WalkGenerator(dim_h=dim_h, gns=g, phi=phi, kind=KIND_SUPEROP)


def modify(w: WalkGenerator, tau: float, c: CondExp) -> Superoperator:
    """The blockwise tau-rescaling of phi - id whose limit is the cocycle seed."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    g, dh = w.gns, w.dim_h
    n = g.dim_k
    p0t, p0p = p0_projections(g, dh)
    eye = np.eye(n)
    rt = tau ** -0.5

    def fn(a):
        phi_a = w.phi(a)
        phi_p = phi_a - kron(a, eye)
        mid = rt * phi_p + (1.0 / tau - rt) * c.apply_E(phi_p)
        return (p0t @ mid @ p0t
                + rt * (p0t @ phi_a @ p0p + p0p @ phi_a @ p0t)
                + p0p @ phi_p @ p0p)

    return Superoperator.from_function(fn, dh, (dh * n, dh * n))


def modify_vacuum(phi_hat: Superoperator, tau: float, g: GnsData) -> Superoperator:
    """Vector-state modification on the enlarged space: conjugation of
    phi_hat(a) - a tensor id by (Delta + Delta_perp / sqrt(tau))."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    dh = phi_hat.in_dim
    khat = g.khat_dim
    if phi_hat.out_shape != (dh * khat, dh * khat):
        raise DimensionError("phi_hat must map into B(h tensor khat)")
    delta, delta_perp = delta_projections(g, dh)
    scale = delta + (tau ** -0.5) * delta_perp
    eye = np.eye(khat)

    def fn(a):
        return scale @ (phi_hat(a) - kron(a, eye)) @ scale

    return Superoperator.from_function(fn, dh, phi_hat.out_shape)


def inverse_modify(psi_seed: Superoperator, tau: float, g: GnsData,
                   c: CondExp) -> Superoperator:
    """The walk generator phi whose modification equals psi_seed exactly.

    Inverts the blockwise rescaling: phi'(a) = tau E(S) + sqrt(tau)(S - E(S)
    - perp-corner(S)) + perp-corner(S) for S = psi_seed(a), phi = id + phi'.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    dh = psi_seed.in_dim
    n = g.dim_k
    if psi_seed.out_shape != (dh * n, dh * n):
        raise DimensionError("seed must map B(h) into B(h tensor k)")
    _, p0p = p0_projections(g, dh)
    eye = np.eye(n)
    rt = tau ** 0.5

    def fn(a):
        s = psi_seed(a)
        es = c.apply_E(s)
        perp = p0p @ s @ p0p
        return kron(a, eye) + tau * es + rt * (s - es - perp) + perp

    return Superoperator.from_function(fn, dh, (dh * n, dh * n))


def check_cruc(w: WalkGenerator, tau: float, c: CondExp) -> float:
    """Residual of the exact unscaling identity
    (tau E + sqrt(tau) E_perp)(f_tau(a)) = phi'(a) + (sqrt(tau)-1) P_perp phi'(a) P_perp,
    maximized over a basis of B(h)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    g, dh = w.gns, w.dim_h
    _, p0p = p0_projections(g, dh)
    f_mod = modify(w, tau, c)
    rt = tau ** 0.5
    worst = 0.0
    for i in range(dh):
        for j in range(dh):
            a = np.zeros((dh, dh), dtype=complex)
            a[i, j] = 1.0
            m = f_mod(a)
            lhs = rt * m + (tau - rt) * c.apply_E(m)
            pp = w.phi_prime(a)
            rhs = pp + (rt - 1.0) * (p0p @ pp @ p0p)
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


@dataclass(frozen=True)
class LimitGenerator:
    """The cocycle generator psi on B(h) -> B(h tensor khat), with its
    right-multiplication factor G when the input had multiplication form."""

    psi: Superoperator
    dim_h: int
    G: np.ndarray | None = None


def limit_generator(psi_seed: Superoperator, g: GnsData, c: CondExp,
                    f: np.ndarray | None = None,
                    mult_tol: float = 1e-12) -> LimitGenerator:
    """Assemble psi from the limit map Psi: B(h) -> B(h tensor k).

    If F with Psi(a) = (a tensor id) F is supplied, the corresponding factor G
    is emitted and the multiplication form of psi is verified.
    """
    dh = psi_seed.in_dim
    n = g.dim_k
    if psi_seed.out_shape != (dh * n, dh * n):
        raise DimensionError("Psi must map B(h) into B(h tensor k)")
    delta, delta_perp = delta_projections(g, dh)
    _, p0p = p0_projections(g, dh)

    def assemble(t):
        ept = c.apply_E_perp(t)
        pt = ampliate_pi(g, t)
        pept = ampliate_pi(g, ept)
        pcorner = ampliate_pi(g, p0p @ t @ p0p)
        return (delta_perp @ pt @ delta_perp
                + delta_perp @ pept @ delta
                + delta @ pept @ delta_perp
                + delta @ pcorner @ delta)

    def psi_fn(a):
        return assemble(psi_seed(a))

    dkh = dh * g.khat_dim
    psi = Superoperator.from_function(psi_fn, dh, (dkh, dkh))

    g_factor = None
    if f is not None:
        f = as_matrix(f)
        g_factor = assemble(f)
        eye = np.eye(g.khat_dim)
        for i in range(dh):
            for j in range(dh):
                a = np.zeros((dh, dh), dtype=complex)
                a[i, j] = 1.0
                dev = np.linalg.norm(psi(a) - kron(a, eye) @ g_factor)
                if dev > mult_tol * max(1.0, np.linalg.norm(g_factor)):
                    raise ValueError(
                        f"psi does not have multiplication form (deviation {dev:.3e})"
                    )
    return LimitGenerator(psi=psi, dim_h=dh, G=g_factor)


def noise_bound(n: int, k: int, l: int) -> int:
    """Upper bound 2(Nk - l) + (N - k)^2 k^2 on the independent noise count."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={n}")
    if not 1 <= l <= k * k:
        raise ValueError(f"need 1 <= l <= k^2, got l={l}, k={k}")
    return 2 * (n * k - l) + (n - k) ** 2 * k ** 2


def effective_noise_count(lg: LimitGenerator, g: GnsData, c: CondExp,
                          trials: int = 8, seed: int = 0,
                          rel_tol: float = 1e-9) -> int:
    """Count noise directions with nonvanishing coefficient blocks of psi(a).

    Directions are the (Omega, f) and (f, Omega) pairs over the canonical mu
    basis plus all gauge pairs (f, f'); a direction counts when its slice has
    Frobenius norm above rel_tol times the norm of psi(a) for some sampled a.
    The maximum count over the sampled a is returned.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    dh = lg.dim_h
    mu = g.mu_basis
    nmu = mu.shape[1]
    best = 0
    for _ in range(trials):
        a = rng.standard_normal((dh, dh)) + 1j * rng.standard_normal((dh, dh))
        psi_a = lg.psi(a)
        scale = rel_tol * max(np.linalg.norm(psi_a), 1e-300)
        count = 0
        for m in range(nmu):
            if np.linalg.norm(slice_op(psi_a, g.Omega, mu[:, m], dh)) > scale:
                count += 1
            if np.linalg.norm(slice_op(psi_a, mu[:, m], g.Omega, dh)) > scale:
                count += 1
        for m in range(nmu):
            for m2 in range(nmu):
                if np.linalg.norm(slice_op(psi_a, mu[:, m], mu[:, m2], dh)) > scale:
                    count += 1
        best = max(best, count)
    return best
