"""State-preserving conditional expectations by pinching.

d0 compresses B(k0) to the block diagonal determined by a partition of the
eigenbasis indices; d extends it to B(k) by compressing with the support
projection first, and E = id tensor d ampliates over the system space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gns import GnsData, slice_state
from .linalg import Superoperator, as_matrix, dagger, kron, require_square

COMMUTE_TOL = 1e-10


@dataclass(frozen=True)
class CondExp:
    """A pinching conditional expectation with its extensions and rank."""

    blocks: tuple[tuple[int, ...], ...]   # 0-based partition of {0..k-1}
    block_projectors: tuple[np.ndarray, ...]   # k x k, eigenbasis coordinates
    ambient_projectors: tuple[np.ndarray, ...]  # N x N, Q_b = F0 P_b F0*
    d0: Superoperator
    d: Superoperator
    rank_l: int
    support_dim: int
    dim_k: int

    def apply_d0(self, x) -> np.ndarray:
        """Pinching on B(k0): sum_b P_b X P_b."""
        x = require_square(as_matrix(x))
        return sum(p @ x @ p for p in self.block_projectors)

    def apply_d(self, x) -> np.ndarray:
        """Extension to B(k): sum_b Q_b X Q_b (kills everything off the support)."""
        x = require_square(as_matrix(x))
        return sum(q @ x @ q for q in self.ambient_projectors)

    def apply_E(self, t) -> np.ndarray:
        """id tensor d on B(h tensor k); the system dim is read off the input."""
        t = require_square(as_matrix(t))
        dim_h = t.shape[0] // self.dim_k
        if dim_h * self.dim_k != t.shape[0]:
            raise ValueError(f"operator dim {t.shape[0]} not a multiple of {self.dim_k}")
        eye = np.eye(dim_h)
        return sum(kron(eye, q) @ t @ kron(eye, q) for q in self.ambient_projectors)

    def apply_E_perp(self, t) -> np.ndarray:
        return as_matrix(t) - self.apply_E(t)

    def apply_E0(self, t) -> np.ndarray:
        """id tensor d0 on B(h tensor k0), eigenbasis coordinates."""
        t = require_square(as_matrix(t))
        dim_h = t.shape[0] // self.support_dim
        if dim_h * self.support_dim != t.shape[0]:
            raise ValueError(f"operator dim {t.shape[0]} not a multiple of {self.support_dim}")
        eye = np.eye(dim_h)
        return sum(kron(eye, p) @ t @ kron(eye, p) for p in self.block_projectors)

    def apply_E0_perp(self, t) -> np.ndarray:
        return as_matrix(t) - self.apply_E0(t)

    def E_superop(self, dim_h: int) -> Superoperator:
        d = dim_h * self.dim_k
        return Superoperator.from_function(self.apply_E, d, (d, d))


def build_cond_exp(g: GnsData, blocks) -> CondExp:
    """Build the pinching determined by a partition of the support indices.

    ``blocks`` is a list of lists of 1-based indices partitioning {1..k}.
    """
    k = g.support_dim
    norm = []
    seen = set()
    for b in blocks:
        idx = tuple(int(i) - 1 for i in b)
        if not idx:
            raise ValueError("empty block in partition")
        for i in idx:
            if i < 0 or i >= k or i in seen:
                raise ValueError(f"blocks do not partition 1..{k}")
            seen.add(i)
        norm.append(tuple(sorted(idx)))
    if len(seen) != k:
        raise ValueError(f"blocks do not partition 1..{k}")
    norm = tuple(norm)

    projectors = []
    for b in norm:
        p = np.zeros((k, k), dtype=complex)
        for i in b:
            p[i, i] = 1.0
        projectors.append(p)
    # state preservation needs each block projector to commute with rho0
    for p in projectors:
        if np.linalg.norm(p @ g.rho0 - g.rho0 @ p) > COMMUTE_TOL:
            raise ValueError("block projector does not commute with the restricted state")

    f0 = g.k0_basis
    ambient = tuple(f0 @ p @ dagger(f0) for p in projectors)
    projectors = tuple(projectors)

    def d0_fn(x):
        return sum(p @ x @ p for p in projectors)

    def d_fn(x):
        return sum(q @ x @ q for q in ambient)

    d0 = Superoperator.from_function(d0_fn, k, (k, k))
    d = Superoperator.from_function(d_fn, g.dim_k, (g.dim_k, g.dim_k))
    rank_l = sum(len(b) ** 2 for b in norm)
    return CondExp(blocks=norm, block_projectors=projectors, ambient_projectors=ambient,
                   d0=d0, d=d, rank_l=rank_l, support_dim=k, dim_k=g.dim_k)


def choi_matrix(s: Superoperator) -> np.ndarray:
    """Choi matrix C[(i,k),(j,l)] = s(e_ij)[k,l] of an endomorphic superoperator."""
    d = s.in_dim
    c = np.zeros((d * s.out_shape[0], d * s.out_shape[1]), dtype=complex)
    r0, c0 = s.out_shape
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            c[i * r0:(i + 1) * r0, j * c0:(j + 1) * c0] = s(e)
    return c


def validate_cond_exp(c: CondExp, g: GnsData, dim_h: int = 2,
                      tol: float = 1e-11, n_random: int = 20,
                      seed: int = 0) -> dict:
    """Check the defining identities; returns {name: (residual, passed)}."""
    rng = np.random.default_rng(seed)
    k, n = c.support_dim, c.dim_k
    lam = g.state.eigenvalues[:k]

    def rnd(d):
        return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))

    report: dict[str, tuple[float, bool]] = {}

    def record(name, residual):
        report[name] = (float(residual), bool(residual <= tol))

    # idempotency of d0 and d
    r = max(np.linalg.norm(c.apply_d0(c.apply_d0(x)) - c.apply_d0(x))
            for x in (rnd(k) for _ in range(n_random)))
    record("d0_idempotent", r)
    r = max(np.linalg.norm(c.apply_d(c.apply_d(x)) - c.apply_d(x))
            for x in (rnd(n) for _ in range(n_random)))
    record("d_idempotent", r)

    # self-adjointness w.r.t. <Z, W> = state0(Z* W)
    def ip0(z, w):
        return complex(np.trace(np.diag(lam) @ dagger(z) @ w))

    r = max(abs(ip0(c.apply_d0(z), w) - ip0(z, c.apply_d0(w)))
            for z, w in ((rnd(k), rnd(k)) for _ in range(n_random)))
    record("d0_selfadjoint_state0", r)

    # bimodule property on B(k)
    r = max(np.linalg.norm(c.apply_d(c.apply_d(x) @ y) - c.apply_d(x) @ c.apply_d(y))
            for x, y in ((rnd(n), rnd(n)) for _ in range(n_random)))
    record("d_bimodule", r)

    # state preservation
    r = max(abs(g.state.expect(c.apply_d(x)) - g.state.expect(x))
            for x in (rnd(n) for _ in range(n_random)))
    record("state_preserved", r)

    # kernel identities of the ampliation: P0~_perp E(T) = 0 etc., and
    # slice-state preservation
    eye_h = np.eye(dim_h)
    p0t = kron(eye_h, g.P0)
    p0t_perp = np.eye(dim_h * n) - p0t
    rs = []
    for _ in range(n_random):
        t = rnd(dim_h * n)
        et = c.apply_E(t)
        rs.append(np.linalg.norm(p0t_perp @ et))
        rs.append(np.linalg.norm(et @ p0t_perp))
        rs.append(np.linalg.norm(p0t @ et - et))
        rs.append(np.linalg.norm(et @ p0t - et))
        rs.append(np.linalg.norm(c.apply_E(et) - et))
        rs.append(np.linalg.norm(slice_state(g, et) - slice_state(g, t)))
    record("E_kernel_identities", max(rs))

    # complete positivity: pinchings have PSD Choi matrices
    w = np.linalg.eigvalsh(choi_matrix(c.d0))
    record("d0_choi_psd", max(0.0, -float(w.min())))

    # rank of the d0 representation matches sum of squared block sizes
    matrix_rank = int(np.linalg.matrix_rank(c.d0.matrix, tol=1e-10))
    report["rank_l"] = (float(abs(matrix_rank - c.rank_l)), matrix_rank == c.rank_l)
    return report
