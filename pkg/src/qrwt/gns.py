"""Concrete GNS data for a normal state on B(k).

The enlarged noise space is khat = k tensor conj(k0), where k0 is the support
of the density matrix and conj(k0) carries entrywise conjugation in the
eigenbasis of the state.  The cyclic vector is
Omega = sum_j sqrt(lambda_j) e_j tensor conj(e_j) over support eigenvectors,
and [X] = pi(X) Omega with pi(X) = X tensor id.

Coordinates: vectors in khat are indexed (i, j) -> i * k + j, where i runs over
the standard basis of k (dimension N) and j over the eigenbasis of k0
(dimension k); the system space h, when present, is always the leftmost
tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DimensionError,
    as_matrix,
    dagger,
    kron,
    require_hermitian,
    require_square,
    slice_op,
)

DEFAULT_SUPPORT_TOL = 1e-10
STATE_TOL = 1e-12


@dataclass(frozen=True)
class DensityState:
    """A particle-state density matrix with its spectral data."""

    rho: np.ndarray
    eigenvalues: np.ndarray      # descending
    eigenvectors: np.ndarray     # columns, matching order
    support_rank: int
    support_tol: float

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def expect(self, x: np.ndarray) -> complex:
        """The state value tr(rho X)."""
        return complex(np.trace(self.rho @ as_matrix(x)))


def _canonical_phase(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rotate so the first significant coordinate is real positive."""
    for c in v:
        if abs(c) > tol:
            return v * (abs(c) / c)
    return v


def density_state(rho, support_tol: float = DEFAULT_SUPPORT_TOL) -> DensityState:
    """Validate and spectrally decompose a density matrix.

    Eigenvalues are ordered descending; exact degeneracies are broken by
    lexicographic comparison of the phase-canonicalized eigenvectors, so the
    construction is deterministic across runs.
    """
    if support_tol <= 0:
        raise ValueError("support_tol must be positive")
    rho = require_hermitian(as_matrix(rho))
    w, u = np.linalg.eigh(rho)
    if w.min() < -STATE_TOL:
        raise ValueError(f"density matrix is not PSD (min eigenvalue {w.min():.3e})")
    if abs(w.sum() - 1.0) > STATE_TOL * rho.shape[0]:
        raise ValueError(f"density matrix trace is {w.sum()!r}, expected 1")
    order = np.argsort(-w, kind="stable")
    w, u = w[order], u[:, order]
    for j in range(u.shape[1]):
        u[:, j] = _canonical_phase(u[:, j])
    # tie-break exact degeneracies lexicographically
    j = 0
    n = len(w)
    while j < n:
        j2 = j
        while j2 + 1 < n and abs(w[j2 + 1] - w[j]) < 1e-14:
            j2 += 1
        if j2 > j:
            block = u[:, j:j2 + 1]
            keys = [tuple(np.round(block[:, m], 9).view(float).tolist())
                    for m in range(block.shape[1])]
            idx = sorted(range(block.shape[1]), key=lambda m: keys[m], reverse=True)
            u[:, j:j2 + 1] = block[:, idx]
        j = j2 + 1
    rank = int(np.sum(w > support_tol))
    if rank == 0:
        raise ValueError("density matrix has empty support at the given tolerance")
    return DensityState(rho=rho, eigenvalues=w, eigenvectors=u,
                        support_rank=rank, support_tol=support_tol)


@dataclass(frozen=True)
class GnsData:
    """The concrete GNS triple for a normal state on B(k)."""

    state: DensityState
    k0_basis: np.ndarray       # N x k, support eigenvectors (columns)
    kernel_basis: np.ndarray   # N x (N - k), kernel eigenvectors
    P0: np.ndarray             # projection onto k0
    rho0: np.ndarray           # faithful restriction, k x k (diagonal)
    Omega: np.ndarray          # cyclic vector in khat
    mu_basis: np.ndarray       # (N k) x (N k - 1), orthonormal basis of mu

    @property
    def dim_k(self) -> int:
        return self.state.dim

    @property
    def support_dim(self) -> int:
        return self.k0_basis.shape[1]

    @property
    def khat_dim(self) -> int:
        return self.dim_k * self.support_dim


def build_gns(rho, support_tol: float = DEFAULT_SUPPORT_TOL) -> GnsData:
    """Construct the concrete GNS representation of the state tr(rho . )."""
    state = rho if isinstance(rho, DensityState) else density_state(rho, support_tol)
    n = state.dim
    k = state.support_rank
    f0 = state.eigenvectors[:, :k]
    kernel = state.eigenvectors[:, k:]
    p0 = f0 @ dagger(f0)
    rho0 = np.diag(state.eigenvalues[:k]).astype(complex)

    lam = state.eigenvalues[:k]
    omega = np.zeros(n * k, dtype=complex)
    for j in range(k):
        omega += np.sqrt(lam[j]) * kron(state.eigenvectors[:, j], _unit(k, j))

    mu = _mu_basis(state, omega)
    return GnsData(state=state, k0_basis=f0, kernel_basis=kernel, P0=p0,
                   rho0=rho0, Omega=omega, mu_basis=mu)


def _unit(dim: int, j: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[j] = 1.0
    return e


def _mu_basis(state: DensityState, omega: np.ndarray) -> np.ndarray:
    """Gram-Schmidt over e_i tensor conj(e_j) candidates, (i, j) lexicographic.

    Candidates use the full eigenbasis for the k factor (support vectors
    first), so a diagonal rho reproduces the bracket basis [f_ij] directly.
    """
    n = state.dim
    k = state.support_rank
    got = [omega]
    out = []
    for i in range(n):
        for j in range(k):
            v = kron(state.eigenvectors[:, i], _unit(k, j))
            for w in got:
                v = v - w * np.vdot(w, v)
            nv = np.linalg.norm(v)
            if nv > 1e-9:
                v = v / nv
                got.append(v)
                out.append(v)
    mu = np.column_stack(out) if out else np.zeros((n * k, 0), dtype=complex)
    if mu.shape[1] != n * k - 1:
        raise RuntimeError("mu basis construction did not span the Omega complement")
    return mu


def bracket(g: GnsData, x) -> np.ndarray:
    """[X] = pi(X) Omega = U(X rho^(1/2)) as a vector in khat."""
    x = as_matrix(x)
    n, k = g.dim_k, g.support_dim
    if x.shape != (n, n):
        raise DimensionError(f"operator shape {x.shape}, expected {(n, n)}")
    out = np.zeros(n * k, dtype=complex)
    lam = g.state.eigenvalues[:k]
    for j in range(k):
        out += np.sqrt(lam[j]) * kron(x @ g.state.eigenvectors[:, j], _unit(k, j))
    return out


def pi_rep(g: GnsData, x) -> np.ndarray:
    """pi(X) = X tensor id on khat."""
    x = as_matrix(x)
    return kron(x, np.eye(g.support_dim))


def ampliate_pi(g: GnsData, t) -> np.ndarray:
    """The ampliated representation: T on h tensor k, extended by identity
    on conj(k0), with the fixed h (tensor) (k tensor conj(k0)) index pairing."""
    t = require_square(as_matrix(t))
    if t.shape[0] % g.dim_k != 0:
        raise DimensionError(
            f"operator dim {t.shape[0]} is not a multiple of the particle dim {g.dim_k}"
        )
    return kron(t, np.eye(g.support_dim))


def slice_state(g: GnsData, t) -> np.ndarray:
    """The slice map id tensor state: T -> sum_j lambda_j E^(e_j) T E_(e_j)."""
    t = require_square(as_matrix(t))
    n = g.dim_k
    if t.shape[0] % n != 0:
        raise DimensionError(
            f"operator dim {t.shape[0]} is not a multiple of the particle dim {n}"
        )
    dim_h = t.shape[0] // n
    out = np.zeros((dim_h, dim_h), dtype=complex)
    for j in range(g.support_dim):
        e = g.state.eigenvectors[:, j]
        out += g.state.eigenvalues[j] * slice_op(t, e, e, dim_h)
    return out


def slice_state0(g: GnsData, t) -> np.ndarray:
    """id tensor state0 on operators over h tensor k0 (eigenbasis coordinates)."""
    t = require_square(as_matrix(t))
    k = g.support_dim
    if t.shape[0] % k != 0:
        raise DimensionError(
            f"operator dim {t.shape[0]} is not a multiple of the support dim {k}"
        )
    dim_h = t.shape[0] // k
    out = np.zeros((dim_h, dim_h), dtype=complex)
    for j in range(k):
        out += g.state.eigenvalues[j] * slice_op(t, _unit(k, j), _unit(k, j), dim_h)
    return out


def delta_projections(g: GnsData, dim_h: int) -> tuple[np.ndarray, np.ndarray]:
    """(Delta, Delta_perp) on h tensor khat: Delta projects onto h tensor mu."""
    dv = kron(np.eye(dim_h), np.outer(g.Omega, g.Omega.conj()))
    ident = np.eye(dim_h * g.khat_dim)
    return ident - dv, dv


def p0_projections(g: GnsData, dim_h: int) -> tuple[np.ndarray, np.ndarray]:
    """(P0~, P0~_perp) on h tensor k."""
    p = kron(np.eye(dim_h), g.P0)
    return p, np.eye(dim_h * g.dim_k) - p
