"""The embedded discrete random walk on toy Fock space.

Matrix elements against exponential vectors are computed through the slicing
recursion, with the slice at each step acting on the most recent particle
slot (time-ordered left-to-right); a dense brute-force oracle cross-checks
the recursion for small step counts.  Exponential vectors are unnormalized:
<eps(f), eps(g)> = exp(integral <f, g>).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .generators import KIND_CONJUGATION, KIND_RIGHT_MULT, WalkGenerator
from .gns import GnsData
from .linalg import DimensionError, Superoperator, as_matrix, dagger, kron, slice_op, vec, unvec


@dataclass(frozen=True)
class StepFunction:
    """A piecewise-constant function with values in mu (zero Omega-component).

    ``breakpoints`` starts at 0 and is strictly increasing; ``values[i]`` is
    the khat-coordinate value on [breakpoints[i], breakpoints[i+1]), and the
    function vanishes from ``support_end`` = breakpoints[-1] onward.
    """

    breakpoints: tuple[float, ...]
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        bp = self.breakpoints
        if not bp or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.values) != len(bp) - 1:
            raise ValueError("need exactly one value per interval")

    @property
    def support_end(self) -> float:
        return self.breakpoints[-1]

    @property
    def dim(self) -> int:
        return self.values[0].shape[0] if self.values else 0

    def value_at(self, t: float) -> np.ndarray:
        bp = self.breakpoints
        if t < 0 or t >= bp[-1]:
            return np.zeros(self.dim, dtype=complex)
        idx = int(np.searchsorted(bp, t, side="right")) - 1
        return self.values[idx]

    def integral(self, a: float, b: float) -> np.ndarray:
        """Exact integral over [a, b] of the piecewise-constant values."""
        out = np.zeros(self.dim, dtype=complex)
        bp = self.breakpoints
        for i, v in enumerate(self.values):
            lo, hi = max(a, bp[i]), min(b, bp[i + 1])
            if hi > lo:
                out += (hi - lo) * v
        return out


def step_function(breakpoints, values, g: GnsData | None = None,
                  omega_tol: float = 1e-10) -> StepFunction:
    vals = tuple(np.asarray(v, dtype=complex).ravel() for v in values)
    f = StepFunction(tuple(float(b) for b in breakpoints), vals)
    if g is not None:
        for v in vals:
            if v.shape[0] != g.khat_dim:
                raise DimensionError("step-function values must live in khat")
            if abs(np.vdot(g.Omega, v)) > omega_tol:
                raise ValueError("step-function values must have zero Omega-component")
    return f


def zero_step_function(dim: int) -> StepFunction:
    return StepFunction((0.0, 1.0), (np.zeros(dim, dtype=complex),))


def dtau_coeffs(f: StepFunction, tau: float, n_max: int) -> list[np.ndarray]:
    """Discretization coefficients f(n; tau) = tau^(-1/2) int_{n tau}^{(n+1) tau} f."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    rt = tau ** -0.5
    return [rt * f.integral(n * tau, (n + 1) * tau) for n in range(n_max)]


def exp_inner(f: StepFunction, g: StepFunction,
              lo: float = 0.0, hi: float | None = None) -> complex:
    """<eps(f), eps(g)> restricted to [lo, hi] = exp(int <f, g>), exact."""
    if hi is None:
        hi = max(f.support_end, g.support_end)
    cuts = sorted({lo, hi, *f.breakpoints, *g.breakpoints})
    total = 0.0 + 0.0j
    for a, b in zip(cuts, cuts[1:]):
        if b <= lo or a >= hi:
            continue
        a, b = max(a, lo), min(b, hi)
        mid = 0.5 * (a + b)
        total += (b - a) * np.vdot(f.value_at(mid), g.value_at(mid))
    return complex(np.exp(total))


@dataclass
class WalkRun:
    """An embedded walk with its generator lifted to B(h tensor khat)."""

    generator: WalkGenerator
    gns: GnsData
    tau: float
    horizon: float
    _slice_cache: dict = field(default_factory=dict, repr=False)
    _phi_hat_cols: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    @property
    def n_steps(self) -> int:
        return int(np.floor(self.horizon / self.tau + 1e-9))

    def phi_hat(self, a) -> np.ndarray:
        """The lifted generator pi~ after phi, as a matrix on h tensor khat."""
        return kron(self.generator.phi(a), np.eye(self.gns.support_dim))

    def sliced_superop(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Matrix of b -> E^x phi_hat(b) E_y on vectorized B(h)."""
        key = (x.tobytes(), y.tobytes())
        got = self._slice_cache.get(key)
        if got is not None:
            return got
        dh = self.generator.dim_h
        cols = []
        for j in range(dh):
            for i in range(dh):
                e = np.zeros((dh, dh), dtype=complex)
                e[i, j] = 1.0
                cols.append(vec(slice_op(self.phi_hat(e), x, y, dh)))
        s = np.column_stack(cols)
        self._slice_cache[key] = s
        return s


def walk_matrix_element(run: WalkRun, a, u, v,
                        f: StepFunction, g: StepFunction, t: float) -> complex:
    """<u eps(f), J_t(a) v eps(g)> for the embedded walk."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = as_matrix(a)
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    dh = run.generator.dim_h
    if a.shape != (dh, dh) or u.size != dh or v.size != dh:
        raise DimensionError("observable/vectors inconsistent with dim h")
    tau = run.tau
    n = int(np.floor(t / tau + 1e-9))
    m_max = max(n, int(np.ceil(max(f.support_end, g.support_end) / tau - 1e-9)))
    fc = dtau_coeffs(f, tau, m_max)
    gc = dtau_coeffs(g, tau, m_max)
    omega = run.gns.Omega

    # recursion: the slice for the most recent slot is applied innermost
    b = vec(a)
    for m in range(n - 1, -1, -1):
        s = run.sliced_superop(omega + fc[m], omega + gc[m])
        b = s @ b
    val = complex(np.vdot(u, unvec(b, (dh, dh)) @ v))

    tail = 1.0 + 0.0j
    for m in range(n, m_max):
        tail *= 1.0 + complex(np.vdot(fc[m], gc[m]))
    return val * tail


def dense_walk_oracle(run: WalkRun, n: int, a, u, v,
                      slot_x: list[np.ndarray], slot_y: list[np.ndarray]) -> complex:
    """Brute-force <u x_0 ... x_{n-1}, Phi_hat^(n)(a) v y_0 ... y_{n-1}>.

    Builds the n-fold walk map densely on h tensor khat^n; memory-bounded to
    n <= 3.
    """
    if n > 3:
        raise ValueError("dense oracle limited to n <= 3")
    a = as_matrix(a)
    dh = run.generator.dim_h
    khat = run.gns.khat_dim

    def walk_n(b, m):
        if m == 0:
            return b
        t = run.phi_hat(b)
        front = dh * khat ** (m - 1)
        t4 = t.reshape(dh, khat, dh, khat)
        out = np.zeros((front * khat, front * khat), dtype=complex)
        for p in range(khat):
            for q in range(khat):
                e = np.zeros((khat, khat), dtype=complex)
                e[p, q] = 1.0
                out += kron(walk_n(t4[:, p, :, q], m - 1), e)
        return out

    big = walk_n(a, n)
    lu = np.asarray(u, dtype=complex).ravel()
    lv = np.asarray(v, dtype=complex).ravel()
    for m in range(n):
        lu = kron(lu, np.asarray(slot_x[m], dtype=complex).ravel())
        lv = kron(lv, np.asarray(slot_y[m], dtype=complex).ravel())
    return complex(np.vdot(lu, big @ lv))


def walk_unitarity_check(run: WalkRun, tol: float = 1e-11) -> bool:
    """Per-step unitarity of the interaction for Hamiltonian-based kinds."""
    w = run.generator
    if w.kind not in (KIND_RIGHT_MULT, KIND_CONJUGATION):
        raise ValueError(f"unitarity check needs a Hamiltonian-based kind, got {w.kind}")
    u = w.unitary
    if u is None:
        raise ValueError("generator carries no per-step unitary")
    d = u.shape[0]
    eye = np.eye(d)
    return bool(np.linalg.norm(u @ dagger(u) - eye) <= tol
                and np.linalg.norm(dagger(u) @ u - eye) <= tol)
