"""Dense complex linear algebra for operators on tensor-product spaces.

Conventions fixed repo-wide:

* Tensor products are lexicographic with the left factor as the slow index,
  so ``kron(A, B)[(i, k), (j, l)] = A[i, j] * B[k, l]``; the system space h
  is always the leftmost factor.
* Operators are vectorized by column stacking (Fortran order), so
  ``vec(A B C) = kron(C.T, A) @ vec(B)``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

HERM_TOL = 1e-12


class DimensionError(ValueError):
    """Shapes of operators or vectors do not match."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={m.ndim}")
    return m


def require_square(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def require_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    a = require_square(a)
    dev = np.linalg.norm(a - a.conj().T)
    if dev > tol * max(1.0, np.linalg.norm(a)):
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, shape: tuple[int, int] | None = None) -> np.ndarray:
    v = np.asarray(v)
    if shape is None:
        d = int(round(np.sqrt(v.size)))
        if d * d != v.size:
            raise DimensionError(f"cannot unvec length {v.size} to a square matrix")
        shape = (d, d)
    return v.reshape(shape, order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with the fixed (left factor slow) index pairing."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def dyad(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|u><v|, linear in u and conjugate-linear in v."""
    return np.outer(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex).conj())


def slice_op(t: np.ndarray, x: np.ndarray, y: np.ndarray, dim_front: int) -> np.ndarray:
    """E^x T E_y for T on (front space) tensor K, with E_y u = u tensor y.

    Conjugate-linear in x, linear in y; returns an operator on the front space.
    """
    t = as_matrix(t)
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    dk = x.size
    if y.size != dk:
        raise DimensionError(f"slice vectors disagree: {x.size} vs {y.size}")
    if t.shape[0] != t.shape[1] or t.shape[0] != dim_front * dk:
        raise DimensionError(
            f"operator shape {t.shape} incompatible with front dim {dim_front} and slice dim {dk}"
        )
    t4 = t.reshape(dim_front, dk, dim_front, dk)
    return np.einsum("k,akbl,l->ab", x.conj(), t4, y)


def mat_exp(a: np.ndarray, hermitian: bool = False) -> np.ndarray:
    """Matrix exponential e^A; eigendecomposition path for Hermitian input."""
    a = require_square(a)
    if hermitian:
        require_hermitian(a)
        w, u = np.linalg.eigh(a)
        return (u * np.exp(w)) @ u.conj().T
    return scipy.linalg.expm(a)


# Decapitated exponentials: exp_1(z) = (e^z - 1)/z, exp_2(z) = (e^z - 1 - z)/z^2,
# with series fallback near zero where the closed forms lose all digits.

_SERIES_CUTOFF = 1e-3
_SERIES_TERMS = 20


def _decap_scalar(order: int, z: complex) -> complex:
    z = complex(z)
    if abs(z) < _SERIES_CUTOFF:
        total = 0.0 + 0.0j
        zp = 1.0 + 0.0j
        for n in range(order, order + _SERIES_TERMS):
            total += zp / math.factorial(n)
            zp *= z
        return total
    if order == 1:
        return (np.exp(z) - 1.0) / z
    return (np.exp(z) - 1.0 - z) / (z * z)


def decap_exp(order: int, arg) -> complex | np.ndarray:
    """exp_1 or exp_2 of a complex scalar, or of -iA for Hermitian A.

    Scalar arguments are evaluated at the argument itself; matrix arguments
    must be Hermitian and are evaluated spectrally at -i * eigenvalues.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    a = np.asarray(arg)
    if a.ndim == 0:
        return _decap_scalar(order, complex(a))
    a = require_hermitian(a)
    w, u = np.linalg.eigh(a)
    fw = np.array([_decap_scalar(order, -1j * lam) for lam in w])
    return (u * fw) @ u.conj().T


class Superoperator:
    """A linear map between matrix spaces, stored on column-vectorized operators.

    ``in_dim`` is the side length of input operators; outputs have shape
    ``out_shape`` (rows, cols).
    """

    __slots__ = ("matrix", "in_dim", "out_shape")

    def __init__(self, matrix: np.ndarray, in_dim: int, out_shape: tuple[int, int]):
        matrix = as_matrix(matrix)
        rows, cols = out_shape
        if matrix.shape != (rows * cols, in_dim * in_dim):
            raise DimensionError(
                f"superoperator matrix shape {matrix.shape} does not match "
                f"in_dim {in_dim}, out_shape {out_shape}"
            )
        self.matrix = matrix
        self.in_dim = in_dim
        self.out_shape = (rows, cols)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_function(cls, fn, in_dim: int, out_shape: tuple[int, int] | None = None):
        """Build the matrix representation by applying fn to elementary matrices."""
        cols = []
        for j in range(in_dim):
            for i in range(in_dim):
                e = np.zeros((in_dim, in_dim), dtype=complex)
                e[i, j] = 1.0
                out = as_matrix(fn(e))
                if out_shape is None:
                    out_shape = out.shape
                cols.append(vec(out))
        return cls(np.column_stack(cols), in_dim, out_shape)

    @classmethod
    def identity(cls, dim: int):
        return cls(np.eye(dim * dim, dtype=complex), dim, (dim, dim))

    @classmethod
    def zero(cls, in_dim: int, out_shape: tuple[int, int]):
        r, c = out_shape
        return cls(np.zeros((r * c, in_dim * in_dim), dtype=complex), in_dim, out_shape)

    @classmethod
    def left_right(cls, x: np.ndarray, y: np.ndarray):
        """The map T -> X T Y on square inputs."""
        x, y = as_matrix(x), as_matrix(y)
        if x.shape[1] != y.shape[0]:
            raise DimensionError("left/right factors do not compose")
        return cls(np.kron(y.T, x), x.shape[1], (x.shape[0], y.shape[1]))

    # -- algebra -----------------------------------------------------------

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = as_matrix(x)
        if x.shape != (self.in_dim, self.in_dim):
            raise DimensionError(f"input shape {x.shape}, expected {(self.in_dim,) * 2}")
        return unvec(self.matrix @ vec(x), self.out_shape)

    def compose(self, other: "Superoperator") -> "Superoperator":
        """self after other; other's outputs must be square and feed self."""
        r, c = other.out_shape
        if r != c or r != self.in_dim:
            raise DimensionError("composition shapes do not match")
        return Superoperator(self.matrix @ other.matrix, other.in_dim, self.out_shape)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        self._require_same_shape(other)
        return Superoperator(self.matrix + other.matrix, self.in_dim, self.out_shape)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        self._require_same_shape(other)
        return Superoperator(self.matrix - other.matrix, self.in_dim, self.out_shape)

    def __mul__(self, scalar) -> "Superoperator":
        return Superoperator(self.matrix * scalar, self.in_dim, self.out_shape)

    __rmul__ = __mul__

    def __neg__(self) -> "Superoperator":
        return self * (-1.0)

    def _require_same_shape(self, other: "Superoperator"):
        if self.in_dim != other.in_dim or self.out_shape != other.out_shape:
            raise DimensionError("superoperator shapes do not match")

    # -- analysis ----------------------------------------------------------

    def is_endomorphic(self) -> bool:
        r, c = self.out_shape
        return r == c == self.in_dim

    def expm(self, t: float) -> "Superoperator":
        if not self.is_endomorphic():
            raise DimensionError("superoperator exponential needs matching in/out spaces")
        return Superoperator(scipy.linalg.expm(t * self.matrix), self.in_dim, self.out_shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def distance(self, other: "Superoperator") -> float:
        self._require_same_shape(other)
        return float(np.linalg.norm(self.matrix - other.matrix))


def superop_exp(l: Superoperator, t: float) -> Superoperator:
    return l.expm(t)


def superop_distance(p: Superoperator, q: Superoperator) -> float:
    return p.distance(q)


class SubspaceSplit:
    """An orthonormal basis of a space split into a front block and a back block."""

    def __init__(self, basis: np.ndarray, split: int, tol: float = HERM_TOL):
        basis = as_matrix(basis)
        n = basis.shape[0]
        if basis.shape[1] != n:
            raise DimensionError("basis must be a full square matrix of columns")
        if not 0 <= split <= n:
            raise DimensionError(f"split index {split} out of range for dim {n}")
        gram = basis.conj().T @ basis
        if np.linalg.norm(gram - np.eye(n)) > tol * n:
            raise ValueError("basis columns are not orthonormal")
        self.basis = basis
        self.split = split
        self.total_dim = n

    @property
    def front(self) -> np.ndarray:
        return self.basis[:, : self.split]

    @property
    def back(self) -> np.ndarray:
        return self.basis[:, self.split:]

    def front_projection(self) -> np.ndarray:
        f = self.front
        return f @ f.conj().T

    def back_projection(self) -> np.ndarray:
        b = self.back
        return b @ b.conj().T
