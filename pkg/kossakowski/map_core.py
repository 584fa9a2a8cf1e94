# Diagonal type maps on M_n(C): representation, action on matrices, D-matrix and Choi matrix.
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from kossakowski.errors import DimensionMismatchError, KossakowskiError

# Dense eigensolvers are used throughout, the supported envelope is small.
MAX_DIM = 64
# Relative PSD tolerance, scaled by max(1, ||M||_inf).
PSD_REL_TOL = 1e-9
# Entries above -NONNEG_TOL count as nonnegative (rounding residue of b + 1 with b = -1).
NONNEG_TOL = 1e-12
SUM_TOL = 1e-10

# Square complex ndarray of shape (n, n), or a stack of them of shape (..., n, n).
ComplexMatrix = np.ndarray


@dataclass(frozen=True, eq=False)
class DiagonalTypeMap:
    """
    A linear map on M_n(C) of diagonal type::

        Λ(E_ii) = Σ_j a_ij E_jj,    Λ(E_ij) = -E_ij  (i != j)

    The coefficient matrix is stored as a read-only float array, so instances can be shared freely.

    :param n: Dimension, at least 2.
    :param a: n x n real coefficient matrix. Complex input is accepted only with a zero imaginary part, since Λ is
        Hermiticity preserving iff all a_ij are real.
    """

    n: int
    a: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 2 or n > MAX_DIM:
            raise KossakowskiError(f"n must be in [2, {MAX_DIM}], got {self.n}")
        a = np.asarray(self.a)
        if np.iscomplexobj(a):
            if np.any(a.imag != 0):
                raise KossakowskiError("coefficients a_ij must be real")
            a = a.real
        a = np.array(a, dtype=float)
        if a.shape != (n, n):
            raise DimensionMismatchError(f"coefficient matrix has shape {a.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(a)):
            raise KossakowskiError("coefficients a_ij must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "a", a)

    @classmethod
    def from_matrix(cls, a) -> "DiagonalTypeMap":
        a = np.asarray(a)
        return cls(n=a.shape[0], a=a)

    def is_nonnegative(self, tol: float = NONNEG_TOL) -> bool:
        return bool(np.all(self.a >= -tol))

    def __eq__(self, other):
        if not isinstance(other, DiagonalTypeMap):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.a, other.a)

    def __repr__(self):
        return f"DiagonalTypeMap(n={self.n}, a={self.a.tolist()})"


def apply(map: DiagonalTypeMap, X: ComplexMatrix) -> ComplexMatrix:
    """
    Applies Λ to X. Diagonal entries transform as Λ(X)_jj = Σ_i a_ij X_ii, off-diagonal entries are negated.

    Broadcasts over leading axes, so a stack of shape (..., n, n) is mapped elementwise.

    :param map: The diagonal type map.
    :param X: Matrix (or stack of matrices) with trailing shape (n, n).
    :return: Λ(X) as a complex array of the same shape.
    """
    X = np.asarray(X)
    if X.ndim < 2 or X.shape[-2:] != (map.n, map.n):
        raise DimensionMismatchError(f"expected trailing shape ({map.n}, {map.n}), got {X.shape}")
    out = -X.astype(complex)
    idx = np.arange(map.n)
    out[..., idx, idx] = np.diagonal(X, axis1=-2, axis2=-1) @ map.a
    return out


def d_matrix(map: DiagonalTypeMap) -> np.ndarray:
    """
    The D-matrix of the complete positivity criterion: d_ii = a_ii and d_ij = -1 off the diagonal.
    """
    d = -np.ones((map.n, map.n))
    np.fill_diagonal(d, np.diag(map.a))
    return d


def unit_matrices(n: int) -> np.ndarray:
    """
    All matrix units E_ij = |e_i><e_j| as an array of shape (n, n, n, n) indexed [i, j, k, l].
    """
    return np.eye(n * n).reshape(n, n, n, n)


def choi_matrix(map: DiagonalTypeMap) -> ComplexMatrix:
    """
    Choi matrix C = Σ_ij E_ij ⊗ Λ(E_ij) of dimension n².

    Index convention: ``C[i*n + k, j*n + l] = <e_k| Λ(E_ij) |e_l>``.
    """
    n = map.n
    images = apply(map, unit_matrices(n))  # [i, j, k, l]
    return images.transpose(0, 2, 1, 3).reshape(n * n, n * n)


def is_psd(M: np.ndarray, eps: float = None) -> Tuple[bool, float]:
    """
    Positive semi-definiteness test through a Hermitian eigendecomposition.

    :param M: Square matrix. Its Hermitian part is tested.
    :param eps: Absolute tolerance. Defaults to ``PSD_REL_TOL * max(1, ||M||_inf)`` so that boundary matrices (minimum
        eigenvalue exactly zero) are not rejected because of rounding.
    :return: ``(is_psd, min_eigenvalue)``.
    """
    M = np.asarray(M)
    if eps is None:
        eps = PSD_REL_TOL * max(1.0, np.linalg.norm(M, ord=np.inf))
    H = (M + M.conj().T) / 2
    min_eig = float(scipy.linalg.eigvalsh(H)[0])
    return bool(min_eig >= -eps), min_eig


def row_col_sums(map: DiagonalTypeMap) -> Tuple[np.ndarray, np.ndarray]:
    return map.a.sum(axis=1), map.a.sum(axis=0)


def is_doubly_stochastic(map: DiagonalTypeMap, tol: float = SUM_TOL) -> bool:
    """
    Whether a / (n-1) is doubly stochastic. Equivalently, Λ / (n-1) is unital (column sums) and trace preserving (row
    sums) and has nonnegative coefficients.
    """
    rows, cols = row_col_sums(map)
    target = map.n - 1
    return (
        map.is_nonnegative()
        and bool(np.all(np.abs(rows - target) <= tol))
        and bool(np.all(np.abs(cols - target) <= tol))
    )


def inverse_map(map: DiagonalTypeMap) -> DiagonalTypeMap:
    """
    The inverse of Λ, which is again of diagonal type with coefficient matrix a⁻¹ (negation off the diagonal is its
    own inverse).

    :raises KossakowskiError: if a is singular.
    """
    try:
        a_inv = np.linalg.inv(map.a)
    except np.linalg.LinAlgError as e:
        raise KossakowskiError(f"map is not invertible: {e}") from e
    return DiagonalTypeMap(map.n, a_inv)
