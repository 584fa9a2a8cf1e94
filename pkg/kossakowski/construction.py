# Kossakowski construction: positive diagonal type maps out of orthogonal matrices, orthonormal bases and
# equiangular frames, plus the conversions between the a-matrix and b-matrix (b = a - 1) pictures.
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from kossakowski.errors import ConstraintViolationError, DimensionMismatchError, KossakowskiError
from kossakowski.map_core import DiagonalTypeMap

logger = logging.getLogger(__name__)

ORTHOGONAL_TOL = 1e-10
SUM_TOL = 1e-10
OSID_TOL = 1e-9


def _worst(residuals: np.ndarray) -> Tuple[float, Tuple[int, ...]]:
    residuals = np.abs(residuals)
    loc = np.unravel_index(np.argmax(residuals), residuals.shape)
    return float(residuals[loc]), tuple(int(i) for i in loc)


def _check(constraint: str, residuals: np.ndarray, tol: float):
    residual, loc = _worst(residuals)
    if residual > tol:
        logger.debug("%s fails: residual %.3e at %s, tolerance %.1e", constraint, residual, loc, tol)
        raise ConstraintViolationError(constraint, residual, loc, tol)


@dataclass(frozen=True, eq=False)
class OrthogonalMatrix:
    """
    Real square matrix with orthonormal rows (M Mᵀ = I to 1e-10). Used both for R in O(n-1) and for the b-matrix in
    O(n).

    :param dim: Dimension.
    :param m: dim x dim real entries.
    """

    dim: int
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"orthogonal matrix must be square, got shape {m.shape}")
        if m.shape[0] != int(self.dim):
            raise DimensionMismatchError(f"declared dim {self.dim} does not match shape {m.shape}")
        _check("orthogonality", m @ m.T - np.eye(m.shape[0]), ORTHOGONAL_TOL)
        m.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "m", m)

    @classmethod
    def from_matrix(cls, m) -> "OrthogonalMatrix":
        m = np.asarray(m, dtype=float)
        return cls(dim=m.shape[0], m=m)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.m))

    def __eq__(self, other):
        if not isinstance(other, OrthogonalMatrix):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.m, other.m)

    def __repr__(self):
        return f"OrthogonalMatrix(dim={self.dim}, m={self.m.tolist()})"


@dataclass(frozen=True, eq=False)
class BasisFamily:
    """
    Orthonormal basis b⁽⁰⁾, ..., b⁽ⁿ⁻¹⁾ of Rⁿ with (b⁽ⁱ⁾, e) = -1/√n for every i, where e = (1, ..., 1)/√n.
    Row i of ``vectors`` is b⁽ⁱ⁾.
    """

    n: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        n = int(self.n)
        if v.shape != (n, n):
            raise DimensionMismatchError(f"basis must be {n} vectors in R^{n}, got shape {v.shape}")
        _check("orthonormality", v @ v.T - np.eye(n), ORTHOGONAL_TOL)
        _check("(b, e) = -1/sqrt(n)", v @ np.ones(n) / np.sqrt(n) + 1 / np.sqrt(n), ORTHOGONAL_TOL)
        v.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "vectors", v)


@dataclass(frozen=True, eq=False)
class FrameFamily:
    """
    Equiangular frame g⁽⁰⁾, ..., g⁽ⁿ⁻¹⁾ in the hyperplane Σ_e orthogonal to e: |g⁽ⁱ⁾|² = 1 - 1/n and pairwise
    cos φ_n = -1/(n-1). Row i of ``vectors`` is g⁽ⁱ⁾.
    """

    n: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        n = int(self.n)
        if v.shape != (n, n):
            raise DimensionMismatchError(f"frame must be {n} vectors in R^{n}, got shape {v.shape}")
        _check("orthogonality to e", v @ np.ones(n), ORTHOGONAL_TOL)
        # Equal norms 1 - 1/n and pairwise cosine -1/(n-1) together are G = I - J/n.
        _check("equiangular Gram matrix", v @ v.T - (np.eye(n) - np.ones((n, n)) / n), ORTHOGONAL_TOL)
        v.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "vectors", v)

    @property
    def cos_angle(self) -> float:
        g = self.vectors
        return float(g[0] @ g[1] / (g[0] @ g[0]))


def _as_orthogonal(R) -> OrthogonalMatrix:
    if isinstance(R, OrthogonalMatrix):
        return R
    return OrthogonalMatrix.from_matrix(R)


def f_basis(n: int) -> List[np.ndarray]:
    """
    The diagonal traceless generators

        F_ℓ = (Σ_{k<ℓ} E_kk - ℓ E_ℓℓ) / √(ℓ(ℓ+1)),   ℓ = 1, ..., n-1

    spanning the Cartan subalgebra, normalized so that tr(F_α F_β) = δ_αβ.

    :param n: Matrix dimension, at least 2.
    :return: List of n-1 real diagonal n x n arrays.
    """
    if n < 2:
        raise KossakowskiError(f"n must be at least 2, got {n}")
    basis = []
    for ell in range(1, n):
        diag = np.zeros(n)
        diag[:ell] = 1.0
        diag[ell] = -ell
        basis.append(np.diag(diag / np.sqrt(ell * (ell + 1))))
    return basis


def hyperplane_basis(n: int) -> np.ndarray:
    """
    Orthonormal basis f⁽¹⁾, ..., f⁽ⁿ⁻¹⁾ of the hyperplane Σ_e with f⁽α⁾_i = <e_i|F_α|e_i>, as rows of an (n-1) x n
    array.
    """
    return np.array([np.diag(F) for F in f_basis(n)])


def rotation(phi: float) -> OrthogonalMatrix:
    """
    Planar rotation [[cos φ, -sin φ], [sin φ, cos φ]]. With first-row circulants this orientation reproduces the n=3
    closed form a = 2(1 + cos φ)/3, b = (2 - cos φ - √3 sin φ)/3, c = (2 - cos φ + √3 sin φ)/3 for (a_00, a_01, a_02).
    """
    c, s = np.cos(phi), np.sin(phi)
    return OrthogonalMatrix(2, np.array([[c, -s], [s, c]]))


def rotation_from_angles(angles: Sequence[float], dim: int) -> OrthogonalMatrix:
    """
    Element of the maximal torus of SO(dim): block diagonal with ⌊dim/2⌋ planar rotations, and a trailing 1 when dim
    is odd.

    :param angles: Exactly ⌊dim/2⌋ rotation angles.
    :param dim: Dimension of the rotation.
    """
    angles = list(angles)
    if len(angles) != dim // 2:
        raise KossakowskiError(f"a rotation of R^{dim} takes {dim // 2} angles, got {len(angles)}")
    blocks = [rotation(phi).m for phi in angles]
    if dim % 2 == 1:
        blocks.append(np.ones((1, 1)))
    return OrthogonalMatrix(dim, scipy.linalg.block_diag(*blocks) if blocks else np.zeros((0, 0)))


def random_orthogonal(dim: int, rng: np.random.Generator, det: Optional[int] = None) -> OrthogonalMatrix:
    """
    Haar distributed orthogonal matrix from the QR factorization of a standard Gaussian matrix, with the signs of the
    R-diagonal fixed positive.

    :param dim: Dimension.
    :param rng: Numpy generator, the only source of randomness.
    :param det: If +1 or -1, restrict to rotations or pseudo-rotations by flipping the first column (still Haar on
        that coset).
    """
    z = rng.standard_normal((dim, dim))
    q, r = scipy.linalg.qr(z)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if det is not None:
        if det not in (1, -1):
            raise KossakowskiError(f"det must be +1 or -1, got {det}")
        if np.sign(np.linalg.det(q)) != det:
            q[:, 0] = -q[:, 0]
    return OrthogonalMatrix(dim, q)


def kossakowski_from_orthogonal(R: Union[OrthogonalMatrix, np.ndarray]) -> DiagonalTypeMap:
    """
    Kossakowski map of an (n-1) x (n-1) orthogonal matrix R:

        a_ij = (n-1)/n + Σ_αβ <e_i|F_α|e_i> R_αβ <e_j|F_β|e_j>

    The result is positive for every orthogonal R; its coefficients lie in [0, 2], all row and column sums are n-1
    and the osid criterion Σ_k a_ik a_jk = δ_ij + n - 2 holds.

    :param R: Orthogonal matrix of dimension n-1.
    :return: The diagonal type map of dimension n.
    """
    R = _as_orthogonal(R)
    n = R.dim + 1
    F = hyperplane_basis(n)
    a = (n - 1) / n + F.T @ R.m @ F
    return DiagonalTypeMap(n, a)


def verify_osid(a: Union[DiagonalTypeMap, np.ndarray], tol: float = OSID_TOL) -> Tuple[bool, float]:
    """
    Checks Σ_k a_ik a_jk = δ_ij + n - 2 for all i, j.

    :param a: Coefficient matrix or map.
    :param tol: Maximum accepted absolute residual.
    :return: ``(holds, max_residual)``.
    """
    if isinstance(a, DiagonalTypeMap):
        a = a.a
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    residual = float(np.max(np.abs(a @ a.T - np.eye(n) - (n - 2))))
    return residual <= tol, residual


def _check_sums(m: np.ndarray, target: float, name: str):
    _check(f"{name} row sums = {target:g}", m.sum(axis=1) - target, SUM_TOL)
    _check(f"{name} column sums = {target:g}", m.sum(axis=0) - target, SUM_TOL)


def b_from_a(map: DiagonalTypeMap) -> OrthogonalMatrix:
    """
    The b-matrix b_ij = a_ij - 1 of a Kossakowski map, which is orthogonal with all row and column sums -1.

    :raises ConstraintViolationError: if the row/column sums differ from n-1 or the osid criterion fails, reporting
        the worst residual and its location.
    """
    a = map.a
    n = map.n
    _check_sums(a, n - 1, "a")
    _check("osid-a", a @ a.T - np.eye(n) - (n - 2), OSID_TOL)
    return OrthogonalMatrix(n, a - 1.0)


def a_from_b(b: Union[OrthogonalMatrix, np.ndarray]) -> DiagonalTypeMap:
    """
    The map with a_ij = b_ij + 1 for an orthogonal b with all row and column sums -1. Since |b_ij| <= 1 the
    coefficients are nonnegative.
    """
    b = _as_orthogonal(b)
    _check_sums(b.m, -1.0, "b")
    return DiagonalTypeMap(b.dim, b.m + 1.0)


def map_from_basis(basis: BasisFamily) -> DiagonalTypeMap:
    """
    Kossakowski map with b_ij = b⁽ⁱ⁾_j. Every such basis defines a map and every Kossakowski map arises this way.
    """
    return a_from_b(OrthogonalMatrix(basis.n, basis.vectors))


def permute_columns(map: DiagonalTypeMap, perm: Sequence[int]) -> DiagonalTypeMap:
    """
    The map with b_{iπ(j)} in place of b_ij, i.e. a_ij -> a_{iπ(j)}. Permuting columns preserves the Kossakowski
    class.

    :param perm: A permutation of range(n), π(j) = perm[j].
    """
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(map.n)):
        raise KossakowskiError(f"{perm.tolist()} is not a permutation of range({map.n})")
    return DiagonalTypeMap(map.n, map.a[:, perm])


def equiangular_frame(n: int, rotation: Optional[OrthogonalMatrix] = None) -> FrameFamily:
    """
    The simplex frame g⁽ⁱ⁾ = e_i - (1/n) 𝟙, which has |g⁽ⁱ⁾|² = 1 - 1/n and pairwise cos φ_n = -1/(n-1).

    :param n: Dimension, at least 2.
    :param rotation: Optional R in O(n-1), acting on Σ_e in the f-basis, applied to the canonical frame.
    """
    if n < 2:
        raise KossakowskiError(f"n must be at least 2, got {n}")
    g = np.eye(n) - np.ones((n, n)) / n
    if rotation is not None:
        rotation = _as_orthogonal(rotation)
        if rotation.dim != n - 1:
            raise DimensionMismatchError(f"frame rotation must have dim {n - 1}, got {rotation.dim}")
        F = hyperplane_basis(n)
        g = g @ (F.T @ rotation.m @ F).T
    return FrameFamily(n, g)


def basis_from_frame(frame: FrameFamily) -> BasisFamily:
    """
    b⁽ⁱ⁾ = g⁽ⁱ⁾ - (1/√n) e, an orthonormal basis satisfying (b⁽ⁱ⁾, e) = -1/√n.
    """
    n = frame.n
    return BasisFamily(n, frame.vectors - np.ones(n) / n)


def rotation_embedding(
    R: Union[OrthogonalMatrix, np.ndarray], hyperplane: Optional[np.ndarray] = None
) -> OrthogonalMatrix:
    """
    Embeds R in O(n-1) into O(n) as a (pseudo-)rotation around e: b = Sᵀ 𝐑 S, where the rows of S are e followed
    by an orthonormal basis of Σ_e, and 𝐑 = diag(-1, R) in that basis. The result has all row and column sums -1.

    :param R: Orthogonal matrix of dimension n-1.
    :param hyperplane: (n-1) x n array whose rows are an orthonormal basis of Σ_e. Defaults to the f-basis, in which
        case ``a_from_b`` of the result equals ``kossakowski_from_orthogonal(R)``.
    :raises ConstraintViolationError: if the supplied hyperplane basis is not orthonormal or not orthogonal to e.
    """
    R = _as_orthogonal(R)
    n = R.dim + 1
    if hyperplane is None:
        H = hyperplane_basis(n)
    else:
        H = np.asarray(hyperplane, dtype=float)
        if H.shape != (n - 1, n):
            raise DimensionMismatchError(f"hyperplane basis must have shape ({n - 1}, {n}), got {H.shape}")
        _check("hyperplane basis orthonormality", H @ H.T - np.eye(n - 1), ORTHOGONAL_TOL)
        _check("hyperplane basis orthogonal to e", H @ np.ones(n), ORTHOGONAL_TOL)
    S = np.vstack([np.ones((1, n)) / np.sqrt(n), H])
    bold_R = scipy.linalg.block_diag(-np.ones((1, 1)), R.m)
    return OrthogonalMatrix(n, S.T @ bold_R @ S)
