# Circulant diagonal type maps and their DFT parametrization by a phase torus.
#
# Convention: a_ij = α_{(j - i) mod n}, so α is the first row of a. The eigenvalues are
# λ_k = Σ_l ω^{-kl} α_l with ω = exp(2πi/n), which is numpy's forward FFT.
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from kossakowski.errors import ConsistencyError, KossakowskiError, NotCirculantError, NotOnTorusError
from kossakowski.map_core import DiagonalTypeMap

logger = logging.getLogger(__name__)

TORUS_TOL = 1e-9
IMAG_TOL = 1e-10
CIRCULANT_TOL = 1e-12
# Phases within this distance below 2π are reported as 0.
PHASE_SNAP = 1e-12


def circulant_matrix(alphas: np.ndarray) -> np.ndarray:
    """
    The matrix with a_ij = α_{(j - i) mod n}.
    """
    return scipy.linalg.circulant(np.asarray(alphas, dtype=float)).T


def num_phases(n: int) -> int:
    return (n - 1) // 2


@dataclass(frozen=True, eq=False)
class CirculantParams:
    """
    First row (α_0, ..., α_{n-1}) of a circulant coefficient matrix.
    """

    n: int
    alphas: np.ndarray

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=float).reshape(-1)
        n = int(self.n)
        if n < 2:
            raise KossakowskiError(f"n must be at least 2, got {n}")
        if len(alphas) != n:
            raise KossakowskiError(f"expected {n} circulant parameters, got {len(alphas)}")
        if not np.all(np.isfinite(alphas)):
            raise KossakowskiError("circulant parameters must be finite")
        alphas.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def from_alphas(cls, alphas) -> "CirculantParams":
        alphas = np.asarray(alphas, dtype=float)
        return cls(len(alphas), alphas)

    @classmethod
    def from_map(cls, map: DiagonalTypeMap, tol: float = CIRCULANT_TOL) -> "CirculantParams":
        """
        :raises NotCirculantError: if some a_ij differs from α_{(j-i) mod n} by more than ``tol``.
        """
        params = cls(map.n, map.a[0])
        residual = np.abs(map.a - circulant_matrix(params.alphas))
        if residual.max() > tol:
            i, j = np.unravel_index(np.argmax(residual), residual.shape)
            raise NotCirculantError(
                f"a[{i}][{j}] = {map.a[i, j]!r} differs from alpha_{(j - i) % map.n} = "
                f"{params.alphas[(j - i) % map.n]!r}"
            )
        return params

    @property
    def betas(self) -> np.ndarray:
        """β_k = α_k - 1, the first row of the circulant b-matrix."""
        return self.alphas - 1.0

    def to_map(self) -> DiagonalTypeMap:
        return DiagonalTypeMap(self.n, circulant_matrix(self.alphas))

    def __eq__(self, other):
        if not isinstance(other, CirculantParams):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.alphas, other.alphas)

    def __repr__(self):
        return f"CirculantParams(n={self.n}, alphas={self.alphas.tolist()})"


def is_circulant(map: DiagonalTypeMap, tol: float = CIRCULANT_TOL) -> bool:
    return bool(np.abs(map.a - circulant_matrix(map.a[0])).max() <= tol)


@dataclass(frozen=True)
class PhasePoint:
    """
    Torus coordinates of a circulant Kossakowski map: λ_k = exp(iφ_k) for k = 1, ..., m with m = ⌊(n-1)/2⌋, and for
    even n the real eigenvalue λ_{n/2} = ``even_sign``.

    Phases are canonicalized to [0, 2π).
    """

    n: int
    phases: Tuple[float, ...]
    even_sign: Optional[int] = None

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise KossakowskiError(f"n must be at least 2, got {n}")
        phases = tuple(float(phi) for phi in np.mod(np.asarray(self.phases, dtype=float).reshape(-1), 2 * np.pi))
        phases = tuple(0.0 if 2 * np.pi - phi < PHASE_SNAP else phi for phi in phases)
        if len(phases) != num_phases(n):
            raise KossakowskiError(f"n = {n} takes {num_phases(n)} phases, got {len(phases)}")
        if n % 2 == 0:
            if self.even_sign not in (1, -1):
                raise KossakowskiError(f"even n = {n} needs a sign of +1 or -1, got {self.even_sign}")
        elif self.even_sign is not None:
            raise KossakowskiError(f"odd n = {n} takes no sign")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "even_sign", None if self.even_sign is None else int(self.even_sign))


def dft_eigenvalues(params: CirculantParams) -> np.ndarray:
    """
    λ_k = Σ_l exp(-2πikl/n) α_l. For real α, λ_k is the complex conjugate of λ_{n-k}.
    """
    return np.fft.fft(params.alphas)


def b_spectrum(params: CirculantParams) -> np.ndarray:
    """
    Eigenvalues μ_k of the circulant b-matrix, same convention: μ_0 = λ_0 - n and μ_k = λ_k for k >= 1. On the torus
    μ_0 = -1 and every |μ_k| = 1.
    """
    return np.fft.fft(params.betas)


def torus_spectrum(pt: PhasePoint) -> np.ndarray:
    n = pt.n
    lam = np.zeros(n, dtype=complex)
    lam[0] = n - 1
    for k, phi in enumerate(pt.phases, start=1):
        lam[k] = np.exp(1j * phi)
        lam[n - k] = np.exp(-1j * phi)
    if pt.even_sign is not None:
        lam[n // 2] = pt.even_sign
    return lam


def alphas_from_phases(pt: PhasePoint) -> CirculantParams:
    """
    Circulant parameters with spectrum λ_0 = n-1, λ_k = exp(iφ_k), λ_{n-k} = exp(-iφ_k) and, for even n,
    λ_{n/2} = ±1. The result satisfies Σ α_k = n-1 and the osid criterion.

    :raises ConsistencyError: if the inverse DFT leaves an imaginary residue above 1e-10.
    """
    alphas = np.fft.ifft(torus_spectrum(pt))
    residue = float(np.abs(alphas.imag).max())
    if residue > IMAG_TOL:
        raise ConsistencyError(f"inverse DFT has imaginary residue {residue:.3e}")
    return CirculantParams(pt.n, alphas.real)


def check_on_torus(params: CirculantParams, tol: float = TORUS_TOL) -> np.ndarray:
    """
    Checks λ_0 = n-1 and |λ_k| = 1 for k >= 1. λ_0 is checked first, so (1, 1, 1) reports index 0 (λ_0 = 3) although
    λ_1 = 0 is off the circle as well.

    :return: The eigenvalues.
    :raises NotOnTorusError: with the first offending index and its modulus.
    """
    lam = dft_eigenvalues(params)
    n = params.n
    if abs(lam[0] - (n - 1)) > tol:
        logger.debug("lambda_0 = %s, not n-1 = %d", lam[0], n - 1)
        raise NotOnTorusError(0, abs(lam[0]), expected=n - 1)
    moduli = np.abs(lam[1:])
    off = np.flatnonzero(np.abs(moduli - 1.0) > tol)
    if len(off):
        k = int(off[0]) + 1
        logger.debug("%d eigenvalues off the unit circle, first |lambda_%d| = %.6g", len(off), k, moduli[k - 1])
        raise NotOnTorusError(k, moduli[k - 1])
    return lam


def phases_from_alphas(params: CirculantParams) -> PhasePoint:
    """
    Torus coordinates of circulant parameters, φ_k = atan2(Im λ_k, Re λ_k) mod 2π.

    :raises NotOnTorusError: if some |λ_k| differs from 1 (or λ_0 from n-1) by more than 1e-9.
    """
    lam = check_on_torus(params)
    n = params.n
    m = num_phases(n)
    phases = [float(np.arctan2(lam[k].imag, lam[k].real)) for k in range(1, m + 1)]
    even_sign = None
    if n % 2 == 0:
        even_sign = 1 if lam[n // 2].real > 0 else -1
    return PhasePoint(n, tuple(phases), even_sign)


def determinant_modulus(params: CirculantParams) -> float:
    """
    |det a| as the product of eigenvalue moduli, which is n-1 on the torus.

    :raises NotOnTorusError: for parameters off the torus.
    :raises ConsistencyError: if the product disagrees with the direct determinant of the circulant matrix.
    """
    lam = check_on_torus(params)
    modulus = float(np.prod(np.abs(lam)))
    direct = abs(float(np.linalg.det(circulant_matrix(params.alphas))))
    if abs(modulus - direct) > TORUS_TOL * max(1.0, direct):
        raise ConsistencyError(f"spectral determinant {modulus!r} differs from direct determinant {direct!r}")
    return modulus


def torus_points(n: int, count: int, seed) -> List[PhasePoint]:
    """
    ``count`` i.i.d. points with uniform phases and, for even n, a fair sign bit, so both torus components are hit.
    """
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=(count, num_phases(n)))
    signs = rng.choice([-1, 1], size=count) if n % 2 == 0 else [None] * count
    return [PhasePoint(n, tuple(phi), None if s is None else int(s)) for phi, s in zip(phases, signs)]


def torus_sample(n: int, count: int, seed) -> List[CirculantParams]:
    """
    Random circulant Kossakowski maps: :func:`alphas_from_phases` of :func:`torus_points`.
    """
    return [alphas_from_phases(pt) for pt in torus_points(n, count, seed)]
