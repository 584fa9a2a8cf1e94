# Positivity, complete positivity and indecomposability of diagonal type maps.
#
# A diagonal type map with a_ij >= 0 is positive iff Σ_i p_i / B_i(p) <= 1 on the probability simplex, where
# B_i(p) = p_i + Σ_j a_ij p_j and p_i = |x_i|². Three independent deciders are offered: closed forms (n=2, and n=3
# circulant), a numerical maximization of the left hand side, and a brute-force oracle that never uses the
# inequality.
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.special

from kossakowski.circulant_spectrum import CirculantParams, is_circulant
from kossakowski.config import OptimizerConfig, OracleConfig
from kossakowski.errors import (
    ConsistencyError,
    ConstraintViolationError,
    KossakowskiError,
    NotPositiveError,
)
from kossakowski.map_core import NONNEG_TOL, DiagonalTypeMap, apply, choi_matrix, d_matrix, is_psd
from kossakowski.simplex import in_lhs_batch, maximize_in_lhs, simplex_starts

logger = logging.getLogger(__name__)

# Closed-form criteria hold with equality on the interesting maps.
CLOSED_TOL = 1e-9
SIMPLEX_SUM_TOL = 1e-12
# Pairs of simplex grid points evaluated by the oracle before falling back to x = y.
GRID_PAIRS_MAX = 1_000_000
# Band around the CP boundary inside which the D-matrix, Choi matrix and circulant criteria are not compared.
CP_CROSS_CHECK_BAND = 1e-7


class VerdictStatus(str, Enum):
    POSITIVE_CERTIFIED = "PositiveCertified"
    POSITIVE_NUMERICAL = "PositiveNumerical"
    NOT_POSITIVE = "NotPositive"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """
    A probability vector, the squared moduli |x_i|² of a unit vector x.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if np.any(p < 0):
            raise KossakowskiError(f"simplex point has a negative entry: {p.tolist()}")
        if abs(p.sum() - 1.0) > SIMPLEX_SUM_TOL:
            raise KossakowskiError(f"simplex point sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def normalize(cls, v) -> "SimplexPoint":
        """The simplex point proportional to a nonnegative, nonzero vector."""
        v = np.asarray(v, dtype=float)
        if np.any(v < 0) or v.sum() <= 0:
            raise KossakowskiError("only nonnegative, nonzero vectors can be normalized onto the simplex")
        return cls(v / v.sum())

    @classmethod
    def clip(cls, v) -> "SimplexPoint":
        # Optimizer output can carry rounding residue in the sum.
        v = np.maximum(np.asarray(v, dtype=float), 0.0)
        return cls(v / v.sum())

    def __repr__(self):
        return f"SimplexPoint({self.p.tolist()})"


@dataclass(frozen=True)
class PositivityVerdict:
    """
    :param status: Outcome.
    :param margin: Signed distance of the worst constraint. For the optimizer 1 - max LHS, for closed forms the
        smallest slack of the criterion, for the oracle the smallest value found.
    :param witness: Violating simplex point. Present on every NotPositive verdict of the closed forms and the
        optimizer, except when a negative entry decided it.
    :param method: Label of the deciding criterion.
    :param entry: Offending (i, j) when a negative coefficient decided the verdict.
    """

    status: VerdictStatus
    margin: float
    method: str
    witness: Optional[SimplexPoint] = None
    entry: Optional[Tuple[int, int]] = None

    @property
    def is_positive(self) -> bool:
        return self.status in (VerdictStatus.POSITIVE_CERTIFIED, VerdictStatus.POSITIVE_NUMERICAL)

    @property
    def is_not_positive(self) -> bool:
        return self.status == VerdictStatus.NOT_POSITIVE

    def to_dict(self) -> dict:
        out = {
            "status": self.status.value,
            "margin": float(self.margin),
            "witness": None if self.witness is None else self.witness.p.tolist(),
            "method": self.method,
        }
        if self.entry is not None:
            out["entry"] = list(self.entry)
        return out


def _negative_entry(map: DiagonalTypeMap) -> Optional[Tuple[int, int]]:
    if map.is_nonnegative():
        return None
    i, j = np.unravel_index(np.argmin(map.a), map.a.shape)
    return int(i), int(j)


def _negative_verdict(map: DiagonalTypeMap, method: str) -> PositivityVerdict:
    i, j = _negative_entry(map)
    return PositivityVerdict(VerdictStatus.NOT_POSITIVE, float(map.a[i, j]), method, entry=(i, j))


def in_lhs(map: DiagonalTypeMap, p: SimplexPoint) -> float:
    """
    Σ_i p_i / (p_i + Σ_j a_ij p_j). Terms with p_i = 0 contribute 0, including 0/0.

    :raises ConstraintViolationError: if some a_ij is negative, where the inequality does not apply.
    """
    entry = _negative_entry(map)
    if entry is not None:
        raise ConstraintViolationError("a_ij >= 0", -map.a[entry], entry, NONNEG_TOL)
    if len(p.p) != map.n:
        raise KossakowskiError(f"simplex point has {len(p.p)} entries, map has n = {map.n}")
    return float(in_lhs_batch(map.a[None], p.p[None, None])[0, 0])


def check_circulant_inequality(alphas: Sequence[float], p: SimplexPoint) -> float:
    """
    The left hand side in circulant form, Σ_i p_i / ((α_0 + 1) p_i + Σ_{k>=1} α_k p_{i+k}), indices mod n. Equal to
    :func:`in_lhs` of the circulant map.
    """
    alphas = np.asarray(alphas, dtype=float)
    q = p.p
    if len(q) != len(alphas):
        raise KossakowskiError(f"simplex point has {len(q)} entries, expected {len(alphas)}")
    B = q.copy()
    for k, alpha in enumerate(alphas):
        B = B + alpha * np.roll(q, -k)
    terms = np.where(q > 0, q / np.where(B > 0, B, 1.0), 0.0)
    return float(terms.sum())


def _starts_for(n: int, cfg: OptimizerConfig, seed, index: int) -> np.ndarray:
    return simplex_starts(n, cfg.restarts, np.random.default_rng([seed, index]))


def check_positive_numerical_batch(
    maps: Sequence[DiagonalTypeMap], cfg: Optional[OptimizerConfig] = None, seed=0, offset: int = 0
) -> List[PositivityVerdict]:
    """
    :func:`check_positive_numerical` for several maps of the same dimension in one vectorized ascent. Map k draws its
    random starts from ``default_rng([seed, offset + k])``, so the verdicts do not depend on how a scan is chunked.
    """
    cfg = cfg or OptimizerConfig()
    verdicts: List[Optional[PositivityVerdict]] = [None] * len(maps)
    todo = []
    for k, map in enumerate(maps):
        if _negative_entry(map) is not None:
            verdicts[k] = _negative_verdict(map, "numerical:negative-entry")
        else:
            todo.append(k)
    if not todo:
        return verdicts

    n = maps[todo[0]].n
    if any(maps[k].n != n for k in todo):
        raise KossakowskiError("batched maps must share the same n")
    a = np.stack([maps[k].a for k in todo])
    starts = np.stack([_starts_for(n, cfg, seed, offset + k) for k in todo])
    res = maximize_in_lhs(
        a,
        starts,
        iterations=cfg.iterations,
        step=cfg.step,
        xtol=cfg.xtol,
        ftol=cfg.ftol,
        min_step=cfg.min_step,
    )

    best_value, best_point = res.best_value, res.best_point
    for row, k in enumerate(todo):
        value = float(best_value[row])
        if value > 1.0 + cfg.eps_viol:
            verdicts[k] = PositivityVerdict(
                VerdictStatus.NOT_POSITIVE, 1.0 - value, "numerical", witness=SimplexPoint.clip(best_point[row])
            )
            continue
        unconverged = ~res.converged[row]
        if np.any(res.values[row][unconverged] > 1.0 - cfg.inconclusive_band):
            verdicts[k] = PositivityVerdict(VerdictStatus.INCONCLUSIVE, 1.0 - value, "numerical")
        else:
            verdicts[k] = PositivityVerdict(VerdictStatus.POSITIVE_NUMERICAL, 1.0 - value, "numerical")
    return verdicts


def check_positive_numerical(map: DiagonalTypeMap, cfg: Optional[OptimizerConfig] = None, seed=0) -> PositivityVerdict:
    """
    Maximizes the left hand side over the simplex by multistart projected-gradient ascent.

    A maximum above 1 + eps_viol gives NotPositive with the maximizer as witness. If no restart exceeds it, the map is
    PositiveNumerical with margin 1 - max, unless some restart ran out of iterations within ``inconclusive_band`` of
    1, which gives Inconclusive. A negative coefficient short-circuits to NotPositive with the entry reported.
    """
    return check_positive_numerical_batch([map], cfg, seed)[0]


def _closed_n2(a: np.ndarray) -> float:
    return float(np.sqrt(a[0, 0] * a[1, 1]) + np.sqrt(a[0, 1] * a[1, 0]) - 1.0)


def _closed_n3_circulant(a: float, b: float, c: float) -> float:
    slack = a + b + c - 2.0
    if a <= 1.0:
        slack = min(slack, b * c - (1.0 - a) ** 2)
    return float(slack)


def _find_witness(map: DiagonalTypeMap, eps_viol: float) -> Optional[SimplexPoint]:
    uniform = np.full(map.n, 1.0 / map.n)
    if in_lhs_batch(map.a[None], uniform[None, None])[0, 0] > 1.0 + eps_viol:
        return SimplexPoint(uniform)
    cfg = OptimizerConfig(restarts=50)
    res = maximize_in_lhs(map.a[None], _starts_for(map.n, cfg, 0, 0)[None], iterations=cfg.iterations)
    if res.best_value[0] > 1.0 + eps_viol:
        return SimplexPoint.clip(res.best_point[0])
    return None


def check_positive_closed(map: DiagonalTypeMap) -> Optional[PositivityVerdict]:
    """
    Closed-form criteria: for n=2 positivity iff √(a_00 a_11) + √(a_01 a_10) >= 1; for n=3 circulant maps with first
    row (a, b, c) iff a + b + c >= 2 and, when a <= 1, bc >= (1-a)². For a > 1 the sum condition alone decides.

    A margin below -1e-9 on a map that :func:`check_cp` accepts is certified as well (method ``closed:cp``), so the
    two criteria never contradict each other at the boundary. Negative coefficients give NotPositive with the entry.
    Otherwise NotPositive always carries a witness that violates the inequality by more than eps_viol; when the
    violation is too small for a witness to exist the verdict is Inconclusive.

    :return: The verdict, or None when no closed form applies.
    """
    if map.n == 2:
        method = "closed:n2"
    elif map.n == 3 and is_circulant(map):
        method = "closed:n3-circulant"
    else:
        return None
    if _negative_entry(map) is not None:
        return _negative_verdict(map, method)

    if map.n == 2:
        margin = _closed_n2(map.a)
    else:
        margin = _closed_n3_circulant(*map.a[0])
    if margin >= -CLOSED_TOL:
        return PositivityVerdict(VerdictStatus.POSITIVE_CERTIFIED, margin, method)
    if check_cp(map, cross_check=False):
        return PositivityVerdict(VerdictStatus.POSITIVE_CERTIFIED, margin, "closed:cp")
    witness = _find_witness(map, OptimizerConfig().eps_viol)
    if witness is None:
        logger.info("%s margin %.3e but no simplex point violates by more than eps_viol", method, margin)
        return PositivityVerdict(VerdictStatus.INCONCLUSIVE, margin, method)
    return PositivityVerdict(VerdictStatus.NOT_POSITIVE, margin, method, witness=witness)


def check_cp(map: DiagonalTypeMap, cross_check: bool = True) -> bool:
    """
    Complete positivity: the D-matrix (d_ii = a_ii, d_ij = -1) is PSD and every off-diagonal a_ij is nonnegative.
    The Choi matrix is D on span{e_i ⊗ e_i} plus the uncoupled diagonal entries a_ij (i != j), so this is exactly
    Choi positivity. For n=2 it reduces to a_ij >= 0 and a_00 a_11 >= 1.

    :param cross_check: Compare against the Choi matrix eigenvalues and, for nonnegative circulant maps, against
        α_0 >= n-1. Comparisons inside a 1e-7 band around the boundary are skipped.
    :raises ConsistencyError: if a cross-check disagrees.
    """
    d_psd, d_min = is_psd(d_matrix(map))
    off = map.a[~np.eye(map.n, dtype=bool)]
    off_ok = bool(np.all(off >= -NONNEG_TOL))
    cp = d_psd and off_ok
    if not cross_check:
        return cp

    choi_psd, choi_min = is_psd(choi_matrix(map))
    if abs(choi_min) > CP_CROSS_CHECK_BAND and choi_psd != cp:
        raise ConsistencyError(f"D-matrix criterion says CP={cp} but the Choi matrix has minimum eigenvalue {choi_min}")
    if map.is_nonnegative() and is_circulant(map):
        alpha0 = float(map.a[0, 0])
        if abs(alpha0 - (map.n - 1)) > CP_CROSS_CHECK_BAND and (alpha0 >= map.n - 1) != cp:
            raise ConsistencyError(f"D-matrix criterion says CP={cp} but alpha_0 = {alpha0} for n = {map.n}")
    logger.debug("check_cp n=%d: D min eigenvalue %.3e, Choi min eigenvalue %.3e", map.n, d_min, choi_min)
    return cp


def check_indecomposable_n3(a: float, b: float, c: float) -> bool:
    """
    A positive n=3 circulant map with first row (a, b, c) is indecomposable iff 4bc < (2-a)².

    :raises NotPositiveError: if the triple is not positive, where indecomposability is undefined.
    """
    verdict = check_positive_closed(CirculantParams(3, [a, b, c]).to_map())
    if not verdict.is_positive:
        raise NotPositiveError(f"({a}, {b}, {c}) is not a positive map (margin {verdict.margin:.3e})")
    return bool((2.0 - a) ** 2 - 4.0 * b * c > CLOSED_TOL)


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """
    All points of the simplex with coordinates in (1/resolution)ℤ, by stars and bars.
    """
    points = []
    for bars in itertools.combinations(range(resolution + n - 1), n - 1):
        edges = np.array((-1,) + bars + (resolution + n - 1,))
        points.append(np.diff(edges) - 1)
    return np.array(points, dtype=float) / resolution


@dataclass
class OracleResult:
    """
    :param violation: Whether some value fell below -eps.
    :param min_value: Smallest <x|Λ(|y><y|)|x> found.
    :param x: Argmin x.
    :param y: Argmin y.
    :param evaluated: Number of (x, y) pairs evaluated.
    """

    violation: bool
    min_value: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    evaluated: int = 0

    def to_dict(self) -> dict:
        return {
            "violation": self.violation,
            "min_value": float(self.min_value),
            "x": [[float(z.real), float(z.imag)] for z in self.x],
            "y": [[float(z.real), float(z.imag)] for z in self.y],
            "evaluated": int(self.evaluated),
        }


def _pair_values(map: DiagonalTypeMap, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    Q = y[:, :, None] * y.conj()[:, None, :]
    L = apply(map, Q)
    return np.einsum("bi,bij,bj->b", x.conj(), L, x).real


class _Argmin:
    def __init__(self):
        self.value = np.inf
        self.x = self.y = None
        self.evaluated = 0

    def update(self, values, x, y):
        self.evaluated += len(values)
        k = int(np.argmin(values))
        if values[k] < self.value:
            self.value = float(values[k])
            self.x, self.y = x[k].copy(), y[k].copy()


def oracle_positivity(
    map: DiagonalTypeMap, samples: Optional[int] = None, seed=0, cfg: Optional[OracleConfig] = None
) -> OracleResult:
    """
    Brute-force positivity test straight from the definition: evaluates <x|Λ(|y><y|)|x> through :func:`apply` for
    random complex unit vectors x, y and for real nonnegative x, y on a simplex grid (x_i = √p_i).

    The grid resolution is lowered until the grid has at most ``grid_points_max`` points; all pairs are evaluated
    when there are at most 10⁶ of them, otherwise only the diagonal x = y.

    :param samples: Random pairs, defaults to ``cfg.samples``.
    """
    cfg = cfg or OracleConfig()
    samples = cfg.samples if samples is None else samples
    n = map.n
    rng = np.random.default_rng(seed)
    best = _Argmin()

    for start in range(0, samples, cfg.batch_size):
        size = min(cfg.batch_size, samples - start)
        xy = rng.standard_normal((2, size, n)) + 1j * rng.standard_normal((2, size, n))
        xy /= np.linalg.norm(xy, axis=-1, keepdims=True)
        best.update(_pair_values(map, xy[0], xy[1]), xy[0], xy[1])

    resolution = cfg.grid_resolution
    while resolution > 1 and scipy.special.comb(resolution + n - 1, n - 1, exact=True) > cfg.grid_points_max:
        resolution -= 1
    grid = np.sqrt(simplex_grid(n, resolution)).astype(complex)
    if len(grid) ** 2 <= GRID_PAIRS_MAX:
        ix, iy = np.meshgrid(np.arange(len(grid)), np.arange(len(grid)), indexing="ij")
        ix, iy = ix.reshape(-1), iy.reshape(-1)
    else:
        ix = iy = np.arange(len(grid))
    for start in range(0, len(ix), cfg.batch_size):
        x, y = grid[ix[start : start + cfg.batch_size]], grid[iy[start : start + cfg.batch_size]]
        best.update(_pair_values(map, x, y), x, y)

    logger.debug("oracle n=%d: %d pairs, grid resolution %d, min %.3e", n, best.evaluated, resolution, best.value)
    return OracleResult(best.value < -cfg.eps, best.value, best.x, best.y, best.evaluated)


@dataclass
class CheckReport:
    """
    Everything ``check`` reports for one map.

    :param verdict: Final verdict. A conclusive closed form overrides the numerical verdict.
    :param cp: Complete positivity.
    :param indecomposable: For positive n=3 circulant maps, else None.
    """

    verdict: PositivityVerdict
    cp: bool
    indecomposable: Optional[bool] = None
    closed: Optional[PositivityVerdict] = None
    numerical: Optional[PositivityVerdict] = None
    oracle: Optional[OracleResult] = None

    def to_dict(self) -> dict:
        out = self.verdict.to_dict()
        out["cp"] = self.cp
        out["indecomposable"] = self.indecomposable
        if self.closed is not None and self.numerical is not None:
            out["closed"] = self.closed.to_dict()
            out["numerical"] = self.numerical.to_dict()
        if self.oracle is not None:
            out["oracle"] = self.oracle.to_dict()
        return out


METHODS = ("closed", "numerical", "oracle", "all")


def verdicts_disagree(closed: PositivityVerdict, numerical: PositivityVerdict, margin_band: float) -> bool:
    """
    Positive against NotPositive with a closed-form margin outside the band. Inconclusive never disagrees.
    """
    if abs(closed.margin) <= margin_band:
        return False
    return (closed.is_positive and numerical.is_not_positive) or (closed.is_not_positive and numerical.is_positive)


def check_positive(
    map: DiagonalTypeMap,
    method: str = "all",
    optimizer: Optional[OptimizerConfig] = None,
    oracle: Optional[OracleConfig] = None,
    samples: Optional[int] = None,
    seed=0,
    margin_band: float = 1e-4,
) -> CheckReport:
    """
    Runs the requested deciders and reconciles them.

    :param method: ``closed``, ``numerical``, ``oracle`` or ``all``.
    :raises KossakowskiError: for ``closed`` on a map without a closed form.
    :raises ConsistencyError: when closed and numerical verdicts disagree outside ``margin_band``, when the oracle
        finds a violation on a map judged positive, or when a CP map is judged not positive outside ``margin_band``.
    """
    if method not in METHODS:
        raise KossakowskiError(f"method must be one of {METHODS}, got {method!r}")
    closed = numerical = oracle_result = None

    if method in ("closed", "all"):
        closed = check_positive_closed(map)
        if closed is None and method == "closed":
            raise KossakowskiError(f"no closed-form criterion for n = {map.n} non-circulant maps")
    if method in ("numerical", "all"):
        numerical = check_positive_numerical(map, optimizer, seed)
    if method in ("oracle", "all"):
        oracle_result = oracle_positivity(map, samples, seed, oracle)

    if closed is not None and numerical is not None and verdicts_disagree(closed, numerical, margin_band):
        raise ConsistencyError(
            f"closed form says {closed.status.value} (margin {closed.margin:.3e}) but the optimizer says "
            f"{numerical.status.value} (margin {numerical.margin:.3e})"
        )

    verdict = closed if closed is not None and closed.status != VerdictStatus.INCONCLUSIVE else numerical or closed
    if verdict is None:
        status = VerdictStatus.NOT_POSITIVE if oracle_result.violation else VerdictStatus.POSITIVE_NUMERICAL
        verdict = PositivityVerdict(status, oracle_result.min_value, "oracle")
    elif oracle_result is not None and oracle_result.violation and verdict.is_positive:
        raise ConsistencyError(
            f"{verdict.method} says {verdict.status.value} but the oracle found <x|L(yy*)|x> = {oracle_result.min_value:.3e}"
        )

    cp = check_cp(map)
    if cp and verdict.is_not_positive and abs(verdict.margin) > margin_band:
        raise ConsistencyError(
            f"map is completely positive but {verdict.method} says NotPositive (margin {verdict.margin:.3e})"
        )

    indecomposable = None
    if map.n == 3 and is_circulant(map) and verdict.is_positive:
        if (closed or check_positive_closed(map)).is_positive:
            indecomposable = check_indecomposable_n3(*map.a[0])
    return CheckReport(verdict, cp, indecomposable, closed, numerical, oracle_result)
