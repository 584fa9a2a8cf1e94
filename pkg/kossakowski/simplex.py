# Projection onto the probability simplex and a batched multistart projected-gradient ascent of
#
#     f(p) = Σ_i p_i / B_i(p),    B_i(p) = p_i + Σ_j a_ij p_j
#
# over the simplex, for a stack of coefficient matrices at once.
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Floor for B_i in the gradient, where p_i = 0 and row i of a vanishes on the support of p.
B_FLOOR = 1e-12
MAX_STEP = 4.0


def project_simplex(v: np.ndarray) -> np.ndarray:
    """
    Euclidean projection onto {p : p >= 0, Σ p = 1} along the last axis, by the sort and threshold rule.

    :param v: Array of shape (..., n).
    :return: Projected array of the same shape.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    cond = u - css / np.arange(1, n + 1) > 0
    # Index of the last True entry, which exists since cond[..., 0] always holds.
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(v - theta, 0.0)


def in_lhs_batch(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    f(p) for coefficient matrices a of shape (M, n, n) and points p of shape (M, R, n). Terms with p_i = 0 contribute 0,
    0/0 included.

    :return: Values of shape (M, R).
    """
    B = p + np.einsum("mij,mrj->mri", a, p)
    safe = np.where(B > 0, B, 1.0)
    return np.where(p > 0, p / safe, 0.0).sum(axis=-1)


def in_lhs_gradient(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    ∂f/∂p_k = 1/B_k - w_k - Σ_i a_ik w_i with w_i = p_i / B_i², shapes as in :func:`in_lhs_batch`.
    """
    B = p + np.einsum("mij,mrj->mri", a, p)
    inv_b = 1.0 / np.maximum(B, B_FLOOR)
    w = np.where(p > 0, p * inv_b**2, 0.0)
    return inv_b - w - np.einsum("mik,mri->mrk", a, w)


def simplex_starts(n: int, restarts: int, rng: np.random.Generator) -> np.ndarray:
    """
    Starting points in a fixed order: the barycenter, the vertices, the edge midpoints, then Dirichlet(1, ..., 1)
    draws up to ``restarts`` points. Structured points that repeat an earlier one (for n=2 the edge midpoint is the
    barycenter) are skipped, structured points beyond ``restarts`` are dropped.

    :return: Array of shape (restarts, n).
    """
    eye = np.eye(n)
    rows, cols = np.triu_indices(n, k=1)
    structured = np.concatenate([np.full((1, n), 1.0 / n), eye, (eye[rows] + eye[cols]) / 2])
    _, first = np.unique(structured, axis=0, return_index=True)
    starts = structured[np.sort(first)][:restarts]
    missing = restarts - len(starts)
    if missing > 0:
        starts = np.concatenate([starts, rng.dirichlet(np.ones(n), size=missing)])
    return starts


@dataclass
class AscentResult:
    """
    Outcome of :func:`maximize_in_lhs` for M maps with R restarts each.

    :param values: Final objective value per restart, shape (M, R).
    :param points: Final point per restart, shape (M, R, n).
    :param converged: Whether the restart met a stopping criterion before the iteration budget ran out, shape (M, R).
    :param steps: Iterations each restart took part in, shape (M, R).
    :param iterations: Number of iterations of the longest running restart.
    """

    values: np.ndarray
    points: np.ndarray
    converged: np.ndarray
    steps: np.ndarray
    iterations: int

    @property
    def best_index(self) -> np.ndarray:
        # argmax returns the first maximum, so ties resolve by restart index
        return np.argmax(self.values, axis=1)

    @property
    def best_value(self) -> np.ndarray:
        return self.values[np.arange(len(self.values)), self.best_index]

    @property
    def best_point(self) -> np.ndarray:
        return self.points[np.arange(len(self.points)), self.best_index]


def maximize_in_lhs(
    a: np.ndarray,
    starts: np.ndarray,
    iterations: int = 500,
    step: float = 1.0,
    xtol: float = 1e-12,
    ftol: float = 1e-15,
    min_step: float = 1e-14,
) -> AscentResult:
    """
    Projected-gradient ascent of f from every starting point, for all maps simultaneously.

    Each restart keeps its own step length and moves by that length along the unit gradient. An ascent step that does
    not decrease f is accepted and the step grows by 1.5; otherwise it shrinks by 0.5. A restart stops once an
    accepted move is shorter than ``xtol``, an accepted gain is below ``ftol`` or its step falls under ``min_step``.
    Stopped restarts leave the working set, so a few slow restarts do not keep the whole batch iterating.

    :param a: Nonnegative coefficient matrices, shape (M, n, n).
    :param starts: Points on the simplex, shape (M, R, n) or (R, n) for the same starts on every map.
    :param iterations: Iteration budget.
    :param step: Initial step length.
    """
    a = np.asarray(a, dtype=float)
    M, n, _ = a.shape
    P = np.broadcast_to(np.asarray(starts, dtype=float), (M,) + np.shape(starts)[-2:])
    R = P.shape[1]
    # Restarts are flattened to rows; owner[k] is the map of row k.
    p_all = P.reshape(M * R, n).copy()
    f_all = in_lhs_batch(a, P).reshape(M * R)
    t_all = np.full(M * R, float(step))
    done = np.zeros(M * R, dtype=bool)
    steps = np.zeros(M * R, dtype=int)
    owner = np.repeat(np.arange(M), R)
    active = np.arange(M * R)

    it = 0
    for it in range(1, iterations + 1):
        a_act = a[owner[active]]
        p, f, t = p_all[active], f_all[active], t_all[active]
        g = in_lhs_gradient(a_act, p[:, None])[:, 0]
        gnorm = np.linalg.norm(g, axis=-1)
        gnorm = np.where(gnorm > 0, gnorm, 1.0)
        q = project_simplex(p + (t / gnorm)[:, None] * g)
        fq = in_lhs_batch(a_act, q[:, None])[:, 0]

        accept = fq >= f
        move = np.abs(q - p).max(axis=-1)
        gain = fq - f
        p_all[active[accept]] = q[accept]
        f_all[active[accept]] = fq[accept]
        t = np.where(accept, np.minimum(t * 1.5, MAX_STEP), t * 0.5)
        t_all[active] = t
        steps[active] += 1

        stop = np.where(accept, (move < xtol) | (gain < ftol), t < min_step)
        done[active[stop]] = True
        active = active[~stop]
        if not len(active):
            break

    logger.debug(
        "ascent over %d maps x %d restarts: %d iterations, %d restart steps, %d restarts unconverged",
        M,
        R,
        it,
        int(steps.sum()),
        int((~done).sum()),
    )
    return AscentResult(
        values=f_all.reshape(M, R),
        points=p_all.reshape(M, R, n),
        converged=done.reshape(M, R),
        steps=steps.reshape(M, R),
        iterations=int(steps.max(initial=0)),
    )
