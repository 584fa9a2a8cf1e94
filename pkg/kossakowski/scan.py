# Region scans over n=3 circulant maps with first row (a, b, c): closed form against optimizer and oracle, plus the
# CP and indecomposability flags, one row per point in deterministic order.
import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import joblib
import numpy as np
import pandas as pd

from kossakowski.circulant_spectrum import CirculantParams
from kossakowski.config import OptimizerConfig, OracleConfig, ScanConfig
from kossakowski.errors import KossakowskiError
from kossakowski.positivity import (
    VerdictStatus,
    check_cp,
    check_indecomposable_n3,
    check_positive_closed,
    check_positive_numerical_batch,
    oracle_positivity,
    verdicts_disagree,
)

logger = logging.getLogger(__name__)

MODES = ("closed", "numerical", "oracle", "all")
COLUMNS = [
    "a",
    "b",
    "c",
    "closed",
    "numerical",
    "margin",
    "numerical_margin",
    "oracle_min",
    "indecomposable",
    "cp",
    "disagreement",
]


@dataclass
class ScanResult:
    """
    :param frame: One row per point, columns :data:`COLUMNS`, in input order.
    :param disagreements: Rows where the closed form and the optimizer (or the oracle) disagree outside the margin
        band.
    :param inconclusive: Rows where the optimizer gave no verdict.
    """

    frame: pd.DataFrame
    disagreements: int
    inconclusive: int


def scan_grid(cfg: ScanConfig) -> np.ndarray:
    """
    The resolution³ grid over [0, a_max]³ in row-major (a, b, c) order.
    """
    axis = np.linspace(0.0, cfg.a_max, cfg.resolution)
    return np.array(list(itertools.product(axis, axis, axis)))


def _scan_chunk(points, offset, mode, margin_band, optimizer, oracle, oracle_samples, seed):
    maps = [CirculantParams(3, p).to_map() for p in points]
    numerical = [None] * len(maps)
    if mode in ("numerical", "all"):
        numerical = check_positive_numerical_batch(maps, optimizer, seed, offset)

    rows = []
    for k, (point, map) in enumerate(zip(points, maps)):
        closed = check_positive_closed(map)
        row = dict(zip(("a", "b", "c"), (float(x) for x in point)))
        row["closed"] = closed.status.value
        row["margin"] = closed.margin
        row["numerical"] = None if numerical[k] is None else numerical[k].status.value
        row["numerical_margin"] = np.nan if numerical[k] is None else numerical[k].margin

        disagreement = numerical[k] is not None and verdicts_disagree(closed, numerical[k], margin_band)
        row["oracle_min"] = np.nan
        if mode in ("oracle", "all"):
            result = oracle_positivity(map, oracle_samples, [seed, offset + k], oracle)
            row["oracle_min"] = result.min_value
            if result.violation and closed.is_positive and abs(closed.margin) > margin_band:
                disagreement = True

        row["indecomposable"] = bool(closed.is_positive and check_indecomposable_n3(*point))
        row["cp"] = check_cp(map)
        row["disagreement"] = bool(disagreement)
        rows.append(row)
    return rows


def scan_points(
    points: np.ndarray,
    cfg: Optional[ScanConfig] = None,
    mode: str = "all",
    optimizer: Optional[OptimizerConfig] = None,
    oracle: Optional[OracleConfig] = None,
    oracle_samples: Optional[int] = None,
    seed=0,
    verbose: int = 0,
) -> ScanResult:
    """
    Checks every (a, b, c) row of ``points``. Chunks of ``cfg.chunk_size`` points run in parallel with joblib; point
    k draws its randomness from ``[seed, k]`` so the result does not depend on chunking or scheduling.

    :param mode: ``closed`` computes the closed form only, ``numerical`` adds the optimizer, ``oracle`` adds the
        oracle, ``all`` adds both. The CP and indecomposability flags are always computed.
    """
    if mode not in MODES:
        raise KossakowskiError(f"scan mode must be one of {MODES}, got {mode!r}")
    cfg = cfg or ScanConfig()
    points = np.asarray(points, dtype=float)
    chunks = [(points[i : i + cfg.chunk_size], i) for i in range(0, len(points), cfg.chunk_size)]
    logger.info("scanning %d points in %d chunks, mode %s", len(points), len(chunks), mode)

    parts = joblib.Parallel(n_jobs=cfg.n_jobs, verbose=verbose)(
        joblib.delayed(_scan_chunk)(
            chunk, offset, mode, cfg.margin_band, optimizer, oracle, oracle_samples, seed
        )
        for chunk, offset in chunks
    )
    frame = pd.DataFrame([row for part in parts for row in part], columns=COLUMNS)
    disagreements = int(frame["disagreement"].sum())
    inconclusive = int((frame["numerical"] == VerdictStatus.INCONCLUSIVE.value).sum())
    if disagreements:
        logger.warning("%d closed-form disagreements outside the margin band %g", disagreements, cfg.margin_band)
    return ScanResult(frame, disagreements, inconclusive)


def scan_n3(cfg: Optional[ScanConfig] = None, mode: str = "all", **kwargs) -> ScanResult:
    """
    Grid scan of [0, a_max]³ at ``cfg.resolution`` points per axis, reproducing the positivity, CP and
    indecomposability regions. Keyword arguments go to :func:`scan_points`.
    """
    cfg = cfg or ScanConfig()
    return scan_points(scan_grid(cfg), cfg, mode, **kwargs)


def sample_n3(count: int, cfg: Optional[ScanConfig] = None, mode: str = "all", seed=0, **kwargs) -> ScanResult:
    """
    Random variant of :func:`scan_n3`: ``count`` points uniform in [0, a_max]³ drawn from ``default_rng(seed)``.
    """
    if count < 1:
        raise KossakowskiError(f"sample count must be at least 1, got {count}")
    cfg = cfg or ScanConfig()
    points = np.random.default_rng(seed).uniform(0.0, cfg.a_max, size=(count, 3))
    return scan_points(points, cfg, mode, seed=seed, **kwargs)
