import numpy as np
import pandas as pd
import pytest

from analysis.scan_summary import summarize
from kossakowski.config import OptimizerConfig, ScanConfig
from kossakowski.errors import KossakowskiError
from kossakowski.scan import COLUMNS, sample_n3, scan_grid, scan_n3, scan_points

# step 0.5 keeps every closed-form margin either 0 or at least 0.25 away from it
SMALL_SCAN = ScanConfig(a_max=3.0, resolution=7, n_jobs=1, chunk_size=64)


def row_at(frame, a, b, c):
    match = frame[(frame["a"] == a) & (frame["b"] == b) & (frame["c"] == c)]
    assert len(match) == 1
    return match.iloc[0]


def test_scan_grid_order():
    grid = scan_grid(ScanConfig(a_max=1.0, resolution=2))
    assert grid.tolist() == [
        [0, 0, 0],
        [0, 0, 1],
        [0, 1, 0],
        [0, 1, 1],
        [1, 0, 0],
        [1, 0, 1],
        [1, 1, 0],
        [1, 1, 1],
    ]


@pytest.fixture(scope="module")
def numerical_scan():
    return scan_n3(SMALL_SCAN, "numerical", optimizer=OptimizerConfig(restarts=40, iterations=300), seed=0)


def test_scan_has_no_disagreements(numerical_scan):
    assert list(numerical_scan.frame.columns) == COLUMNS
    assert len(numerical_scan.frame) == 7**3
    assert numerical_scan.disagreements == 0
    assert not numerical_scan.frame["disagreement"].any()


def test_scan_goldens(numerical_scan):
    frame = numerical_scan.frame
    row = row_at(frame, 2.0, 0.0, 0.0)
    assert row["closed"] == "PositiveCertified"
    assert row["cp"] and not row["indecomposable"]

    row = row_at(frame, 1.0, 1.0, 0.0)
    assert row["closed"] == "PositiveCertified"
    assert not row["cp"] and row["indecomposable"]

    row = row_at(frame, 0.0, 0.0, 0.0)
    assert row["closed"] == "NotPositive"
    assert row["numerical"] == "NotPositive"
    assert not row["cp"] and not row["indecomposable"]


def test_scan_regions_match_closed_shapes(numerical_scan):
    summary = summarize(numerical_scan.frame)
    assert summary["Points"] == 343
    assert summary["CP != (a >= 2)"] == 0
    assert summary["Indecomposable mismatches"] == 0
    assert summary["Disagreements"] == 0


def test_scan_does_not_depend_on_chunking(fast_optimizer):
    points = scan_grid(ScanConfig(a_max=2.0, resolution=4))
    first = scan_points(points, ScanConfig(n_jobs=1, chunk_size=5), "numerical", fast_optimizer, seed=3)
    second = scan_points(points, ScanConfig(n_jobs=1, chunk_size=64), "numerical", fast_optimizer, seed=3)
    pd.testing.assert_frame_equal(first.frame, second.frame, check_exact=False)


def test_scan_closed_mode_skips_optimizer():
    result = scan_n3(ScanConfig(a_max=3.0, resolution=3, n_jobs=1), "closed")
    assert result.frame["numerical"].isna().all()
    assert result.frame["oracle_min"].isna().all()
    assert result.inconclusive == 0


def test_scan_oracle_mode(fast_oracle):
    points = np.array([[1.0, 1.0, 0.0], [0.5, 0.5, 0.5]])
    result = scan_points(points, ScanConfig(n_jobs=1), "oracle", oracle=fast_oracle, oracle_samples=500)
    assert result.frame["oracle_min"].iloc[0] >= -1e-9
    assert result.frame["oracle_min"].iloc[1] < 0
    assert result.disagreements == 0


def test_sample_n3(fast_optimizer):
    cfg = ScanConfig(a_max=3.0, n_jobs=1)
    result = sample_n3(20, cfg, "numerical", seed=9, optimizer=fast_optimizer)
    assert len(result.frame) == 20
    assert result.frame[["a", "b", "c"]].to_numpy().max() <= 3.0
    again = sample_n3(20, cfg, "numerical", seed=9, optimizer=fast_optimizer)
    pd.testing.assert_frame_equal(result.frame, again.frame)
    with pytest.raises(KossakowskiError):
        sample_n3(0, cfg)


def test_scan_rejects_unknown_mode():
    with pytest.raises(KossakowskiError, match="scan mode"):
        scan_points(np.zeros((1, 3)), mode="fast")


def test_scan_config_validation():
    with pytest.raises(ValueError, match="resolution"):
        ScanConfig(resolution=1)
    with pytest.raises(ValueError, match="a_max"):
        ScanConfig(a_max=0.0)
