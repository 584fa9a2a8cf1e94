import os

import pandas as pd
import pytest

from experiments import (
    EXPERIMENTS,
    AdmissibleSetExperiment,
    CirculantCPExperiment,
    ClosedFormAgreementExperiment,
    ConstructionValidityExperiment,
    EquiangularExperiment,
    FrameGeometryExperiment,
    InverseExperiment,
    PseudoRotationExperiment,
    TorusRoundtripExperiment,
    run_experiments,
    select_experiments,
)


def summary_of(exp):
    return dict((row[0], row[1]) for row in exp.summary())


def test_experiment_registry(config):
    assert set(EXPERIMENTS) == {
        "AdmissibleSetExperiment",
        "CirculantCPExperiment",
        "ClosedFormAgreementExperiment",
        "ConstructionValidityExperiment",
        "EquiangularExperiment",
        "FrameGeometryExperiment",
        "InverseExperiment",
        "PseudoRotationExperiment",
        "TorusRoundtripExperiment",
    }
    assert len(select_experiments("all", config, 3)) == 9
    # the closed forms exist for n = 2 and 3 only
    assert ClosedFormAgreementExperiment not in [type(e) for e in select_experiments("all", config, 4)]
    picked = select_experiments("InverseExperiment,EquiangularExperiment", config, 4)
    assert [type(e) for e in picked] == [InverseExperiment, EquiangularExperiment]
    with pytest.raises(ValueError, match="unknown experiment"):
        select_experiments("Nope", config, 3)
    with pytest.raises(ValueError, match="n = 2 or 3"):
        ClosedFormAgreementExperiment(config, 4)


def test_pseudo_rotation_branches(config):
    exp = PseudoRotationExperiment(config, 4)
    run_experiments([exp], 5, seed=0, progress=False)
    assert exp.samples_seen() == 5
    summary = summary_of(exp)
    assert summary["det R = +1: det b values"] == [-1.0]
    assert summary["det R = -1: det b values"] == [1.0]
    assert summary["max |S^T R S - b|"] < 1e-12
    assert summary["column swap changes branch"] == "10/10"
    assert "NotPositive" not in summary["det R = +1: verdicts"]
    assert "NotPositive" not in summary["det R = -1: verdicts"]


def test_inverse_experiment(config):
    exp = InverseExperiment(config, 3)
    run_experiments([exp], 4, seed=1, progress=False)
    dat = exp.load()
    assert sum(dat["verdicts"].values()) == 4
    assert set(dat["methods"]) <= {"closed:n3-circulant", "closed:cp", "numerical", "numerical:negative-entry"}


def test_admissible_set_exports_csv(config):
    exp = AdmissibleSetExperiment(config)
    assert exp.n == 5
    run_experiments([exp], 6, seed=2, progress=False)
    frame = pd.read_csv(exp._exp_cache_path() + ".csv")
    assert len(frame) == 6
    assert frame["sum_residual"].max() < 1e-12
    assert frame["orthogonality_residual"].max() < 1e-12


def test_equiangular_experiment(config):
    exp = EquiangularExperiment(config, 5)
    run_experiments([exp], 3, seed=3, progress=False)
    summary = summary_of(exp)
    assert summary["max osid residual"] < 1e-9
    assert summary["max row/column sum residual"] < 1e-10
    assert summary["min entry"] >= -1e-12


def test_experiments_do_not_share_streams(config):
    first, second = EquiangularExperiment(config, 4), EquiangularExperiment(config, 4)
    run_experiments([first, second], 2, seed=4, progress=False)
    assert first.osid_residual != second.osid_residual or first.min_entry != second.min_entry
    assert os.path.exists(first._exp_cache_path())


@pytest.mark.parametrize("n", [2, 3])
def test_closed_form_agreement_experiment(config, n):
    exp = ClosedFormAgreementExperiment(config, n)
    run_experiments([exp], 300, seed=5, progress=False)
    summary = summary_of(exp)
    assert summary["samples"] == 300
    assert summary["failures"] == 0
    assert summary["optimizer seconds"] >= 0


@pytest.mark.parametrize("n", [2, 4, 6])
def test_construction_validity_experiment(config, n):
    exp = ConstructionValidityExperiment(config, n)
    run_experiments([exp], 3, seed=6, progress=False)
    summary = summary_of(exp)
    assert summary["failures"] == 0
    assert summary["min entry"] >= -1e-12
    assert summary["max osid residual"] < 1e-9
    assert summary["min oracle value"] >= -1e-7
    assert "NotPositive" not in summary["verdicts"]


@pytest.mark.parametrize("n", [3, 4, 5, 8, 9])
def test_torus_roundtrip_experiment(config, n):
    exp = TorusRoundtripExperiment(config, n)
    run_experiments([exp], 20, seed=7, progress=False)
    summary = summary_of(exp)
    assert summary["samples"] == 20
    assert summary["max roundtrip error"] < 1e-12
    assert summary["max |det a| - (n-1)"] <= 1e-9
    assert summary["failures"] == 0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_circulant_cp_experiment(config, n):
    exp = CirculantCPExperiment(config, n)
    run_experiments([exp], 200, seed=8, progress=False)
    summary = summary_of(exp)
    assert summary["samples"] == 200
    assert summary["failures"] == 0


@pytest.mark.parametrize("n", range(2, 11))
def test_frame_geometry_experiment(config, n):
    exp = FrameGeometryExperiment(config, n)
    run_experiments([exp], 3, seed=9, progress=False)
    summary = summary_of(exp)
    assert summary["samples"] == 3
    assert summary["max Gram residual"] < 1e-12
    assert summary["failures"] == 0
