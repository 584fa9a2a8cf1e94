import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

import maps
from kossakowski.circulant_spectrum import CirculantParams
from kossakowski.config import OptimizerConfig, load_config
from kossakowski.construction import OrthogonalMatrix, kossakowski_from_orthogonal, random_orthogonal
from kossakowski.io import map_from_json, map_to_json, orthogonal_to_json

FAST_CONFIG = """\
results_path: {results}
random_seed: 0
optimizer:
  restarts: 20
  iterations: 200
oracle:
  samples: 500
  grid_resolution: 6
scan:
  n_jobs: 1
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(FAST_CONFIG.format(results=tmp_path / "results"))
    return str(path)


def run(capsys, config_file, *argv):
    code = maps.main(["--config", config_file, *argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_construct_rotation_zero(capsys, config_file):
    code, out, _ = run(capsys, config_file, "construct", "kossakowski", "--n", "3", "--rotation", "0")
    assert code == maps.EXIT_OK
    map = map_from_json(out)
    assert_allclose(map.a[0], [4 / 3, 1 / 3, 1 / 3], atol=1e-12)


def test_construct_matches_library_for_seed(capsys, config_file):
    code, out, _ = run(capsys, config_file, "construct", "kossakowski", "--n", "4", "--seed", "5")
    assert code == maps.EXIT_OK
    expected = kossakowski_from_orthogonal(random_orthogonal(3, np.random.default_rng(5)))
    assert map_from_json(out) == expected


def test_construct_frame_and_circulant(capsys, config_file, tmp_path):
    out_file = tmp_path / "frame.json"
    code, _, _ = run(capsys, config_file, "construct", "frame", "--n", "3", "--out", str(out_file))
    assert code == maps.EXIT_OK
    assert_allclose(map_from_json(out_file.read_text()).a[0], [4 / 3, 1 / 3, 1 / 3], atol=1e-15)

    code, out, _ = run(capsys, config_file, "construct", "circulant", "--n", "4", "--phases", "0.5", "--sign", "-1")
    assert code == maps.EXIT_OK
    assert map_from_json(out).a[0, 1] + map_from_json(out).a[0, 3] == pytest.approx(2.0)


def test_construct_from_b(capsys, config_file, tmp_path):
    good = tmp_path / "b.json"
    good.write_text(orthogonal_to_json(OrthogonalMatrix(3, -np.eye(3))))
    code, out, _ = run(capsys, config_file, "construct", "from-b", str(good))
    assert code == maps.EXIT_OK
    assert_allclose(map_from_json(out).a, np.ones((3, 3)) - np.eye(3))

    bad = tmp_path / "bad.json"
    bad.write_text(orthogonal_to_json(OrthogonalMatrix(2, np.eye(2))))
    code, _, err = run(capsys, config_file, "construct", "from-b", str(bad))
    assert code == maps.EXIT_CONSTRAINT
    assert "row sums" in err


def test_check_json(capsys, config_file, tmp_path):
    path = tmp_path / "choi.json"
    path.write_text(map_to_json(CirculantParams.from_alphas([1, 1, 0]).to_map()))
    code, out, _ = run(capsys, config_file, "check", str(path), "--method", "closed", "--json")
    assert code == maps.EXIT_OK
    report = json.loads(out)
    assert report["status"] == "PositiveCertified"
    assert report["method"] == "closed:n3-circulant"
    assert report["cp"] is False
    assert report["indecomposable"] is True


def test_check_all_on_constructed_rotation_map(capsys, config_file, tmp_path):
    path = tmp_path / "abc0.json"
    code, _, _ = run(capsys, config_file, "construct", "kossakowski", "--n", "3", "--rotation", "0", "--out", str(path))
    assert code == maps.EXIT_OK
    code, out, _ = run(capsys, config_file, "check", str(path), "--method", "all", "--json")
    assert code == maps.EXIT_OK
    report = json.loads(out)
    assert report["status"] == "PositiveCertified"
    assert report["cp"] is False
    assert report["indecomposable"] is False
    assert report["oracle"]["violation"] is False


def test_check_cp_boundary_map_exits_ok(capsys, config_file, tmp_path):
    path = tmp_path / "boundary.json"
    path.write_text(json.dumps({"n": 2, "a": [[1.0, 0.0], [0.0, 1.0 - 3e-9]]}))
    code, out, _ = run(capsys, config_file, "check", str(path), "--method", "all", "--json")
    assert code == maps.EXIT_OK
    report = json.loads(out)
    assert report["status"] == "PositiveCertified"
    assert report["cp"] is True


def test_construct_rotation_rejects_det(capsys, config_file):
    code, _, err = run(capsys, config_file, "construct", "kossakowski", "--n", "3", "--rotation", "0", "--det", "-1")
    assert code == maps.EXIT_USAGE
    assert "--det" in err


def test_check_table(capsys, config_file, tmp_path):
    path = tmp_path / "identity.json"
    path.write_text(map_to_json(CirculantParams.from_alphas([1, 0, 0]).to_map()))
    code, out, _ = run(capsys, config_file, "check", str(path), "--method", "numerical")
    assert code == maps.EXIT_OK
    assert "NotPositive" in out
    assert "witness" in out


def test_spectrum_of_reduction_map(capsys, config_file, tmp_path):
    path = tmp_path / "reduction.json"
    path.write_text(json.dumps({"n": 3, "a": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}))
    code, out, _ = run(capsys, config_file, "spectrum", str(path), "--json")
    assert code == maps.EXIT_OK
    spectrum = json.loads(out)
    assert spectrum["on_torus"] is True
    assert spectrum["phases"][0] == pytest.approx(np.pi)
    assert spectrum["det_modulus"] == pytest.approx(2.0)
    assert spectrum["b_eigenvalues"][0] == pytest.approx([-1.0, 0.0], abs=1e-12)


def test_spectrum_off_torus(capsys, config_file, tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"n": 3, "a": [[2 / 3] * 3] * 3}))
    code, out, _ = run(capsys, config_file, "spectrum", str(path), "--json")
    assert code == maps.EXIT_OK
    spectrum = json.loads(out)
    assert spectrum["on_torus"] is False
    assert spectrum["off_torus_index"] == 1


def test_exit_codes(capsys, config_file, tmp_path):
    assert run(capsys, config_file, "frobnicate")[0] == maps.EXIT_USAGE

    malformed = tmp_path / "malformed.json"
    malformed.write_text('{"n": 2, "a": [[1, 0], [0, 1]]')
    code, _, err = run(capsys, config_file, "check", str(malformed))
    assert code == maps.EXIT_USAGE
    assert "line 1" in err

    code, _, _ = run(capsys, config_file, "construct", "circulant", "--n", "4", "--phases", "0.5")
    assert code == maps.EXIT_CONSTRAINT

    code, _, _ = run(capsys, config_file, "torus-sample", "--n", "3", "--count", "0", "--out", str(tmp_path / "t.csv"))
    assert code == maps.EXIT_USAGE

    code, _, _ = run(capsys, config_file, "check", str(tmp_path / "missing.json"))
    assert code == maps.EXIT_USAGE


def test_torus_sample_csv(capsys, config_file, tmp_path):
    out_file = tmp_path / "torus.csv"
    code, _, _ = run(capsys, config_file, "torus-sample", "--n", "5", "--count", "4", "--seed", "1", "--out", str(out_file))
    assert code == maps.EXIT_OK
    raw = out_file.read_bytes()
    assert b"\r\n" not in raw
    header = raw.decode("utf-8").splitlines()[0]
    assert header == "phi_1,phi_2,sign,alpha_0,alpha_1,alpha_2,alpha_3,alpha_4,verdict,margin"
    frame = pd.read_csv(out_file)
    assert len(frame) == 4
    assert (frame["verdict"] != "NotPositive").all()
    assert_allclose(frame.filter(like="alpha_").sum(axis=1), 4.0, atol=1e-12)


def test_torus_sample_frame_is_deterministic():
    cfg = OptimizerConfig(restarts=10, iterations=100)
    first = maps.torus_sample_frame(4, 6, seed=2, optimizer=cfg, chunk_size=4)
    second = maps.torus_sample_frame(4, 6, seed=2, optimizer=cfg, chunk_size=6)
    pd.testing.assert_frame_equal(first, second, check_exact=False)
    assert set(first["sign"]) <= {-1, 1}


def test_small_scan(capsys, config_file, tmp_path):
    out_file = tmp_path / "scan.csv"
    code, out, _ = run(
        capsys, config_file, "scan", "--resolution", "3", "--a-max", "2", "--mode", "closed", "--out", str(out_file)
    )
    assert code == maps.EXIT_OK
    frame = pd.read_csv(out_file)
    assert len(frame) == 27
    assert "disagreements" in out


def test_scan_rejects_bad_resolution(capsys, config_file, tmp_path):
    code, _, err = run(capsys, config_file, "scan", "--resolution", "1", "--out", str(tmp_path / "s.csv"))
    assert code == maps.EXIT_USAGE
    assert "resolution" in err


def test_load_config(config_file, tmp_path):
    config = load_config(config_file)
    assert config.optimizer.restarts == 20
    assert config.optimizer.eps_viol == 1e-7
    assert config.scan.n_jobs == 1
    assert config.results_path == str(tmp_path / "results")


def test_load_config_coerces_and_rejects(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("optimizer:\n  eps_viol: 1e-6\n")
    assert load_config(str(path)).optimizer.eps_viol == 1e-6

    path.write_text("optimizer:\n  learning_rate: 0.1\n")
    with pytest.raises(ValueError, match="learning_rate"):
        load_config(str(path))

    path.write_text("model: gpt\n")
    with pytest.raises(ValueError, match="model"):
        load_config(str(path))


def test_load_default_config():
    config = load_config()
    assert config.optimizer.restarts >= 1
    assert config.scan.resolution >= 2
