# Sampling experiments on Kossakowski maps: pseudo-rotation branches, inverses of torus maps, the admissible
# circulant set and rotated equiangular frames, plus the full-size validation runs (closed form against optimizer,
# construction validity, torus roundtrips, circulant CP and frame geometry) that the unit tests run small.
import argparse
import inspect
import os
import pickle
import sys
import time
from collections import Counter, defaultdict

import numpy as np
import pandas as pd
from tabulate import tabulate
from tqdm import tqdm

from kossakowski.circulant_spectrum import (
    CirculantParams,
    PhasePoint,
    alphas_from_phases,
    determinant_modulus,
    num_phases,
    phases_from_alphas,
)
from kossakowski.config import Config, load_config
from kossakowski.construction import (
    OSID_TOL,
    b_from_a,
    basis_from_frame,
    equiangular_frame,
    kossakowski_from_orthogonal,
    map_from_basis,
    permute_columns,
    random_orthogonal,
    rotation_embedding,
    verify_osid,
)
from kossakowski.map_core import DiagonalTypeMap, d_matrix, inverse_map, is_psd, row_col_sums
from kossakowski.positivity import (
    check_cp,
    check_positive_closed,
    check_positive_numerical,
    check_positive_numerical_batch,
    oracle_positivity,
    verdicts_disagree,
)

# Random pairs per map for the oracle in the construction validity runs.
ORACLE_SAMPLES = 10_000
ENTRY_MAX = 3.0
NONNEG_TOL = 1e-12
SUM_TOL = 1e-10
FRAME_TOL = 1e-12
CP_BAND = 1e-9


class Experiment:
    def __init__(self, config: Config, n: int, *args, **kwargs):
        self.config = config
        self.n = n
        self._samples_seen = 0

    def _exp_cache_path(self):
        return os.path.normpath(
            os.path.join(
                self.config.results_path or "results",
                f"exp_cache_{self.__class__.__name__}_n{self.n}",
            )
        )

    def _cache_data(self) -> dict:
        return {}

    def on_sample(self, index: int, rng: np.random.Generator):
        self._samples_seen += 1

    def on_finish(self):
        os.makedirs(os.path.dirname(self._exp_cache_path()) or ".", exist_ok=True)
        with open(self._exp_cache_path(), "wb") as f:
            pickle.dump(self._cache_data(), f)

    @classmethod
    def supports(cls, n: int) -> bool:
        return True

    def samples_seen(self):
        return self._samples_seen

    def load(self) -> dict:
        with open(self._exp_cache_path(), "rb") as f:
            return pickle.load(f)

    def summary(self) -> list:
        """
        Rows of (quantity, value) computed from the cached results.
        """
        return []


class PseudoRotationExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Compares maps from rotations (det R = +1) and pseudo-rotations (det R = -1). The b-matrix has det b = -det R,
        so the branches never share a map; an odd column permutation carries one branch onto the other.
        """
        super().__init__(config, n, *args, **kwargs)
        self.det_b = defaultdict(list)  # det R => det b
        self.osid_residual = defaultdict(list)
        self.embedding_residual = []
        self.swap_flips = []
        self.verdicts = defaultdict(Counter)

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        for det in (1, -1):
            R = random_orthogonal(self.n - 1, rng, det=det)
            map = kossakowski_from_orthogonal(R)
            b = b_from_a(map)
            self.det_b[det].append(b.det)
            self.osid_residual[det].append(verify_osid(map)[1])
            self.embedding_residual.append(float(np.abs(rotation_embedding(R).m - b.m).max()))
            verdict = check_positive_numerical(map, self.config.optimizer, 2 * index + int(det < 0))
            self.verdicts[det][verdict.status.value] += 1
            swapped = b_from_a(permute_columns(map, [1, 0] + list(range(2, self.n))))
            self.swap_flips.append(bool(np.sign(swapped.det) == -np.sign(b.det)))

    def _cache_data(self):
        return {
            "det_b": dict(self.det_b),
            "osid_residual": dict(self.osid_residual),
            "embedding_residual": self.embedding_residual,
            "swap_flips": self.swap_flips,
            "verdicts": {k: dict(v) for k, v in self.verdicts.items()},
        }

    def summary(self):
        dat = self.load()
        rows = []
        for det in (1, -1):
            det_b = np.array(dat["det_b"][det])
            rows.append([f"det R = {det:+d}: det b values", sorted(set(np.round(det_b, 9).tolist()))])
            rows.append([f"det R = {det:+d}: max osid residual", max(dat["osid_residual"][det])])
            rows.append([f"det R = {det:+d}: verdicts", dat["verdicts"][det]])
        rows.append(["max |S^T R S - b|", max(dat["embedding_residual"])])
        rows.append(["column swap changes branch", f"{sum(dat['swap_flips'])}/{len(dat['swap_flips'])}"])
        return rows


def torus_point(n: int, rng: np.random.Generator) -> PhasePoint:
    phases = tuple(rng.uniform(0.0, 2 * np.pi, size=num_phases(n)))
    return PhasePoint(n, phases, int(rng.choice([-1, 1])) if n % 2 == 0 else None)


class InverseExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Inverts circulant torus maps (|det a| = n-1, so the inverse exists) and checks the inverse for positivity.
        """
        super().__init__(config, n, *args, **kwargs)
        self.verdicts = Counter()
        self.methods = Counter()
        self.min_entry = []

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        inverse = inverse_map(alphas_from_phases(torus_point(self.n, rng)).to_map())
        self.min_entry.append(float(inverse.a.min()))
        verdict = check_positive_closed(inverse) or check_positive_numerical(inverse, self.config.optimizer, index)
        self.verdicts[verdict.status.value] += 1
        self.methods[verdict.method] += 1

    def _cache_data(self):
        return {"verdicts": dict(self.verdicts), "methods": dict(self.methods), "min_entry": self.min_entry}

    def summary(self):
        dat = self.load()
        total = sum(dat["verdicts"].values())
        not_positive = dat["verdicts"].get("NotPositive", 0)
        return [
            ["samples", total],
            ["inverse not positive", f"{not_positive}/{total}"],
            ["inverse has a negative entry", f"{sum(m < 0 for m in dat['min_entry'])}/{total}"],
            ["deciding criteria", dat["methods"]],
        ]


class AdmissibleSetExperiment(Experiment):
    def __init__(self, config: Config, n: int = 5, *args, **kwargs):
        """
        Samples the admissible circulant set and exports it. On the set the shifted parameters β = α - 1 satisfy
        Σ β_k = -1 and Σ_k β_k β_{k+s} = δ_s0; the residuals of both are recorded.
        """
        super().__init__(config, n, *args, **kwargs)
        self.rows = []

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        pt = torus_point(self.n, rng)
        beta = alphas_from_phases(pt).betas
        autocorrelation = np.array([beta @ np.roll(beta, -s) for s in range(self.n)])
        autocorrelation[0] -= 1.0
        row = {f"phi_{k + 1}": phi for k, phi in enumerate(pt.phases)}
        row["sign"] = pt.even_sign
        row.update({f"beta_{k}": b for k, b in enumerate(beta)})
        row["sum_residual"] = abs(beta.sum() + 1.0)
        row["orthogonality_residual"] = float(np.abs(autocorrelation).max())
        self.rows.append(row)

    def _cache_data(self):
        return {"rows": self.rows}

    def on_finish(self):
        super().on_finish()
        pd.DataFrame(self.rows).to_csv(
            self._exp_cache_path() + ".csv", index=False, encoding="utf-8", lineterminator="\n"
        )

    def summary(self):
        frame = pd.DataFrame(self.load()["rows"])
        return [
            ["samples", len(frame)],
            ["max |sum beta + 1|", frame["sum_residual"].max()],
            ["max orthogonality residual", frame["orthogonality_residual"].max()],
            ["beta range", [frame.filter(like="beta_").min().min(), frame.filter(like="beta_").max().max()]],
        ]


class EquiangularExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Rotates the simplex frame inside the hyperplane orthogonal to e by Haar random R and builds the map of the
        resulting basis.
        """
        super().__init__(config, n, *args, **kwargs)
        self.osid_residual = []
        self.sum_residual = []
        self.min_entry = []
        self.verdicts = Counter()

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        R = random_orthogonal(self.n - 1, rng)
        map = map_from_basis(basis_from_frame(equiangular_frame(self.n, rotation=R)))
        rows, cols = row_col_sums(map)
        self.osid_residual.append(verify_osid(map)[1])
        self.sum_residual.append(float(max(np.abs(rows - (self.n - 1)).max(), np.abs(cols - (self.n - 1)).max())))
        self.min_entry.append(float(map.a.min()))
        self.verdicts[check_positive_numerical(map, self.config.optimizer, index).status.value] += 1

    def _cache_data(self):
        return {
            "osid_residual": self.osid_residual,
            "sum_residual": self.sum_residual,
            "min_entry": self.min_entry,
            "verdicts": dict(self.verdicts),
        }

    def summary(self):
        dat = self.load()
        return [
            ["samples", len(dat["osid_residual"])],
            ["max osid residual", max(dat["osid_residual"])],
            ["max row/column sum residual", max(dat["sum_residual"])],
            ["min entry", min(dat["min_entry"])],
            ["verdicts", dat["verdicts"]],
        ]


class ClosedFormAgreementExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Random maps with entries uniform in [0, 3], general coefficient matrices for n=2 and circulant rows for n=3.
        Once sampling is done the optimizer runs over all of them in batches and is compared with the closed form
        outside the margin band of the scan configuration.
        """
        super().__init__(config, n, *args, **kwargs)
        if not self.supports(n):
            raise ValueError(f"{type(self).__name__} needs n = 2 or 3, got {n}")
        self.maps = []
        self.rows = []
        self.seconds = 0.0

    @classmethod
    def supports(cls, n: int) -> bool:
        return n in (2, 3)

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        if self.n == 2:
            self.maps.append(DiagonalTypeMap(2, rng.uniform(0.0, ENTRY_MAX, (2, 2))))
        else:
            self.maps.append(CirculantParams(3, rng.uniform(0.0, ENTRY_MAX, 3)).to_map())

    def on_finish(self):
        band = self.config.scan.margin_band
        chunk = self.config.scan.chunk_size
        for offset in range(0, len(self.maps), chunk):
            maps = self.maps[offset : offset + chunk]
            start = time.perf_counter()
            numerical = check_positive_numerical_batch(maps, self.config.optimizer, self.config.random_seed, offset)
            self.seconds += time.perf_counter() - start
            for map, verdict in zip(maps, numerical):
                closed = check_positive_closed(map)
                self.rows.append(
                    {
                        "closed": closed.status.value,
                        "margin": closed.margin,
                        "numerical": verdict.status.value,
                        "numerical_margin": verdict.margin,
                        "in_band": abs(closed.margin) <= band,
                        "disagreement": verdicts_disagree(closed, verdict, band),
                    }
                )
        super().on_finish()

    def _cache_data(self):
        return {"rows": self.rows, "seconds": self.seconds}

    def summary(self):
        dat = self.load()
        frame = pd.DataFrame(dat["rows"])
        return [
            ["samples", len(frame)],
            ["closed-form margin inside the band", int(frame["in_band"].sum())],
            ["inconclusive (optimizer)", int((frame["numerical"] == "Inconclusive").sum())],
            ["optimizer seconds", round(dat["seconds"], 1)],
            ["failures", int(frame["disagreement"].sum())],
        ]


class ConstructionValidityExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Maps of Haar random R in O(n-1): nonnegative entries, row and column sums n-1, the osid criterion, the
        optimizer and the oracle with 10⁴ random pairs.
        """
        super().__init__(config, n, *args, **kwargs)
        self.min_entry = []
        self.sum_residual = []
        self.osid_residual = []
        self.oracle_min = []
        self.verdicts = Counter()
        self.failures = 0

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        map = kossakowski_from_orthogonal(random_orthogonal(self.n - 1, rng))
        rows, cols = row_col_sums(map)
        sum_residual = float(max(np.abs(rows - (self.n - 1)).max(), np.abs(cols - (self.n - 1)).max()))
        osid_residual = verify_osid(map)[1]
        verdict = check_positive_numerical(map, self.config.optimizer, index)
        oracle = oracle_positivity(map, ORACLE_SAMPLES, index, self.config.oracle)

        self.min_entry.append(float(map.a.min()))
        self.sum_residual.append(sum_residual)
        self.osid_residual.append(osid_residual)
        self.oracle_min.append(oracle.min_value)
        self.verdicts[verdict.status.value] += 1
        self.failures += int(
            map.a.min() < -NONNEG_TOL
            or sum_residual > SUM_TOL
            or osid_residual >= OSID_TOL
            or verdict.is_not_positive
            or oracle.violation
        )

    def _cache_data(self):
        return {
            "min_entry": self.min_entry,
            "sum_residual": self.sum_residual,
            "osid_residual": self.osid_residual,
            "oracle_min": self.oracle_min,
            "verdicts": dict(self.verdicts),
            "failures": self.failures,
        }

    def summary(self):
        dat = self.load()
        return [
            ["samples", len(dat["min_entry"])],
            ["min entry", min(dat["min_entry"])],
            ["max row/column sum residual", max(dat["sum_residual"])],
            ["max osid residual", max(dat["osid_residual"])],
            ["verdicts", dat["verdicts"]],
            ["min oracle value", min(dat["oracle_min"])],
            ["failures", dat["failures"]],
        ]


def _torus_shape_failures(alphas: np.ndarray) -> bool:
    n = len(alphas)
    if n == 3:
        a, b, c = alphas
        return abs(a + b + c - 2.0) > SUM_TOL or abs(b * c - (1.0 - a) ** 2) > SUM_TOL
    if n == 4:
        even, odd = alphas[0] + alphas[2], alphas[1] + alphas[3]
        first = abs(even - 2.0) <= SUM_TOL and abs(odd - 1.0) <= SUM_TOL
        second = abs(even - 1.0) <= SUM_TOL and abs(odd - 2.0) <= SUM_TOL
        return first == second
    return False


class TorusRoundtripExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Uniform torus points through alphas_from_phases and back, with the determinant modulus and, for n=3 and
        n=4, the shape of the admissible set.
        """
        super().__init__(config, n, *args, **kwargs)
        self.roundtrip_error = []
        self.det_residual = []
        self.failures = 0

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        pt = torus_point(self.n, rng)
        params = alphas_from_phases(pt)
        back = phases_from_alphas(params)
        error = float(np.abs(np.exp(1j * np.array(back.phases)) - np.exp(1j * np.array(pt.phases))).max(initial=0.0))
        if back.even_sign != pt.even_sign:
            error = np.inf
        det_residual = abs(determinant_modulus(params) - (self.n - 1))

        self.roundtrip_error.append(error)
        self.det_residual.append(det_residual)
        self.failures += int(error >= 1e-12 or det_residual > 1e-9 or _torus_shape_failures(params.alphas))

    def _cache_data(self):
        return {"roundtrip_error": self.roundtrip_error, "det_residual": self.det_residual, "failures": self.failures}

    def summary(self):
        dat = self.load()
        return [
            ["samples", len(dat["roundtrip_error"])],
            ["max roundtrip error", max(dat["roundtrip_error"])],
            ["max |det a| - (n-1)", max(dat["det_residual"])],
            ["failures", dat["failures"]],
        ]


class CirculantCPExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        Random circulant maps with α_k uniform in [0, 2(n-1)]: the D-matrix test and check_cp against α_0 >= n-1,
        skipping samples within 1e-9 of the boundary.
        """
        super().__init__(config, n, *args, **kwargs)
        self.in_band = 0
        self.d_mismatches = 0
        self.cp_mismatches = 0

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        alphas = rng.uniform(0.0, 2.0 * (self.n - 1), self.n)
        if abs(alphas[0] - (self.n - 1)) <= CP_BAND:
            self.in_band += 1
            return
        expected = alphas[0] >= self.n - 1
        map = CirculantParams(self.n, alphas).to_map()
        self.d_mismatches += int(is_psd(d_matrix(map))[0] != expected)
        self.cp_mismatches += int(check_cp(map, cross_check=False) != expected)

    def _cache_data(self):
        return {
            "samples": self.samples_seen(),
            "in_band": self.in_band,
            "d_mismatches": self.d_mismatches,
            "cp_mismatches": self.cp_mismatches,
        }

    def summary(self):
        dat = self.load()
        return [
            ["samples", dat["samples"]],
            ["within 1e-9 of alpha_0 = n-1", dat["in_band"]],
            ["D-matrix mismatches", dat["d_mismatches"]],
            ["failures", dat["d_mismatches"] + dat["cp_mismatches"]],
        ]


class FrameGeometryExperiment(Experiment):
    def __init__(self, config: Config, n: int, *args, **kwargs):
        """
        The canonical simplex frame (sample 0) and Haar rotated copies: Gram matrix I - J/n, the basis condition of
        basis_from_frame and the osid criterion of the resulting map.
        """
        super().__init__(config, n, *args, **kwargs)
        self.gram_residual = []
        self.basis_residual = []
        self.osid_residual = []

    def on_sample(self, index, rng):
        super().on_sample(index, rng)
        rotation = None if index == 0 else random_orthogonal(self.n - 1, rng)
        frame = equiangular_frame(self.n, rotation=rotation)
        g = frame.vectors
        self.gram_residual.append(float(np.abs(g @ g.T - (np.eye(self.n) - 1.0 / self.n)).max()))
        basis = basis_from_frame(frame)
        v = basis.vectors
        e = np.ones(self.n) / np.sqrt(self.n)
        self.basis_residual.append(
            float(max(np.abs(v @ v.T - np.eye(self.n)).max(), np.abs(v @ e + 1.0 / np.sqrt(self.n)).max()))
        )
        self.osid_residual.append(verify_osid(map_from_basis(basis))[1])

    def _cache_data(self):
        return {
            "gram_residual": self.gram_residual,
            "basis_residual": self.basis_residual,
            "osid_residual": self.osid_residual,
        }

    def summary(self):
        dat = self.load()
        failures = sum(
            g > FRAME_TOL or b > FRAME_TOL or o >= OSID_TOL
            for g, b, o in zip(dat["gram_residual"], dat["basis_residual"], dat["osid_residual"])
        )
        return [
            ["samples", len(dat["gram_residual"])],
            ["max Gram residual", max(dat["gram_residual"])],
            ["max basis residual", max(dat["basis_residual"])],
            ["max osid residual", max(dat["osid_residual"])],
            ["failures", failures],
        ]


EXPERIMENTS = {
    name: obj
    for name, obj in inspect.getmembers(sys.modules[__name__])
    if inspect.isclass(obj) and issubclass(obj, Experiment) and obj != Experiment
}


def select_experiments(names: str, config: Config, n: int):
    if names == "all":
        return [cls(config, n) for cls in EXPERIMENTS.values() if cls.supports(n)]
    experiments = []
    for name in names.split(","):
        if name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {name!r}, choose from {sorted(EXPERIMENTS)}")
        experiments.append(EXPERIMENTS[name](config, n))
    return experiments


def run_experiments(experiments, max_samples: int, seed, progress: bool = True):
    """
    Feeds sample i to every experiment with a generator seeded by [seed, j, i] for experiment j, so experiments do
    not share random streams.
    """
    exp_pbar = [
        tqdm(total=max_samples, position=x, desc=type(exp).__name__, disable=not progress)
        for x, exp in enumerate(experiments)
    ]
    for i in range(max_samples):
        for j, exp in enumerate(experiments):
            if exp.samples_seen() < max_samples:
                exp.on_sample(i, np.random.default_rng([seed, j, i]))
                exp_pbar[j].n = exp.samples_seen()
                exp_pbar[j].refresh()
    for p in exp_pbar:
        p.close()
    for exp in experiments:
        exp.on_finish()


parser = argparse.ArgumentParser()
parser.add_argument(
    "--exp",
    type=str,
    default="all",
    help="Experiment(s) to run, comma separated, or all.",
)
parser.add_argument("--n", type=int, default=3, help="Map dimension.")
parser.add_argument("--max_samples", type=int, default=100, help="Samples per experiment.")
parser.add_argument("--seed", type=int, default=None, help="Random seed (default from config).")
parser.add_argument("--config", type=str, default=None, help="YAML configuration.")
parser.add_argument(
    "-s",
    "--summary",
    action="store",
    default="yes",  # other options: none, only
    help="Print the summary tables.",
)

if __name__ == "__main__":
    args = parser.parse_args()
    config = load_config(args.config)
    experiments = select_experiments(args.exp, config, args.n)

    if args.summary != "only":
        print("Running experiments:")
        for exp in experiments:
            print("- ", type(exp).__name__)
        run_experiments(experiments, args.max_samples, config.random_seed if args.seed is None else args.seed)

    if args.summary == "none":
        sys.exit(0)

    for exp in experiments:
        print(f"\n{type(exp).__name__} (n = {exp.n})")
        print(tabulate(exp.summary(), headers=["Quantity", "Value"]))
