# Builds diagonal type positive maps and certifies them: construction, positivity checks, circulant spectra, phase
# torus sampling and n=3 region scans. Machine output is Map JSON or CSV, human output a short table.
import argparse
import dataclasses
import json
import logging
import sys

import numpy as np
import pandas as pd
import yaml
from tabulate import tabulate
from tqdm import tqdm

from kossakowski.circulant_spectrum import (
    CirculantParams,
    PhasePoint,
    alphas_from_phases,
    b_spectrum,
    determinant_modulus,
    dft_eigenvalues,
    num_phases,
    phases_from_alphas,
    torus_points,
)
from kossakowski.config import load_config
from kossakowski.construction import (
    a_from_b,
    basis_from_frame,
    equiangular_frame,
    kossakowski_from_orthogonal,
    map_from_basis,
    random_orthogonal,
    rotation_from_angles,
)
from kossakowski.errors import ConsistencyError, KossakowskiError, MapFormatError, NotOnTorusError
from kossakowski.io import map_to_json, read_json_file
from kossakowski.positivity import METHODS, check_positive, check_positive_numerical_batch
from kossakowski.scan import MODES, sample_n3, scan_n3

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONSTRAINT = 2
EXIT_DISAGREEMENT = 3


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    # Usage errors exit with 1, leaving 2 for constraint violations.
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def sign(text: str) -> int:
    value = int(text)
    if value not in (1, -1):
        raise argparse.ArgumentTypeError(f"sign must be +1 or -1, got {text}")
    return value


parser = ArgumentParser(
    prog="maps.py", description="Construct and certify diagonal type positive maps on matrix algebras."
)
parser.add_argument(
    "--config",
    type=str,
    default=None,
    help="YAML configuration (default: config.yaml, else config_template.yaml).",
)
parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
parser.add_argument("--restarts", type=int, default=None, help="Override the optimizer restarts.")
parser.add_argument("--iterations", type=int, default=None, help="Override the optimizer iterations.")
commands = parser.add_subparsers(dest="command", required=True)

construct = commands.add_parser("construct", help="Construct a map and emit Map JSON.")
construct_kinds = construct.add_subparsers(dest="kind", required=True)

construct_kossakowski = construct_kinds.add_parser(
    "kossakowski", help="Kossakowski map of an orthogonal R, random or from rotation angles."
)
construct_kossakowski.add_argument("--n", type=int, required=True, help="Map dimension.")
source = construct_kossakowski.add_mutually_exclusive_group()
source.add_argument("--seed", type=int, default=None, help="Seed for a Haar random R.")
source.add_argument(
    "--rotation",
    type=float_list,
    default=None,
    help="Comma separated angles of a block rotation R in SO(n-1), floor((n-1)/2) of them.",
)
construct_kossakowski.add_argument(
    "--det", type=sign, default=None, help="Restrict a random R to det +1 or -1."
)
construct_kossakowski.add_argument("--out", type=str, default=None, help="Output file (default: stdout).")

construct_frame = construct_kinds.add_parser("frame", help="Map of the canonical equiangular frame.")
construct_frame.add_argument("--n", type=int, required=True, help="Map dimension.")
construct_frame.add_argument("--out", type=str, default=None, help="Output file (default: stdout).")

construct_from_b = construct_kinds.add_parser("from-b", help="Map a = b + 1 of an Orthogonal JSON b-matrix.")
construct_from_b.add_argument("file", type=str, help="Orthogonal JSON file.")
construct_from_b.add_argument("--out", type=str, default=None, help="Output file (default: stdout).")

construct_circulant = construct_kinds.add_parser("circulant", help="Circulant map of a phase torus point.")
construct_circulant.add_argument("--n", type=int, required=True, help="Map dimension.")
construct_circulant.add_argument(
    "--phases", type=float_list, default=[], help="Comma separated phases, floor((n-1)/2) of them."
)
construct_circulant.add_argument("--sign", type=sign, default=None, help="lambda_{n/2} for even n.")
construct_circulant.add_argument("--out", type=str, default=None, help="Output file (default: stdout).")

check = commands.add_parser("check", help="Check positivity, complete positivity and indecomposability.")
check.add_argument("file", type=str, help="Map JSON file.")
check.add_argument("--method", choices=METHODS, default="all", help="Deciding criterion.")
check.add_argument("--samples", type=int, default=None, help="Oracle samples (default from config).")
check.add_argument("--seed", type=int, default=None, help="Random seed (default from config).")
check.add_argument("--json", action="store_true", help="Emit the verdict as JSON.")

spectrum = commands.add_parser("spectrum", help="DFT spectrum and torus coordinates of a circulant map.")
spectrum.add_argument("file", type=str, help="Map JSON file.")
spectrum.add_argument("--json", action="store_true", help="Emit JSON.")

torus = commands.add_parser("torus-sample", help="Sample circulant Kossakowski maps from the phase torus.")
torus.add_argument("--n", type=int, required=True, help="Map dimension.")
torus.add_argument("--count", type=int, required=True, help="Number of samples.")
torus.add_argument("--seed", type=int, default=None, help="Random seed (default from config).")
torus.add_argument("--out", type=str, required=True, help="Output CSV.")

scan = commands.add_parser("scan", help="Scan n=3 circulant maps (a, b, c) in [0, a_max]^3.")
scan.add_argument("--resolution", type=int, default=None, help="Grid points per axis (default from config).")
scan.add_argument("--a-max", type=float, default=None, help="Upper end of each axis (default from config).")
scan.add_argument("--mode", choices=MODES, default="numerical", help="Deciders to run besides the closed form.")
scan.add_argument("--random", type=int, default=None, help="Sample this many uniform points instead of the grid.")
scan.add_argument("--oracle-samples", type=int, default=None, help="Oracle samples per point in oracle modes.")
scan.add_argument("--seed", type=int, default=None, help="Random seed (default from config).")
scan.add_argument("--out", type=str, required=True, help="Output CSV.")


def emit(text: str, out=None):
    if out is None:
        print(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text + "\n")


def write_csv(frame: pd.DataFrame, path: str):
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def cmd_construct(args, config) -> int:
    if args.kind == "kossakowski":
        if args.rotation is not None:
            if args.det is not None:
                raise UsageError("--det applies to random R only, a block rotation has det +1")
            R = rotation_from_angles(args.rotation, args.n - 1)
        else:
            seed = config.random_seed if args.seed is None else args.seed
            R = random_orthogonal(args.n - 1, np.random.default_rng(seed), det=args.det)
        map = kossakowski_from_orthogonal(R)
    elif args.kind == "frame":
        map = map_from_basis(basis_from_frame(equiangular_frame(args.n)))
    elif args.kind == "from-b":
        map = a_from_b(read_json_file(args.file, kind="orthogonal"))
    else:
        pt = PhasePoint(args.n, tuple(args.phases), args.sign)
        map = alphas_from_phases(pt).to_map()
    emit(map_to_json(map), args.out)
    return EXIT_OK


def cmd_check(args, config) -> int:
    map = read_json_file(args.file)
    report = check_positive(
        map,
        method=args.method,
        optimizer=config.optimizer,
        oracle=config.oracle,
        samples=args.samples,
        seed=config.random_seed if args.seed is None else args.seed,
        margin_band=config.scan.margin_band,
    )
    if args.json:
        print(json.dumps(report.to_dict()))
        return EXIT_OK

    verdict = report.verdict
    rows = [
        ["status", verdict.status.value],
        ["margin", f"{verdict.margin:.6g}"],
        ["method", verdict.method],
        ["witness", "-" if verdict.witness is None else np.round(verdict.witness.p, 6).tolist()],
        ["completely positive", report.cp],
        ["indecomposable", "-" if report.indecomposable is None else report.indecomposable],
    ]
    if verdict.entry is not None:
        rows.append(["negative entry", list(verdict.entry)])
    if report.oracle is not None:
        rows.append(["oracle min", f"{report.oracle.min_value:.6g} over {report.oracle.evaluated} pairs"])
    print(tabulate(rows, tablefmt="simple"))
    return EXIT_OK


def _complex_pairs(values):
    return [[float(z.real), float(z.imag)] for z in values]


def cmd_spectrum(args, config) -> int:
    params = CirculantParams.from_map(read_json_file(args.file))
    out = {
        "n": params.n,
        "alphas": params.alphas.tolist(),
        "eigenvalues": _complex_pairs(dft_eigenvalues(params)),
        "b_eigenvalues": _complex_pairs(b_spectrum(params)),
    }
    try:
        pt = phases_from_alphas(params)
        out.update(on_torus=True, phases=list(pt.phases), sign=pt.even_sign, det_modulus=determinant_modulus(params))
    except NotOnTorusError as e:
        out.update(on_torus=False, off_torus_index=e.index, off_torus_modulus=e.modulus)

    if args.json:
        print(json.dumps(out))
        return EXIT_OK
    lam = dft_eigenvalues(params)
    print(
        tabulate(
            [[k, params.alphas[k], lam[k].real, lam[k].imag, abs(lam[k])] for k in range(params.n)],
            headers=["k", "alpha_k", "Re lambda_k", "Im lambda_k", "|lambda_k|"],
            floatfmt=".6g",
        )
    )
    if out["on_torus"]:
        print(f"on torus: phases {np.round(out['phases'], 12).tolist()}, sign {out['sign']}, |det a| = {out['det_modulus']:.12g}")
    else:
        print(f"off torus: |lambda_{out['off_torus_index']}| = {out['off_torus_modulus']:.12g}")
    return EXIT_OK


def torus_sample_frame(n: int, count: int, seed, optimizer=None, chunk_size: int = 256) -> pd.DataFrame:
    """
    One row per torus sample: phi_1..phi_m, sign, alpha_0..alpha_{n-1}, numerical verdict and margin.
    """
    points = torus_points(n, count, seed)
    params = [alphas_from_phases(pt) for pt in points]
    verdicts = []
    for start in tqdm(range(0, count, chunk_size), desc="torus samples", disable=count <= chunk_size):
        maps = [p.to_map() for p in params[start : start + chunk_size]]
        verdicts += check_positive_numerical_batch(maps, optimizer, seed, offset=start)

    rows = []
    for pt, p, verdict in zip(points, params, verdicts):
        row = {f"phi_{k + 1}": phi for k, phi in enumerate(pt.phases)}
        row["sign"] = pt.even_sign
        row.update({f"alpha_{k}": alpha for k, alpha in enumerate(p.alphas)})
        row["verdict"] = verdict.status.value
        row["margin"] = verdict.margin
        rows.append(row)
    columns = [f"phi_{k + 1}" for k in range(num_phases(n))] + ["sign"] + [f"alpha_{k}" for k in range(n)]
    return pd.DataFrame(rows, columns=columns + ["verdict", "margin"])


def cmd_torus_sample(args, config) -> int:
    if args.count < 1:
        raise UsageError(f"--count must be at least 1, got {args.count}")
    seed = config.random_seed if args.seed is None else args.seed
    frame = torus_sample_frame(args.n, args.count, seed, config.optimizer, config.scan.chunk_size)
    write_csv(frame, args.out)
    print(tabulate(frame["verdict"].value_counts().reset_index().values, headers=["verdict", "count"]))
    return EXIT_OK


def cmd_scan(args, config) -> int:
    overrides = {}
    if args.resolution is not None:
        overrides["resolution"] = args.resolution
    if args.a_max is not None:
        overrides["a_max"] = args.a_max
    try:
        cfg = dataclasses.replace(config.scan, **overrides)
    except ValueError as e:
        raise UsageError(str(e))
    seed = config.random_seed if args.seed is None else args.seed
    kwargs = dict(
        optimizer=config.optimizer,
        oracle=config.oracle,
        oracle_samples=args.oracle_samples,
        verbose=1 if args.verbose else 0,
    )
    if args.random is not None:
        result = sample_n3(args.random, cfg, args.mode, seed=seed, **kwargs)
    else:
        result = scan_n3(cfg, args.mode, seed=seed, **kwargs)
    write_csv(result.frame, args.out)

    frame = result.frame
    positive = frame["closed"] == "PositiveCertified"
    print(
        tabulate(
            [
                ["points", len(frame)],
                ["positive (closed form)", int(positive.sum())],
                ["completely positive", int(frame["cp"].sum())],
                ["indecomposable", int(frame["indecomposable"].sum())],
                ["inconclusive (optimizer)", result.inconclusive],
                ["disagreements", result.disagreements],
            ]
        )
    )
    return EXIT_DISAGREEMENT if result.disagreements else EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "check": cmd_check,
    "spectrum": cmd_spectrum,
    "torus-sample": cmd_torus_sample,
    "scan": cmd_scan,
}


def main(argv=None) -> int:
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        optimizer = {}
        if args.restarts is not None:
            optimizer["restarts"] = args.restarts
        if args.iterations is not None:
            optimizer["iterations"] = args.iterations
        config = dataclasses.replace(config, optimizer=dataclasses.replace(config.optimizer, **optimizer))
        return COMMANDS[args.command](args, config)
    except UsageError as e:
        print(f"maps.py: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConsistencyError as e:
        print(f"maps.py: disagreement: {e}", file=sys.stderr)
        return EXIT_DISAGREEMENT
    except MapFormatError as e:
        print(f"maps.py: malformed input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KossakowskiError as e:
        print(f"maps.py: {e}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (OSError, ValueError, yaml.YAMLError) as e:
        print(f"maps.py: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
