# Summarizes n=3 scan CSVs written by `maps.py scan` into region counts and checks the region shapes.
import argparse
import os
import sys
from collections import defaultdict

import numpy as np
import pandas as pd
from tabulate import tabulate

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from kossakowski.config import load_config


def summarize(frame: pd.DataFrame) -> dict:
    """
    Region counts of one scan, plus the number of points where the CP flag differs from a >= 2 and where the
    indecomposable flag differs from positive and 4bc < (2-a)².

    :param frame: Scan rows with columns a, b, c, closed, numerical, cp, indecomposable, disagreement.
    """
    statistics = defaultdict(float)
    positive = frame["closed"] == "PositiveCertified"
    statistics["Points"] = len(frame)
    statistics["Positive"] = int(positive.sum())
    statistics["Not Positive"] = int((~positive).sum())
    statistics["Completely Positive"] = int(frame["cp"].sum())
    statistics["Indecomposable"] = int(frame["indecomposable"].sum())
    statistics["Inconclusive (optimizer)"] = int((frame["numerical"] == "Inconclusive").sum())
    statistics["Disagreements"] = int(frame["disagreement"].sum())

    a, b, c = frame["a"].to_numpy(), frame["b"].to_numpy(), frame["c"].to_numpy()
    statistics["CP != (a >= 2)"] = int((frame["cp"].to_numpy() != (a >= 2.0 - 1e-9)).sum())
    expected = positive.to_numpy() & ((2.0 - a) ** 2 - 4.0 * b * c > 1e-9)
    statistics["Indecomposable mismatches"] = int((frame["indecomposable"].to_numpy() != expected).sum())
    if "numerical_margin" in frame and frame["numerical_margin"].notna().any():
        statistics["Min Numerical Margin"] = float(np.nanmin(frame["numerical_margin"]))
    return dict(statistics)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("scans", type=str, nargs="+", help="Scan CSV files.")
    parser.add_argument("--config", type=str, default=None, help="YAML configuration.")
    args = parser.parse_args()

    results_path = load_config(args.config).results_path or "results"
    os.makedirs(results_path, exist_ok=True)

    for path in args.scans:
        summary_stats = summarize(pd.read_csv(path))
        name = os.path.splitext(os.path.basename(path))[0]
        print(name)
        print(tabulate(summary_stats.items(), tablefmt="pretty"))

        # Save the LaTeX table and a tsv.
        with open(os.path.normpath(os.path.join(results_path, f"{name}_summary.tex")), "w") as f:
            f.write(tabulate(summary_stats.items(), tablefmt="latex"))
        with open(os.path.normpath(os.path.join(results_path, f"{name}_summary.tsv")), "w") as f:
            f.write(tabulate(summary_stats.items(), tablefmt="tsv"))
