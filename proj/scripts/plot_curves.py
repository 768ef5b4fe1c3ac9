#!/usr/bin/env python3
"""Plot learning curves from a result directory or a comparison directory.

Reads curve.csv (from `sindyrl run`) or comparison_curves.csv (from
`sindyrl compare`). The x axis is real environment steps including the
steps spent collecting SINDy data.
"""
import argparse
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(directory):
    comparison = os.path.join(directory, "comparison_curves.csv")
    single = os.path.join(directory, "curve.csv")
    path = comparison if os.path.exists(comparison) else single
    if not os.path.exists(path):
        sys.exit(f"no curve.csv or comparison_curves.csv in {directory}")
    curves = defaultdict(list)
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            run = row.get("run", os.path.basename(os.path.normpath(directory)))
            curves[(run, row["seed"])].append((float(row["real_steps"]), float(row["eval_mean"])))
    return curves


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory")
    parser.add_argument("--out", default=None, help="image path (default: <directory>/curves.png)")
    parser.add_argument("--logx", action="store_true")
    args = parser.parse_args()

    curves = load(args.directory)
    runs = sorted({run for run, _ in curves})
    colors = {run: f"C{i}" for i, run in enumerate(runs)}
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labelled = set()
    for (run, seed), points in sorted(curves.items()):
        points.sort()
        xs, ys = zip(*points)
        label = None if run in labelled else os.path.basename(os.path.normpath(run))
        labelled.add(run)
        ax.plot(xs, ys, color=colors[run], alpha=0.6, marker=".", label=label)
    ax.set_xlabel("real environment steps")
    ax.set_ylabel("mean evaluation return")
    if args.logx:
        ax.set_xscale("log")
    ax.legend()
    ax.grid(alpha=0.3)
    out = args.out or os.path.join(args.directory, "curves.png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
