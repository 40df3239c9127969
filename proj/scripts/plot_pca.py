#!/usr/bin/env python3
"""Scatter plots of a pca_projection.csv written by `latentprobe pca` or `latentprobe report`.

One PNG per concept: points coloured by label (binary concepts) or by bin
(grouped concepts such as percentile ladders).

    python3 scripts/plot_pca.py out/report/pca_projection.csv --out out/plots
"""
import argparse
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def slug(title: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", title).strip("_").lower() or "concept"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", type=Path)
    parser.add_argument("--out", type=Path, default=Path("plots"))
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args()

    frame = pd.read_csv(args.csv)
    args.out.mkdir(parents=True, exist_ok=True)
    for title, group in frame.groupby("concept", sort=True):
        fig, ax = plt.subplots(figsize=(5, 4.5))
        bins = sorted(group["bin"].unique())
        cmap = plt.get_cmap("viridis", max(len(bins), 2))
        for i, b in enumerate(bins):
            sel = group[group["bin"] == b]
            ax.scatter(sel["pc1"], sel["pc2"], s=4, alpha=0.6, color=cmap(i), label=str(b))
        ax.set_xlabel("PC1")
        ax.set_ylabel("PC2")
        ax.set_title(title)
        ax.legend(title="bin", markerscale=3, fontsize="small")
        fig.tight_layout()
        path = args.out / f"pca_{slug(title)}.png"
        fig.savefig(path, dpi=args.dpi)
        plt.close(fig)
        print(path)


if __name__ == "__main__":
    main()
