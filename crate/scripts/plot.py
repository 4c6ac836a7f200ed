#!/usr/bin/env python3
"""Plots the CSV outputs of scripts/pipeline.sh.

usage: scripts/plot.py PIPELINE_OUT_DIR [PNG_DIR]

Each figure is written only if its inputs exist. Needs matplotlib.
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def columns(path):
    header, rows = read(path)
    return {h: [float(r[i]) for r in rows] for i, h in enumerate(header)}


def save(fig, out, name):
    fig.tight_layout()
    fig.savefig(out / name, dpi=120)
    plt.close(fig)
    print(out / name)


def distances(src, out):
    header, rows = read(src / "dist" / "distances.csv")
    names = header[1:]
    d = [[float(x) for x in r[1:]] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(d, cmap="viridis")
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=6)
    ax.set_yticks(range(len(names)), names, fontsize=6)
    fig.colorbar(im, ax=ax, label="distance")
    save(fig, out, "distances.png")


def rates(src, out):
    c = columns(src / "rates" / "rates.csv")
    t = c.pop("t")
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, r in c.items():
        ax.plot(t, r, lw=0.8, alpha=0.7)
    band = src / "gp" / "gp_band.csv"
    if band.exists():
        g = columns(band)
        ax.fill_between(g["t"], g["lower"], g["upper"], color="k", alpha=0.15, label="GP band")
        ax.plot(g["t"], g["mean"], "k", lw=2, label="GP mean")
        ax.legend()
    ax.axhline(0, color="grey", lw=0.5)
    ax.set_xlabel("reference time")
    ax.set_ylabel("rate")
    save(fig, out, "rates.png")


def bottleneck(src, out):
    c = columns(src / "bottleneck" / "scores.csv")
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(c["t"], c["score"])
    i = min(range(len(c["score"])), key=c["score"].__getitem__)
    ax.axvline(c["t"][i], color="r", ls="--", label=f"t* = {c['t'][i]:.3f}")
    ax.set_xlabel("window centre")
    ax.set_ylabel("score")
    ax.legend()
    save(fig, out, "bottleneck.png")


def features(src, out):
    c = columns(src / "bestpractice" / "features.csv")
    if "feature_2" not in c:
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    sc = ax.scatter(c["feature_1"], c["feature_2"], c=c["rate"], cmap="coolwarm")
    fig.colorbar(sc, ax=ax, label="rate")
    ax.set_xlabel("feature 1")
    ax.set_ylabel("feature 2")
    save(fig, out, "features.png")


def restandardize(src, out):
    c = columns(src / "restandardize" / "gamma_bar.csv")
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(c["t"], c["gamma"], label="mean warping")
    ax.plot([0, 1], [0, 1], "k:", lw=0.8, label="identity")
    ax.set_xlabel("reference time")
    ax.set_ylabel("cohort time")
    ax.legend()
    save(fig, out, "gamma_bar.png")


def main():
    if len(sys.argv) not in (2, 3):
        sys.exit(__doc__.strip().splitlines()[2])
    src = Path(sys.argv[1])
    out = Path(sys.argv[2]) if len(sys.argv) == 3 else src / "plots"
    out.mkdir(parents=True, exist_ok=True)
    for plot in (distances, rates, bottleneck, features, restandardize):
        try:
            plot(src, out)
        except FileNotFoundError as e:
            print(f"skipping {plot.__name__}: {e.filename} missing", file=sys.stderr)


if __name__ == "__main__":
    main()
