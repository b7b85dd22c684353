#!/usr/bin/env python3
"""Render rate-distortion curves and per-frame PSNR CDFs from sweep CSVs."""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_rd(csv, out):
    df = pd.read_csv(csv)
    df = df[df["error"].isna()]
    fig, ax = plt.subplots(figsize=(6, 4))
    for (method, eta, tau, f), group in df.groupby(["method", "eta", "tau_ms", "F"]):
        label = method if method == "bicubic" else f"{method} eta={eta} tau={tau} F={f}"
        group = group.sort_values("bpp")
        ax.plot(group["bpp"], group["psnr_db"], marker="o", label=label)
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel("PSNR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_cdf(csv, out):
    df = pd.read_csv(csv)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, group in df.groupby(["method", "eta", "tau_ms", "quality", "F"]):
        values = group["psnr_db"].sort_values().to_numpy()
        ax.step(values, [(i + 1) / len(values) for i in range(len(values))], where="post", label=" ".join(map(str, key)))
    ax.set_xlabel("per-frame PSNR (dB)")
    ax.set_ylabel("CDF")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("rd_csv")
    parser.add_argument("--cdf-csv")
    parser.add_argument("--out", default="rd.png")
    parser.add_argument("--cdf-out", default="cdf.png")
    args = parser.parse_args()
    plot_rd(args.rd_csv, args.out)
    if args.cdf_csv:
        plot_cdf(args.cdf_csv, args.cdf_out)


if __name__ == "__main__":
    main()
