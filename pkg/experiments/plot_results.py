#!/usr/bin/env python3

import os, sys, argparse
import pandas as pd
import matplotlib
import matplotlib.pyplot as plt
import seaborn as sns

# --- Defaults for PDF-ready figures ---
def set_style(dark=False):
    matplotlib.rcParams.update({
        "figure.dpi": 150,
        "savefig.dpi": 300,
        "font.size": 11,
        "axes.titlesize": 12,
        "axes.labelsize": 11,
        "legend.fontsize": 10,
        "axes.grid": True,
        "grid.alpha": 0.25,
        "grid.linestyle": "--",
        "axes.spines.top": False,
        "axes.spines.right": False,
        "figure.autolayout": True,
    })
    if dark:
        plt.style.use("dark_background")
        matplotlib.rcParams.update({"grid.color": "#BBBBBB"})
    else:
        sns.set_palette("colorblind")

def ensure_dirs():
    os.makedirs("experiments/plots", exist_ok=True)

def savefig(base, fmt):
    path = f"experiments/plots/{base}.{fmt}"
    plt.savefig(path, bbox_inches="tight", transparent=False)
    print("Wrote", path)

def load_csvs():
    res = pd.read_csv("experiments/results.csv")
    sweeps = pd.read_csv("experiments/sweeps.csv")
    return res, sweeps

def chi2_curves(sweeps, fmt):
    """Median train/test chi^2 per rank, one panel per suite."""
    for suite, g in sweeps.groupby("suite"):
        long = g.melt(id_vars=["seed", "rank"], value_vars=["chi2_train", "chi2_test"],
                      var_name="set", value_name="chi2")
        fig, ax = plt.subplots(figsize=(5.2, 3.4))
        sns.lineplot(data=long, x="rank", y="chi2", hue="set", estimator="median",
                     errorbar=("pi", 50), marker="o", ax=ax)
        ax.set_yscale("log")
        ax.set_title(f"Training and testing error ({suite})")
        ax.set_xlabel("Model rank k")
        ax.set_ylabel(r"$\chi^2$ (log scale)")
        savefig(f"chi2_{suite}", fmt)
        plt.close(fig)

def selected_ranks(res, fmt):
    df = res[res["suite"] != "noise"]
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    sns.countplot(data=df, x="selected_rank", hue="suite", ax=ax, edgecolor="black", linewidth=0.6)
    ax.set_title("Selected rank across seeds")
    ax.set_xlabel("Selected rank")
    ax.set_ylabel("Seeds")
    savefig("selected_rank", fmt)
    plt.close(fig)

def ratio_hist(res, fmt):
    if "ratio_mean" not in res.columns:
        return
    df = res[(res["suite"] == "fiducial") & res["ratio_mean"].notna()]
    if df.empty:
        return
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    sns.histplot(df["ratio_mean"], bins=12, ax=ax, edgecolor="black")
    ax.set_title("Mean linear dimension ratio per seed")
    ax.set_xlabel("Ratio")
    savefig("ratio_hist", fmt)
    plt.close(fig)

def straddle_scatter(res, fmt):
    if "max_realized_norm" not in res.columns:
        return
    df = res[(res["suite"] == "fiducial") & res["max_realized_norm"].notna()]
    if df.empty:
        return
    fig, ax = plt.subplots(figsize=(4.4, 4.0))
    ax.scatter(df["max_realized_norm"], df["min_consistent_norm"], s=30, edgecolor="black", linewidth=0.5)
    lo = min(df["max_realized_norm"].min(), df["min_consistent_norm"].min())
    hi = max(df["max_realized_norm"].max(), df["min_consistent_norm"].max())
    ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8)
    ax.set_title("Straddling per seed")
    ax.set_xlabel("max realized Bloch norm")
    ax.set_ylabel("min consistent Bloch norm")
    savefig("straddle", fmt)
    plt.close(fig)

def noise_response(res, fmt):
    df = res[res["suite"] == "noise"]
    if df.empty:
        return
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    ax.plot(df["epsilon"], df["ratio_mean"], marker="o")
    ax.set_title("Ratio under depolarizing noise")
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel("Mean ratio")
    savefig("noise_response", fmt)
    plt.close(fig)

def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--style", choices=["light","dark"], default="light")
    ap.add_argument("--fmt", choices=["png","svg"], default="png",
                    help="Output format. SVG recommended for LaTeX/PDF.")
    args = ap.parse_args()

    set_style(dark=(args.style=="dark"))
    ensure_dirs()
    res, sweeps = load_csvs()

    chi2_curves(sweeps, args.fmt)
    selected_ranks(res, args.fmt)
    ratio_hist(res, args.fmt)
    straddle_scatter(res, args.fmt)
    noise_response(res, args.fmt)

    print("All plots generated in experiments/plots/")

if __name__ == "__main__":
    main()
