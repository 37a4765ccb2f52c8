#!/usr/bin/env python3
"""Render figures from the CLI's CSV outputs (kept out of the main package).

    python scripts/plot_results.py sweep --csv OUT/sweep.csv --out sweep.png
    python scripts/plot_results.py profiles --csv runA/snapshots.csv runB/snapshots.csv \
        --labels "delta=-0.5" "delta=0.5" --out profiles.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def plot_sweep(args):
    data = load_csv(args.csv[0])
    fig, (ax_j, ax_psi) = plt.subplots(1, 2, figsize=(10, 4))
    ax_j.plot(data["delta"], data["J"], "o-")
    ax_j.set_xlabel("kernel offset")
    ax_j.set_ylabel("J (time-integrated total variation)")
    ax_psi.plot(data["delta"], data["Psi"], "s-", color="tab:red")
    ax_psi.set_xlabel("kernel offset")
    ax_psi.set_ylabel("Psi (congestion functional)")
    for ax in (ax_j, ax_psi):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


def plot_profiles(args):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    labels = args.labels or [f"run {i}" for i in range(len(args.csv))]
    for path, label in zip(args.csv, labels):
        data = load_csv(path)
        t_final = data["t"].max()
        final = data[data["t"] == t_final]
        ax.plot(final["x_center"], final["rho"], label=f"{label} (t={t_final:g})")
    ax.set_xlabel("position")
    ax.set_ylabel("density")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for name, fn in (("sweep", plot_sweep), ("profiles", plot_profiles)):
        p = sub.add_parser(name)
        p.add_argument("--csv", nargs="+", required=True)
        p.add_argument("--labels", nargs="*", default=None)
        p.add_argument("--out", required=True)
        p.set_defaults(fn=fn)
    args = parser.parse_args()
    args.fn(args)


if __name__ == "__main__":
    main()
