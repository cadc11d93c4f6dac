#!/usr/bin/env python3
"""Render figures from a `stablereg report` output directory.

For every scenario found it draws one PNG with two panels:
  left  - mean RMSE versus the test bias rate, one curve per method
  right - unstable-coefficient error per method, with std-dev whiskers

Usage:
  python3 tools/plot_results.py REPORT_DIR [-o OUT_DIR]
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_scenario(name: str, curves: pd.DataFrame, bars: pd.DataFrame | None,
                  out_path: Path) -> None:
    ncols = 2 if bars is not None and not bars.empty else 1
    fig, axes = plt.subplots(1, ncols, figsize=(6.0 * ncols, 4.2))
    if ncols == 1:
        axes = [axes]

    ax = axes[0]
    for method, grp in curves.groupby("method"):
        grp = grp.sort_values("r_test")
        ax.plot(grp["r_test"], grp["mean_rmse"], marker="o", markersize=3.5,
                linewidth=1.4, label=method)
    ax.set_xlabel("test bias rate r")
    ax.set_ylabel("mean RMSE")
    ax.set_title(f"{name}: stability across test environments")
    ax.axvline(0, color="gray", linewidth=0.6, alpha=0.5)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.25, linewidth=0.5)

    if ncols == 2:
        ax = axes[1]
        order = bars.sort_values("beta_v_error_mean")
        std = order["beta_v_error_var"].map(lambda v: math.sqrt(max(v, 0.0)))
        ax.bar(order["method"], order["beta_v_error_mean"], yerr=std,
               capsize=3, color="#4878a8")
        ax.set_ylabel("unstable-coefficient error")
        ax.set_title(f"{name}: spurious weight absorbed in training")
        ax.grid(axis="y", alpha=0.25, linewidth=0.5)

    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    print(f"wrote {out_path}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("report_dir", type=Path,
                    help="directory produced by `stablereg report`")
    ap.add_argument("-o", "--out", type=Path, default=None,
                    help="output directory for PNGs (default: report_dir)")
    args = ap.parse_args()

    out_dir = args.out or args.report_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    curve_files = sorted(args.report_dir.glob("curves_*.csv"))
    if not curve_files:
        print(f"no curves_*.csv found in {args.report_dir}", file=sys.stderr)
        return 1

    for cf in curve_files:
        scenario = cf.stem[len("curves_"):]
        curves = pd.read_csv(cf)
        bars_path = args.report_dir / f"beta_errors_{scenario}.csv"
        bars = pd.read_csv(bars_path) if bars_path.exists() else None
        plot_scenario(scenario, curves, bars, out_dir / f"{scenario}.png")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
