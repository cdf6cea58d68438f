#!/usr/bin/env python3
"""Run the desk-scale turbulence x bit-length sweep with the acceptance
configuration and print the per-(model, n) accuracy-vs-T medians."""

import argparse
import os
import sys
from collections import defaultdict

import numpy as np

from oamtopo.pipeline import desk_sweep_config, sweep


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="desk_grid.csv")
    ap.add_argument("--workdir", default=None)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--n-list", default="4,5,6")
    ap.add_argument("--t-list", default="0,3,6,9,12")
    ap.add_argument("--seeds", type=int, default=None)
    args = ap.parse_args()

    cfg = desk_sweep_config()
    if args.seeds:
        import dataclasses

        cfg = dataclasses.replace(cfg, sweep_seeds=args.seeds)
    n_list = tuple(int(x) for x in args.n_list.split(","))
    t_list = tuple(float(x) for x in args.t_list.split(","))
    rows = sweep(cfg, n_list, t_list, args.out, workdir=args.workdir, jobs=args.jobs)

    acc = defaultdict(list)
    for row in rows[1:]:
        model, n, t, seed, a, _ = row.split(",")
        acc[(model, int(n), float(t))].append(float(a))
    print(f"\nmedian accuracy over {cfg.sweep_seeds} seeds:")
    print(f"{'model':<8}{'n':>3}  " + "  ".join(f"T={t:g}" for t in t_list))
    for model in ("cnn", "ph_cnn"):
        for n in n_list:
            meds = [np.median(acc[(model, n, t)]) for t in t_list]
            print(f"{model:<8}{n:>3}  " + "  ".join(f"{m:5.3f}" for m in meds))
    return 0


if __name__ == "__main__":
    sys.exit(main())
