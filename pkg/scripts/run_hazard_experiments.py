#!/usr/bin/env python3
"""Hazard-rate CLT scans: linear statistic variance per control family
against the exact Campbell value and the stated limit, and the two quadratic
variants against both constants."""

import argparse
import math

import numpy as np

from poisson_chaos.harness import collect
from poisson_chaos.hazard import (
    cumulative_mean_exact, cumulative_variance_exact, linear_case_targets,
    quadratic_variance_derived, quadratic_variance_stated, rect_model,
    rep_linear_case, rep_quadratic,
)
from poisson_chaos.point_process import BetaControl, DiscreteControl, ExtendedGammaControl

UNIT = DiscreteControl(values=(1.0,), weights=(1.0,))


def control_for(case: int, eps: float):
    return {1: UNIT, 2: ExtendedGammaControl(eps=eps), 3: BetaControl()}[case]


def scaling(case: int, T: float) -> float:
    return {1: math.sqrt(T), 2: math.sqrt(math.log(T)), 3: T ** 0.25}[case]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--cases", default="1,2,3")
    ap.add_argument("--horizons", default="100,1000,10000")
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240801)
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--quadratic-T", type=float, default=400.0)
    args = ap.parse_args()

    for case in (int(c) for c in args.cases.split(",")):
        print(f"linear case {case}  (stated limit variance "
              f"{linear_case_targets(rect_model(control_for(case, args.eps), T=10.0), case):g})")
        print(f"{'T':>8} {'mc var':>9} {'campbell':>9} {'mc mean':>10} {'E[H]':>12}")
        for T in (float(t) for t in args.horizons.split(",")):
            model = rect_model(control_for(case, args.eps), T=T)
            vals = collect(rep_linear_case, (model, case), args.reps, args.seed)
            stat, cum = vals[:, 0], vals[:, 1]
            exact_var = cumulative_variance_exact(model) / scaling(case, T) ** 2
            print(f"{T:>8g} {stat.var(ddof=1):>9.4f} {exact_var:>9.4f} "
                  f"{np.mean(cum):>10.2f} {cumulative_mean_exact(model):>12.2f}")
        print()

    model = rect_model(UNIT, T=args.quadratic_T)
    vals = collect(rep_quadratic, model, max(args.reps, 2000), args.seed)
    raw, centered = vals[:, 0], vals[:, 1]
    print(f"quadratic, T = {args.quadratic_T:g}")
    print(f"  raw:      mc var {raw.var(ddof=1):8.2f}   derived {quadratic_variance_derived(model, 'raw'):8.2f}"
          f"   stated {quadratic_variance_stated(model, 'raw'):8.2f}")
    print(f"  centered: mc var {centered.var(ddof=1):8.2f}   derived {quadratic_variance_derived(model, 'centered'):8.2f}"
          f"   stated {quadratic_variance_stated(model, 'centered'):8.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
