#!/usr/bin/env python3
"""Criterion-engine scan: normalization, fourth-power and contraction checks
for the block family and for the time-averaged pair kernels at both the
sqrt(lam) and the unit-variance sqrt(lam/2) scalings."""

import argparse
import math

from poisson_chaos.chaos import clt_criterion
from poisson_chaos.kernels import BlockKernel, OUDoubleHKernel
from poisson_chaos.ou import DEFAULT_JUMPS
from poisson_chaos.point_process import DiscreteControl, Window

UNIT = DiscreteControl(values=(1.0,), weights=(1.0,))


def show(label, verdict):
    print(f"{label}: {'PASS' if verdict.passed else 'FAIL'}")
    for c in verdict.checks:
        print(f"    {c.name:<16} {'ok' if c.passed else 'X'}  {c.reason}")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--block-sizes", default="10,30,100,300,1000")
    ap.add_argument("--horizons", default="50,100,200,400,800,1600")
    args = ap.parse_args()

    ns = [int(t) for t in args.block_sizes.split(",")]
    show("block family", clt_criterion([BlockKernel(n) for n in ns], UNIT,
                                       [Window(0.0, float(n)) for n in ns], index=ns))

    lam = args.lam
    ts = [float(t) for t in args.horizons.split(",")]
    windows = [Window(-12.0 / lam, t) for t in ts]
    for label, s in ((f"sqrt(lam) pair family (lam={lam:g})", math.sqrt(lam)),
                     (f"sqrt(lam/2) pair family (lam={lam:g})", math.sqrt(lam / 2.0))):
        kernels = [OUDoubleHKernel(lam, t).scaled(s * math.sqrt(t)) for t in ts]
        show(label, clt_criterion(kernels, DEFAULT_JUMPS, windows, index=ts))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
