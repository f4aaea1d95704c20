"""Command-line entry point: binds configurations to experiments and emits
reports.

Subcommands: criterion | block | ou | hazard | sample.  Flags override
config-file values.  Every output file embeds the tool version, the config
hash, and the master seed, so a rerun from that triple reproduces the file
byte-identically; wall times go to stdout only.  Exit codes: 0 all verdicts
pass, 1 at least one fails, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .configio import ConfigError, config_hash, control_from_section, read_config, window_from_section
from .point_process import DiscreteControl, Window, sample_pattern, pattern_to_csv
from .kernels import BlockKernel, GridKernel, OUDoubleHKernel
from . import chaos, hazard as hz, ou as oumod
from .harness import TargetSpec, collect, run_experiment, summarize

USAGE_ERROR = 2


def _provenance(args, cfg_path) -> dict:
    return {
        "tool_version": __version__,
        "config_hash": config_hash(cfg_path),
        "master_seed": args.seed,
    }


def _emit_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _emit_summary_csv(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("T,mean,var,var_se,m3,m4,ks,target,verdict\n")
        for row in rows:
            fh.write(",".join(repr(float(c)) if isinstance(c, (float, np.floating)) else str(c)
                              for c in row) + "\n")


def _report_rows(T, report, target):
    return [(T, report.mean, report.variance, report.variance_se,
             report.skewness, report.kurtosis,
             report.ks_distance if report.ks_distance is not None else "",
             target, "PASS" if report.passed else "FAIL")]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_criterion(args) -> int:
    outdir = Path(args.out)
    control = DiscreteControl(values=(1.0,), weights=(1.0,))
    if args.family == "block":
        indices = [int(t) for t in args.indices.split(",")]
        kernels = [BlockKernel(n) for n in indices]
        windows = [Window(0.0, float(n)) for n in indices]
        verdict = chaos.clt_criterion(kernels, control, windows,
                                      labels=[f"block_{n}" for n in indices], index=indices)
    elif args.family == "fixed":
        indices = [int(t) for t in args.indices.split(",")]
        base = GridKernel((0.0, 1.0), np.array([[2.0 ** -0.5]]))
        kernels = [base for _ in indices]
        windows = [Window(0.0, 1.0)] * len(indices)
        verdict = chaos.clt_criterion(kernels, control, windows,
                                      labels=[f"fixed_{n}" for n in indices], index=indices)
    elif args.family in ("ou-pair", "ou-pair-unit"):
        lam = args.lam
        ts = [float(t) for t in args.indices.split(",")]
        scale = math.sqrt(lam) if args.family == "ou-pair" else math.sqrt(lam / 2.0)
        control = oumod.DEFAULT_JUMPS
        kernels = [OUDoubleHKernel(lam, t).scaled(scale * math.sqrt(t)) for t in ts]
        windows = [Window(-12.0 / lam, t) for t in ts]
        verdict = chaos.clt_criterion(kernels, control, windows,
                                      labels=[f"T_{t:g}" for t in ts], index=ts)
    else:
        print(f"unknown kernel family {args.family!r}", file=sys.stderr)
        return USAGE_ERROR
    payload = verdict.to_dict()
    payload.update(_provenance(args, args.config))
    _emit_json(outdir / f"criterion_{args.family}.json", payload)
    print(f"criterion[{args.family}]: {'PASS' if verdict.passed else 'FAIL'}")
    return 0 if verdict.passed else 1


def cmd_block(args) -> int:
    outdir = Path(args.out)
    n = args.n
    t0 = time.perf_counter()
    values = collect(chaos.rep_block, n, args.reps, args.seed, args.workers)
    f_vals, g_vals = values[:, 0], values[:, 1]
    target = 3.0 + 37.0 / n
    report = summarize(f"block_I2_n{n}", f_vals,
                       targets=[TargetSpec("ks", 0.0, 0.02)],
                       master_seed=args.seed, ks_reference_variance=1.0,
                       tail_thresholds=(10.0, 100.0, 1000.0))
    g2 = float(np.mean(g_vals ** 2))
    g2_se = float(np.std(g_vals ** 2, ddof=1) / math.sqrt(g_vals.size))
    wall = time.perf_counter() - t0
    payload = report.to_dict(include_timing=False)
    payload["fourth_moment_mc"] = g2
    payload["fourth_moment_mc_se"] = g2_se
    payload["fourth_moment_target"] = target
    payload.update(_provenance(args, args.config))
    _emit_json(outdir / f"block_n{n}.json", payload)
    if args.dump:
        from .harness import values_to_csv
        values_to_csv(f_vals, outdir / f"block_n{n}_values.csv")
    ok = abs(g2 - target) <= 0.15
    if args.format == "csv":
        _emit_summary_csv(outdir / f"block_n{n}.csv",
                          [(n, report.mean, report.variance, report.variance_se,
                            report.skewness, g2, report.ks_distance, target,
                            "PASS" if ok else "FAIL")])
    print(f"block n={n}: fourth moment {g2:.4f} (target {target:.4f}), "
          f"ks {report.ks_distance:.4f}  [{wall:.1f}s]")
    return 0 if ok else 1


def _ou_config(args) -> oumod.OUConfig:
    return oumod.OUConfig(lam=args.lam, T=args.T)


def cmd_ou(args) -> int:
    outdir = Path(args.out)
    cfg = _ou_config(args)
    t0 = time.perf_counter()
    if args.theorem == 4:
        target = oumod.linear_variance_exact(args.lam, args.T)
        report = run_experiment(oumod.rep_linear, cfg, args.reps, args.seed,
                                targets=[TargetSpec("variance", target, args.tol or 0.15)],
                                name=f"ou_linear_T{args.T:g}", workers=args.workers,
                                ks_reference_variance=target)
        rows = _report_rows(args.T, report, target)
        payload = report.to_dict(include_timing=False)
    elif args.theorem in (5, 6):
        values = collect(oumod.rep_quadratic, cfg, args.reps, args.seed, args.workers)
        k2, k1, total, sv, lin = (values[:, i] for i in range(5))
        lam = args.lam
        derived = {"k2": 2.0 / lam, "k1": cfg.c_nu_sq,
                   "total": 2.0 / lam + cfg.c_nu_sq, "sample_var": 2.0 / lam + cfg.c_nu_sq}
        stated = {"k2": 1.0 / lam, "k1": cfg.c_nu_sq,
                   "total": 1.0 / lam + cfg.c_nu_sq, "sample_var": 1.0 / lam + cfg.c_nu_sq}
        series = {"k2": k2, "k1": k1, "total": total, "sample_var": sv}
        keys = ["k2", "k1", "total"] if args.theorem == 5 else ["sample_var"]
        reports = {}
        rows = []
        for key in keys:
            rep = summarize(f"ou_{key}_T{args.T:g}", series[key],
                            targets=[TargetSpec("variance", derived[key], args.tol or 0.2)],
                            master_seed=args.seed, ks_reference_variance=derived[key])
            reports[key] = rep
            rows.extend(_report_rows(args.T, rep, derived[key]))
        payload = {k: r.to_dict(include_timing=False) for k, r in reports.items()}
        payload["targets_stated"] = stated
        payload["targets_derived"] = derived
        payload["corr_k2_k1"] = float(np.corrcoef(k2, k1)[0, 1])
        report = reports[keys[0]]
    else:
        print(f"unknown theorem {args.theorem} for ou", file=sys.stderr)
        return USAGE_ERROR
    wall = time.perf_counter() - t0
    payload.update(_provenance(args, args.config))
    _emit_json(outdir / f"ou_thm{args.theorem}_T{args.T:g}.json", payload)
    if args.dump and args.theorem in (5, 6):
        from .harness import values_to_csv
        for key in keys:
            values_to_csv(series[key], outdir / f"ou_thm{args.theorem}_{key}_values.csv")
    if args.format == "csv":
        _emit_summary_csv(outdir / f"ou_thm{args.theorem}_T{args.T:g}.csv", rows)
    ok = all(r[-1] == "PASS" for r in rows)
    print(f"ou theorem {args.theorem} T={args.T:g}: {'PASS' if ok else 'FAIL'}  [{wall:.1f}s]")
    return 0 if ok else 1


def _hazard_model(args) -> hz.HazardModel:
    if args.config:
        sections = read_config(args.config)
        control = control_from_section(sections.get("control", {}))
    elif args.case == 2:
        control = hz.ExtendedGammaControl(eps=args.eps)
    elif args.case == 3:
        control = hz.BetaControl()
    else:
        control = DiscreteControl(values=(1.0,), weights=(1.0,))
    model = hz.rect_model(control, T=args.T, tau=args.tau)
    if isinstance(control, hz.ExtendedGammaControl):
        print(f"neglected mean mass from eps-truncation: ~{control.neglected_mean_mass():.2e} per unit time")
    return model


def cmd_hazard(args) -> int:
    outdir = Path(args.out)
    model = _hazard_model(args)
    t0 = time.perf_counter()
    if args.theorem == 7:
        target = hz.linear_case_targets(model, args.case)
        values = collect(hz.rep_linear_case, (model, args.case), args.reps, args.seed, args.workers)
        stats, cum = values[:, 0], values[:, 1]
        tol = args.tol or {1: 0.3, 2: 0.8, 3: 1.0}[args.case]
        report = summarize(f"hazard_case{args.case}_T{args.T:g}", stats,
                           targets=[TargetSpec("variance", target, tol)],
                           master_seed=args.seed, ks_reference_variance=target)
        payload = report.to_dict(include_timing=False)
        payload["empirical_centering_mean_H"] = float(np.mean(cum))
        payload["campbell_mean_H"] = hz.cumulative_mean_exact(model)
        payload["campbell_variance_H"] = hz.cumulative_variance_exact(model)
        rows = _report_rows(args.T, report, target)
        name = f"hazard_thm7_case{args.case}_T{args.T:g}"
    elif args.theorem == 8:
        values = collect(hz.rep_quadratic, model, args.reps, args.seed, args.workers)
        raw, centered = values[:, 0], values[:, 1]
        series = {"raw": raw, "centered": centered}
        stat = series[args.variant]
        stated = hz.quadratic_variance_stated(model, args.variant)
        derived = hz.quadratic_variance_derived(model, args.variant)
        tol = args.tol or (4.0 if args.variant == "raw" else 1.5)
        report = summarize(f"hazard_quad_{args.variant}_T{args.T:g}", stat,
                           targets=[TargetSpec("variance", derived, max(tol, 0.1 * derived))],
                           master_seed=args.seed, ks_reference_variance=derived)
        payload = report.to_dict(include_timing=False)
        payload["variance_stated"] = stated
        payload["variance_derived"] = derived
        rows = _report_rows(args.T, report, derived)
        name = f"hazard_thm8_{args.variant}_T{args.T:g}"
    else:
        print(f"unknown theorem {args.theorem} for hazard", file=sys.stderr)
        return USAGE_ERROR
    wall = time.perf_counter() - t0
    payload.update(_provenance(args, args.config))
    _emit_json(outdir / f"{name}.json", payload)
    if args.dump:
        from .harness import values_to_csv
        values_to_csv(stats if args.theorem == 7 else stat, outdir / f"{name}_values.csv")
    if args.format == "csv":
        _emit_summary_csv(outdir / f"{name}.csv", rows)
    ok = report.passed
    print(f"hazard theorem {args.theorem}: {'PASS' if ok else 'FAIL'}  [{wall:.1f}s]")
    return 0 if ok else 1


def cmd_sample(args) -> int:
    outdir = Path(args.out)
    if args.config:
        sections = read_config(args.config)
        control = control_from_section(sections.get("control", {}))
        window = window_from_section(sections.get("window", {}))
    else:
        control = DiscreteControl(values=(1.0,), weights=(1.0,))
        window = Window(args.x_lo, args.x_hi)
    pattern = sample_pattern(control, window, args.seed)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "pattern.csv"
    pattern_to_csv(pattern, path)
    extra = getattr(control, "neglected_second_moment", lambda: 0.0)()
    print(f"wrote {path} ({len(pattern)} atoms, mass {pattern.total_mass:.6g}, "
          f"neglected second-moment mass {extra:.3e})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poisson-chaos",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--reps", "--R", type=int, default=None, help="replication count")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--tol", type=float, default=None, help="override verdict tolerance")
        p.add_argument("--dump", action="store_true",
                       help="also stream per-replication values to CSV")

    p = sub.add_parser("criterion", help="audit a kernel sequence for the Gaussian limit")
    common(p)
    p.add_argument("--family", required=True,
                   help="block | fixed | ou-pair (sqrt(lam) scaling) | ou-pair-unit (sqrt(lam/2))")
    p.add_argument("--indices", default="10,30,100,300,1000",
                   help="comma-separated sequence indices (block sizes or horizons)")
    p.add_argument("--lam", "--lambda", type=float, default=1.0)

    p = sub.add_parser("block", help="Monte Carlo fourth-moment check for the block family")
    common(p)
    p.add_argument("--n", type=int, default=50, help="number of unit-mass blocks")

    p = sub.add_parser("ou", help="moving-average process experiments")
    common(p)
    p.add_argument("--theorem", type=int, required=True,
                   help="4 = linear statistic, 5 = quadratic split, 6 = sample variance")
    p.add_argument("--lam", "--lambda", type=float, default=1.0)
    p.add_argument("--T", type=float, default=200.0)

    p = sub.add_parser("hazard", help="random hazard rate experiments")
    common(p)
    p.add_argument("--theorem", type=int, required=True, help="7 = linear, 8 = quadratic")
    p.add_argument("--case", type=int, default=1, help="control family case for theorem 7")
    p.add_argument("--variant", choices=("raw", "centered"), default="raw")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--eps", type=float, default=1e-4)

    p = sub.add_parser("sample", help="dump one point pattern as CSV")
    common(p)
    p.add_argument("--x-lo", type=float, default=0.0)
    p.add_argument("--x-hi", type=float, default=10.0)
    return parser


def _resolve_defaults(args) -> None:
    """Config-file [experiment] values fill in seed/reps; explicit flags win."""
    section = {}
    if args.config:
        section = read_config(args.config).get("experiment", {})
    if args.seed is None:
        args.seed = int(section.get("seed", 20240801))
    if args.reps is None:
        args.reps = int(section.get("reps", 5000))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0,) else 0
    handlers = {"criterion": cmd_criterion, "block": cmd_block,
                "ou": cmd_ou, "hazard": cmd_hazard, "sample": cmd_sample}
    try:
        _resolve_defaults(args)
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ValueError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
