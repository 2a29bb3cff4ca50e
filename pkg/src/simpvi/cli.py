"""Command-line front end: ``simpvi {simulate,converge,compare-reduced,validate,presets}``.

Exit codes: 0 success, 1 numerical failure (or failed validation), 2 usage error.
Every option may also come from ``--config FILE``, a flat TOML file whose
keys are option names (``h_frac = 0.05``); flags given on the command line win.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import (
    detect_cusps,
    energy_error_series,
    momentum_error_series,
    nutation_error_series,
    sup_norm,
    tip_path,
)
from .elliptic import exact_nutation
from .errors import ContractError, SimpviError
from .experiments import (
    INTEGRATORS,
    energy_sweep,
    nutation_sweep,
    reduced_comparison,
    reference_cubic,
    reference_period,
    run,
    self_convergence_sweep,
)
from .io import read_config, write_csv, write_json
from .model import energy, velocity
from .newton import NewtonConfig
from .systems import PRESETS, get_preset
from .validation import DERIVATIVES, elliptic_identities, gear_exactness, validate_preset

REDUCED_PRESET = "lagrange-top-table4"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--config", metavar="FILE", help="flat TOML file of option defaults")
    p.add_argument("--out", default=".", help="output directory (default: %(default)s)")
    p.add_argument("--name", help="file stem for outputs (default derived from the run)")
    p.add_argument("--backend", choices=["auto", "python", "cython"], default="auto",
                   help="step-kernel backend (default: %(default)s)")


def _newton(p):
    p.add_argument("--tolerance", type=float, default=1e-12, help="Newton residual tolerance, inf-norm (default: %(default)g)")
    p.add_argument("--max-iterations", type=int, default=50, help="Newton iteration cap (default: %(default)s)")
    p.add_argument("--damping", type=float, default=1.0, help="Newton damping in (0, 1] (default: %(default)s)")
    p.add_argument("--predictor", choices=["hold", "extrapolate"], default="hold",
                   help="initial guess per step (default: %(default)s)")


def _stepping(p, h_help):
    p.add_argument("--h", type=float, help=h_help)
    p.add_argument("--h-frac", type=float, help="step as a fraction of the nutation period (top presets)")
    p.add_argument("--t-end", type=float, help="final time in seconds (default 10 s for the pendulum)")
    p.add_argument("--periods", type=float, help="horizon in nutation periods (top presets; default 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="simpvi", description="Simpson variational integrator experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    preset_help = f"system preset: {', '.join(sorted(PRESETS))}"

    s = sub.add_parser("simulate", help="integrate one preset and write trajectory, summary and figure data")
    _common(s)
    s.add_argument("--preset", required=False, default="lagrange-top-table3", help=preset_help + " (default: %(default)s)")
    s.add_argument("--integrator", choices=INTEGRATORS, default="simpson", help="(default: %(default)s)")
    _stepping(s, "step in seconds (default: 0.1 for the pendulum, 0.05 periods for tops)")
    _newton(s)
    s.add_argument("--no-figures", action="store_true", help="skip the per-figure data CSVs")

    c = sub.add_parser("converge", help="error norms under step halving and the fitted order")
    _common(c)
    c.add_argument("--preset", default="lagrange-top-table3", help=preset_help + " (default: %(default)s)")
    c.add_argument("--integrator", choices=INTEGRATORS, default="simpson", help="(default: %(default)s)")
    _stepping(c, "largest step in seconds")
    c.add_argument("--halvings", type=int, default=4, help="number of halvings of the base step (default: %(default)s)")
    c.add_argument("--metric", choices=["energy", "nutation"], default="nutation", help="(default: %(default)s)")
    c.add_argument("--reference", choices=["exact", "none"], default="exact",
                   help="nutation reference: exact solution or successive refinements (default: %(default)s)")
    c.add_argument("--workers", type=int, default=1, help="parallel processes for sweep members (default: %(default)s)")
    _newton(c)

    r = sub.add_parser("compare-reduced", help="full-system run minus RK4 on the reduced top, under halving")
    _common(r)
    r.add_argument("--preset", default=REDUCED_PRESET, help="(default: %(default)s; the only supported value)")
    r.add_argument("--integrator", choices=["simpson", "midpoint"], default="simpson", help="(default: %(default)s)")
    r.add_argument("--h", type=float, default=0.1, help="largest step in seconds (default: %(default)s)")
    r.add_argument("--halvings", type=int, default=4, help="(default: %(default)s)")
    r.add_argument("--horizon", type=float, default=1.0, help="final time in seconds (default: %(default)s)")
    r.add_argument("--workers", type=int, default=1, help="(default: %(default)s)")
    _newton(r)

    v = sub.add_parser("validate", help="derivative, Jacobian and special-function self-checks")
    _common(v)
    v.add_argument("--preset", action="append", help="preset to check (repeatable; default: all)")
    v.add_argument("--samples", type=int, default=20, help="random states per check (default: %(default)s)")
    v.add_argument("--corrupt", choices=DERIVATIVES, help="scale one analytic derivative by 1.01 (negative control)")

    pr = sub.add_parser("presets", help="list the system presets")
    pr.add_argument("--config", help=argparse.SUPPRESS)
    return parser, {"simulate": s, "converge": c, "compare-reduced": r, "validate": v, "presets": pr}


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            values = read_config(args.config)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        known = set(vars(args)) - {"command", "config"}
        unknown = sorted(set(values) - known)
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        subs[args.command].set_defaults(**values)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# helpers


def _preset(name):
    try:
        return get_preset(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _newton_config(args):
    try:
        return NewtonConfig(tolerance=args.tolerance, max_iterations=args.max_iterations,
                            damping=args.damping, predictor=args.predictor)
    except ContractError as exc:
        raise UsageError(str(exc)) from None


def resolve_grid(args, preset):
    """(h, t_end) from exactly one of h/h_frac and one of t_end/periods."""
    if args.h is not None and args.h_frac is not None:
        raise UsageError("give only one of --h and --h-frac")
    if args.t_end is not None and args.periods is not None:
        raise UsageError("give only one of --t-end and --periods")
    if (args.h_frac is not None or args.periods is not None) and not preset.is_top:
        raise UsageError("--h-frac and --periods need a top preset")
    period = reference_period(preset) if preset.is_top else None
    if args.h is not None:
        h = args.h
    elif args.h_frac is not None:
        h = args.h_frac * period
    else:
        h = 0.05 * period if preset.is_top else 0.1
    if args.t_end is not None:
        t_end = args.t_end
    elif args.periods is not None:
        t_end = args.periods * period
    else:
        t_end = period if preset.is_top else 10.0
    if not (h > 0 and np.isfinite(h)):
        raise UsageError(f"step must be positive, got {h}")
    if not (t_end >= 0 and np.isfinite(t_end)):
        raise UsageError(f"horizon must be non-negative, got {t_end}")
    return h, t_end


def _out(args, default_stem):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out, (args.name or default_stem)


def trajectory_table(traj, preset):
    """Columns t, q1..qn, p1..pn, H (plus p_phi, p_psi for tops)."""
    n = preset.model.n
    H = np.array([energy(preset.model, pt) for pt in traj.points])
    header = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)] + ["H"]
    cols = [traj.t[:, None], traj.q, traj.p, H[:, None]]
    if preset.is_top:
        header += ["p_phi", "p_psi"]
        cols += [traj.p[:, [0, 2]]]
    return header, np.hstack(cols)


def _write_trajectory(path, traj, preset):
    header, table = trajectory_table(traj, preset)
    return write_csv(path, header, table)


def figure_data(out, stem, traj, preset):
    """Data-only CSVs per figure class; returns the written paths."""
    written = []
    eH = energy_error_series(traj, preset.model)
    written.append(write_csv(out / f"{stem}_energy.csv", ["t", "e_H"], np.column_stack([eH.times, eH.values])))
    if preset.is_top:
        cubic = reference_cubic(preset)
        exact = exact_nutation(cubic, traj.t)
        eth = nutation_error_series(traj, lambda t: exact_nutation(cubic, t))
        written.append(write_csv(out / f"{stem}_nutation.csv", ["t", "theta", "theta_exact", "e_theta"],
                                 np.column_stack([traj.t, traj.q[:, 1], exact, eth.values])))
        e_phi = momentum_error_series(traj, preset.model, 0)
        e_psi = momentum_error_series(traj, preset.model, 2)
        written.append(write_csv(out / f"{stem}_momentum.csv", ["t", "e_p_phi", "e_p_psi"],
                                 np.column_stack([traj.t, e_phi.values, e_psi.values])))
        phidot = np.array([velocity(preset.model, q, p)[0] for q, p in zip(traj.q, traj.p)])
        cusp = detect_cusps(phidot).astype(float)
        written.append(write_csv(out / f"{stem}_tip.csv", ["t", "x", "y", "z", "phidot", "cusp"],
                                 np.column_stack([traj.t, tip_path(traj.q), phidot, cusp])))
    return written


def summarize(traj, preset, h, t_end):
    its = traj.newton_iterations
    sources = sorted({s.jacobian_source for s in traj.stats})
    summary = {
        "preset": preset.name,
        "integrator": traj.method,
        "backend": kernels.backend_name(),
        "h": h,
        "t_end": t_end,
        "n_steps": traj.n_steps,
        "max_energy_error": sup_norm(energy_error_series(traj, preset.model)),
        "newton": {
            "total_iterations": int(its.sum()) if its.size else 0,
            "mean_iterations": float(its.mean()) if its.size else 0.0,
            "max_iterations": int(its.max()) if its.size else 0,
            "max_final_residual": max((s.final_residual_norm for s in traj.stats), default=0.0),
            "jacobian_sources": sources,
        },
    }
    if preset.is_top:
        cubic = reference_cubic(preset)
        summary["nutation_period"] = reference_period(preset)
        summary["max_nutation_error"] = sup_norm(nutation_error_series(traj, lambda t: exact_nutation(cubic, t)))
        summary["max_momentum_error"] = {
            "p_phi": sup_norm(momentum_error_series(traj, preset.model, 0)),
            "p_psi": sup_norm(momentum_error_series(traj, preset.model, 2)),
        }
    return summary


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    preset = _preset(args.preset)
    h, t_end = resolve_grid(args, preset)
    cfg = _newton_config(args)
    out, stem = _out(args, f"{preset.name}_{args.integrator}")
    try:
        traj = run(preset, args.integrator, h, t_end, cfg)
    except ContractError as exc:
        raise UsageError(str(exc)) from None
    except SimpviError as exc:
        partial = getattr(exc, "trajectory", None)
        if partial is not None:
            path = _write_trajectory(out / f"{stem}.csv.partial", partial, preset)
            print(f"wrote {path} ({partial.n_steps} steps before failure)", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    path = _write_trajectory(out / f"{stem}.csv", traj, preset)
    summary = summarize(traj, preset, h, t_end)
    write_json(out / f"{stem}.json", summary)
    print(f"wrote {path} ({traj.n_steps + 1} rows)")
    if not args.no_figures:
        for p in figure_data(out, stem, traj, preset):
            print(f"wrote {p}")
    print(f"max |e_H| = {summary['max_energy_error']:.3e}")
    return 0


def _write_report(out, stem, report):
    write_csv(out / f"{stem}.csv", ["h", "norm", "order"], report.rows())
    write_json(out / f"{stem}.json", report.to_dict())
    for h, e, a in report.rows():
        print(f"h = {h:.6g}  norm = {e:.6e}  order = {a:.4f}")
    print(f"least-squares slope = {report.slope:.4f}")
    if report.flagged:
        print("; ".join(report.notes))


def cmd_converge(args):
    preset = _preset(args.preset)
    h, t_end = resolve_grid(args, preset)
    cfg = _newton_config(args)
    if args.halvings < 0:
        raise UsageError("--halvings must be non-negative")
    if args.metric == "nutation" and not preset.is_top:
        raise UsageError("the nutation metric needs a top preset")
    out, stem = _out(args, f"converge_{preset.name}_{args.integrator}_{args.metric}")
    try:
        if args.metric == "energy":
            report = energy_sweep(preset.name, args.integrator, h, args.halvings, t_end, cfg, args.workers)
        elif args.reference == "exact":
            report = nutation_sweep(preset.name, args.integrator, h, args.halvings, t_end, cfg, args.workers)
        else:
            report = self_convergence_sweep(preset.name, args.integrator, h, args.halvings, t_end, cfg, args.workers)
    except ContractError as exc:
        raise UsageError(str(exc)) from None
    except SimpviError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_report(out, stem, report)
    return 0


def cmd_compare_reduced(args):
    if args.preset != REDUCED_PRESET:
        raise UsageError(f"compare-reduced supports only {REDUCED_PRESET}")
    cfg = _newton_config(args)
    if args.halvings < 0:
        raise UsageError("--halvings must be non-negative")
    out, stem = _out(args, f"compare_reduced_{args.integrator}")
    try:
        report = reduced_comparison(args.h, args.halvings, args.horizon, args.preset, args.integrator, cfg, args.workers)
    except ContractError as exc:
        raise UsageError(str(exc)) from None
    except SimpviError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_report(out, stem, report)
    return 0


def cmd_validate(args):
    names = args.preset or sorted(PRESETS)
    presets = [_preset(n) for n in names]
    out, stem = _out(args, "validation")
    reports = [validate_preset(p, corrupt=args.corrupt, count=args.samples) for p in presets]
    special = {"elliptic": elliptic_identities(), "gear": gear_exactness()}
    passed = all(r["passed"] for r in reports) and all(v["passed"] for v in special.values())
    write_json(out / f"{stem}.json", {"presets": reports, **special, "passed": passed})
    for r in reports:
        status = "PASS" if r["passed"] else "FAIL " + ", ".join(r["failures"])
        print(f"{r['preset']}: {status}")
    for k, v in special.items():
        print(f"{k}: {'PASS' if v['passed'] else 'FAIL'}")
    return 0 if passed else 1


def cmd_presets(args):
    for name in sorted(PRESETS):
        p = PRESETS[name]
        line = f"{name}: {p.description}"
        if p.is_top:
            line += f" [nutation period {reference_period(p):.10g} s]"
        print(line)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "compare-reduced": cmd_compare_reduced,
    "validate": cmd_validate,
    "presets": cmd_presets,
}


def main(argv=None):
    args = parse_args(sys.argv[1:] if argv is None else argv)
    backend = getattr(args, "backend", "auto")
    previous = None
    try:
        if backend != "auto":
            try:
                previous = kernels.set_backend(backend)
            except ValueError as exc:  # extension not built
                raise UsageError(str(exc)) from None
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"simpvi {args.command}: error: {exc}", file=sys.stderr)
        return 2
    finally:
        if previous is not None:
            kernels.set_backend(previous)


if __name__ == "__main__":
    sys.exit(main())
