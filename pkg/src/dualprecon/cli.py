"""Benchmark command line: instance generation, solver runs, certification,
and method comparisons with CSV trace emission.

Exit codes for ``run``: 0 tolerance reached, 1 malformed config, 2 iteration
budget exhausted, 3 step-search failure. ``certify`` exits 4 on assumption
violations. The DUALPRECON_OUT environment variable, when set, is used as
the base directory for relative output paths.
"""

import argparse
import csv
import json
import os
import sys
import time
from typing import Optional

import numpy as np

from .baselines import MirrorMap, euclidean_mirror_map, shifted_power_mirror_map
from .certify import (
    AssumptionViolationError,
    exp_penalty_constants,
    log_radius_pair_sampler,
    pnorm_constants,
    sample_bregman_ratio,
    write_report,
    CertificateReport,
)
from .core import DomainError
from .problems import (
    ProblemInstance,
    box_radii,
    build_problem,
    generate_random_instance,
    read_instance,
    write_instance,
)
from .solver import IterateRecord, IterateTrace, SolverConfig, solve, verify_rate_bounds

CSV_HEADER = ["iter", "f_val", "k_gap", "grad_norm", "L_inv", "grad_evals", "wall_ms"]


def _out_path(path: str) -> str:
    base = os.environ.get("DUALPRECON_OUT")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def write_trace_csv(trace: IterateTrace, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in trace.records:
            writer.writerow(
                [
                    rec.i,
                    repr(rec.f_val),
                    repr(rec.k_gap),
                    repr(rec.grad_norm),
                    repr(rec.L_star),
                    rec.grad_evals,
                    repr(rec.wall_ms),
                ]
            )


def read_trace_csv(path: str) -> IterateTrace:
    trace = IterateTrace()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            trace.records.append(
                IterateRecord(
                    i=int(row["iter"]),
                    f_val=float(row["f_val"]),
                    k_gap=float(row["k_gap"]),
                    grad_norm=float(row["grad_norm"]),
                    L_star=float(row["L_inv"]),
                    grad_evals=int(row["grad_evals"]),
                    wall_ms=float(row["wall_ms"]),
                )
            )
    return trace


def _x0_for(inst: ProblemInstance, args) -> np.ndarray:
    if getattr(args, "x0", None):
        x0 = np.array([float(v) for v in args.x0.split(",")])
        if x0.size != inst.d:
            raise ValueError(f"x0 has {x0.size} entries, expected {inst.d}")
        return x0
    return np.random.default_rng(args.x0_seed).standard_normal(inst.d)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    kind = args.kind.replace("-", "_")
    inst = generate_random_instance(
        kind, d=args.d, n=args.n, p=args.p, tau=args.tau, seed=args.seed
    )
    write_instance(inst, _out_path(args.output))
    return 0


def _load_run_settings(args):
    """Merge config-file values with CLI flags; flags win."""
    settings = {
        "method": "dual_precon",
        "step_rule": "doubling",
        "L0": 1.0,
        "max_iters": 10000,
        "tol_kgap": 1e-12,
        "tol_grad": 0.0,
        "x0_seed": 0,
        "x0": None,
        "mirror_p": None,
    }
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(settings) - {"instance", "output"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        settings.update(file_cfg)
    for key in settings:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _baseline_loop(f, k, x0, method, mirror_map, L0, max_iters, tol_kgap, budget=None):
    """Doubling-rule loop for gd / bregman, monitored with the same gap."""
    x = np.array(x0, dtype=float)
    t0 = time.perf_counter()
    trace = IterateTrace()
    fx = f.value(x)
    g = f.gradient(x)
    kg = k.value(g)
    grad_evals = 1
    L = float(L0)
    k0 = k.min_value

    def record(i):
        trace.records.append(
            IterateRecord(
                i=i,
                f_val=fx,
                k_gap=kg - k0,
                grad_norm=float(np.linalg.norm(g)),
                L_star=L,
                grad_evals=grad_evals,
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )

    i = 0
    while True:
        if kg - k0 <= tol_kgap:
            record(i)
            trace.termination_reason = "kgap_tol"
            break
        if i >= max_iters or (budget is not None and grad_evals >= budget):
            record(i)
            trace.termination_reason = "max_iters"
            break
        accepted = None
        while L <= 2.0**80:
            if method == "gd":
                x_new = x - g / L
            else:
                x_new = mirror_map.conjugate_gradient(mirror_map.gradient(x) - g / L)
            if f.in_domain(x_new):
                f_try = f.value(x_new)
                if np.isfinite(f_try) and f_try <= fx + 1e-12 * (1.0 + abs(fx)):
                    accepted = (x_new, f_try)
                    break
            L *= 2.0
        if accepted is None:
            record(i)
            trace.termination_reason = "step_search_exhausted"
            break
        record(i)
        x, fx = accepted
        g = f.gradient(x)
        kg = k.value(g)
        grad_evals += 1
        i += 1
    return trace


def _mirror_map_for(inst: ProblemInstance, mirror_p: Optional[float]) -> MirrorMap:
    if inst.kind == "pnorm":
        p = mirror_p if mirror_p is not None else inst.p
        center, *_ = np.linalg.lstsq(inst.A, inst.b, rcond=None)
        return shifted_power_mirror_map(center, p)
    return euclidean_mirror_map()


def cmd_run(args) -> int:
    try:
        settings = _load_run_settings(args)
        inst = read_instance(args.instance)
        f, k = build_problem(inst)
        x0 = _x0_for(inst, argparse.Namespace(x0=settings["x0"], x0_seed=settings["x0_seed"]))
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    method = settings["method"]
    if method == "dual_precon":
        cfg = SolverConfig(
            step_rule=settings["step_rule"],
            L0=settings["L0"],
            max_iters=settings["max_iters"],
            tol_kgap=settings["tol_kgap"],
            tol_grad=settings["tol_grad"],
        )
        trace = solve(f, k, x0, cfg)
    elif method in ("gd", "bregman"):
        mm = _mirror_map_for(inst, settings["mirror_p"]) if method == "bregman" else None
        trace = _baseline_loop(
            f, k, x0, method, mm, settings["L0"], settings["max_iters"], settings["tol_kgap"]
        )
    else:
        print(f"error: unknown method {method!r}", file=sys.stderr)
        return 1

    write_trace_csv(trace, _out_path(args.output))
    if trace.termination_reason in ("kgap_tol", "grad_tol"):
        return 0
    if trace.termination_reason == "step_search_exhausted":
        return 3
    return 2


def cmd_certify(args) -> int:
    try:
        inst = read_instance(args.instance)
        f, k = build_problem(inst)
    except ValueError as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return 4

    rng = np.random.default_rng(args.seed)
    try:
        if inst.kind == "pnorm":
            report = pnorm_constants(inst, n_dirs=args.n_dirs, seed=args.seed)
        elif inst.kind == "exp_penalty":
            r, R = (args.r, args.R)
            if (r is None or R is None) and inst.box:
                r, R = box_radii(inst)
            report = exp_penalty_constants(inst, r=r, R=R)
        elif inst.kind == "power1d":
            report = CertificateReport(closed_form_L_star=1.0, closed_form_mu_star=1.0)
        else:
            report = CertificateReport()

        radius_hi = 1e2 if inst.kind != "exp_penalty" else min(1e2, 500.0 * inst.tau)
        sampler = log_radius_pair_sampler(inst.d, rng, radii=(1e-2, radius_hi))
        inf_ratio, sup_ratio, ratios = sample_bregman_ratio(f, k, sampler, args.n_pairs)
        report.mu_star_estimate = inf_ratio
        report.L_star_estimate = sup_ratio
        report.n_samples = int(ratios.size)
        violation = 0.0
        if report.closed_form_L_star is not None:
            violation = max(violation, sup_ratio - report.closed_form_L_star)
        if report.closed_form_mu_star is not None:
            violation = max(violation, report.closed_form_mu_star - inf_ratio)
        report.worst_violation = violation
    except AssumptionViolationError as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return 4

    if args.check_bounds:
        ref = solve(
            f, k, np.random.default_rng(args.x0_seed).standard_normal(inst.d),
            SolverConfig(step_rule="adaptive", L0=1.0, max_iters=50000, tol_kgap=1e-14),
        )
        f_min = float(np.min(ref.f_vals()))
        run = solve(
            f, k, np.random.default_rng(args.x0_seed + 1).standard_normal(inst.d),
            SolverConfig(step_rule="adaptive", L0=1.0, max_iters=2000, tol_kgap=1e-12),
        )
        bounds = verify_rate_bounds(run, f_min=f_min)
        report.constants["sublinear_bound_ok"] = float(bounds["sublinear_ok"])
        report.constants["worst_sublinear_margin"] = bounds["worst_sublinear_margin"]

    write_report(report, _out_path(args.output))
    return 0


def cmd_compare(args) -> int:
    try:
        inst = read_instance(args.instance)
        f, k = build_problem(inst)
        x0 = _x0_for(inst, args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.dual_reference == "power":
        if inst.kind not in ("pnorm", "power1d"):
            print("error: power reference requires a power-family instance", file=sys.stderr)
            return 1
        from .problems import power_dual_reference

        k = power_dual_reference(float(inst.p), inst.d)

    methods = args.methods.split(",")
    outdir = _out_path(args.outdir)
    os.makedirs(outdir, exist_ok=True)
    summary = []
    for method in methods:
        if method == "dual_precon":
            cfg = SolverConfig(
                step_rule=args.step_rule,
                L0=args.L0,
                max_iters=args.budget,
                tol_kgap=args.tol,
            )
            trace = solve(f, k, x0, cfg)
        else:
            mm = _mirror_map_for(inst, args.mirror_p) if method == "bregman" else None
            trace = _baseline_loop(
                f, k, x0, method, mm, args.L0, 10**9, args.tol, budget=args.budget
            )
        write_trace_csv(trace, os.path.join(outdir, f"{method}.csv"))
        last = trace.records[-1]
        reached = (
            trace.termination_reason == "kgap_tol" and last.grad_evals <= args.budget
        )
        summary.append(
            [method, last.grad_evals if reached else "DNF", repr(last.k_gap)]
        )

    with open(os.path.join(outdir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "evals_to_tolerance", "final_k_gap"])
        writer.writerows(summary)
    for row in summary:
        print(f"{row[0]}: evals={row[1]} final_k_gap={row[2]}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualprecon")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a problem instance file")
    g.add_argument("--kind", required=True, choices=["pnorm", "exp-penalty"])
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--tau", type=float, default=1.0)
    g.add_argument("--box", action="store_true", help="axis-aligned box (exp-penalty)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run a solver and emit a trace CSV")
    r.add_argument("--instance", required=True)
    r.add_argument("--config", help="JSON config file; flags override its values")
    r.add_argument("--method", choices=["dual_precon", "gd", "bregman"])
    r.add_argument("--step-rule", dest="step_rule", choices=["fixed", "doubling", "adaptive"])
    r.add_argument("--L0", type=float)
    r.add_argument("--max-iters", dest="max_iters", type=int)
    r.add_argument("--tol-kgap", dest="tol_kgap", type=float)
    r.add_argument("--tol-grad", dest="tol_grad", type=float)
    r.add_argument("--x0", help="comma-separated start point")
    r.add_argument("--x0-seed", dest="x0_seed", type=int)
    r.add_argument("--mirror-p", dest="mirror_p", type=float)
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="estimate/verify the dual constants")
    c.add_argument("--instance", required=True)
    c.add_argument("--n-pairs", dest="n_pairs", type=int, default=500)
    c.add_argument("--n-dirs", dest="n_dirs", type=int, default=200)
    c.add_argument("--r", type=float, help="polytope inradius (exp-penalty)")
    c.add_argument("--R", type=float, help="polytope circumradius (exp-penalty)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--x0-seed", dest="x0_seed", type=int, default=0)
    c.add_argument("--check-bounds", dest="check_bounds", action="store_true")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("compare", help="race methods under a gradient budget")
    m.add_argument("--instance", required=True)
    m.add_argument("--methods", default="dual_precon,gd,bregman")
    m.add_argument("--budget", type=int, default=500)
    m.add_argument("--tol", type=float, default=1e-10)
    m.add_argument("--L0", type=float, default=1.0)
    m.add_argument(
        "--step-rule", dest="step_rule", default="adaptive",
        choices=["fixed", "doubling", "adaptive"],
    )
    m.add_argument(
        "--dual-reference", dest="dual_reference", default="hybrid",
        choices=["hybrid", "power"],
        help="reference used by dual_precon and for the gap metric",
    )
    m.add_argument("--mirror-p", dest="mirror_p", type=float)
    m.add_argument("--x0", help="comma-separated start point")
    m.add_argument("--x0-seed", dest="x0_seed", type=int, default=0)
    m.add_argument("--outdir", required=True)
    m.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
