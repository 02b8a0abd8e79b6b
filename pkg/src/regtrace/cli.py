"""Command-line entry point: ``regtrace {identities,green,trace,report}``.

Exit codes: 0 all reports pass, 1 identity or tolerance failure, 2 usage
error, 3 numerical non-convergence.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import bc_algebra as bc
from . import green_kernel as gk
from .config import (
    DEFAULT_MODEL,
    DEFAULT_PERTURBATION,
    ConfigError,
    experiment_from_config,
    load,
    model_from_config,
    perturbation_from_config,
)
from .records import RunRecord, append_record, read_records
from .spectral_solver import DEFAULT_RESOLUTION, EigenNonConvergence, UnsupportedBoundary
from .trace_experiment import run_trace_experiment

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3

IDENTITY_TOLS = {
    "trace_error": 1e-8,
    "b_squared_error": 1e-10,
    "limit_vs_closed_error": 1e-10,
    "sign_pattern_error": 1e-8,
    "p_symmetry_error": 1e-12,
}
DELTA_LEADING_TOL = 1e-9
WEYL_TOL = 1e-6
G_TOL = 1e-2
TRACE_TOL = 0.10
ROUTE_TOL = 0.02


class UsageError(ValueError):
    pass


def _err(msg):
    print(msg, file=sys.stderr)


def parse_m_range(text):
    """``"2"`` or ``"1..3"`` to a list of orders within the algebra cap."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise UsageError(f"bad m range {text!r}; use e.g. 2 or 1..3") from exc
    if lo < 1 or hi > bc.ALGEBRA_M_CAP or lo > hi:
        raise UsageError(f"m range {text!r} must lie within 1..{bc.ALGEBRA_M_CAP}")
    return list(range(lo, hi + 1))


def parse_K(text):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"malformed K {text!r}; use a comma list such as 0,3") from exc


def parse_floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed number list {text!r}") from exc


def _identity_task(args):
    m, K, tol_scale = args
    errors = bc.identity_errors(m, K)
    tols = {k: v * tol_scale for k, v in IDENTITY_TOLS.items()}
    failed = [k for k, t in tols.items() if not errors[k] <= t]
    report = {k: (float(v) if not isinstance(v, complex) else [v.real, v.imag])
              for k, v in errors.items()}
    report["trace_pb_closed"] = str(errors["trace_pb_closed"])
    return m, K, tols, report, failed


def cmd_identities(args):
    ms = parse_m_range(args.m)
    tasks = [(m, list(K), args.tol_scale) for m in ms for K in bc.normalized_sets(m)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_identity_task, tasks))
    else:
        results = [_identity_task(t) for t in tasks]
    status = EXIT_PASS
    for m, K, tols, report, failed in results:
        cfg = {"command": "identities", "m": m, "K": K, "tolerances": tols}
        append_record(RunRecord.create("identities", cfg, report, not failed), args.out)
        if failed and status == EXIT_PASS:
            _err(f"identity failure: m={m} K={K} {failed[0]}={report[failed[0]]:.3g}")
            status = EXIT_FAIL

    if args.random_specs:
        rng = np.random.default_rng(args.seed)
        m_hi = min(max(ms), 5)
        worst = 0.0
        bad = None
        for i in range(args.random_specs):
            spec = bc.random_spec(rng, int(rng.integers(1, m_hi + 1)))
            d = bc.delta_structure(spec)
            worst = max(worst, d["leading_rel_error"])
            ok = (d["degree"] == d["kappa"] and d["max_delta_ab_degree"] <= d["kappa"]
                  and d["leading_rel_error"] <= DELTA_LEADING_TOL * args.tol_scale)
            if not ok and bad is None:
                bad = (i, spec.m, list(spec.degrees), d)
        cfg = {"command": "identities-random", "count": args.random_specs, "seed": args.seed,
               "m_max": m_hi, "tol": DELTA_LEADING_TOL * args.tol_scale}
        report = {"worst_leading_rel_error": worst, "first_failure": None if bad is None else
                  {"index": bad[0], "m": bad[1], "K": bad[2]}}
        append_record(RunRecord.create("identities", cfg, report, bad is None), args.out)
        if bad is not None and status == EXIT_PASS:
            _err(f"Delta structure failure: spec #{bad[0]} m={bad[1]} K={bad[2]}")
            status = EXIT_FAIL
    print(f"identities: {len(results)} subset records, "
          f"{sum(not r[4] for r in results)} pass")
    return status


def cmd_green(args):
    m = args.m
    if not 1 <= m <= bc.ALGEBRA_M_CAP:
        raise UsageError(f"--m must lie in 1..{bc.ALGEBRA_M_CAP}")
    K = parse_K(args.K) if args.K is not None else list(range(m))
    try:
        spec = bc.BoundarySpec.one_term(K, m)
    except bc.NonNormalizedError as exc:
        raise UsageError(f"K={K}: {exc}") from exc
    frame = bc.build_frame(m, spec.degrees)
    char = bc.characteristic_data(spec, frame)
    lams = parse_floats(args.lam) if args.lam else [1e2, 1e4, 1e6]
    eps = tuple(parse_floats(args.eps)) if args.eps else gk.G_EPS_LADDER

    weyl = []
    for lam in lams:
        target = lam ** (1.0 / (2 * m)) / np.pi
        row = {"lambda": lam, "target": target}
        for route in ("arc", "circle"):
            row[route] = gk.weyl_arc_integral(m, lam, route=route)
            row[f"{route}_rel_error"] = abs(row[route] - target) / target
        row["pass"] = max(row["arc_rel_error"], row["circle_rel_error"]) <= WEYL_TOL * args.tol_scale
        # boundary part of the contour integrand at x = 0 against its limit
        try:
            exact = gk.contour_trace_integrand(char, frame, 0.0, lam)
        except gk.NearZeroDelta:
            md = gk.min_abs_delta_on_arc(char, frame, lam)
            _err(f"arc |zeta| = {lam ** (1 / (2 * m)):.6g} passes near a zero of Delta "
                 f"(min |Delta| = {md:.3g}); try --lambda {4 * lam:g}")
            return EXIT_NONCONV
        limit = gk.contour_trace_integrand(char, frame, 0.0, lam, use_limit=True)
        row["boundary_term_difference"] = abs(exact - limit)
        weyl.append(row)

    target = -1j * np.pi / m * float(bc.trace_PB_closed(m, spec.degrees))
    try:
        ladder = gk.g_integral_ladder(char, frame, eps)
    except ValueError as exc:
        raise UsageError(f"--eps: {exc}") from exc
    exact_eps = np.array([gk.g_integral_exact(char, frame, e) for e in eps])
    ladder_err = np.abs(ladder.values - exact_eps)
    # relative where the target is nonzero, absolute where it vanishes
    err = abs(ladder.extrapolated - target) / (abs(target) if target != 0 else 1.0)
    monotone = bool(np.all(np.diff(np.abs(ladder.values - target)) < 0))
    g_report = {
        "target": [target.real, target.imag],
        "extrapolated": [ladder.extrapolated.real, ladder.extrapolated.imag],
        "rel_error": err,
        "eps": list(eps),
        "ladder_errors": np.abs(ladder.values - target).tolist(),
        "quadrature_errors": ladder_err.tolist(),
        "monotone": monotone,
        "pass": bool(err <= G_TOL * args.tol_scale and monotone),
    }
    passed = all(r["pass"] for r in weyl) and g_report["pass"]
    cfg = {"command": "green", "m": m, "K": list(spec.degrees), "lambda": lams,
           "eps": list(eps), "tol_scale": args.tol_scale}
    report = {"weyl": weyl, "g_integral": g_report}
    path = append_record(RunRecord.create("green", cfg, report, passed), args.out)
    for r in weyl:
        print(f"weyl lambda={r['lambda']:g}: {r['arc']:.12g} (target {r['target']:.12g}, "
              f"rel {r['arc_rel_error']:.2e})")
    print(f"g-integral: {ladder.extrapolated:.6g} (target {target:.6g}, error {err:.2e}, "
          f"monotone {monotone})")
    print(f"record: {path}")
    return EXIT_PASS if passed else EXIT_FAIL


def _trace_inputs(args):
    if args.experiment:
        model_cfg, pert_cfg, options = experiment_from_config(args.experiment)
    else:
        model_cfg = load(args.model) if args.model else DEFAULT_MODEL
        pert_cfg = load(args.perturbation) if args.perturbation else DEFAULT_PERTURBATION
        options = {"Nmax": None, "resolution": DEFAULT_RESOLUTION}
    if args.nmax is not None:
        options["Nmax"] = args.nmax
    if args.resolution is not None:
        options["resolution"] = args.resolution
    return model_cfg, pert_cfg, options


def cmd_trace(args):
    model_cfg, pert_cfg, options = _trace_inputs(args)
    try:
        model = model_from_config(model_cfg)
        q = perturbation_from_config(pert_cfg)
    except (ConfigError, UnsupportedBoundary) as exc:
        raise UsageError(str(exc)) from exc
    try:
        eig, sf, (lams, mus) = run_trace_experiment(
            model, q, Nmax=options["Nmax"], resolution=options["resolution"])
    except EigenNonConvergence as exc:
        _err(f"eigensolver did not converge: {exc}")
        return EXIT_NONCONV
    except ValueError as exc:
        if "trusted" in str(exc):
            _err(f"untrusted spectrum: {exc}")
            return EXIT_NONCONV
        raise UsageError(str(exc)) from exc

    route_gap = abs(eig.extrapolated - sf.extrapolated)
    route_tol = ROUTE_TOL * max(abs(eig.rhs), 0.05) * args.tol_scale
    passed = (eig.rel_error <= TRACE_TOL * args.tol_scale and route_gap <= route_tol)
    report = {
        "eigenvalue_sum": eig.to_dict(),
        "spectral_function": sf.to_dict(),
        "route_gap": route_gap,
        "route_tol": route_tol,
        "trust_counts": [lams.trust_count, mus.trust_count],
    }
    cfg = {"command": "trace", "model": model_cfg, "perturbation": pert_cfg,
           "options": options, "tol_scale": args.tol_scale}
    record = RunRecord.create("trace", cfg, report, passed)
    path = append_record(record, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "partial_sum", "spectral_function_sum"])
            for n, (a, b) in enumerate(zip(eig.partial_sums, sf.partial_sums), 1):
                w.writerow([n, repr(float(a)), repr(float(b))])
    print(f"m={model.m} K={list(model.degrees)} pairs={eig.n_terms}")
    print(f"extrapolated {eig.extrapolated:.6f}  rhs {eig.rhs:.6f}  rel_error {eig.rel_error:.4f}")
    print(f"spectral-function route {sf.extrapolated:.6f}  gap {route_gap:.2e} (tol {route_tol:.2e})")
    if eig.pairing_flags:
        print(f"warning: |mu_n - lambda_n| exceeds half the local gap at n={eig.pairing_flags}")
    print(f"record: {path}")
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_report(args):
    try:
        records = read_records(args.path)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"cannot read records from {args.path}: {exc}") from exc
    shown = records if args.all else records[-1:]
    for r in shown:
        print(json.dumps({"command": r.command, "digest": r.digest, "timestamp": r.timestamp,
                          "pass": r.passed, "config": r.config, "report": r.report},
                         indent=2, sort_keys=True))
    return EXIT_PASS if all(r.passed for r in shown) else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _err(f"{self.prog}: error: {message}")
        raise SystemExit(EXIT_USAGE)


def _global_flags(suppress):
    g = argparse.ArgumentParser(add_help=False)
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g.add_argument("--out", default=d(None),
                   help="results directory (default $REGTRACE_RESULTS or ./results)")
    g.add_argument("--tol-scale", type=float, default=d(1.0),
                   help="multiply every pass tolerance by this factor")
    g.add_argument("--seed", type=int, default=d(0), help="seed for randomized sweeps")
    g.add_argument("--jobs", type=int, default=d(1), help="worker processes for sweeps")
    return g


def build_parser():
    # global flags are accepted before or after the subcommand
    common = _global_flags(suppress=True)
    p = _Parser(prog="regtrace", description=__doc__.splitlines()[0],
                parents=[_global_flags(suppress=False)])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("identities", parents=[common], help="exhaustive boundary-algebra sweep")
    s.add_argument("--m", default="1..3", help="order or range, e.g. 2 or 1..3")
    s.add_argument("--random-specs", type=int, default=0,
                   help="also check Delta structure on this many random specs")
    s.set_defaults(func=cmd_identities)

    s = sub.add_parser("green", parents=[common], help="Weyl arc and g-integral checks")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--K", help="comma list of boundary orders (default 0..m-1)")
    s.add_argument("--lambda", dest="lam", help="comma list of lambda values")
    s.add_argument("--eps", help="comma list of halving damping values")
    s.set_defaults(func=cmd_green)

    s = sub.add_parser("trace", parents=[common], help="regularized trace experiment")
    s.add_argument("--model", help="model TOML (default: m=1 Dirichlet oscillator)")
    s.add_argument("--perturbation", help="perturbation TOML (default: (1-x)^2 on [0,1])")
    s.add_argument("--experiment", help="experiment TOML referencing model and perturbation")
    s.add_argument("--nmax", type=int)
    s.add_argument("--resolution", type=float)
    s.add_argument("--csv", help="write (N, partial sum) pairs to this file")
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("report", parents=[common], help="pretty-print run records")
    s.add_argument("path", help="records.jsonl or a digest directory")
    s.add_argument("--all", action="store_true", help="print every record, not just the last")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol_scale <= 0 or args.jobs < 1:
        _err("--tol-scale must be positive and --jobs at least 1")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        _err(f"usage error: {exc}")
        return EXIT_USAGE
    except (gk.LadderNotConverged, EigenNonConvergence) as exc:
        _err(f"not converged: {exc}")
        return EXIT_NONCONV


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
