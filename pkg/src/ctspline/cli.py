"""Command line front end: ``ctspline synth | fit | eval``.

Exit codes: 0 success, 2 usage error, 3 input/output error, 4 solver did
not converge.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .data_io import laplace_scale, benchmark_reference, read_dataset, synth_paper_dataset, write_dataset
from .errors import SplineError
from .lti_model import load_system, make_state_space, benchmark_system, system_to_dict
from .solver_l1 import L1Config, SolverReport
from .solver_l2 import L2Config
from .spline_eval import (
    SplineFit,
    coefficients_csv,
    curve_csv,
    fit_error,
    fit_l1,
    fit_l2,
    sparsity_report,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NONCONVERGED = 4

RECORD_FORMAT = "ctspline-fit"
RECORD_VERSION = 1
SPARSITY_THRESHOLD = 1e-3


class _Usage(Exception):
    pass


class _InputError(Exception):
    pass


# --------------------------------------------------------------------------
# fit records


def _weights_summary(w) -> dict:
    w = np.asarray(w, dtype=float)
    if np.all(w == 1.0):
        return {"uniform": True}
    return {"uniform": False, "values": w.tolist()}


def fit_to_record(fit: SplineFit) -> dict:
    """Self-contained, versioned JSON-ready description of ``fit``."""
    cfg = fit.config
    if isinstance(cfg, L2Config):
        config = {"mode": "l2", "lambda": cfg.lam, "weights": _weights_summary(
            np.ones(fit.N) if cfg.weights is None else cfg.weights)}
    elif isinstance(cfg, L1Config):
        config = {
            "mode": "l1",
            "p": cfg.p,
            "eta": cfg.eta,
            "estimate_x0": cfg.estimate_x0,
            "max_iter": cfg.max_iter,
            "tol_abs": cfg.tol_abs,
            "tol_rel": cfg.tol_rel,
            "rho": cfg.rho,
            "polish": cfg.polish,
            "weights": _weights_summary(np.ones(fit.N) if cfg.weights is None else cfg.weights),
        }
    else:
        config = {"mode": None}
    report = fit.report.to_dict() if fit.report is not None else None
    return {
        "format": RECORD_FORMAT,
        "version": RECORD_VERSION,
        "system": system_to_dict(fit.sys_ref),
        "times": fit.times.tolist(),
        "theta": fit.theta.tolist(),
        "x0": None if fit.x0 is None else fit.x0.tolist(),
        "config": config,
        "report": report,
    }


def record_to_fit(record: dict) -> SplineFit:
    """Rebuild a :class:`SplineFit` for evaluation (solver settings are kept as a dict)."""
    if record.get("format") != RECORD_FORMAT:
        raise _InputError(f"not a fit record (format={record.get('format')!r})")
    if record.get("version") != RECORD_VERSION:
        raise _InputError(f"unsupported fit record version {record.get('version')!r}")
    try:
        s = record["system"]
        sys_ = make_state_space(s["A"], s["b"], s["c"])
        rep = record.get("report")
        report = None
        if rep is not None:
            final = rep.get("final_objective")
            report = SolverReport(
                solver_name=rep["solver_name"],
                iterations=rep["iterations"],
                objective_history=[] if final is None else [final],
                kkt_residual=rep["kkt_residual"],
                converged=rep["converged"],
                polished=rep.get("polished", False),
            )
        return SplineFit(record["theta"], record["x0"], record["times"], sys_, record.get("config"), report)
    except KeyError as exc:
        raise _InputError(f"fit record is missing {exc}") from None


def _json_dump(obj, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# --------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    ds, _ = synth_paper_dataset(args.seed, args.variance)
    try:
        write_dataset(ds, args.out, with_weights=False)
    except OSError as exc:
        raise _InputError(f"cannot write {args.out}: {exc}") from None
    print(f"N = {len(ds)}")
    print(f"T = {ds.T!r}")
    print(f"noise scale b = {laplace_scale(args.variance)!r} (variance {args.variance!r})")
    return EXIT_OK


def _load_system(args):
    if args.preset == "paper":
        if args.system is not None:
            raise _Usage("give either --system or --preset, not both")
        return benchmark_system()
    if args.system is None:
        raise _Usage("one of --system or --preset is required")
    try:
        return load_system(args.system)
    except (OSError, json.JSONDecodeError) as exc:
        raise _InputError(f"cannot read system file {args.system}: {exc}") from None


def cmd_fit(args) -> int:
    if args.mode == "l2" and (args.p is not None or args.estimate_x0):
        raise _Usage("--p and --estimate-x0 apply to --mode l1 only")
    sys_ = _load_system(args)
    try:
        data = read_dataset(args.data)
    except OSError as exc:
        raise _InputError(f"cannot read {args.data}: {exc}") from None

    if args.mode == "l2":
        if not args.lam > 0:
            raise _Usage("--lambda must be positive")
        fit = fit_l2(sys_, data, args.lam)
    else:
        try:
            cfg = L1Config(
                eta=args.eta,
                p=args.p or 1,
                estimate_x0=args.estimate_x0,
                max_iter=args.max_iter,
                tol_abs=args.tol_abs,
                tol_rel=args.tol_rel,
                rho=args.rho,
                polish=not args.no_polish,
            )
        except ValueError as exc:
            raise _Usage(str(exc)) from None
        fit = fit_l1(sys_, data, cfg)

    rep = fit.report
    try:
        _json_dump(fit_to_record(fit), args.out)
    except OSError as exc:
        raise _InputError(f"cannot write {args.out}: {exc}") from None

    count, _, l1 = sparsity_report(fit.theta, SPARSITY_THRESHOLD)
    print(f"solver = {rep.solver_name}")
    print(f"objective = {rep.objective_history[-1]!r}")
    print(f"iterations = {rep.iterations}")
    print(f"kkt_residual = {rep.kkt_residual!r}")
    print(f"converged = {str(rep.converged).lower()}")
    print(f"|theta_i| > {SPARSITY_THRESHOLD:g}: {count} of {fit.N}")
    print(f"l1 norm = {l1!r}")
    if fit.x0 is not None:
        print("x0 = " + " ".join(repr(float(v)) for v in fit.x0))
    if not rep.converged:
        print(f"solver did not converge within {rep.iterations} iterations", file=sys.stderr)
        if not args.allow_nonconverged:
            return EXIT_NONCONVERGED
    return EXIT_OK


def _parse_grid(text: str):
    if text == "samples":
        return "samples"
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be a point count or 'samples'") from None
    if n < 2:
        raise argparse.ArgumentTypeError("grid needs at least two points")
    return n


def _reference(source: str):
    """``synth:<seed>`` (noiseless benchmark curve) or a ``t,y`` CSV."""
    if source.startswith("synth:"):
        try:
            int(source.split(":", 1)[1])
        except ValueError:
            raise _Usage(f"bad reference {source!r}; expected synth:<seed>") from None
        return benchmark_reference, None
    try:
        ds = read_dataset(source)
    except OSError as exc:
        raise _InputError(f"cannot read reference {source}: {exc}") from None
    return ds.values, ds.times


def cmd_eval(args) -> int:
    try:
        record = json.loads(Path(args.fit).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise _InputError(f"cannot read fit record {args.fit}: {exc}") from None
    fit = record_to_fit(record)

    if args.grid == "samples":
        grid = fit.times
    else:
        if not 0.0 <= args.start < fit.T:
            raise _Usage(f"--start must lie in [0, {fit.T!r})")
        grid = np.linspace(args.start, fit.T, args.grid)
        grid[-1] = fit.T
    try:
        curve_csv(fit, grid, args.curve_out)
        coefficients_csv(fit, args.coef_out)
    except OSError as exc:
        raise _InputError(f"cannot write output: {exc}") from None
    print(f"curve: {len(grid)} points -> {args.curve_out}")
    print(f"coefficients -> {args.coef_out}")

    if args.reference is not None:
        ref, ref_times = _reference(args.reference)
        if ref_times is None:
            rmse, max_abs = fit_error(fit, ref, grid)
        else:
            rmse, max_abs = fit_error(fit, ref, ref_times)
        print(f"rmse = {rmse!r}")
        print(f"max_abs = {max_abs!r}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctspline",
        description="Control-theoretic smoothing splines with l1 or l2 regularization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write the noisy sin(2t)+1 benchmark dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--variance", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit spline coefficients and write a fit record")
    p.add_argument("--data", required=True)
    p.add_argument("--system", help="JSON file with keys A, b, c")
    p.add_argument("--preset", choices=["paper"], help="built-in third-order benchmark system")
    p.add_argument("--mode", choices=["l1", "l2"], default="l1")
    p.add_argument("--p", type=int, choices=[1, 2], default=None, help="data-term exponent (l1 mode)")
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--estimate-x0", action="store_true")
    p.add_argument("--max-iter", type=int, default=50_000)
    p.add_argument("--tol-abs", type=float, default=1e-6)
    p.add_argument("--tol-rel", type=float, default=1e-4)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--no-polish", action="store_true", help="skip the exact finishing step of the l1 solvers")
    p.add_argument("--out", default="fit.json")
    p.add_argument("--allow-nonconverged", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a fit record on a grid")
    p.add_argument("--fit", required=True)
    p.add_argument("--grid", type=_parse_grid, default=1001, help="point count over [start, T] or 'samples'")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--reference", help="synth:<seed> or a t,y CSV")
    p.add_argument("--curve-out", default="curve.csv")
    p.add_argument("--coef-out", default="coefficients.csv")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"ctspline: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (_InputError, SplineError) as exc:
        print(f"ctspline: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
