"""Command-line interface: ``phitensor <subcommand> ...``.

Exit status is 0 on success, 2 on bad flags or unreadable/unwritable files,
and 3 when the solver aborts on non-finite values.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .experiments import (
    make_problem,
    psnr,
    solve_data_pipeline,
    sweep,
    write_sweep_csv,
)
from .solver import SolverAbort, SolverConfig, SolverReport, solve
from .tproduct import ttnn, ttsvd
from .transforms import DATA, DB4, FOURIER, UnitaryTransform, data_transform, make_transform

EXIT_USAGE = 2
EXIT_ABORT = 3

log = logging.getLogger("phitensor")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _dims(text: str) -> tuple[int, int, int]:
    dims = _int_list(text)
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"--dims needs three positive integers, got {text!r}")
    return tuple(dims)


def resolve_transform(spec: str, n3: int, source: np.ndarray | None = None) -> UnitaryTransform:
    """Build a transform from a ``fourier|db4|data|custom:<path>`` flag value."""
    if spec.startswith("custom:"):
        t = io.read_transform(spec[len("custom:"):])
        if t.n3 != n3:
            raise UsageError(f"custom transform has n3={t.n3}, tensor has n3={n3}")
        return t
    if spec == DATA:
        if source is None:
            raise UsageError("the data transform needs a source tensor")
        return data_transform(source)
    if spec in (FOURIER, DB4):
        try:
            return make_transform(spec, n3)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"unknown transform {spec!r}")


def _config_from_args(args, transform=None) -> SolverConfig:
    try:
        return SolverConfig(
            lam=args.lam,
            lambda_scale=args.lambda_scale,
            beta=args.beta,
            tau=args.tau,
            tol=args.tol,
            max_iters=args.max_iters,
            transform=transform,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _report_dict(report: SolverReport, cfg: SolverConfig, transform_flag: str) -> dict:
    config = {k: v for k, v in asdict(cfg).items() if k != "transform"}
    config.update(transform=transform_flag, lam=report.lam)
    return {
        "config": config,
        "iterations": report.iterations,
        "converged": report.converged,
        "residuals": [r.as_dict() for r in report.residual_history],
        "wall_ms": report.wall_ms,
    }


def cmd_synth(args) -> int:
    n1, n2, n3 = args.dims
    try:
        t = make_transform(args.transform, n3)
        problem = make_problem(args.dims, args.rank, args.rho, args.gamma, args.seed, t, smooth=args.smooth)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_tensor(out / "l0.tns", problem.l0)
    io.write_tensor(out / "e0.tns", problem.e0)
    io.write_tensor(out / "x.tns", problem.x)
    io.write_mask(out / "mask.msk", problem.mask)
    print(f"wrote {out}/{{l0,e0,x}}.tns and mask.msk ({problem.mask.count} observed)")
    return 0


def cmd_solve(args) -> int:
    x = io.read_tensor(args.input)
    mask = io.read_mask(args.mask)
    if np.iscomplexobj(x):
        raise UsageError("solve expects a real tensor")
    if x.shape != mask.dims:
        raise UsageError(f"tensor {x.shape} does not match mask {mask.dims}")
    if args.transform == DATA:
        cfg = _config_from_args(args)
        first, report = solve_data_pipeline(x, mask, cfg)
        result = _report_dict(report, cfg, DATA)
        result["stage1"] = _report_dict(first, cfg, FOURIER)
    else:
        t = resolve_transform(args.transform, x.shape[2])
        cfg = _config_from_args(args, t)
        try:
            report = solve(x, mask, cfg)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        result = _report_dict(report, cfg, args.transform)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_tensor(out / "l_hat.tns", report.l_hat)
    io.write_tensor(out / "e_hat.tns", report.e_hat)
    with open(out / "report.json", "w") as fh:
        json.dump(result, fh, indent=2)
    status = "converged" if report.converged else "stopped at iteration cap"
    print(f"{status}: {report.iterations} iterations, eta_res={report.residuals.eta_res:.3e}")
    return 0


def cmd_tsvd(args) -> int:
    a = io.read_tensor(args.input)
    t = resolve_transform(args.transform, a.shape[2], source=a)
    svd = ttsvd(a, t)
    print("multi_rank: " + " ".join(str(int(r)) for r in svd.multi_rank))
    print(f"tubal_rank: {svd.tubal_rank}")
    print(f"ttnn: {ttnn(a, t):.12g}")
    return 0


def cmd_psnr(args) -> int:
    est = io.read_tensor(args.estimate)
    truth = io.read_tensor(args.truth)
    try:
        value = psnr(est, truth)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print("+inf" if math.isinf(value) else f"{value:.6f}")
    return 0


def cmd_check_transform(args) -> int:
    if args.path:
        t = io.read_transform(args.path, tol=math.inf)
    else:
        if args.n3 is None:
            raise UsageError("--n3 is required unless a transform file is given")
        t = resolve_transform(args.kind, args.n3)
    print(f"kind: {t.kind}")
    print(f"n3: {t.n3}")
    print(f"defect: {t.unitarity_defect():.3e}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    rows = sweep(args.rhos, args.gammas, args.transforms, args.dims, args.rank, args.seeds, cfg, smooth=args.smooth)
    if args.out == "-":
        write_sweep_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_sweep_csv(rows, fh)
    return 0


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="l1 weight; overrides --lambda-scale")
    p.add_argument("--lambda-scale", type=float, default=1.0, help="a in lambda = a / sqrt(rho * max(n1,n2) * n3)")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=1.618)
    p.add_argument("--tol", type=float, default=5e-4)
    p.add_argument("--max-iters", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phitensor", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic robust completion instance")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transform", choices=[FOURIER, DB4], default=FOURIER)
    p.add_argument("--smooth", action="store_true", help="ground truth with smooth tube profiles")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("solve", help="recover low-rank and sparse parts from observations")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--transform", default=FOURIER, help="fourier | db4 | data | custom:<path>")
    _add_solver_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("tsvd", help="print multi-rank, tubal rank and TTNN of a tensor")
    p.add_argument("--input", required=True)
    p.add_argument("--transform", default=FOURIER, help="fourier | db4 | data | custom:<path>")
    p.set_defaults(func=cmd_tsvd)

    p = sub.add_parser("psnr", help="PSNR of an estimate against ground truth")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("check-transform", help="report the unitarity defect of a transform")
    p.add_argument("path", nargs="?", help="UTM1 file")
    p.add_argument("--kind", choices=[FOURIER, DB4], default=FOURIER)
    p.add_argument("--n3", type=int)
    p.set_defaults(func=cmd_check_transform)

    p = sub.add_parser("sweep", help="grid of synthetic solves, CSV out")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--rhos", type=_float_list, required=True)
    p.add_argument("--gammas", type=_float_list, required=True)
    p.add_argument("--transforms", type=lambda s: s.split(","), default=[FOURIER])
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--smooth", action="store_true")
    _add_solver_flags(p)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, OSError, io.FormatError) as exc:
        print(f"phitensor {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverAbort as exc:
        print(f"phitensor {args.command}: solver aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
