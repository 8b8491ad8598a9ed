"""Command-line interface.

Exit codes: 0 success, 2 gap failure, 3 divergence, 64 usage error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .harness import PRESETS, gen_hankel, run_experiment, trace_csv_text
from .solver import Method, SlraProblem, StoppingCriteria, Termination, solve
from .structures import (
    CoordinateMask,
    HankelStructure,
    PolyPair,
    SylvesterStructure,
    completion_structure,
)
from .subspace import AffineStructure

EXIT_OK = 0
EXIT_GAP = 2
EXIT_DIVERGED = 3
EXIT_USAGE = 64

_EXIT = {
    Termination.GAP_FAILURE: EXIT_GAP,
    Termination.DIVERGED: EXIT_DIVERGED,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stopping(args, default_step_tol=None):
    step_tol = args.step_tol if args.step_tol is not None else default_step_tol
    return StoppingCriteria(step_tol=step_tol, sigma_tol=args.sigma_tol, max_iters=args.max_iters)


def _emit(args, payload, result):
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.trace:
        Path(args.trace).write_text(trace_csv_text(result.trace))
    return _EXIT.get(result.termination, EXIT_OK)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc


def cmd_solve(args):
    data = _read_json(args.problem)
    try:
        structure = AffineStructure.from_dict(data["structure"])
        initial = np.asarray(data["initial"], dtype=float).reshape(structure.shape)
        stop = dict(data.get("stopping", {}))
        for key in ("step_tol", "sigma_tol"):
            if getattr(args, key) is not None:
                stop[key] = getattr(args, key)
        if args.max_iters is not None:
            stop["max_iters"] = args.max_iters
        problem = SlraProblem(
            initial,
            structure,
            int(data["rank"]),
            method=args.method or data.get("method", "auto"),
            stopping=StoppingCriteria(**stop),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad problem file: {exc}") from exc
    result = solve(problem)
    return _emit(args, result.to_dict(), result)


def cmd_gcd(args):
    try:
        pair = PolyPair.from_text(Path(args.polys).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.polys}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(f"{args.polys}: {exc}") from exc
    m = pair.m if args.m is None else args.m
    n = pair.n if args.n is None else args.n
    if (m, n) != (pair.m, pair.n):
        raise UsageError(f"file holds degrees ({pair.m}, {pair.n}), flags say ({m}, {n})")
    try:
        sylv = SylvesterStructure(m, n, args.d)
        m0 = sylv.embed(pair)
        problem = SlraProblem(m0, sylv.structure, sylv.rank, method=args.method,
                              stopping=_stopping(args, 1e-14 * float(np.linalg.norm(m0))))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = solve(problem)
    out = sylv.extract(result.final)
    payload = {
        "f": out.f.tolist(),
        "g": out.g.tolist(),
        "distance": out.distance(pair),
        "iterations": result.iterations,
        "termination": result.termination.value,
        "method": result.method.value,
    }
    return _emit(args, payload, result)


def cmd_complete(args):
    try:
        mask = CoordinateMask.from_dict(_read_json(args.mask))
        structure = completion_structure(mask)
        problem = SlraProblem(structure.base, structure, args.rank, method=args.method,
                              stopping=_stopping(args, 1e-4))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad mask: {exc}") from exc
    result = solve(problem)
    payload = {
        "shape": list(result.final.shape),
        "matrix": result.final.tolist(),
        "iterations": result.iterations,
        "termination": result.termination.value,
        "method": result.method.value,
    }
    return _emit(args, payload, result)


def cmd_hankel(args):
    try:
        inst = gen_hankel(args.tau, args.outlier, args.seed)
        hs = HankelStructure(*inst.noisy.shape)
        problem = SlraProblem(hs.embed(inst.noisy), hs.structure, args.rank, method=args.method,
                              stopping=_stopping(args, 0.0 if args.sigma_tol is not None else None))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = solve(problem)
    payload = {
        "input": inst.noisy.values.tolist(),
        "output": hs.extract(result.final).values.tolist(),
        "sigma": np.linalg.svd(result.final, compute_uv=False).tolist(),
        "iterations": result.iterations,
        "termination": result.termination.value,
        "method": result.method.value,
    }
    return _emit(args, payload, result)


def cmd_experiment(args):
    try:
        report = run_experiment(args.preset, seed=args.seed, instances=args.instances,
                                out_dir=args.out_dir, write_traces=not args.no_traces)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    w = sys.stdout
    for row in report.summary:
        w.write(", ".join(f"{k}={v}" for k, v in row.items()) + "\n")
    if args.out_dir:
        w.write(f"wrote {len(report.files)} files to {args.out_dir}\n")
    return EXIT_OK


def _add_stopping(p, sigma_default=None):
    p.add_argument("--step-tol", type=float, help="absolute step-norm tolerance")
    p.add_argument("--sigma-tol", type=float, default=sigma_default,
                   help="stop once sigma_{r+1} falls below this")
    p.add_argument("--max-iters", type=int, default=100)


def _add_output(p):
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.add_argument("--trace", help="write the per-iteration trace CSV here")


def build_parser():
    methods = [m.value for m in Method]
    parser = _Parser(prog="slra", description="Structured low-rank approximation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a problem given as JSON")
    p.add_argument("problem", help="JSON with structure, initial, rank, method, stopping")
    p.add_argument("--method", choices=methods)
    p.add_argument("--step-tol", type=float)
    p.add_argument("--sigma-tol", type=float)
    p.add_argument("--max-iters", type=int)
    _add_output(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gcd", help="approximate GCD of two polynomials")
    p.add_argument("polys", help="two-line text file: degree then ascending coefficients")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int, required=True, help="target gcd degree")
    p.add_argument("--method", choices=methods, default="newton_v1")
    _add_stopping(p)
    _add_output(p)
    p.set_defaults(func=cmd_gcd)

    p = sub.add_parser("complete", help="low-rank matrix completion")
    p.add_argument("mask", help="JSON with shape, observed, values")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--method", choices=methods, default="auto")
    _add_stopping(p)
    _add_output(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("hankel", help="denoise the 7x5 rank-4 Hankel benchmark")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--outlier", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--method", choices=methods, default="auto")
    _add_stopping(p, sigma_default=1e-14)
    _add_output(p)
    p.set_defaults(func=cmd_hankel)

    p = sub.add_parser("experiment", help="run an experiment preset")
    p.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--no-traces", action="store_true", help="skip per-run trace CSVs")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"slra {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
