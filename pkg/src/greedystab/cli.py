"""``greedy`` command-line driver.

Exit codes: 0 success, 1 a checked bound was violated, 2 invalid arguments,
3 I/O failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .algorithms import ConfigError, GreedyConfig, InvariantViolation, WeakSchedule, run_oga, run_wga
from .core import DictionaryError, Dictionary, dictionary_to_csv, load_dictionary, load_signal
from .experiments import (
    instability_demo,
    linear_baseline_demo,
    make_dictionary,
    stability_experiment,
)

log = logging.getLogger("greedystab")

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _read_dictionary(path: str) -> Dictionary:
    fmt = "json" if path.lower().endswith(".json") else "csv"
    try:
        return load_dictionary(_read_bytes(path), fmt, label=os.path.basename(path))
    except DictionaryError as exc:
        raise UsageError(f"{path}: {type(exc).__name__}: {exc}") from None


def _read_signal(path: str) -> np.ndarray:
    try:
        return load_signal(_read_bytes(path))
    except (DictionaryError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _read_schedule(path: str) -> WeakSchedule:
    text = _read_bytes(path).decode("utf-8", "replace")
    try:
        values = [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"{path}: schedule must contain decimal numbers") from None
    return WeakSchedule.explicit(values)


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _schedule(args) -> WeakSchedule:
    if getattr(args, "tau", None):
        return _read_schedule(args.tau)
    return WeakSchedule.constant(args.t)


def _greedy_config(args, max_iter: int) -> GreedyConfig:
    return GreedyConfig(
        b=args.b,
        schedule=_schedule(args),
        policy=args.policy.replace("-", "_"),
        max_iter=max_iter,
        residual_atol=args.atol,
    )


def cmd_run(args) -> int:
    config = _greedy_config(args, args.max_iter)
    D = _read_dictionary(args.dict)
    f = _read_signal(args.signal)
    if f.size != D.dim:
        raise UsageError(f"signal has dimension {f.size}, dictionary has {D.dim}")
    runner = run_wga if args.algo == "wga" else run_oga
    trace = runner(f, D, config)
    log.info("%s: %d iterations, termination=%s", args.algo, len(trace.records), trace.termination)
    _write(args.out, trace.to_csv() if args.format == "csv" else trace.to_json())
    return EXIT_NUMERIC if trace.termination == "dependent_atom" else EXIT_OK


def _bound_rows(args):
    which = args.which
    n = args.m_max
    if which == "clean":
        sched = _schedule(args)
        return [(m, bnd.e_m_clean(sched, args.b, m)) for m in range(0, n + 1)]
    if which == "noisy":
        if args.f_norm is None:
            raise UsageError("--which noisy needs --f-norm")
        params = bnd.NoisyBoundParams(args.eps, args.B, args.h, args.f_norm, args.b, _schedule(args))
        form = bnd.noisy_bound if args.form == "displayed" else bnd.noisy_bound_derived
        return [(m, form(params, m)) for m in range(1, n + 1)]
    if which == "noisy-const":
        return [(m, bnd.noisy_bound_const(args.t, args.b, args.h, args.eps, args.B, m)) for m in range(1, n + 1)]
    if which == "oga-noisy":
        return [(m, bnd.oga_noisy_bound(args.eps, args.B, m)) for m in range(0, n + 1)]
    if which == "oga-clean":
        return [(m, bnd.oga_clean_bound(m)) for m in range(1, n + 1)]
    if which == "hl1":
        if args.v_file:
            text = _read_bytes(args.v_file).decode("utf-8", "replace")
            v = [float(tok) for tok in text.replace(",", " ").split()]
            if len(v) < n:
                raise UsageError(f"--v-file has {len(v)} entries, --m-max is {n}")
        else:
            v = [args.v] * n
        if any(x < 0 for x in v):
            raise UsageError("hl1 sequence entries must be >= 0")
        vals = bnd.hl1_bounds(args.C, v[:n])
        return list(enumerate(vals.tolist()))
    raise UsageError(f"unknown bound {which!r}")


def cmd_bounds(args) -> int:
    if args.m_max < 0:
        raise UsageError("--m-max must be >= 0")
    try:
        rows = _bound_rows(args)
    except bnd.BoundOutOfRegime as exc:
        raise UsageError(str(exc)) from None
    text = "m,value\n" + "".join(f"{m},{_fmt(v)}\n" for m, v in rows)
    _write(args.out, text)
    return EXIT_OK


def _parse_gen(spec: str, seed: int) -> Dictionary:
    parts = spec.split(":")
    try:
        if parts[0] == "orthonormal" and len(parts) == 2:
            n = int(parts[1])
            return make_dictionary("orthonormal", n, n)
        if parts[0] in ("random", "coherent") and len(parts) == 3:
            kind = "random-unit" if parts[0] == "random" else "coherent"
            return make_dictionary(kind, int(parts[2]), int(parts[1]), seed)
    except ValueError as exc:
        raise UsageError(f"--gen {spec}: {exc}") from None
    raise UsageError(f"--gen expects orthonormal:N, random:N:DIM or coherent:N:DIM, got {spec!r}")


def _stability_trial(job):
    D, B, sparsity, eps, h, config, seed, noise_mode, form = job
    return stability_experiment(D, B, sparsity, eps, h, config, seed, noise_mode, bound_form=form)


def cmd_stability(args) -> int:
    if not 0.0 < args.h < 1.0:
        raise UsageError(f"--h {args.h}: h must lie in (0, 1)")
    if not 0.0 < args.eps <= 1.0:
        raise UsageError(f"--eps {args.eps}: epsilon must lie in (0, 1]")
    if not args.B > 0:
        raise UsageError("--B must be positive")
    if args.trials < 1 or args.jobs < 1:
        raise UsageError("--trials and --jobs must be >= 1")
    max_iter = args.max_iter if args.max_iter is not None else bnd.regime_limit(args.eps)
    config = _greedy_config(args, max_iter)
    D = _read_dictionary(args.dict) if args.dict else _parse_gen(args.gen, args.seed)
    sparsity = args.sparsity if args.sparsity is not None else min(8, len(D))
    if not 1 <= sparsity <= len(D):
        raise UsageError(f"--sparsity {sparsity} outside [1, {len(D)}]")
    jobs = [
        (D, args.B, sparsity, args.eps, args.h, config, args.seed + i, args.noise_mode, args.bound)
        for i in range(args.trials)
    ]
    if args.jobs > 1 and args.trials > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_stability_trial, jobs))
    else:
        reports = [_stability_trial(j) for j in jobs]

    if args.format == "json":
        if len(reports) == 1:
            text = reports[0].to_json()
        else:
            text = json.dumps({"trials": [r.to_dict() for r in reports]}, indent=2) + "\n"
    else:
        if len(reports) == 1:
            text = reports[0].to_csv()
        else:
            lines = ["trial,m,residual,bound,B_m,delta_norm,ok"]
            for i, r in enumerate(reports):
                lines += r.csv_lines(prefix=f"{i},")
            text = "\n".join(lines) + "\n"
    _write(args.out, text)
    failed = [i for i, r in enumerate(reports) if not r.all_satisfied]
    for i in failed:
        log.error("trial %d: bound violated (max excess %.3e)", i, reports[i].summary["max_violation"])
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_demo(args) -> int:
    if args.demo == "instability":
        if not args.eps > 0:
            raise UsageError("--eps must be > 0")
        rep = instability_demo(args.eps)
        text = f"d1={_fmt(rep['d1'])}\nd2={_fmt(rep['d2'])}\nratio={_fmt(rep['ratio'])}\n"
    else:
        if args.dim < 1 or not 0 <= args.k <= args.dim:
            raise UsageError("need --dim >= 1 and 0 <= --k <= --dim")
        if not 0 < args.eps <= 1:
            raise UsageError("--eps must lie in (0, 1]")
        rng = np.random.default_rng(args.seed)
        f_eps = rng.standard_normal(args.dim)
        e = rng.standard_normal(args.dim)
        f = f_eps + args.eps * e / np.linalg.norm(e)
        rep = linear_baseline_demo(1.0, args.k, f, f_eps)
        text = (
            f"k={rep['k']} K={_fmt(rep['K'])}\n"
            f"||S_k f - S_k f_eps|| = {_fmt(rep['lhs'])} <= K * ||f - f_eps|| = {_fmt(rep['noise'])}: "
            f"{'holds' if rep['holds'] else 'FAILS'}\n"
        )
    _write(args.out, text)
    return EXIT_OK


def cmd_gen_dict(args) -> int:
    if args.dim < 1 or args.count < 1:
        raise UsageError("--dim and --count must be >= 1")
    try:
        D = make_dictionary(args.kind, args.dim, args.count, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, dictionary_to_csv(D))
    return EXIT_OK


def _add_greedy_args(p, max_iter_default):
    p.add_argument("--b", type=float, default=1.0, help="relaxation in (0, 1]")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=float, default=1.0, help="constant weakness parameter in (0, 1]")
    g.add_argument("--tau", metavar="PATH", help="file with a nonincreasing weakness sequence")
    p.add_argument("--policy", choices=["max", "threshold-first"], default="max")
    p.add_argument("--max-iter", type=int, default=max_iter_default)
    p.add_argument("--atol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greedy", description="Greedy approximation and stability experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run WGA/PGA or OGA on a signal")
    p.add_argument("--algo", choices=["wga", "oga"], default="wga")
    p.add_argument("--dict", required=True, metavar="PATH")
    p.add_argument("--signal", required=True, metavar="PATH")
    _add_greedy_args(p, 100)
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bounds", help="tabulate a bound over m")
    p.add_argument("--which", required=True, choices=["clean", "noisy", "noisy-const", "oga-noisy", "oga-clean", "hl1"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=float, default=1.0)
    g.add_argument("--tau", metavar="PATH")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.9)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--f-norm", type=float)
    p.add_argument("--form", choices=["displayed", "derived"], default="displayed")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--v", type=float, default=1.0)
    p.add_argument("--v-file", metavar="PATH")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--out", default="-", metavar="PATH")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("stability", help="noisy-signal stability experiment")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dict", metavar="PATH")
    src.add_argument("--gen", default="orthonormal:16", help="orthonormal:N | random:N:DIM | coherent:N:DIM")
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--sparsity", type=int)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--h", type=float, default=0.9)
    _add_greedy_args(p, None)
    p.add_argument("--noise-mode", choices=["exact", "at_most"], default="exact")
    p.add_argument("--bound", choices=["displayed", "derived"], default="displayed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-", metavar="PATH")
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("demo", help="instability and linear-method demos")
    dsub = p.add_subparsers(dest="demo", required=True)
    d = dsub.add_parser("instability")
    d.add_argument("--eps", type=float, default=0.01)
    d.add_argument("--out", default="-", metavar="PATH")
    d = dsub.add_parser("linear")
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--dim", type=int, required=True)
    d.add_argument("--eps", type=float, default=0.1)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="-", metavar="PATH")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("gen-dict", help="write a dictionary as CSV")
    p.add_argument("--kind", required=True, choices=["orthonormal", "random-unit", "coherent"])
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", metavar="PATH")
    p.set_defaults(func=cmd_gen_dict)
    return parser


def _setup_logging():
    level = os.environ.get("GREEDY_LOG", "error").lower()
    logging.basicConfig(
        stream=sys.stderr,
        level={"debug": logging.DEBUG, "info": logging.INFO}.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "gen-dict" and args.count is None:
        args.count = args.dim
    try:
        return args.func(args)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"greedy {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"greedy {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvariantViolation, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"greedy {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
