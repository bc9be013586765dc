"""Command-line driver: ``qrac <command> [options]``.

Every command prints a JSON report on stdout and writes a run manifest
(command, arguments, seeds, version, wall time, output files) next to its
outputs.  Exit status is 0 on success, 1 for invalid arguments and 2 when a
computation fails (invalid scale, uncovered inputs, a failed verification).
"""
import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .codes import (
    STATE_TOL,
    CodeParams,
    all_inputs,
    EncodingScheme,
    build_classical_rac,
    build_improved_qrac,
    build_insphere_qrac,
    load_code,
    mupvm_trace_deviation,
    check_measurements,
    p_from_scale,
    predicted_p,
    save_code,
)
from .errors import (
    InvalidDimensionError,
    InvalidInputError,
    InvalidScaleError,
    NotParityObliviousError,
    QracError,
    SearchSpaceTooLargeError,
)

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class ComputationFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _emit(report):
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))


def _write_manifest(args, outputs, wall, seeds=()):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": config,
        "seeds": list(seeds),
        "version": __version__,
        "wall_time_s": wall,
        "outputs": [str(p) for p in outputs],
    }
    path = out / f"run_{args.command}.json"
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return path


def _subset(text):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--subset must be a comma-separated list of integers: {exc}") from None


def _build(args):
    """Code from either ``--code PATH`` or ``--d/--m/--n`` flags."""
    if getattr(args, "code", None):
        return load_code(args.code)
    if args.n is None:
        raise UsageError("give --code PATH or --d/--m/--n")
    params = CodeParams(args.d, args.m, args.n, getattr(args, "kind", "quantum"))
    if params.kind == "classical":
        return build_classical_rac(params, boost_even_parity=getattr(args, "boost_even_parity", False))
    method = getattr(args, "method", "improved")
    if method == "insphere":
        return build_insphere_qrac(params, subset=_subset(getattr(args, "subset", None)))
    scheme = getattr(args, "scheme", None)
    if scheme == "scaled":
        code = build_improved_qrac(params, subset=_subset(args.subset), scheme="uniform")
        if getattr(args, "K", None) is not None:
            return code.with_scheme(EncodingScheme("scaled", float(args.K)))
        from .lambda_opt import apply_scaling, lambda_exhaustive

        return apply_scaling(code, lambda_exhaustive(code.d, code))
    return build_improved_qrac(params, subset=_subset(getattr(args, "subset", None)), scheme=scheme)


def _check_states(code, seed, limit=1 << 16, samples=4096):
    """Raise InvalidScaleError if any (or any sampled) encoding state is not PSD."""
    if code.d ** code.n <= limit:
        A = all_inputs(code.d, code.n)
    else:
        A = np.random.Generator(np.random.Philox(seed)).integers(0, code.d, size=(samples, code.n))
    for s in range(0, len(A), 4096):
        low = float(np.linalg.eigvalsh(code.encode_batch(A[s:s + 4096]))[:, 0].min())
        if low < -STATE_TOL:
            raise InvalidScaleError(f"encoding state with eigenvalue {low:.3e}; the scale K={code.scheme.K!r} is too large")


# -- commands ----------------------------------------------------------------------------


def cmd_construct(args):
    from .evaluate import exact_report

    code = _build(args)
    if args.K is not None and args.scheme != "scaled":
        raise UsageError("--K only applies with --scheme scaled")
    if not args.skip_check:
        _check_states(code, args.seed)
    path = save_code(code, Path(args.out) / "code")
    report = exact_report(code, seed=args.seed)
    return {
        "code": str(path),
        "d": code.d,
        "m": code.m,
        "n": code.n,
        "kind": code.params.kind,
        "method": code.method,
        "scheme": code.scheme.style,
        "K": code.scheme.K,
        "predicted_p": predicted_p(code.params) if code.method in ("improved", "classical") else None,
        "evaluation": report.to_dict(),
    }, [path], [args.seed]


def _table_ii(verify_limit):
    from .evaluate import exact_report

    rows = []
    for m in range(1, 6):
        params = CodeParams(2, m, 4 ** m - 1)
        exact = (1 + 1 / ((2 ** m - 1) * math.sqrt(2 ** m + 1))) / 2
        analytic = predicted_p(params)
        brute, mode = "", "analytic"
        if m <= verify_limit:
            rep = exact_report(build_improved_qrac(params), samples=10 ** 4, seed=0)
            brute, mode = _fmt(rep.worst_case_p), rep.mode
        rows.append([m, params.n, _fmt(exact), _fmt(analytic), brute, mode])
    return ["m", "n", "p_exact", "p_analytic", "p_bruteforce", "bruteforce_mode"], rows


def _table_iii(verify_limit):
    from .evaluate import exact_report

    rows = []
    for m in range(1, 6):
        params = CodeParams(2, m, 2 ** m - 1, "classical")
        exact = (1 + 1 / (2 ** m - 1)) / 2
        brute, mode = "", "analytic"
        if m <= verify_limit:
            rep = exact_report(build_classical_rac(params), seed=0)
            brute, mode = _fmt(rep.worst_case_p), rep.mode
        rows.append([m, params.n, _fmt(exact), _fmt(predicted_p(params)), brute, mode])
    return ["m", "n", "p_exact", "p_analytic", "p_bruteforce", "bruteforce_mode"], rows


def _table_v(workers, n_range):
    from .lambda_opt import subset_search

    rows = []
    for n in n_range:
        res = subset_search(n, 2, workers)
        p_ins = p_from_scale(2, n, math.sqrt(n / 3.0))
        rows.append([n, _fmt(res.lambda_), _fmt(res.p), _fmt(p_ins), " ".join(map(str, res.best_subset))])
    return ["n", "lambda", "p", "p_insphere", "subset"], rows


def cmd_tables(args):
    which = {"II", "III", "V", "figure"} if args.which == "all" else {args.which}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written, summary = [], {}
    builders = {
        "II": lambda: _table_ii(args.verify_limit_ii),
        "III": lambda: _table_iii(args.verify_limit_iii),
        "V": lambda: _table_v(args.workers, range(6, 16)),
        "figure": lambda: _table_v(args.workers, range(1, 16)),
    }
    for name in ("II", "III", "V", "figure"):
        if name not in which:
            continue
        header, rows = builders[name]()
        if name == "figure":
            header = ["n", "p_subset", "p_insphere"]
            rows = [[r[0], r[2], r[3]] for r in rows]
        path = out / f"table_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["# schema_version", SCHEMA_VERSION])
            w.writerow(header)
            w.writerows(rows)
        written.append(path)
        summary[name] = [dict(zip(header, r)) for r in rows]
    return {"tables": summary, "files": [str(p) for p in written]}, written, []


def cmd_search(args):
    from .pure_search import SearchConfig, save_pure, search

    cfg = SearchConfig(
        num_bases=args.num_bases,
        num_state_draws=args.state_draws,
        walk_steps=args.walk_steps,
        walk_scale=args.walk_scale,
        basis_rounds=args.basis_rounds,
        basis_perturb_scale=args.basis_perturb_scale,
        unbias_threshold=args.unbias_threshold,
        seed=args.seed,
        time_budget=args.budget,
    )
    res = search(args.n, cfg)
    path = save_pure(res, Path(args.out) / "pure")
    report = {
        "n": res.n,
        "worst_p": res.worst_p,
        "avg_p": res.avg_p,
        "uncovered": len(res.uncovered),
        "budget_exhausted": res.budget_exhausted,
        "output": str(path),
    }
    if res.uncovered:
        raise ComputationFailed(json.dumps(report))
    return report, [path], [args.seed]


def cmd_lambda(args):
    from .lambda_opt import lambda_exhaustive, lambda_random

    seeds = []
    if args.random:
        if args.seed is None:
            raise UsageError("--random needs --seed")
        res = lambda_random(args.m, args.trials, args.seed)
        seeds = [args.seed]
    elif args.code or args.n is not None:
        code = _build(args)
        res = lambda_exhaustive(code.d, code, workers=args.workers)
    else:
        subset = _subset(args.subset) or list(range(1, 4 ** args.m))
        res = lambda_exhaustive(2, subset, args.m, workers=args.workers)
    return res.to_dict(), [], seeds


def cmd_verify_po(args):
    from .parity import verify_parity_oblivious

    code = _build(args)
    rep = verify_parity_oblivious(code, args.tol, args.subset_budget, args.seed)
    out = rep.to_dict()
    if not rep.ok:
        raise ComputationFailed(json.dumps(out))
    return out, [], [args.seed]


def cmd_verify(args):
    from .mub import mub_construct, verify_mub
    from .orthoarray import m4_fixture, oa_construct, read_oa_csv, verify_oa

    if args.what == "mub":
        rep = verify_mub(mub_construct(args.q), args.tol)
        out = {"what": "mub", "q": args.q, "ok": rep.ok, "worst_deviation": rep.worst_deviation}
    elif args.what == "oa":
        if args.fixture:
            M = m4_fixture() if args.fixture == "M4" else read_oa_csv(args.fixture)
            d = 4 if args.fixture == "M4" else None
        else:
            M, d = oa_construct(args.d, args.m), args.d
        rep = verify_oa(M, d)
        out = {"what": "oa", "ok": rep.ok, "worst_pair_count_deviation": rep.worst_pair_count_deviation}
    else:
        code = _build(args)
        completeness, psd = check_measurements(code)
        mu = mupvm_trace_deviation(code) if code.method == "improved" else None
        ok = completeness <= 1e-10 and psd and (mu is None or mu <= 1e-9)
        out = {"what": "code", "ok": ok, "completeness_error": completeness, "psd": psd, "mupvm_deviation": mu}
    if not out["ok"]:
        raise ComputationFailed(json.dumps(_jsonable(out)))
    return out, [], []


def cmd_simulate(args):
    from .evaluate import monte_carlo

    code = _build(args)
    res = monte_carlo(code, args.trials, args.seed)
    out = res.report.to_dict()
    out.update({"max_z": res.max_z, "within_5_sigma": res.within_bounds})
    return out, [], [args.seed]


def cmd_compare(args):
    from .evaluate import p_q_to_c, q_to_c_probabilities
    from .lambda_opt import apply_scaling, lambda_exhaustive

    params = CodeParams(args.d, args.m, args.n)
    code = build_improved_qrac(params, scheme="uniform")
    try:
        lam = lambda_exhaustive(code.d, code, workers=args.workers)
        code = apply_scaling(code, lam)
        p, lam_value = lam.p, lam.lambda_
    except SearchSpaceTooLargeError:
        code = build_improved_qrac(params)
        p, lam_value = predicted_p(params), None
    classical = CodeParams(args.d, 2 * args.m, args.n, "classical")
    out = {
        "p": p,
        "lambda": lam_value,
        "p_q_to_c": p_q_to_c(args.d, p),
        "classical_m": 2 * args.m,
        "classical_p": predicted_p(classical),
        f"classical_{2 * args.m}bit_p": predicted_p(classical),
    }
    if args.d ** args.n <= 1 << 16:
        out["p_q_to_c_direct"] = float(q_to_c_probabilities(code).min())
    return out, [], []


# -- parser ----------------------------------------------------------------------------------


def _code_flags(p, with_build=True):
    p.add_argument("--code", help="directory written by 'construct'")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int)
    if with_build:
        p.add_argument("--kind", choices=["quantum", "classical"], default="quantum")
        p.add_argument("--method", choices=["insphere", "improved"], default="improved")
        p.add_argument("--scheme", choices=["uniform", "insphere", "scaled"])
        p.add_argument("--K", type=float, help="scale factor for --scheme scaled (default n/lambda)")
        p.add_argument("--subset", help="comma-separated slot indices")
        p.add_argument("--boost-even-parity", action="store_true")


def build_parser():
    parser = _Parser(prog="qrac", description="Construct, optimize and verify (quantum) random access codes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--workers", type=int, help="worker threads (default: QRAC_WORKERS or all cores)")
    parser.add_argument("--out", default="qrac-out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="build a code and save it")
    _code_flags(p)
    p.add_argument("--seed", type=int, default=0, help="seed for sampled evaluation of large codes")
    p.add_argument("--skip-check", action="store_true")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("tables", help="regenerate the success-probability tables as CSV")
    p.add_argument("--which", choices=["II", "III", "V", "figure", "all"], default="all")
    p.add_argument("--verify-limit-ii", type=int, default=3)
    p.add_argument("--verify-limit-iii", type=int, default=4)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("search", help="stochastic pure-state (n,2,p) search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--budget", type=float, default=600.0, help="time budget in seconds")
    p.add_argument("--num-bases", type=int, default=6)
    p.add_argument("--state-draws", type=int, default=4000)
    p.add_argument("--walk-steps", type=int, default=1500)
    p.add_argument("--walk-scale", type=float, default=0.05)
    p.add_argument("--basis-rounds", type=int, default=30)
    p.add_argument("--basis-perturb-scale", type=float, default=0.02)
    p.add_argument("--unbias-threshold", type=float, default=0.15)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("lambda", help="most negative eigenvalue bound on the encoding scale")
    _code_flags(p)
    p.add_argument("--exhaustive", action="store_true", help="enumerate every sign pattern (default)")
    p.add_argument("--random", action="store_true", help="sample sign patterns instead")
    p.add_argument("--trials", type=int, default=10 ** 5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("verify-po", help="check d-parity-obliviousness")
    _code_flags(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--subset-budget", type=int, default=1 << 16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_po)

    p = sub.add_parser("verify", help="validate MUBs, orthogonal arrays or a code")
    p.add_argument("what", choices=["mub", "oa", "code"])
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--fixture", help="'M4' or a CSV path")
    p.add_argument("--tol", type=float, default=1e-10)
    _code_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo measurement statistics")
    _code_flags(p)
    p.add_argument("--trials", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="QRAC vs QRAC-read-as-RAC vs classical RAC")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers:
        os.environ["QRAC_WORKERS"] = str(args.workers)
    start = time.monotonic()
    try:
        report, outputs, seeds = args.func(args)
    except (UsageError, InvalidDimensionError, InvalidInputError) as exc:
        print(f"qrac {args.command}: invalid arguments: {exc}", file=sys.stderr)
        return 1
    except ComputationFailed as exc:
        print(str(exc))
        print(f"qrac {args.command}: computation failed", file=sys.stderr)
        return 2
    except (InvalidScaleError, NotParityObliviousError, SearchSpaceTooLargeError, QracError) as exc:
        print(f"qrac {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    manifest = _write_manifest(args, outputs, time.monotonic() - start, seeds)
    report = dict(report)
    report["manifest"] = str(manifest)
    _emit(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
