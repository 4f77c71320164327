"""Command-line front end: experiment orchestration and report emission.

Every subcommand writes a JSON report whose ``comparable`` section is
canonical (sorted keys, fixed float format) and therefore byte-identical
across reruns with the same configuration and seed; wall time lives outside
it.  Sweeps additionally emit CSV.  Exit codes: 0 success, 2 invalid input,
3 resource limit, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__, defaults
from .adversary import (AdversarialInstance, inapproximability_score,
                        quasirandomness_curve, random_pattern)
from .decomp import fit_boolean_cylinders, fit_weighted_cylinders
from .errors import InvalidArgumentError, VckLabError
from .fibalg import FiberFamilySpec, atoms, fiber_family
from .gen import boolean_of_lower_arity, membership_gadget, parity_triple, quasirandom
from .gowers import box_norm
from .serialize import (dumps_canonical, find_function, format_float,
                        functions_from_doc, functions_to_doc, load_json)
from .space import PartiteSpace
from .vck import ShatteringCertificate, vc_k, verify_certificate


def _emit_report(command: str, config: dict, results, seed, out, started: float) -> None:
    doc = {
        "comparable": {
            "command": command,
            "config": config,
            "library_version": __version__,
            "results": results,
            "seed": seed,
        },
        "wall_time_s": time.perf_counter() - started,
    }
    text = dumps_canonical(doc) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_params(raw: str | None, allowed: dict) -> dict:
    """key=value pairs, comma separated; list values use 'x' separators."""
    out = {}
    for chunk in (raw or "").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise InvalidArgumentError(f"malformed parameter {chunk!r} (expected key=value)")
        key, value = chunk.split("=", 1)
        if key not in allowed:
            raise InvalidArgumentError(
                f"unknown parameter {key!r}; allowed: {sorted(allowed)}")
        out[key] = allowed[key](value)
    return out


def _int_list(text: str) -> list:
    return [int(v) for v in text.split("x") if v != ""]


def _load_function(args):
    doc = load_json(args.input)
    space, functions = functions_from_doc(doc)
    signature = [int(v) for v in args.signature.split(",")] if getattr(
        args, "signature", None) else None
    return space, find_function(functions, name=args.function, signature=signature)


# --------------------------------------------------------------------------
# subcommand handlers


def _cmd_gen(args) -> int:
    started = time.perf_counter()
    kinds = {
        "membership": {"d": int, "k": int},
        "boolcomb": {"kprime": int, "k": int, "m": int, "sizes": _int_list},
        "parity": {"n": int},
        "quasirandom": {"sizes": _int_list, "signature": _int_list, "p": float},
    }
    if args.kind not in kinds:
        raise InvalidArgumentError(f"unknown kind {args.kind!r}")
    params = _parse_params(args.params, kinds[args.kind])
    if args.kind == "membership":
        rel = membership_gadget(params.get("d", 2), params.get("k", 1))
        functions = [rel]
    elif args.kind == "boolcomb":
        result = boolean_of_lower_arity(params.get("kprime", 3), params.get("k", 1),
                                        params.get("m", 2),
                                        params.get("sizes", [5, 5, 5]), seed=args.seed)
        functions = [result.relation] + [rel for _, rel in result.leaves]
    elif args.kind == "parity":
        result = parity_triple(params.get("n", 5), seed=args.seed)
        functions = [result.relation, result.F, result.G, result.H]
    else:
        sizes = params.get("sizes", [4, 4])
        space = PartiteSpace.uniform(sizes)
        signature = params.get("signature", list(range(len(sizes))))
        functions = [quasirandom(space, signature, params.get("p", 0.5),
                                 seed=args.seed)]
    doc = functions_to_doc(functions[0].space, functions)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(doc) + "\n")
    _emit_report("gen", {"kind": args.kind, "params": args.params or "",
                         "out": args.out, "threads": args.threads},
                 {"functions": [f.name for f in functions]}, args.seed, None, started)
    return 0


def _cmd_vcdim(args) -> int:
    started = time.perf_counter()
    _, f = _load_function(args)
    k = args.k if args.k is not None else f.arity - 1
    distinguished = args.distinguished if args.distinguished is not None else f.arity - 1
    result = vc_k(f, k, distinguished, args.r, args.s, cap=args.cap)
    results = {
        "dimension": result.dimension,
        "complete": result.complete,
        "certificate": result.certificate.to_doc() if result.certificate else None,
    }
    config = {"input": args.input, "function": f.name, "k": k,
              "distinguished": distinguished, "r": args.r, "s": args.s,
              "cap": args.cap, "format": args.format, "threads": args.threads}
    if args.format == "csv":
        lines = ["dimension,complete,r,s",
                 f"{result.dimension},{int(result.complete)},"
                 f"{format_float(args.r)},{format_float(args.s)}"]
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        _emit_report("vcdim", config, results, args.seed, args.out, started)
    if not result.complete:
        print("warning: search capped; dimension is a certified lower bound",
              file=sys.stderr)
        return 3
    return 0


def _cmd_gowers(args) -> int:
    started = time.perf_counter()
    _, f = _load_function(args)
    report = box_norm(f)
    config = {"input": args.input, "function": f.name,
              "signature": args.signature or "", "threads": args.threads}
    _emit_report("gowers", config, report.to_doc(), args.seed, args.out, started)
    return 0


def _cmd_fibers(args) -> int:
    started = time.perf_counter()
    _, f = _load_function(args)
    anchors = [int(v) for v in args.anchors.split(",") if v != ""]
    if args.params:
        rows = [[int(v) for v in row.split(",") if v != ""]
                for row in args.params.split(";")]
    else:
        rows = [list(range(f.shape[i])) for i in range(f.arity - 1)]
    spec = FiberFamilySpec(args.t, tuple(anchors), tuple(tuple(r) for r in rows))
    family = fiber_family(f, spec)
    partition = atoms(family) if family else None
    results = {
        "family": functions_to_doc(f.space, family)["functions"],
        "partition": partition.to_doc() if partition else None,
    }
    config = {"input": args.input, "function": f.name, "t": args.t,
              "anchors": args.anchors, "params": args.params or "",
              "threads": args.threads}
    _emit_report("fibers", config, results, args.seed, args.out, started)
    return 0


def _cmd_decompose(args) -> int:
    started = time.perf_counter()
    _, f = _load_function(args)
    config = {"input": args.input, "function": f.name, "k": args.k,
              "n_max": args.n_max, "mode": args.mode, "als_iters": args.als_iters,
              "threads": args.threads}
    if args.mode == "weighted":
        decomposition, report = fit_weighted_cylinders(
            f, args.k, args.n_max, als_iters=args.als_iters, seed=args.seed)
        results = {"fit": report.to_doc(), "decomposition": decomposition.to_doc(),
                   "value_range": list(decomposition.value_range())}
    else:
        expr, report = fit_boolean_cylinders(f, args.k, args.n_max, seed=args.seed)
        results = {"fit": report.to_doc(), "expression": expr.to_doc()}
    _emit_report("decompose", config, results, args.seed, args.report, started)
    return 0


def _cmd_adversary(args) -> int:
    started = time.perf_counter()
    d_values = [int(v) for v in args.d.split(",") if v != ""]
    rows = quasirandomness_curve(args.k, d_values, args.trials, args.seed, p=args.p)
    score_trials = min(args.score_trials, args.trials)
    for di, (d, row) in enumerate(zip(d_values, rows)):
        scores = []
        for t in range(score_trials):
            H = random_pattern(d, args.k, args.p, args.seed, trial=(di << 16) | t)
            instance = AdversarialInstance(H, H, {}, {}, H.space, H)
            scores.append(inapproximability_score(
                instance, args.k, args.n_terms, seed=args.seed,
                restarts=args.restarts))
        row["mean_score"] = sum(scores) / len(scores) if scores else 0.0
    lines = ["d,mean_norm,std,mean_score"]
    for row in rows:
        lines.append(",".join([str(row["d"]), format_float(row["mean_norm"]),
                               format_float(row["std_norm"]),
                               format_float(row["mean_score"])]))
    text = "\n".join(lines) + "\n"
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    config = {"k": args.k, "d": args.d, "trials": args.trials, "p": args.p,
              "n_terms": args.n_terms, "score_trials": score_trials,
              "restarts": args.restarts, "out": args.out, "threads": args.threads}
    _emit_report("adversary", config, {"curve": rows}, args.seed, None, started)
    return 0


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    cert_doc = load_json(args.certificate)
    cert = ShatteringCertificate.from_doc(cert_doc)
    doc = load_json(args.instance)
    _, functions = functions_from_doc(doc)
    f = find_function(functions, name=args.function)
    valid = verify_certificate(f, cert)
    config = {"certificate": args.certificate, "instance": args.instance,
              "function": f.name, "threads": args.threads}
    _emit_report("verify", config, {"valid": valid}, 0, args.out, started)
    return 0 if valid else 2


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vck-lab",
        description="Shattering dimension, box norms, and cylinder decompositions "
                    "on finite measured multipartite spaces.")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("VCK_LAB_THREADS", "1")),
                        help="reserved concurrency hint, recorded in reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded instance")
    p.add_argument("--kind", required=True,
                   choices=["membership", "boolcomb", "parity", "quasirandom"])
    p.add_argument("--params", default="",
                   help="key=value pairs, comma separated; lists use 'x' (sizes=5x5x5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("vcdim", help="certified shattering dimension")
    p.add_argument("--input", required=True)
    p.add_argument("--function", default=None)
    p.add_argument("--signature", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--distinguished", type=int, default=None)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--cap", type=int, default=defaults.GRID_CAP)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_vcdim)

    p = sub.add_parser("gowers", help="box norm report for a stored function")
    p.add_argument("--input", required=True)
    p.add_argument("--function", default=None)
    p.add_argument("--signature", default=None, help="select by signature, e.g. 0,0,1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gowers)

    p = sub.add_parser("fibers", help="fiber family and atom partition")
    p.add_argument("--input", required=True)
    p.add_argument("--function", default=None)
    p.add_argument("--signature", default=None)
    p.add_argument("--t", type=int, default=defaults.DYADIC_HEIGHT)
    p.add_argument("--anchors", required=True, help="comma-separated vertices")
    p.add_argument("--params", default=None,
                   help="per-coordinate vertex rows: '0,1;2,3' (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fibers)

    p = sub.add_parser("decompose", help="fit a low-arity cylinder decomposition")
    p.add_argument("--input", required=True)
    p.add_argument("--function", default=None)
    p.add_argument("--signature", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--mode", choices=["weighted", "boolean"], default="weighted")
    p.add_argument("--als-iters", type=int, default=defaults.ALS_ITERS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("adversary", help="quasirandomness sweep with scores")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--d", default="2,4,8", help="comma-separated pattern sizes")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--n-terms", type=int, default=4)
    p.add_argument("--score-trials", type=int, default=3)
    p.add_argument("--restarts", type=int, default=defaults.SCORE_RESTARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path (d,mean_norm,std,mean_score)")
    p.set_defaults(func=_cmd_adversary)

    p = sub.add_parser("verify", help="check a shattering certificate")
    p.add_argument("certificate")
    p.add_argument("instance")
    p.add_argument("--function", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON at line {exc.lineno} column {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VckLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
