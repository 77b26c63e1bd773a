"""Command-line front end.

Exit codes: 0 ok, 1 negative domain verdict (invalid box, model not found),
2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .bell_strength import gammas, monoandry_check
from .box import Box, box_to_dict, loads_box, noisy_pr, scalar_to_json, validate
from .local import CHSH_LABELS, LocalDecomposition, chsh_signed, chsh_values, decompose_local, is_local_facets
from .quantum import TwoQubitState, born_box, canonical_measurements, pure_family, unit, werner
from .superlocality import (
    canonical_noisy_pr,
    dim4_decomposition_noisy_pr,
    entropic_cost,
    entropic_threshold,
    pad_model,
    search_lhv,
    transform_model,
)

DEFAULT_SEED = 2017
EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2

FAMILY_DOMAINS = {
    "noisy-pr": (0.0, 1.0),
    "werner": (0.0, 1.0),
    "pure-theta": (0.0, math.pi / 4),
}


class UsageError(Exception):
    pass


def _j(v):
    if isinstance(v, (Fraction, float, int, np.floating)) and not isinstance(v, bool):
        return scalar_to_json(v if isinstance(v, Fraction) else float(v))
    return v


def _emit(obj, out) -> None:
    out.write(json.dumps(obj, indent=2) + "\n")


def read_box(path: str) -> Box:
    try:
        with open(path) as fh:
            return loads_box(fh.read())
    except (OSError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot read box from {path}: {exc}") from exc


def _validity_dict(box: Box, tol=None) -> dict:
    rep = validate(box, tol).as_dict()
    rep["residuals"] = {k: _j(v) for k, v in rep["residuals"].items()}
    return rep


# --------------------------------------------------------------------------
# analysis
# --------------------------------------------------------------------------


def analyze_box(box: Box, dim2_search: bool = False, budget: int = 1000, seed: int = DEFAULT_SEED) -> dict:
    """Full report for a valid box; the library-side twin of ``boxlab analyze``."""
    chsh = chsh_values(box)
    facets = is_local_facets(box)
    lp = isinstance(decompose_local(box), LocalDecomposition)
    g = gammas(box)
    mono = monoandry_check(box)
    canon = canonical_noisy_pr(box)
    witness = bool(canon is not None and canon[0] > 0)
    report = {
        "validity": _validity_dict(box),
        "chsh": {f"B_{a}{b}{c}": _j(chsh[(a, b, c)]) for a, b, c in CHSH_LABELS},
        "locality": {"facets": facets, "lp": lp, "agree": facets == lp, "local": facets and lp},
        "gamma": {"g1": _j(g.g1), "g2": _j(g.g2), "g3": _j(g.g3), "gamma": _j(g.gamma)},
        "monoandry": {"max_pair_sum": _j(mono.max_pair_sum), "pair": list(mono.pair), "ok": mono.ok},
        "superlocality": {
            "noisy_pr_fraction": _j(canon[0]) if canon is not None else None,
            "exact_dim2_witness_applicable": witness,
        },
    }
    if dim2_search:
        res = search_lhv(box, 2, budget=budget, seed=seed).as_dict()
        res.pop("model", None)
        report["superlocality"]["dim2_search"] = res
    return report


def decompose_box(box: Box, d: int, budget: int = 200, seed: int = DEFAULT_SEED) -> tuple[bool, dict]:
    """Model with ``d`` shared values, exactly when the box is a relabeled noisy PR box."""
    if not is_local_facets(box):
        worst = max(chsh_values(box).values())
        return False, {
            "found": False,
            "certified": True,
            "d": d,
            "reason": "box violates a CHSH inequality, so no local model of any dimension exists",
            "max_chsh": _j(worst),
        }
    canon = canonical_noisy_pr(box)
    if canon is not None and d >= 4:
        p, t = canon
        model = transform_model(dim4_decomposition_noisy_pr(p), t.inverse())
        return True, pad_model(model, d).as_dict()
    out = search_lhv(box, d, budget=budget, seed=seed)
    if out.found:
        return True, out.model.as_dict()
    rep = out.as_dict()
    rep.pop("model", None)
    rep["certified"] = False
    return False, rep


def scan_rows(family: str, start: float, stop: float, steps: int) -> list[list]:
    lo, hi = FAMILY_DOMAINS[family]
    if steps < 1 or not (lo <= start <= stop <= hi + 1e-15):
        raise UsageError(f"range [{start}, {stop}] with {steps} steps is outside [{lo}, {hi}]")
    dirs = canonical_measurements()
    rows = []
    for v in np.linspace(start, stop, steps):
        v = float(v)
        if family == "noisy-pr":
            box, frac = noisy_pr(v), v
        elif family == "werner":
            box, frac = born_box(werner(v), *dirs), v / math.sqrt(2)
        else:
            box, frac = born_box(pure_family(min(v, math.pi / 4)), *dirs), math.sin(2 * v) / math.sqrt(2)
        bits = entropic_cost(frac) if 0 <= frac <= 0.5 else ""
        rows.append([v, float(chsh_signed(box, 0, 0, 0)), str(is_local_facets(box)).lower(), float(gammas(box).gamma), bits])
    return rows


def _write_csv(header, rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _parse_state(args) -> TwoQubitState:
    if args.state is not None:
        text = args.state
        if os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        try:
            data = json.loads(text)
            return TwoQubitState(data["r"], data["s"], data["C"])
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"bad state JSON: {exc}") from exc
    if args.family is None or args.param is None:
        raise UsageError("give --state JSON or --family with --param")
    try:
        return pure_family(args.param) if args.family == "pure-theta" else werner(args.param)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _direction(v, default):
    if v is None:
        return default
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise UsageError("zero measurement direction")
    return v if abs(n - 1) <= 1e-12 else unit(v)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_validate(args, out) -> int:
    box = read_box(args.path)
    rep = _validity_dict(box, args.tol)
    _emit(rep, out)
    return EXIT_OK if rep["valid"] else EXIT_NEGATIVE


def cmd_analyze(args, out) -> int:
    box = read_box(args.path)
    if not validate(box).valid:
        _emit({"validity": _validity_dict(box)}, out)
        return EXIT_NEGATIVE
    _emit(analyze_box(box, args.dim2_search, args.budget, args.seed), out)
    return EXIT_OK


def cmd_scan(args, out) -> int:
    lo, hi = FAMILY_DOMAINS[args.family]
    start = lo if args.start is None else args.start
    stop = hi if args.stop is None else args.stop
    rows = scan_rows(args.family, start, stop, args.steps)
    header = ["parameter", "B_000", "local", "gamma", "entropic_bits"]
    if args.output:
        with open(args.output, "w", newline="") as fh:
            _write_csv(header, rows, fh)
    else:
        _write_csv(header, rows, out)
    return EXIT_OK


def cmd_quantum(args, out) -> int:
    state = _parse_state(args)
    dflt = canonical_measurements()
    dirs = [_direction(v, d) for v, d in zip((args.a0, args.a1, args.b0, args.b1), dflt)]
    try:
        box = born_box(state, *dirs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = json.dumps(box_to_dict(box)) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    box = read_box(args.path)
    if not validate(box).valid:
        _emit({"validity": _validity_dict(box)}, out)
        return EXIT_NEGATIVE
    if args.dim < 1:
        raise UsageError("--dim must be positive")
    found, payload = decompose_box(box, args.dim, args.budget, args.seed)
    _emit(payload, out)
    return EXIT_OK if found else EXIT_NEGATIVE


def cmd_entropic(args, out) -> int:
    if args.threshold:
        out.write(f"{entropic_threshold(args.tol)!r}\n")
        return EXIT_OK
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    xs = np.linspace(0.0, 0.5, args.steps)
    _write_csv(["x", "bits"], [[float(x), entropic_cost(float(x))] for x in xs], out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check range, normalization and nonsignaling")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="CHSH values, locality, Bell strength, monoandry")
    p.add_argument("path")
    p.add_argument("--dim2-search", action="store_true", help="also search for a model with two shared values")
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="CSV sweep over a one-parameter family")
    p.add_argument("family", choices=sorted(FAMILY_DOMAINS))
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("quantum", help="Born-rule box from a two-qubit state")
    p.add_argument("--family", choices=["pure-theta", "werner"])
    p.add_argument("--param", type=float)
    p.add_argument("--state", help="JSON {r, s, C} or a path to such a file")
    for name in ("a0", "a1", "b0", "b1"):
        p.add_argument(f"--{name}", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_quantum)

    p = sub.add_parser("decompose", help="local model with a given number of shared values")
    p.add_argument("path")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("entropic", help="shared-randomness entropy of the four-valued protocol")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scan", action="store_true")
    g.add_argument("--threshold", action="store_true")
    p.add_argument("--steps", type=int, default=51)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_entropic)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"boxlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
