"""Command-line interface: ``primstab <subcommand> ...``.

Structured results go to stdout as JSON (or to ``--out``); tables to CSV.
Exit codes: 0 success (or certificate pass), 2 certificate fail, 1 runtime
error such as a missing or malformed file, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import cartan, freegroup, grassmann, projective3, reps, stability
from ._scaled import scaled_power

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class InputError(Exception):
    """Bad input file; reported as a one-line diagnostic with exit code 1."""


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _clean(obj):
    """Make numpy scalars and arrays JSON-ready; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _dumps(obj) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def _emit(obj, out: str | None) -> None:
    text = _dumps(obj)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _read_json(path: str, what: str):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what}: file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: malformed JSON in {path} ({exc.msg} at line {exc.lineno})") from None


def _load_matrix(path: str) -> np.ndarray:
    """A square matrix as a JSON array of rows, or ``{"matrix": rows}``.
    Integral entries are kept as exact integers."""
    data = _read_json(path, "matrix")
    if isinstance(data, dict):
        if "matrix" not in data:
            raise InputError(f"matrix: field 'matrix' missing in {path}")
        data = data["matrix"]
    try:
        m = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"matrix: entries in {path} are not numeric rows") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size == 0:
        raise InputError(f"matrix: expected a square matrix in {path}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"matrix: non-finite entries in {path}")
    if np.all(m == np.round(m)) and np.max(np.abs(m)) < 2**53:
        return np.array([[int(x) for x in row] for row in m], dtype=object)
    return m


def _load_rep(path: str) -> reps.Representation:
    data = _read_json(path, "rep")
    try:
        return reps.Representation.from_dict(data)
    except reps.RepresentationFormatError as exc:
        raise InputError(f"rep: {exc}") from None


def _power(m: np.ndarray, k: int) -> np.ndarray:
    if k < 0:
        raise UsageError("--power must be nonnegative")
    if m.dtype == object:
        out = np.eye(m.shape[0], dtype=int).astype(object)
        base = m
        while k:
            if k & 1:
                out = out.dot(base)
            k >>= 1
            if k:
                base = base.dot(base)
        return out
    return scaled_power(m, k)[0]


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    try:
        return stability.default_workers()
    except ValueError:
        raise UsageError("PRIMSTAB_THREADS must be a positive integer") from None


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def cmd_whitehead(args) -> int:
    try:
        w = freegroup.parse_word(args.word, args.rank)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rank = args.rank or max((abs(x) for x in w), default=1)
    core, _ = freegroup.cyclic_reduce(w)
    if not core:
        raise UsageError(f"the word {args.word!r} is trivial")
    out = {
        "word": freegroup.format_word(w),
        "cyclic_core": freegroup.format_word(core),
        "rank": rank,
        "whitehead_graph": freegroup.whitehead_graph(core, rank).as_dict(),
        "obstruction": freegroup.whitehead_obstruction(core, rank),
        "primitive": freegroup.is_primitive(core, rank),
    }
    if args.blocking_cutoff:
        witness = freegroup.primitive_containing(w, rank, args.blocking_cutoff)
        out["blocking_cutoff"] = args.blocking_cutoff
        out["blocking"] = witness is None
        out["witness"] = None if witness is None else freegroup.format_word(witness)
    _emit(out, args.out)
    return EXIT_OK


def cmd_cartan(args) -> int:
    m = _power(_load_matrix(args.matrix_file), args.power)
    try:
        mu = cartan.cartan_projection(m)
        lam = cartan.jordan_projection(np.array(m, dtype=float) if m.dtype == object else m)
        t = cartan.translation_length(np.array(m, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise InputError(f"matrix: {exc}") from None
    _emit({
        "mu": mu.tolist(),
        "lambda": lam.tolist(),
        "wall_margin": cartan.wall_margin(mu),
        "translation_length": t.length,
        "semisimple": t.semisimple,
    }, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    m = np.array(_load_matrix(args.matrix_file), dtype=float)
    if m.shape != (3, 3):
        raise InputError("matrix: classification needs a 3x3 matrix")
    try:
        result = projective3.classify_isometry(m)
    except ValueError as exc:
        raise InputError(f"matrix: {exc}") from None
    _emit(result.as_dict(), args.out)
    return EXIT_OK


def cmd_rank_classify(args) -> int:
    m = np.array(_load_matrix(args.matrix_file), dtype=float)
    report = grassmann.sequence_rank_classify(m, K=args.power_cutoff, eps=args.eps)
    _emit(report.as_dict(), args.out)
    return EXIT_OK


def cmd_tp_test(args) -> int:
    m = _load_matrix(args.matrix_file)
    _emit({"totally_positive": grassmann.is_totally_positive(m)}, args.out)
    return EXIT_OK


def cmd_parabolic(args) -> int:
    rows = []
    for n in range(1, args.max_n + 1):
        coeff, (alpha, _, _) = projective3.parabolic_gram_poly(n)
        rows.append({"n": n, "coefficient": coeff, "alpha": alpha,
                     "barycenter_angle": projective3.parabolic_barycenter_angle(n)})
    _emit(rows, args.out)
    return EXIT_OK


def cmd_quasihyperbolic(args) -> int:
    if args.alpha <= 1:
        raise UsageError("--alpha must exceed 1")
    rows = []
    for n in range(1, args.max_n + 1):
        theta = projective3.quasihyperbolic_theta(args.alpha, n)
        rows.append({"n": n, "mu": projective3.quasihyperbolic_mu(args.alpha, n).tolist(),
                     "theta": theta, "tan_theta": math.tan(theta)})
    _emit(rows, args.out)
    return EXIT_OK


def cmd_limit_cone(args) -> int:
    rep = _load_rep(args.rep)
    cone = projective3.limit_cone_estimate(rep, args.max_length)
    n = rep.n
    gap_names = ["x", "y"] if n == 3 else [f"gap{i}" for i in range(1, n)]
    header = ["word"] + [f"lambda{i}" for i in range(1, n + 1)] + gap_names + ["on_wall"]
    rows = [[freegroup.format_word(d.word)] + [repr(float(v)) for v in d.jordan.coords]
            + [repr(float(v)) for v in d.gaps] + [str(d.on_wall).lower()] for d in cone.directions]
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    summary = {"cutoff": args.max_length, "directions": len(cone.directions), "on_wall": cone.on_wall,
               "opposition_symmetric": cone.is_opposition_symmetric(1e-8) if cone.directions else True,
               "hull": [p.tolist() for p in cone.hull]}
    if not args.out:
        summary["csv"] = [dict(zip(header, r)) for r in rows]
    print(_dumps(summary))
    return EXIT_OK


def cmd_rep_make(args) -> int:
    try:
        rep = reps.make_preset(args.preset, *args.preset_args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(rep.as_dict(), args.out)
    return EXIT_OK


def cmd_rep_perturb(args) -> int:
    if args.eps < 0:
        raise UsageError("--eps must be nonnegative")
    rep = reps.perturb(_load_rep(args.rep), args.eps, args.seed)
    _emit(rep.as_dict(), args.out)
    return EXIT_OK


def _basepoint(spec: str, n: int) -> cartan.SpacePoint:
    if spec == "identity":
        return cartan.SpacePoint.identity(n)
    m = np.array(_load_matrix(spec), dtype=float)
    try:
        point = cartan.SpacePoint(m)
    except ValueError as exc:
        raise InputError(f"basepoint: {exc}") from None
    if point.n != n:
        raise InputError(f"basepoint: dimension {point.n} does not match the representation ({n})")
    return point


CSV_FIELDS = ["word", "length", "eig_margin", "flat_sup", "slope", "end_margin", "semisimple", "pass", "failures"]


def cmd_certify(args) -> int:
    rep = _load_rep(args.rep)
    tol = stability.Tolerances(tol_eig=args.tol_eig, tol_slope=args.tol_slope, flat_tol=args.flat_tol)
    cert = stability.certify(rep, args.max_length, _basepoint(args.basepoint, rep.n), tol,
                             workers=_threads(args))
    data = cert.as_dict()
    _emit(data, args.out)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in data["classes"]:
                row = dict(row)
                row["failures"] = "; ".join(row["failures"])
                writer.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_FIELDS})
    print(f"{cert.label}: {len(cert.classes)} classes, {len(cert.failures)} failed", file=sys.stderr)
    return EXIT_OK if cert.passed else EXIT_FAIL


def build_parser() -> Parser:
    p = Parser(prog="primstab", description="Numerical certificates of regularity and primitive "
                                             "stability for free-group representations into PGL(n, R).")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    def out_flag(sp):
        sp.add_argument("--out", help="write JSON here instead of stdout")

    s = sub.add_parser("whitehead", help="Whitehead graph, primitivity and blocking of a free-group word",
                       description="Whitehead graph of a word, the cut-vertex obstruction to primitivity, "
                                   "Whitehead's algorithm and the blocking test at a finite cutoff.")
    s.add_argument("--word", required=True, help="word in a..z with inverses A..Z, e.g. abAB")
    s.add_argument("--rank", type=_positive(int), help="free group rank (default: largest letter used)")
    s.add_argument("--blocking-cutoff", type=_positive(int), help="test blocking up to this length")
    out_flag(s)
    s.set_defaults(func=cmd_whitehead)

    s = sub.add_parser("cartan", help="Cartan and Jordan projections of a matrix",
                       description="Cartan projection (log singular values), Jordan projection "
                                   "(log eigenvalue moduli), wall margin and translation length.")
    s.add_argument("--matrix-file", required=True)
    s.add_argument("--power", type=int, default=1, help="use the N-th power of the matrix")
    out_flag(s)
    s.set_defaults(func=cmd_cartan)

    s = sub.add_parser("classify", help="Isometry type of a 3x3 matrix",
                       description="Classify an element of PGL(3, R): hyperbolic, quasi-hyperbolic, "
                                   "parabolic, elliptic, or other.")
    s.add_argument("--matrix-file", required=True)
    out_flag(s)
    s.set_defaults(func=cmd_classify)

    g = sub.add_parser("grassmann", help="Compound-matrix dynamics and total positivity",
                       description="Limit rank of matrix powers and the total positivity minor test.")
    gsub = g.add_subparsers(dest="grassmann_command", metavar="ACTION", parser_class=Parser)
    gsub.required = True
    s = gsub.add_parser("rank-classify", help="Rank of the projective limit of g^k",
                        description="Normalized singular value profile of g^k and the rank of its "
                                    "limit in projective matrix space.")
    s.add_argument("--matrix-file", required=True)
    s.add_argument("--power-cutoff", type=_positive(int), default=40)
    s.add_argument("--eps", type=_positive(float), default=1e-6)
    out_flag(s)
    s.set_defaults(func=cmd_rank_classify)
    s = gsub.add_parser("tp-test", help="Are all minors positive",
                        description="Total positivity: every minor of the matrix is positive.")
    s.add_argument("--matrix-file", required=True)
    out_flag(s)
    s.set_defaults(func=cmd_tp_test)

    a = sub.add_parser("asymptotics", help="Closed-form Cartan asymptotics in PGL(3, R)",
                       description="Cartan projections of powers of the standard parabolic and of the "
                                   "quasi-hyperbolic normal form.")
    asub = a.add_subparsers(dest="asymptotics_command", metavar="FAMILY", parser_class=Parser)
    asub.required = True
    s = asub.add_parser("parabolic", help="Gram eigenvalues and barycenter angle of parabolic powers",
                        description="For the unipotent Sym^2 [[1,1],[0,1]]: the quadratic factor of the "
                                    "Gram characteristic polynomial and the angle to the barycenter ray.")
    s.add_argument("--max-n", type=_positive(int), default=20)
    out_flag(s)
    s.set_defaults(func=cmd_parabolic)
    s = asub.add_parser("quasi-hyperbolic", help="Mu(gamma^n) and its angle to the singular ray",
                        description="Closed-form Cartan projection of quasi-hyperbolic powers and the "
                                    "angle theta_n to the singular ray.")
    s.add_argument("--alpha", type=_positive(float), default=2.0)
    s.add_argument("--max-n", type=_positive(int), default=30)
    out_flag(s)
    s.set_defaults(func=cmd_quasihyperbolic)

    s = sub.add_parser("limit-cone", help="Jordan projections of all words up to a length",
                       description="Estimate the limit cone from normalized Jordan projections; writes "
                                   "a CSV table and prints a JSON summary.")
    s.add_argument("--rep", required=True)
    s.add_argument("--max-length", type=_positive(int), default=8)
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_limit_cone)

    r = sub.add_parser("rep", help="Build or perturb representation files",
                       description="Representation files: presets and seeded random perturbation.")
    rsub = r.add_subparsers(dest="rep_command", metavar="ACTION", parser_class=Parser)
    rsub.required = True
    s = rsub.add_parser("make", help="Write a preset representation",
                        description=f"Presets: {', '.join(reps.PRESETS)}.")
    s.add_argument("--preset", required=True, nargs="+", metavar="NAME [ARG]",
                   help="preset name and its argument, e.g. punctured-torus-sym 3")
    out_flag(s)
    s.set_defaults(func=cmd_rep_make)
    s = rsub.add_parser("perturb", help="Multiply generators by exp of a random small matrix",
                        description="Each generator g becomes g expm(E), E uniform in [-eps, eps].")
    s.add_argument("--rep", required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    out_flag(s)
    s.set_defaults(func=cmd_rep_perturb)

    s = sub.add_parser("certify", help="Certify primitive stability up to a word-length cutoff",
                       description="For every primitive class up to the cutoff: loxodromic check, "
                                   "distance of the axis orbit to the invariant flat, and growth of "
                                   "the wall margin.  Exit 0 on pass, 2 on fail, 1 on error.")
    s.add_argument("--rep", required=True)
    s.add_argument("--max-length", type=_positive(int), default=8)
    s.add_argument("--basepoint", default="identity", help="'identity' or a JSON matrix file")
    s.add_argument("--tol-eig", type=_positive(float), default=1e-6)
    s.add_argument("--tol-slope", type=_positive(float), default=1e-6)
    s.add_argument("--flat-tol", type=_positive(float), default=1e-8)
    s.add_argument("--threads", type=_positive(int), help="worker processes (default: $PRIMSTAB_THREADS or 1)")
    s.add_argument("--csv", help="also write the class table as CSV")
    out_flag(s)
    s.set_defaults(func=cmd_certify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "preset", None):
        args.preset, args.preset_args = args.preset[0], args.preset[1:]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"primstab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"primstab: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
