"""Command-line front end: ``wvn {set,synth,match,verify,counterexample,selftest}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import closed_set, counterexample, equivalence, matching, spectra

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class InputError(Exception):
    pass


def _load_json(path: str):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc


def _load_set(path: str) -> closed_set.ClosedSet:
    try:
        return closed_set.validate(_load_json(path))
    except closed_set.ClosedSetError as exc:
        raise InputError(f"{path}: {type(exc).__name__}: {exc}") from exc


def _load_operator(path: str) -> spectra.DiagonalOperator:
    if path.endswith(".csv"):
        return spectra.truncation_from_csv(Path(path).read_text(), name=Path(path).stem)
    return spectra.truncation_from_json(_load_json(path))


def _checkpoints(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from exc
    if not values or values[0] < 1 or any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError("checkpoints must be positive and strictly increasing")
    return values


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return value


def _emit(args, doc, table=None) -> None:
    if args.format == "csv":
        if table is None:
            raise InputError("this command has no tabular output; use --format json")
        text = table
    else:
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def cmd_set(args) -> int:
    M = _load_set(args.spec)
    verdict = M.d_M()
    doc = {"name": M.name, **verdict.to_json()}
    table = _rows_csv(["n", "truncated_defect"], doc["convergence"])
    _emit(args, doc, table)
    return EXIT_OK


def cmd_synth(args) -> int:
    M = _load_set(args.spec)
    outliers = [float(v) for v in args.outliers.split(",")] if args.outliers else []
    rule = None
    if args.column_anchor is not None:
        anchor, power = args.column_anchor, args.column_power
        rule = lambda k: anchor + float(2 ** (k - 1)) ** -power  # noqa: E731
    op = spectra.synth_with_ess_spectrum(M, outliers, rule, name=args.name)
    if args.format == "csv":
        _emit(args, None, spectra.truncation_to_csv(op, args.N))
    else:
        _emit(args, spectra.truncation_to_json(op, args.N))
    return EXIT_OK


def cmd_match(args) -> int:
    xs = _load_operator(args.a)
    ys = _load_operator(args.b)
    n = min(xs.meta["stored"], ys.meta["stored"]) if args.N is None else args.N
    method = {"bottleneck": matching.bottleneck_match, "sorted": matching.sorted_match,
              "brute-force": matching.brute_force_match}[args.method]
    res = method(xs.truncation(n), ys.truncation(n))
    table = _rows_csv(["index", "matched_index", "deviation"],
                      zip(range(1, n + 1), (res.permutation + 1).tolist(), res.deviations.tolist()))
    _emit(args, res.to_json(), table)
    return EXIT_OK


def _certificate_exit(cert) -> int:
    return EXIT_OK if cert.verdict in ("equivalent-evidence", "obstructed") else EXIT_INCONCLUSIVE


def cmd_verify(args) -> int:
    if args.b is None:
        pair = counterexample.CounterexamplePair.from_json(_load_json(args.a))
        A, B, M = pair.A, pair.B, pair.M
    else:
        if args.set is None:
            raise InputError("verifying two operators needs --set")
        A, B, M = _load_operator(args.a), _load_operator(args.b), _load_set(args.set)
        stored = min(A.meta["stored"], B.meta["stored"])
        if args.checkpoints[-1] > stored:
            raise InputError(f"largest checkpoint {args.checkpoints[-1]} exceeds the {stored} stored eigenvalues")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", equivalence.SpectrumMismatch)
        cert = equivalence.certify_equivalence(A, B, M, args.checkpoints, args.epsilon)
    _emit(args, cert.to_json(), cert.to_csv())
    return _certificate_exit(cert)


def cmd_counterexample(args) -> int:
    M = _load_set(args.spec)
    pair = counterexample.build_counterexample(M, args.K)
    report = counterexample.separation_check(pair, min(args.K, 64))
    cert = counterexample.obstruction_bound(pair, args.checkpoints)
    doc = {"pair": pair.to_json(), "separation": report.to_json(), "certificate": cert.to_json()}
    _emit(args, doc, cert.to_csv())
    return _certificate_exit(cert)


def cmd_selftest(args) -> int:
    rng = np.random.default_rng(args.seed)
    lines = []

    def record(name, ok):
        lines.append((name, bool(ok)))

    ok = True
    for n in range(2, 8):
        for _ in range(30):
            xs, ys = rng.normal(size=n), rng.normal(size=n)
            brute = matching.brute_force_match(xs, ys).bottleneck
            ok &= matching.bottleneck_match(xs, ys).bottleneck == brute
            ok &= matching.sorted_match(xs, ys).bottleneck == brute
    record("bottleneck matching vs exhaustive oracle", ok)
    record("pairing bijection on 1..2^16",
           all(spectra.pairing_encode(*spectra.pairing_decode(n)) == n for n in range(1, 1 << 16)))
    worst = 0.0
    for _ in range(10):
        X = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
        H = (X + X.conj().T) / 2
        e, U = spectra.jacobi_diagonalize(H)
        worst = max(worst, np.linalg.norm(U @ np.diag(e) @ U.conj().T - H) / np.linalg.norm(H))
    record("jacobi reconstruction < 1e-10", worst < 1e-10)
    M = closed_set.validate({"finite_gaps": [[0, 4]]})
    record("distance oracle", M.distance(1) == 1 and M.distance(2) == 2 and M.distance(-3) == 0)
    for name, passed in lines:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return EXIT_OK if all(p for _, p in lines) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--checkpoints", type=_checkpoints, default=equivalence.DEFAULT_CHECKPOINTS,
                        help="comma-separated truncation sizes (default 256,1024,4096)")
    common.add_argument("--epsilon", type=_positive_float, default=equivalence.DEFAULT_EPSILON)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized self-tests")

    parser = argparse.ArgumentParser(prog="wvn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("set", parents=[common], help="classify a closed set")
    p.add_argument("spec")
    p.set_defaults(func=cmd_set)

    p = sub.add_parser("synth", parents=[common], help="diagonal operator with essential spectrum M")
    p.add_argument("spec")
    p.add_argument("--N", type=int, default=64, help="truncation length")
    p.add_argument("--outliers", help="comma-separated values for slots <k,1>")
    p.add_argument("--column-anchor", type=float,
                   help="fill remaining slots <k,1> with anchor + n**-power, n = 2**(k-1)")
    p.add_argument("--column-power", type=float, default=1.0)
    p.add_argument("--name")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("match", parents=[common], help="bottleneck-match two truncations")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--N", type=int)
    p.add_argument("--method", choices=("bottleneck", "sorted", "brute-force"), default="bottleneck")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("verify", parents=[common], help="certify a pair (pair.json, or A B --set M)")
    p.add_argument("a")
    p.add_argument("b", nargs="?")
    p.add_argument("--set")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterexample", parents=[common], help="build and certify the obstructed pair")
    p.add_argument("spec")
    p.add_argument("--K", type=int, default=64, help="number of outlier slots")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("selftest", parents=[common], help="run the oracle checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 means "inconclusive" here
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (InputError, OSError, ValueError, KeyError, ArithmeticError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
