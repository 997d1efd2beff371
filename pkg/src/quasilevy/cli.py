"""Command-line front end over the library's stable file formats.

Exit codes: 0 for an affirmative definitive outcome, 1 for a definitive
negative outcome or any hard error, 2 for undecided/inconclusive
verdicts so scripts can branch on genuinely open cases.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import jsonio
from .calculus import ExpSeriesParams, conv_power, is_infinitely_divisible, reconstruct_law
from .charfn import SeparationParams, certify_separation, cf_eval
from .errors import NotSeparated, ParseError, QuasiLevyError, StepTooCoarse, ZeroOnPath
from .limits import (
    LawSequence,
    Thresholds,
    check_convergence,
    check_relative_compactness,
    check_stochastic_compactness,
    triplet_of,
    tv_distance,
)
from .measures import DiscreteLaw
from .spectral import TripletParams, distinguished_log

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNDECIDED = 2


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"environment variable {name}={raw!r} is not a number") from None


def emit_curves(law: DiscreteLaw, t_min: float, t_max: float, samples: int, zero_tol: float = 1e-10):
    """Rows (t, Re f, Im f, |f|, Arg f) with the continuous-phase Arg.

    The phase is continued from t = 0 regardless of t_min, so the Arg
    column is the distinguished-log phase, not a principal value.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if t_min < 0 or t_max <= t_min:
        raise ValueError("need 0 <= t_min < t_max")
    ts_out = np.linspace(t_min, t_max, samples)
    amp = sum(float(m) * abs(float(law.basis.value(c))) for c, m in law.atoms.items())
    step = min(0.05, 0.3 / max(amp, 1e-9))
    for _ in range(16):
        dense = np.unique(np.concatenate([np.arange(0.0, t_max + step, step), ts_out]))
        vals = cf_eval(law, dense)
        if float(np.min(np.abs(vals))) < zero_tol:
            raise ZeroOnPath("the characteristic function dips below the zero tolerance")
        try:
            logs = distinguished_log(vals, zero_tol=zero_tol)
            break
        except StepTooCoarse:
            if float(np.min(np.abs(vals))) < 1e-6:
                raise ZeroOnPath(
                    "phase cannot be continued: the characteristic function "
                    "passes too close to zero"
                ) from None
            step *= 0.5
    else:
        raise StepTooCoarse("curve sampling did not stabilize")
    idx = np.searchsorted(dense, ts_out)
    rows = []
    for t, i in zip(ts_out, idx):
        v = vals[i]
        rows.append((float(t), float(v.real), float(v.imag), float(abs(v)), float(logs[i].imag)))
    return rows


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_csv(path, header, rows) -> None:
    def dump(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])

    if path is None:
        dump(sys.stdout)
    else:
        with open(path, "w") as fh:
            dump(fh)


def _load_law(path: str) -> DiscreteLaw:
    return jsonio.law_from_json(jsonio.load(path))


def _separation_params(args) -> SeparationParams:
    return SeparationParams(
        max_depth=args.max_depth,
        zero_tol=args.zero_tol,
        target_gap=args.target_gap,
    )


def _triplet_params(args) -> TripletParams:
    return TripletParams(n_init=args.n_init, tol=args.tol)


def _thresholds(args) -> Thresholds:
    return Thresholds(final_tol=args.final_tol, growth_factor=args.growth_factor)


# --- subcommand handlers ------------------------------------------------------


def _cmd_check_s(args) -> int:
    law = _load_law(args.law)
    cert = certify_separation(law, _separation_params(args))
    _write_text(args.out, jsonio.dumps(jsonio.certificate_to_json(cert)))
    if args.curves:
        try:
            rows = [(t, a, g) for t, _, _, a, g in emit_curves(law, 0.0, args.t_max, args.samples)]
            _write_csv(args.curves, ["t", "abs_f", "arg_f"], rows)
        except (ZeroOnPath, StepTooCoarse) as exc:
            print(f"curves skipped: {exc}", file=sys.stderr)
    if cert.verdict == "certified":
        return EXIT_OK
    if cert.verdict == "zero_found":
        return EXIT_NEGATIVE
    return EXIT_UNDECIDED


def _cmd_triplet(args) -> int:
    law = _load_law(args.law)
    trip = triplet_of(law, _triplet_params(args))
    _write_text(args.out, jsonio.dumps(jsonio.triplet_to_json(trip)))
    if args.emit_curves:
        rows = [(t, re, im, g) for t, re, im, _, g in emit_curves(law, 0.0, args.t_max, args.samples)]
        _write_csv(args.emit_curves, ["t", "re_f", "im_f", "arg_f"], rows)
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    trip = jsonio.triplet_from_json(jsonio.load(args.triplet))
    law, report = reconstruct_law(trip, ExpSeriesParams(tol=args.series_tol))
    _write_text(args.out, jsonio.dumps(jsonio.law_to_json(law)))
    print(
        f"reconstruction: series_residual={report.series_residual!r} "
        f"clamped={report.clamped_negative_mass!r} error_bound={report.error_bound!r}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_power(args) -> int:
    trip = jsonio.triplet_from_json(jsonio.load(args.triplet))
    try:
        s = Fraction(args.s)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"--s expects a number or fraction, got {args.s!r}") from None
    result = conv_power(trip, s, ExpSeriesParams(tol=args.series_tol))
    _write_text(args.out, jsonio.dumps(jsonio.power_result_to_json(result)))
    return EXIT_OK


def _cmd_classify_id(args) -> int:
    trip = jsonio.triplet_from_json(jsonio.load(args.triplet))
    verdict = is_infinitely_divisible(trip, args.id_tol)
    _write_text(args.out, jsonio.dumps({"infinitely_divisible": verdict, "tol": args.id_tol}))
    return EXIT_OK


def _cmd_tv(args) -> int:
    a = _load_law(args.a)
    b = _load_law(args.b)
    _write_text(args.out, repr(tv_distance(a, b)) + "\n")
    return EXIT_OK


def _trend_rows(verdict) -> list:
    return [
        (n + 1, d, t, e)
        for n, (d, t, e) in enumerate(
            zip(verdict.ell1_distances, verdict.tv_distances, verdict.ell1_norms)
        )
    ]


def _cmd_converge_check(args) -> int:
    limit = _load_law(args.limit)
    members = [_load_law(p) for p in args.members]
    seq = LawSequence(tuple(members), limit=limit)
    verdict = check_convergence(seq, _thresholds(args), _triplet_params(args))
    _write_text(args.out, jsonio.dumps(jsonio.convergence_to_json(verdict)))
    print(f"{'n':>4} {'l1 distance':>14} {'tv distance':>14}", file=sys.stderr)
    for n, (d, t) in enumerate(zip(verdict.ell1_distances, verdict.tv_distances), start=1):
        print(f"{n:>4} {d:>14.6e} {t:>14.6e}", file=sys.stderr)
    if args.emit_trends:
        _write_csv(
            args.emit_trends,
            ["n", "ell1_distance", "tv_distance", "ell1_norm"],
            _trend_rows(verdict),
        )
    return {"holds": EXIT_OK, "fails": EXIT_NEGATIVE}.get(verdict.verdict, EXIT_UNDECIDED)


def _cmd_compact_check(args) -> int:
    members = [_load_law(p) for p in args.members]
    seq = LawSequence(tuple(members))
    report = check_relative_compactness(seq, thresholds=_thresholds(args), params=_triplet_params(args))
    _write_text(args.out, jsonio.dumps(jsonio.relative_report_to_json(report)))
    print(f"{'n':>4} {'sum |lambda|':>14}", file=sys.stderr)
    for n, e in enumerate(report.ell1_norms, start=1):
        print(f"{n:>4} {e:>14.6e}", file=sys.stderr)
    if args.emit_trends:
        _write_csv(
            args.emit_trends,
            ["n", "ell1_norm"],
            [(n + 1, e) for n, e in enumerate(report.ell1_norms)],
        )
    return EXIT_OK if report.all_pass else EXIT_NEGATIVE


def _cmd_stoch_check(args) -> int:
    members = [_load_law(p) for p in args.members]
    seq = LawSequence(tuple(members))
    report = check_stochastic_compactness(seq, thresholds=_thresholds(args), params=_triplet_params(args))
    _write_text(args.out, jsonio.dumps(jsonio.stochastic_report_to_json(report)))
    return EXIT_OK if report.passes else EXIT_NEGATIVE


def _cmd_curves(args) -> int:
    law = _load_law(args.law)
    rows = emit_curves(law, args.t_min, args.t_max, args.samples)
    _write_csv(args.out, ["t", "re_f", "im_f", "abs_f", "arg_f"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasilevy",
        description="Spectral representations of discrete probability laws",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker hint; results are deterministic regardless")
    sub = parser.add_subparsers(dest="command", required=True)

    tol_default = _env_float("QUASILEVY_TOL", 1e-10)
    zero_tol_default = _env_float("QUASILEVY_ZERO_TOL", 1e-10)
    series_tol_default = _env_float("QUASILEVY_SERIES_TOL", 1e-12)

    def add_out(p):
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("check-s", help="certify or refute separation from zero")
    p.add_argument("law")
    p.add_argument("--max-depth", type=int, default=40)
    p.add_argument("--zero-tol", type=float, default=zero_tol_default)
    p.add_argument("--target-gap", type=float, default=0.9)
    p.add_argument("--curves", default=None, help="also write a (t, |f|, Arg f) CSV here")
    p.add_argument("--t-max", type=float, default=2 * math.pi)
    p.add_argument("--samples", type=int, default=256)
    add_out(p)
    p.set_defaults(handler=_cmd_check_s)

    p = sub.add_parser("triplet", help="extract the spectral triplet of a law")
    p.add_argument("law")
    p.add_argument("--tol", type=float, default=tol_default)
    p.add_argument("--n-init", type=int, default=None)
    p.add_argument("--emit-curves", default=None, help="write a (t, Re f, Im f, Arg f) CSV here")
    p.add_argument("--t-max", type=float, default=2 * math.pi)
    p.add_argument("--samples", type=int, default=256)
    add_out(p)
    p.set_defaults(handler=_cmd_triplet)

    p = sub.add_parser("reconstruct", help="rebuild the law from a triplet")
    p.add_argument("triplet")
    p.add_argument("--series-tol", type=float, default=series_tol_default)
    add_out(p)
    p.set_defaults(handler=_cmd_reconstruct)

    p = sub.add_parser("power", help="fractional convolution power through the triplet")
    p.add_argument("triplet")
    p.add_argument("--s", required=True, help="nonnegative power, e.g. 0.5 or 1/2")
    p.add_argument("--series-tol", type=float, default=series_tol_default)
    add_out(p)
    p.set_defaults(handler=_cmd_power)

    p = sub.add_parser("classify-id", help="decide infinite divisibility from a triplet")
    p.add_argument("triplet")
    p.add_argument("--id-tol", type=float, default=1e-9)
    add_out(p)
    p.set_defaults(handler=_cmd_classify_id)

    p = sub.add_parser("tv", help="total variation distance between two laws")
    p.add_argument("a")
    p.add_argument("b")
    add_out(p)
    p.set_defaults(handler=_cmd_tv)

    def add_family_opts(p):
        p.add_argument("--tol", type=float, default=tol_default)
        p.add_argument("--n-init", type=int, default=None)
        p.add_argument("--final-tol", type=float, default=1e-6)
        p.add_argument("--growth-factor", type=float, default=2.0)
        p.add_argument("--emit-trends", default=None, help="write per-member trend CSV here")
        add_out(p)

    p = sub.add_parser("converge-check", help="convergence-in-variation criterion on a prefix")
    p.add_argument("--limit", required=True)
    p.add_argument("members", nargs="+")
    add_family_opts(p)
    p.set_defaults(handler=_cmd_converge_check)

    p = sub.add_parser("compact-check", help="relative-compactness conditions on a prefix")
    p.add_argument("members", nargs="+")
    add_family_opts(p)
    p.set_defaults(handler=_cmd_compact_check)

    p = sub.add_parser("stoch-check", help="stochastic-compactness condition on a prefix")
    p.add_argument("members", nargs="+")
    add_family_opts(p)
    p.set_defaults(handler=_cmd_stoch_check)

    p = sub.add_parser("curves", help="CSV of (t, Re f, Im f, |f|, Arg f)")
    p.add_argument("law")
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=2 * math.pi)
    p.add_argument("--samples", type=int, default=256)
    add_out(p)
    p.set_defaults(handler=_cmd_curves)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except NotSeparated as exc:
        doc = {"error": "NotSeparated", "message": str(exc)}
        if exc.certificate is not None:
            doc["certificate"] = jsonio.certificate_to_json(exc.certificate)
        print(jsonio.dumps(doc), file=sys.stderr, end="")
        if exc.certificate is not None and exc.certificate.verdict == "undecided":
            return EXIT_UNDECIDED
        return EXIT_NEGATIVE
    except QuasiLevyError as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        print(jsonio.dumps(doc), file=sys.stderr, end="")
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
