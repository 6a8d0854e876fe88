"""Command-line front end.

Subcommands: ``run``, ``pgf``, ``sweep``, ``guarantee``, ``constant``,
``simulate`` and ``plotdata``.  Every exact quantity is written as decimal
digit strings (numerator, denominator and a rounded rendering), never as a
binary float.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable

from . import __version__
from .engine import FixedRounds, GameSpec, InvalidStart, TailTarget, rounds_to_guarantee, run, truncated_pgf
from .montecarlo import simulate
from .polyring import DieSpec, format_poly_text
from .predicates import parse_predicate
from .stats import (
    FIELDS,
    KURTOSIS_CONVENTION,
    SKEWNESS_CONVENTION,
    NoHits,
    Summary,
    Surd,
    estimate_constant,
    render_decimal,
    summarize,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_START = 3
EXIT_NO_HITS = 4
EXIT_NOT_CONVERGED = 5
EXIT_PARTIAL = 6

DEFAULT_DIGITS = 30
DEFAULT_RMAX = 10000


class UsageError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """``"6"``, ``"2..20"`` (inclusive) or ``"0,10,100"``; parts may be mixed."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        a, sep, b = part.partition("..")
        if sep:
            lo, hi = int(a), int(b)
            if hi < lo:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def exact(x: Fraction, digits: int) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator), "decimal": render_decimal(x, digits)}


def _serialize(v, digits: int):
    if v is None:
        return None
    if isinstance(v, Surd):
        return {
            "sign": v.sign,
            "square": {"num": str(v.square.numerator), "den": str(v.square.denominator)},
            "decimal": v.decimal(digits),
        }
    return exact(v, digits)


def _meta(extra: dict | None = None) -> dict:
    meta = {
        "version": __version__,
        "skewness": SKEWNESS_CONVENTION,
        "kurtosis": KURTOSIS_CONVENTION,
        "location": "L_abs is the absolute final sum; L_rel = L_abs - init",
        "moments": "conditional on the game ending within R rounds",
    }
    if extra:
        meta.update(extra)
    return meta


def summary_payload(spec: GameSpec, summary: Summary, status: str) -> dict:
    out = {"spec": spec.describe(), "R": summary.R}
    for name in FIELDS:
        out[name] = _serialize(summary.value(name), summary.digits)
    out["status"] = status
    out["meta"] = _meta(
        {
            "digits": summary.digits,
            "W": spec.die.W,
            "partial_E_T": exact(summary.partial_E_T, summary.digits),
        }
    )
    return out


def error_payload(spec: GameSpec | None, status: str, message: str) -> dict:
    return {
        "spec": spec.describe() if spec else None,
        "status": status,
        "error": {"code": status, "message": message},
        "meta": _meta(),
    }


# ---- spec construction ---------------------------------------------------


def die_from_args(args) -> DieSpec:
    if (args.faces is None) == (args.die is None):
        raise UsageError("give exactly one of --faces and --die")
    if args.die is not None:
        return DieSpec.parse(args.die)
    return DieSpec.fair(int(args.faces))


def stop_from_args(args):
    rounds = getattr(args, "rounds", None)
    eps = getattr(args, "eps", None)
    if (rounds is None) == (eps is None):
        raise UsageError("give exactly one of --rounds and --eps")
    if rounds is not None:
        return FixedRounds(rounds)
    return TailTarget(parse_fraction(eps), args.rmax)


def spec_from_args(args, stop=None) -> GameSpec:
    return GameSpec(die_from_args(args), parse_predicate(args.predicate), args.init, stop, args.allow_trivial_start)


# ---- output ----------------------------------------------------------------


def render_rows(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: "" if row.get(c) is None else row[c] for c in columns})
    return buf.getvalue()


def _flat(payload: dict) -> dict:
    """Decimal renderings of a summary payload, for CSV and text output."""
    flat = {"R": payload.get("R"), "status": payload["status"]}
    for name in FIELDS:
        v = payload.get(name)
        flat[name] = v["decimal"] if isinstance(v, dict) else v
    return flat


def emit(payload: dict, fmt: str, columns: list[str] | None = None) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    flat = payload if columns else _flat(payload)
    columns = columns or list(flat)
    if fmt == "csv":
        return render_rows([flat], columns)
    return "".join(f"{c}: {'' if flat.get(c) is None else flat[c]}\n" for c in columns)


# ---- commands ----------------------------------------------------------------
# Each returns (text, exit_code).


def cmd_run(args) -> tuple[str, int]:
    spec = spec_from_args(args, stop=stop_from_args(args))
    trace = run(spec)
    try:
        summary = summarize(trace, args.digits)
    except NoHits as exc:
        if not trace.converged:
            return emit(error_payload(spec, "not-converged", str(exc)), args.format), EXIT_NOT_CONVERGED
        return emit(error_payload(spec, "no-hits", str(exc)), args.format), EXIT_NO_HITS
    status = "ok" if trace.converged else "not-converged"
    code = EXIT_OK if trace.converged else EXIT_NOT_CONVERGED
    payload = summary_payload(spec, summary, status)
    if args.format == "json":
        return emit(payload, "json"), code
    columns = ["R", *FIELDS, "status"]
    return emit(_flat(payload), args.format, columns), code


def cmd_pgf(args) -> tuple[str, int]:
    spec = spec_from_args(args, stop=FixedRounds(args.rounds))
    polys = truncated_pgf(spec, args.rounds)
    if args.format == "json":
        payload = {
            "spec": spec.describe(),
            "W": spec.die.W,
            "rounds": [
                {"k": k, "terms": [[e, str(c), p.scale] for e, c in p.terms()]} for k, p in polys
            ],
            "status": "ok",
        }
        return json.dumps(payload, indent=2) + "\n", EXIT_OK
    return format_poly_text(polys, spec.die.W), EXIT_OK


SWEEP_COLUMNS = ["faces", "R", "tail", "M", "var", "skew", "kurt", "status"]


def sweep_row(faces: int, predicate: str, init: int, eps: Fraction, rmax: int, digits: int, allow: bool) -> dict:
    spec = GameSpec(DieSpec.fair(faces), parse_predicate(predicate), init, None, allow)
    row = {"faces": faces}
    try:
        g = rounds_to_guarantee(spec, eps, rmax)
        s = summarize(g.trace, digits)
    except InvalidStart as exc:
        return {**row, "status": "invalid-start", "error": str(exc)}
    except NoHits:
        return {**row, "R": rmax, "status": "not-converged"}
    row.update(
        R=g.R,
        tail=s.decimal("tail"),
        M=s.decimal("M"),
        var=s.decimal("var_T"),
        skew=s.decimal("skew_T"),
        kurt=s.decimal("kurt_T"),
        status="ok" if g.converged else "not-converged",
    )
    return row


def _map(fn: Callable, jobs: list[tuple], workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, *zip(*jobs)))
    return [fn(*job) for job in jobs]


def cmd_sweep(args) -> tuple[str, int]:
    faces = parse_range(args.faces)
    eps = parse_fraction(args.eps)
    jobs = [(n, args.predicate, args.init, eps, args.rmax, args.digits, args.allow_trivial_start) for n in faces]
    rows = sorted(_map(sweep_row, jobs, args.jobs), key=lambda r: r["faces"])
    code = EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_PARTIAL
    if args.format == "json":
        payload = {
            "predicate": parse_predicate(args.predicate).name,
            "init": args.init,
            "eps": str(eps),
            "rows": rows,
            "meta": _meta({"digits": args.digits}),
        }
        return json.dumps(payload, indent=2) + "\n", code
    return render_rows(rows, SWEEP_COLUMNS), code


def cmd_guarantee(args) -> tuple[str, int]:
    spec = spec_from_args(args)
    eps = parse_fraction(args.eps)
    g = rounds_to_guarantee(spec, eps, args.rmax)
    status = "ok" if g.converged else "not-converged"
    payload = {
        "spec": spec.describe(),
        "eps": {"num": str(eps.numerator), "den": str(eps.denominator)},
        "R": g.R,
        "survivor_mass": exact(g.survivor_mass, args.digits),
        "status": status,
        "meta": _meta({"rmax": args.rmax}),
    }
    code = EXIT_OK if g.converged else EXIT_NOT_CONVERGED
    if args.format == "json":
        return emit(payload, "json"), code
    flat = {"R": g.R, "survivor_mass": payload["survivor_mass"]["decimal"], "status": status}
    return emit(flat, args.format, list(flat)), code


def cmd_constant(args) -> tuple[str, int]:
    spec = spec_from_args(args)
    try:
        est = estimate_constant(spec, args.digits, r0=args.r0, quantity=args.quantity, r_cap=args.rcap)
    except NoHits as exc:
        return emit(error_payload(spec, "no-hits", str(exc)), args.format), EXIT_NO_HITS
    status = "ok" if est.converged else "not-converged"
    code = EXIT_OK if est.converged else EXIT_NOT_CONVERGED
    if args.format == "text":
        return est.value + "\n", code
    payload = {
        "spec": spec.describe(),
        "quantity": args.quantity,
        "value": est.value,
        "R": est.R,
        "R_check": est.R_check,
        "agreeing_digits": est.agreeing_digits,
        "status": status,
        "meta": _meta({"digits": args.digits, "r0": args.r0, "rcap": args.rcap}),
    }
    if args.format == "csv":
        return emit(payload, "csv", ["quantity", "value", "R", "R_check", "agreeing_digits", "status"]), code
    return emit(payload, "json"), code


def cmd_simulate(args) -> tuple[str, int]:
    spec = spec_from_args(args)
    result = simulate(spec, args.trials, args.cap, args.seed, workers=args.workers)
    payload = {"spec": spec.describe(), **result.as_dict(), "status": "ok"}
    if args.format == "json":
        return emit(payload, "json"), EXIT_OK
    columns = ["trials", "hits", "hit_fraction", "mean_T", "var_T", "std_error_T", "mean_N", "cap", "seed", "status"]
    return emit(payload, args.format, columns), EXIT_OK


PLOT_COLUMNS = ["faces", "init", "M", "R", "status"]


def plot_cell(faces: int, init: int, predicate: str, stop, digits: int) -> dict:
    spec = GameSpec(DieSpec.fair(faces), parse_predicate(predicate), init, stop)
    row = {"faces": faces, "init": init}
    try:
        trace = run(spec)
        s = summarize(trace, digits)
    except InvalidStart:
        return {**row, "status": "invalid-start"}
    except NoHits:
        return {**row, "status": "no-hits"}
    return {**row, "M": s.decimal("M"), "R": trace.R, "status": "ok" if trace.converged else "not-converged"}


def cmd_plotdata(args) -> tuple[str, int]:
    stop = stop_from_args(args)
    jobs = [
        (n, x, args.predicate, stop, args.digits)
        for n in parse_range(args.faces)
        for x in parse_range(args.init)
    ]
    rows = sorted(_map(plot_cell, jobs, args.jobs), key=lambda r: (r["faces"], r["init"]))
    code = EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_PARTIAL
    if args.format == "json":
        return json.dumps({"rows": rows, "meta": _meta({"digits": args.digits})}, indent=2) + "\n", code
    return render_rows(rows, PLOT_COLUMNS), code


# ---- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicehit",
        description="Exact hitting-time statistics for 'roll until the running sum is special' games.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, die=True, faces_help="number of faces of a fair die", fmt="json", init_type=int):
        if die:
            g = p.add_argument_group("die (exactly one)")
            g.add_argument("--faces", type=int, help=faces_help)
            g.add_argument("--die", help="loaded die as value:weight pairs, e.g. 1:2,2:1,3:1")
        p.add_argument("--predicate", default="prime", help="prime, semiprime, distinct-prime-product:K, perfect-square, odd, even, never")
        p.add_argument("--init", type=init_type, default=0 if init_type is int else "0", help="starting sum")
        p.add_argument("--digits", type=int, default=DEFAULT_DIGITS, help="significant digits in decimal renderings")
        p.add_argument("--format", choices=["json", "csv", "text"], default=fmt)
        p.add_argument("--output", "-o", help="write to this file instead of stdout")
        p.add_argument("--allow-trivial-start", action="store_true", help="permit a start that already satisfies the predicate")

    def stop(p, required_rounds=False):
        if required_rounds:
            p.add_argument("--rounds", type=int, required=True, help="number of rounds R")
            return
        p.add_argument("--rounds", type=int, help="truncate at exactly R rounds")
        p.add_argument("--eps", help="stop once the survivor mass is <= EPS (e.g. 1e-7 or 1/2)")
        p.add_argument("--rmax", type=int, default=DEFAULT_RMAX, help="round cap for --eps")

    p = sub.add_parser("run", help="summary statistics of one game")
    common(p)
    stop(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pgf", help="dump the truncated bivariate PGF, one inductee polynomial per round")
    common(p, fmt="text")
    stop(p, required_rounds=True)
    p.set_defaults(func=cmd_pgf)

    p = sub.add_parser("sweep", help="guarantee rounds and summary for a range of fair dice")
    p.add_argument("--faces", required=True, help="face counts, e.g. 2..40")
    common(p, die=False, fmt="csv")
    p.add_argument("--eps", required=True)
    p.add_argument("--rmax", type=int, default=DEFAULT_RMAX)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("guarantee", help="smallest R with survivor mass <= eps")
    common(p)
    p.add_argument("--eps", required=True)
    p.add_argument("--rmax", type=int, default=DEFAULT_RMAX)
    p.set_defaults(func=cmd_guarantee)

    p = sub.add_parser("constant", help="agreeing-prefix estimate of lim M_R")
    common(p, fmt="text")
    p.set_defaults(digits=20)
    p.add_argument("--r0", type=int, default=200, help="first truncation; doubled until stable")
    p.add_argument("--rcap", type=int, default=12800, help="largest truncation tried")
    p.add_argument("--quantity", choices=["M", "L_abs", "L_rel"], default="M")
    p.set_defaults(func=cmd_constant)

    p = sub.add_parser("simulate", help="seeded Monte Carlo check")
    common(p)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--cap", type=int, default=200, help="per-trial round cap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plotdata", help="faces x init grid of M as CSV")
    p.add_argument("--faces", required=True, help="face counts, e.g. 2..20")
    common(p, die=False, fmt="csv", init_type=str)
    stop(p)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = args.func(args)
    except InvalidStart as exc:
        if args.format != "json":
            print(f"dicehit: invalid start: {exc}", file=sys.stderr)
            return EXIT_INVALID_START
        text, code = emit(error_payload(None, "invalid-start", str(exc)), "json"), EXIT_INVALID_START
    except (UsageError, ValueError) as exc:
        print(f"dicehit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
