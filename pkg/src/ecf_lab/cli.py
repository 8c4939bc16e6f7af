"""``ecf-lab`` command-line front end.

Every subcommand is reproducible from its arguments and ``--seed``; JSON
output embeds the configuration and a ``git describe`` string.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .ecf import EcfStream, Status, ecf_expand, ecf_expansion, evaluate, sigma_encode
from .errors import DomainError, EcfError, PrecisionExhausted
from .euclid import euclid_expand, euclid_to_ecf, evaluate_euclid
from .reals import default_precision_bits, parse_value
from .symbols import format_digits, format_sigma

SCHEMA = 1
EXIT_USAGE = 2
EXIT_PRECISION = 3


def _git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def _count(text: str) -> int:
    """Integer argument that also accepts ``1e5``."""
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if v.denominator != 1 or v < 0:
        raise argparse.ArgumentTypeError(f"not a non-negative integer: {text!r}")
    return int(v)


def _scale(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _bits(text: str) -> int:
    v = _count(text)
    if v < 128:
        raise argparse.ArgumentTypeError("precision bits must be at least 128")
    return v


def _config(args) -> dict:
    skip = {"func"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, list):
            v = [str(e) if isinstance(e, Fraction) else e for e in v]
        cfg[k] = str(v) if isinstance(v, Fraction) else v
    return cfg


def _envelope(args, payload: dict) -> dict:
    return {"schema": SCHEMA, "version": _git_describe(), "config": _config(args), **payload}


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict):
    _emit(args, json.dumps(_envelope(args, payload), indent=2, sort_keys=True) + "\n")


def _emit_csv(args, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _emit(args, buf.getvalue())


# -- subcommands -----------------------------------------------------------------

def cmd_expand(args) -> int:
    source = parse_value(args.value)
    stream = EcfStream(source, precision_bits=args.precision_bits)
    digits = ecf_expand(stream, args.n)
    more = stream.status is Status.ACTIVE or stream.status is Status.PERIODIC_TAIL
    symbols, rest = sigma_encode(digits)
    if args.format == "sigma":
        text = format_sigma(symbols)
        if rest:
            text += f" [{len(rest)} bar{'s' if len(rest) > 1 else ''}]"
        if more:
            text += " …"
        _emit(args, text.strip() + "\n")
    elif args.format == "compact":
        _emit(args, format_digits(digits) + (" …" if more else "") + "\n")
    elif args.format == "csv":
        _emit_csv(args, ["index", "k", "xi"], [(i, d.k, d.xi) for i, d in enumerate(digits, 1)])
    else:
        _emit_json(args, {
            "value": args.value,
            "status": stream.status.value,
            "digits": [d.to_json() for d in digits],
            "sigma": [str(s) for s in symbols],
            "pending_bars": len(rest),
        })
    return 0


def _read_rationals(args) -> list:
    if args.rational is not None:
        return [args.rational]
    lines = Path(args.file).read_text().splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def cmd_convert(args) -> int:
    rows = []
    all_ok = True
    for text in _read_rationals(args):
        try:
            x = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"cannot parse rational {text!r}")
        a = euclid_expand(x)
        digits, status = euclid_to_ecf(a, with_status=True)
        tail = 1 if status is Status.PERIODIC_TAIL else 0
        back = evaluate(digits, tail) if digits else Fraction(1)
        direct, _ = ecf_expansion(x)
        ok = back == x == evaluate_euclid(a) and digits == direct
        all_ok &= ok
        rows.append((text, a, digits, status, ok))
    if args.format == "json":
        _emit_json(args, {"results": [
            {"rational": t, "euclid": a, "ecf": [d.to_json() for d in d_],
             "status": s.value, "round_trip": ok}
            for t, a, d_, s, ok in rows
        ]})
    elif args.format == "csv":
        _emit_csv(args, ["rational", "euclid", "ecf", "status", "round_trip"],
                  [(t, " ".join(map(str, a)), format_digits(d_, "pairs"), s.value, ok)
                   for t, a, d_, s, ok in rows])
    else:
        lines = []
        for t, a, d_, s, ok in rows:
            ecf = format_digits(d_, "pairs")
            if s is Status.PERIODIC_TAIL:
                ecf += "(1,-1)…"
            lines.append(f"{t}: euclid [{','.join(map(str, a))}]  ECF {ecf}  "
                         f"round-trip {'OK' if ok else 'FAILED'}")
        _emit(args, "\n".join(lines) + "\n")
    return 0 if all_ok else 1


def cmd_orbit(args) -> int:
    source = parse_value(args.value)
    stream = EcfStream(source, precision_bits=args.precision_bits)
    rows = []
    for i in range(1, args.n + 1):
        if args.map == "T":
            d = ecf_expand(stream, 1)
            if not d:
                break
            label, idx = str(d[0]), stream.omega_count
        else:
            s = stream.next_symbol()
            if s is None:
                break
            label, idx = str(s), stream.omega_count
        lo, hi = stream.current_interval()
        rows.append((i, idx, label, float((lo + hi) / 2), float(hi - lo)))
    if args.format == "json":
        _emit_json(args, {"orbit": [
            {"step": r[0], "omega_index": r[1], "symbol": r[2], "value": r[3], "width": r[4]}
            for r in rows
        ], "status": stream.status.value})
    elif args.format == "csv":
        _emit_csv(args, ["step", "omega_index", "symbol", "value", "width"], rows)
    else:
        _emit(args, "\n".join(f"{r[0]:>4} {r[2]:>10}  {r[3]:.17g}" for r in rows) + "\n")
    return 0


def cmd_measures(args) -> int:
    from . import measures

    rng = np.random.default_rng(args.seed)
    if args.check in ("f", "h"):
        rep = measures.invariance_check(rng, "R" if args.check == "f" else "T",
                                        n=args.samples, bins=args.bins)
        summary = {"map": rep.map, "n": rep.n, "bins": rep.bins, "deviation": rep.deviation,
                   "threshold": rep.threshold, "orbit_deviation": rep.orbit_deviation,
                   "passed": rep.passed}
        if args.format == "csv":
            if args.out:
                rep.write_csv(args.out)
            else:
                buf = io.StringIO()
                rows = zip(rep.edges[:-1], rep.edges[1:], rep.empirical, rep.theoretical)
                w = csv.writer(buf, lineterminator="\n")
                w.writerow(["bin_left", "bin_right", "empirical", "theoretical"])
                w.writerows([tuple(repr(float(v)) for v in r) for r in rows])
                sys.stdout.write(buf.getvalue())
        else:
            _emit_json(args, summary)
        return 0 if rep.passed else 1
    rows = []
    bad = 0
    for h in range(args.max_h + 1):
        for m in range(1, args.max_m + 1):
            for sign in (1, -1):
                if m == 1 and sign == -1:
                    continue
                lo, hi = measures.cylinder_interval([(h, m, sign)])
                mass = measures.cylinder_measure([(h, m, sign)])
                bound = measures.remark1_bound(h, m)
                bad += mass > bound
                rows.append((h, m, "+" if sign > 0 else "-", str(lo), str(hi), mass, bound))
    if args.format == "csv":
        _emit_csv(args, ["h", "m", "sign", "left", "right", "measure", "bound"], rows)
    else:
        _emit_json(args, {"violations": int(bad), "cylinders": [
            dict(zip(("h", "m", "sign", "left", "right", "measure", "bound"), r)) for r in rows
        ]})
    return 0 if bad == 0 else 1


def cmd_flow(args) -> int:
    from . import flow
    from .symbols import parse_sigma

    rng = np.random.default_rng(args.seed)
    if args.mode == "psi":
        rows = []
        for i in range(args.samples):
            w = flow.sample_biword(rng, window=args.window, bits=args.precision_bits)
            r = flow.psi(w)
            rows.append((i, str(w.sigma(1)), str(w.sigma(2)), float(w.past_value),
                         *[float(v) for v in r.parts], r.total))
        header = ["sample", "sigma1", "sigma2", "past_value", "psi0", "psi1", "psi2", "psi"]
        if args.format == "csv":
            _emit_csv(args, header, rows)
        else:
            arr = np.array([r[-4:] for r in rows])
            _emit_json(args, {"mean": dict(zip(header[-4:], arr.mean(axis=0).tolist())),
                              "stderr": dict(zip(header[-4:], (arr.std(axis=0, ddof=1)
                                                               / np.sqrt(len(rows))).tolist()))})
        return 0
    a_sym = parse_sigma(args.cylinder)
    band = flow.cylinder_band(a_sym, args.height)
    t_grid = [float(t) for t in args.t_grid.split(",")]
    res = flow.correlation_decay(band, band, t_grid, args.samples, rng,
                                 batches=args.batches, window=args.window,
                                 bits=args.precision_bits)
    if args.format == "csv":
        _emit_csv(args, ["t", "estimate", "stderr"],
                  [(r["t"], r["estimate"], r["stderr"]) for r in res])
    else:
        _emit_json(args, {"correlations": res})
    return 0


def cmd_renewal(args) -> int:
    from .renewal import convergence_diagnostic, simulate_renewal

    dists = []
    for L in args.L:
        dists.append(simulate_renewal(args.seq, L, args.N1, args.N2, args.samples,
                                      seed=args.seed, workers=args.workers,
                                      precision_bits=args.precision_bits))
    payload = {"results": []}
    out_path = Path(args.out) if args.out else None
    for d in dists:
        samples_path = None
        if out_path is not None:
            samples_path = str(out_path.with_name(f"{out_path.stem}_L{d.L}_ratios.csv"))
            with open(samples_path, "w", newline="") as fh:
                fh.write("ratio\n")
                fh.writelines(f"{np.format_float_positional(r, unique=True)}\n" for r in d.ratios)
        payload["results"].append(d.to_json(samples_path))
    if len(dists) > 1:
        payload["ks_matrix"] = convergence_diagnostic(dists)
    _emit_json(args, payload)
    return 0 if all(d.containment_violations in (0, None) for d in dists) else 1


def cmd_verify(args) -> int:
    from .verify import format_table, run_suite

    rows = run_suite(seed=args.seed, scale=args.scale)
    if args.format == "json":
        _emit_json(args, {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in rows]})
    else:
        _emit(args, format_table(rows) + "\n")
    return 0 if all(ok for _, ok, _ in rows) else 1


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_count, default=0, help="master seed (default 0)")
    common.add_argument("--precision-bits", type=_bits, default=None,
                        help="initial working precision (>= 128; env ECF_LAB_PRECISION_BITS)")
    common.add_argument("--workers", type=_count, default=1, help="worker processes")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    def fmt(p, choices, default):
        p.add_argument("--format", choices=choices, default=default)

    parser = argparse.ArgumentParser(prog="ecf-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="ECF digits of a value")
    p.add_argument("--value", required=True, help="p/q, decimal, or pi-3 | sqrt2-1 | e-2")
    p.add_argument("--n", type=_count, default=30, help="number of Omega digits")
    fmt(p, ["json", "csv", "compact", "sigma"], "compact")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("convert", parents=[common], help="Euclidean CF to ECF")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rational", help="p/q in (0, 1]")
    g.add_argument("--file", help="file with one p/q per line")
    fmt(p, ["json", "csv", "compact"], "compact")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("orbit", parents=[common], help="orbit under T or R")
    p.add_argument("--value", required=True)
    p.add_argument("--n", type=_count, default=20)
    p.add_argument("--map", choices=["T", "R"], default="R")
    fmt(p, ["json", "csv", "compact"], "compact")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("measures", parents=[common], help="invariance and cylinder checks")
    p.add_argument("--check", choices=["f", "h", "cylinders"], required=True)
    p.add_argument("--samples", type=_count, default=10**6)
    p.add_argument("--bins", type=_count, default=100)
    p.add_argument("--max-h", type=_count, default=20)
    p.add_argument("--max-m", type=_count, default=20)
    fmt(p, ["json", "csv"], "json")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("flow", parents=[common], help="roof function and mixing proxy")
    p.add_argument("--mode", choices=["psi", "correlation"], default="correlation")
    p.add_argument("--samples", type=_count, default=10**4)
    p.add_argument("--window", type=_count, default=8, help="past symbols per BiWord")
    p.add_argument("--cylinder", default="1+", help="Sigma word for the indicator")
    p.add_argument("--height", type=float, default=0.5, help="height cut of the indicator")
    p.add_argument("--t-grid", default="1,5,10,20")
    p.add_argument("--batches", type=_count, default=20)
    fmt(p, ["json", "csv"], "json")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("renewal", parents=[common], help="renewal-time Monte Carlo")
    p.add_argument("--seq", choices=["T", "R"], default="R")
    p.add_argument("--L", type=_scale, nargs="+", default=[Fraction(10**4)])
    p.add_argument("--samples", type=_count, default=10**5)
    p.add_argument("--N1", type=_count, default=2)
    p.add_argument("--N2", type=_count, default=2)
    fmt(p, ["json"], "json")
    p.set_defaults(func=cmd_renewal)

    p = sub.add_parser("verify", parents=[common], help="run the property suite")
    p.add_argument("--scale", type=float, default=1.0, help="multiply check sizes")
    fmt(p, ["compact", "json"], "compact")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    if args.precision_bits is None:
        args.precision_bits = default_precision_bits()
    if args.out:
        parent = Path(args.out).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            parser.error(f"output path not writable: {args.out}")
    try:
        return args.func(args)
    except PrecisionExhausted as exc:
        src = getattr(exc, "source", None)
        shown = getattr(args, "value", None) or getattr(src, "name", None) or repr(src)
        print(f"ecf-lab: precision exhausted for input {shown!r}: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (DomainError, ValueError) as exc:
        print(f"ecf-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EcfError as exc:
        print(f"ecf-lab: {exc}", file=sys.stderr)
        return 1


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)
