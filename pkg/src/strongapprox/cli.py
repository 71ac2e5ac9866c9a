"""Command-line front end.  Every subcommand writes CSV or JSON to ``--out`` (or stdout)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import almost_prime as ap
from .enumeration import BallQuery, enumerate_array, fit_growth
from .errors import WorkbenchError
from .finite import certify_gcd, density_table, langweil_report
from .groups import GroupElement, GroupSpec, Model
from .numtheory import primes_below
from .polynomial import RegularFunction, trace_sl2
from .sieve import PrimeSet, SieveParams, SieveProblem, check_conditions, lower_bound_report
from .solver import (
    Certificate,
    SubsetSpec,
    build_f,
    solve,
    verify_certificate,
)
from .torus import AvoidanceState, select_avoiding

FLAGSHIP_F = RegularFunction.coordinate(3, "ij-coefficient")


def _read_json(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _group(args, cfg: dict) -> GroupSpec:
    if args.model:
        if args.model == "sl2":
            return GroupSpec.sl2()
        return GroupSpec.quat(args.a, args.b)
    if "group" in cfg:
        return GroupSpec.from_json(cfg["group"])
    return GroupSpec.quat(2, 3)


def _function(spec: str | None, group: GroupSpec, cfg: dict) -> RegularFunction:
    """``trace``, ``flagship``, ``cN`` for a coordinate, inline JSON, or a path to JSON."""
    if spec is None:
        if "f" in cfg:
            return RegularFunction.from_json(cfg["f"])
        spec = "trace" if group.model is Model.SL2 else "flagship"
    if spec == "trace":
        return trace_sl2()
    if spec == "flagship":
        return build_f(group, FLAGSHIP_F, GroupElement.identity(group))
    if spec.startswith("c") and spec[1:].isdigit():
        return RegularFunction.coordinate(int(spec[1:]) - 1)
    if spec.lstrip().startswith("{"):
        return RegularFunction.from_json(json.loads(spec))
    return RegularFunction.from_json(_read_json(spec))


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- subcommands ------------------------------------------------------------------

def cmd_enumerate(args, cfg) -> int:
    spec = _group(args, cfg)
    q = BallQuery.congruence_subgroup(spec, args.T, args.alpha) if args.alpha > 1 else BallQuery(spec, args.T)
    arr = enumerate_array(q, args.threads)
    _emit(args, _csv(["c1", "c2", "c3", "c4"], arr.tolist()))
    return 0


def cmd_growth(args, cfg) -> int:
    spec = _group(args, cfg)
    Ts = [int(t) for t in args.T_list.split(",")]
    _emit(args, _json(fit_growth(spec, Ts, args.threads).to_json()))
    return 0


def _certified(spec, f, alpha, args):
    cert = certify_gcd(spec, f, alpha, args.gcd_height, args.gcd_prime_bound, args.threads)
    return cert


def cmd_local_densities(args, cfg) -> int:
    spec = _group(args, cfg)
    f = _function(args.f, spec, cfg)
    cert = _certified(spec, f, args.alpha, args)
    table = density_table(spec, f, args.alpha, cert, range(1, args.d_max + 1))
    rows = [r.csv_row() for _, r in sorted(table.rows.items())]
    _emit(args, _csv(["d", "count_group", "count_fiber", "rho_numerator", "rho_denominator"], rows))
    return 0


def cmd_langweil(args, cfg) -> int:
    spec = _group(args, cfg)
    f = _function(args.f, spec, cfg)
    ps = [p for p in primes_below(args.p_max + 1) if p not in spec.bad_primes]
    rep = langweil_report(spec, f, ps)
    rows = [[r.p, r.count_V, r.count_G, repr(r.observed_C), str(r.ratio_times_p)] for r in rep.rows]
    _emit(args, _csv(["p", "count_V", "count_G", "observed_C", "ratio_times_p"], rows))
    return 0


def cmd_sieve(args, cfg) -> int:
    with open(args.input) as fh:
        reader = csv.reader(fh)
        A = [int(row[0]) for row in reader if row and row[0].strip().lstrip("-").isdigit()]
    omega: dict[int, Fraction] = {}
    admitted = None
    if args.omega:
        with open(args.omega) as fh:
            for row in csv.DictReader(fh):
                omega[int(row["p"])] = Fraction(int(row["num"]), int(row["den"]))
        admitted = PrimeSet.only(omega) if args.only_listed else None
    P = admitted or PrimeSet.all_primes()
    prob = SieveProblem(tuple(A), P, omega, args.z)
    lb = lower_bound_report(prob, args.tau, args.A1)
    cond = check_conditions(prob, SieveParams(tau=args.tau, A1=args.A1))
    out = {"S": lb.S, "product": lb.product, "ratio": lb.ratio, "flagged": lb.flagged,
           "level_ok": lb.level_ok, "conditions": cond.to_json()}
    _emit(args, _json(out))
    return 0


def cmd_saturate(args, cfg) -> int:
    cfg = cfg or _read_json(args.group_config)
    spec = _group(args, cfg)
    f = _function(args.f, spec, cfg)
    N = args.N or certify_gcd(spec, f, args.alpha, args.gcd_height, args.gcd_prime_bound, args.threads).N
    S = frozenset(int(p) for p in args.S.split(",") if p) if args.S else frozenset()
    q = ap.SaturationQuery(spec, f, args.alpha, S, Fraction(args.beta), args.T, args.M, N)
    scan = ap.saturation_scan(q, args.threads, sample=0)
    hits = []
    for g in ap.candidate_points(spec, args.alpha, (), args.T, args.threads):
        if len(hits) >= args.limit:
            break
        try:
            hits.append(ap.find_almost_prime_point(q, (), args.r, args.T, points=[g], min_count=args.min_count))
        except WorkbenchError:
            continue
    out = {"N": str(N), "count": scan.count, "X": scan.X, "zero_points": scan.zero_points,
           "hits": [h.to_json() for h in hits]}
    _emit(args, _json(out))
    return 0


def cmd_avoid(args, cfg) -> int:
    state_obj = _read_json(args.state)
    state = AvoidanceState.from_json(state_obj)
    subset = SubsetSpec.from_json(state_obj.get("subset") or cfg["subset"])
    sel = select_avoiding(state, subset.generators)
    out = {"l": sel.l, "P_dprime": sel.P_dprime.to_json(), "transcript": sel.transcript.to_json()}
    _emit(args, _json(out))
    return 0


def cmd_solve(args, cfg) -> int:
    if not cfg:
        raise WorkbenchError("solve needs --config")
    cert = solve(cfg, args.threads, args.verify_bound)
    _emit(args, cert.dumps())
    return 0 if cert.ok else 1


def cmd_verify(args, cfg) -> int:
    cert = Certificate.loads(Path(args.certificate).read_text())
    rep = verify_certificate(cert, args.threads, args.verify_bound)
    _emit(args, _json(rep.to_json()))
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    def global_flags(p, suppress):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--config", default=d(None), help="JSON config file")
        p.add_argument("--out", default=d(None), help="output path (default: stdout)")
        p.add_argument("--threads", type=int, default=d(1), help="worker processes; output does not depend on it")
        p.add_argument("--verify-bound", type=int, default=d(None),
                       help="prime bound for the exhaustive avoidance check")

    # the flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)
    parser = argparse.ArgumentParser(prog="strongapprox", description=__doc__)
    global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def group_args(p):
        p.add_argument("--model", choices=["sl2", "quat"])
        p.add_argument("--a", type=int, default=2)
        p.add_argument("--b", type=int, default=3)

    def gcd_args(p):
        p.add_argument("--gcd-height", type=int, default=64)
        p.add_argument("--gcd-prime-bound", type=int, default=50)

    p = sub.add_parser("enumerate", parents=[common], help="points of bounded height")
    group_args(p)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--alpha", type=int, default=1)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("growth", parents=[common], help="fit the counting exponent")
    group_args(p)
    p.add_argument("--T-list", default="32,64,128,256,512")
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("local-densities", parents=[common], help="rho_f(d) table")
    group_args(p)
    gcd_args(p)
    p.add_argument("--f")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--d-max", type=int, default=30)
    p.set_defaults(func=cmd_local_densities)

    p = sub.add_parser("langweil", parents=[common], help="point counts of the zero locus of f")
    group_args(p)
    p.add_argument("--f")
    p.add_argument("--p-max", type=int, default=100)
    p.set_defaults(func=cmd_langweil)

    p = sub.add_parser("sieve", parents=[common], help="sift a CSV of integers")
    p.add_argument("--input", required=True)
    p.add_argument("--omega")
    p.add_argument("--only-listed", action="store_true", help="admit only the primes in --omega")
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--A1", type=float, default=1.0)
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("saturate", parents=[common], help="almost-prime values on a congruence subgroup")
    group_args(p)
    gcd_args(p)
    p.add_argument("--group-config")
    p.add_argument("--f")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--N", type=int, default=0)
    p.add_argument("--S", default="")
    p.add_argument("--beta", default="1/2")
    p.add_argument("--T", type=int, default=64)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--min-count", type=int, default=0)
    p.add_argument("--limit", type=int, default=10)
    p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("avoid", parents=[common], help="orbit selection from an avoidance state")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_avoid)

    p = sub.add_parser("solve", parents=[common], help="run the pipeline and write a certificate")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="recheck a certificate")
    p.add_argument("--certificate", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _read_json(args.config)
    try:
        return args.func(args, cfg)
    except WorkbenchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
