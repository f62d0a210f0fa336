"""Command-line front end.

Every command writes machine-readable JSON or CSV on stdout and diagnostics
on stderr.  Exit codes: 0 success, 1 verification failure or infeasible
request, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import capacity as cap
from .channel import ChannelConfig, parse_fraction
from .layouts import UnsupportedConfig
from .schemes import RegimeMismatch, SchemeKind, Wiring, compile, compile_four_message
from .sim import DEFAULT_LIMIT, DEFAULT_SEED, verify_exhaustive

SCHEMES = {
    "nofb": SchemeKind.NON_FEEDBACK,
    "type1": SchemeKind.TYPE_I,
    "type2": SchemeKind.TYPE_II,
    "type3": SchemeKind.TYPE_III,
    "fourmsg": SchemeKind.FOUR_MESSAGE,
}


class UsageError(Exception):
    pass


def rational(x: Fraction) -> dict:
    return {"exact": str(x), "decimal": float(x)}


def decimal(x) -> str:
    return str(float(x))


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _config(args) -> ChannelConfig:
    try:
        return ChannelConfig(args.n, args.m, args.nb, args.mb, args.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _add_cfg(p, n=2, m=1, nb=1, mb=1, lam="1/2"):
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--m", type=int, default=m)
    p.add_argument("--nb", type=int, default=nb)
    p.add_argument("--mb", type=int, default=mb)
    p.add_argument("--lambda", dest="lam", type=_fraction_arg, default=parse_fraction(lam))


# -- commands -----------------------------------------------------------------------


def cmd_capacity(args) -> int:
    cfg = _config(args)
    rep = cap.capacity_report(cfg)
    _emit({
        "cfg": cfg.to_dict(),
        "c_no": rational(rep.c_no),
        "c_pf": rational(rep.c_pf),
        "inner": rational(rep.inner),
        "outer": rational(rep.outer),
        "outer_raw": rational(cap.outer_raw(cfg)),
        "matched": rep.matched,
        "regime": {"forward": rep.regime.forward.value, "backward": rep.regime.backward.value},
        "netgain": rep.regime.netgain.value,
    })
    return 0


def _rate_json(rate, swapped: bool) -> dict:
    fwd = {"r1": rate.r1, "r2": rate.r2, "sum": rate.forward_sum}
    bwd = {"r1": rate.rt1, "r2": rate.rt2, "sum": rate.backward_sum}
    if swapped:
        fwd, bwd = bwd, fwd
    return {"forward": {k: rational(v) for k, v in fwd.items()},
            "backward": {k: rational(v) for k, v in bwd.items()}}


def cmd_simulate(args) -> int:
    kind = SCHEMES[args.scheme]
    try:
        if kind is SchemeKind.FOUR_MESSAGE:
            spec = compile_four_message((2, 1), args.wiring)
        else:
            cfg = _config(args)
            spec = compile(kind, cfg.reversed() if args.backward else cfg)
    except (RegimeMismatch, UnsupportedConfig) as exc:
        raise UsageError(str(exc)) from exc
    # a seed asks for sampling; otherwise enumerate whenever the tuples fit the limit
    limit = 1 if args.seed is not None else DEFAULT_LIMIT
    seed = DEFAULT_SEED if args.seed is None else args.seed
    report = verify_exhaustive(spec, limit=limit, seed=seed, samples=args.samples,
                               dump=bool(args.dump))
    if args.dump and report.transcript_dump is not None:
        Path(args.dump).write_text(report.transcript_dump + "\n")
    out = {
        "scheme": report.scheme,
        "cfg": spec.cfg.to_dict(),
        "direction": "backward" if args.backward else "forward",
        "M": spec.M,
        "extra_bits_per_user": spec.extra_bits_per_user,
        "messages_tested": report.messages_tested,
        "exhaustive": report.exhaustive,
        "failures": report.failures,
        "failures_by_terminal": report.failures_by_terminal,
        "rate": _rate_json(report.rate, args.backward),
        "budget_used": list(report.budget_used),
        "budget_allowed": rational(report.budget_allowed),
        "budget_ok": report.budget_ok,
        "status": "PASS" if report.passed else "FAIL",
    }
    if report.first_counterexample is not None:
        out["first_counterexample"] = report.first_counterexample
    _emit(out)
    if not report.passed:
        print(f"verification failed: {report.failures} decode failures", file=sys.stderr)
        return 1
    return 0


def cmd_netgain(args) -> int:
    if args.lambda_steps < 2:
        raise UsageError("--lambda-steps must be at least 2")
    cfg = _config(args)
    grid = [Fraction(i, args.lambda_steps - 1) for i in range(args.lambda_steps)]
    curve = cap.net_gain(cfg, grid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["lambda", "fb_gain", "indep_gain"]
    if args.outer:
        header.append("fb_gain_outer")
    w.writerow(header)
    for lam, fb, ind in zip(curve.lambdas, curve.fb_gain, curve.indep_gain):
        row = [decimal(lam), decimal(fb), decimal(ind)]
        if args.outer:
            row.append(decimal(cap.fb_gain(cfg.with_lambda(lam), outer=True)))
        w.writerow(row)
    sys.stdout.write(buf.getvalue())
    print(f"netgain: {curve.netgain.value}", file=sys.stderr)
    return 0


def regime_rows(max_n: int, max_m: int, max_nb: int, max_mb: int, lam: Fraction):
    for n in range(1, max_n + 1):
        for m in range(1, max_m + 1):
            for nb in range(1, max_nb + 1):
                for mb in range(1, max_mb + 1):
                    cfg = ChannelConfig(n, m, nb, mb, lam)
                    label = cap.classify_regime(cfg)
                    yield [n, m, nb, mb, decimal(Fraction(m, n)), decimal(Fraction(mb, nb)),
                           label.netgain.value, str(cap.is_matched(cfg)).lower()]


def render_regime_map(max_n=6, max_m=6, max_nb=6, max_mb=6, lam=Fraction(1)) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "nb", "mb", "alpha", "alpha_t", "netgain", "matched"])
    w.writerows(regime_rows(max_n, max_m, max_nb, max_mb, lam))
    return buf.getvalue()


def cmd_regime_map(args) -> int:
    bounds = (args.max_n, args.max_m, args.max_nb, args.max_mb)
    if min(bounds) < 1:
        raise UsageError("grid bounds must be at least 1")
    sys.stdout.write(render_regime_map(*bounds, lam=args.lam))
    return 0


def _read_pairs(path: str) -> list[tuple[int, int]]:
    pairs = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            a, b = (int(x) for x in parts)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: expected two integers, got {line!r}") from exc
        if a < 0 or b < 0:
            raise UsageError(f"{path}:{lineno}: level counts must be nonnegative")
        pairs.append((a, b))
    return pairs


def cmd_pair(args) -> int:
    fwd, bwd = _read_pairs(args.forwards), _read_pairs(args.backwards)
    try:
        res = cap.pair_subchannels(fwd, bwd, args.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit({
        "lambda": str(args.lam),
        "pairs": [{"forward_index": i, "backward_index": j,
                   "forward": list(fwd[i]), "backward": list(bwd[j]),
                   "net_gain": rational(g)}
                  for (i, j), g in zip(res.pairs, res.gains)],
        "total_net_gain": rational(res.total),
    })
    return 0


def cmd_weak(args) -> int:
    fwd, bwd = (args.n, args.m), (args.nb, args.mb)
    if args.rt_target is not None:
        if args.lam is not None or args.lambda_t is not None:
            raise UsageError("--rt-target excludes --lambda/--lambda-t")
        try:
            best = cap.best_weak_point(fwd, bwd, args.rt_target)
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        lam, lam_t, r, rt = best.lam, best.lam_t, best.r_sum, best.rt_sum
    else:
        lam = args.lam if args.lam is not None else Fraction(0)
        lam_t = args.lambda_t if args.lambda_t is not None else Fraction(0)
        try:
            r, rt = cap.weak_interaction_bound(fwd, bwd, lam, lam_t)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    _emit({
        "forward": list(fwd), "backward": list(bwd),
        "lambda": rational(lam), "lambda_t": rational(lam_t),
        "r_sum_bound": rational(r), "rt_sum_bound": rational(rt),
    })
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="sum-rate formulas for one configuration")
    _add_cfg(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("simulate", help="compile a scheme and check decoding")
    p.add_argument("scheme", choices=sorted(SCHEMES))
    _add_cfg(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true",
                      help="enumerate all message tuples (default when they fit the limit)")
    mode.add_argument("--seed", type=int, help="sample random message tuples with this seed")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--dump", metavar="PATH", help="write the transcript as JSON lines")
    p.add_argument("--wiring", choices=[w.value for w in Wiring], default=Wiring.CROSS.value,
                   help="backward wiring of the four-message scheme")
    p.add_argument("--backward", action="store_true",
                   help="run the scheme over the backward IC with the roles of the directions swapped")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("netgain", help="feedback gain vs independent-message gain over lambda")
    _add_cfg(p)
    p.add_argument("--lambda-steps", type=int, default=11)
    p.add_argument("--outer", action="store_true", help="add the outer-bound gain column")
    p.set_defaults(func=cmd_netgain)

    p = sub.add_parser("regime-map", help="net-gain labels over an integer grid")
    for flag in ("--max-n", "--max-m", "--max-nb", "--max-mb"):
        p.add_argument(flag, type=int, default=6)
    p.add_argument("--lambda", dest="lam", type=_fraction_arg, default=Fraction(1),
                   help="lambda used for the matched flag")
    p.set_defaults(func=cmd_regime_map)

    p = sub.add_parser("pair", help="pair forward and backward subchannels")
    p.add_argument("--forwards", required=True)
    p.add_argument("--backwards", required=True)
    p.add_argument("--lambda", dest="lam", type=_fraction_arg, default=Fraction(1, 2))
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("weak", help="sum-rate bounds when directions may not mix messages")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--nb", type=int, default=0)
    p.add_argument("--mb", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=_fraction_arg)
    p.add_argument("--lambda-t", dest="lambda_t", type=_fraction_arg)
    p.add_argument("--rt-target", type=_fraction_arg)
    p.set_defaults(func=cmd_weak)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"twic {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
