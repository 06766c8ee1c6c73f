"""Finite-blocklength converse bounds for singular discrete memoryless channels.

Every subcommand prints one report (JSON by default, or CSV with one row per
blocklength/rate/trial).  Exit codes: 2 invalid input, 3 inapplicable
channel or parameters, 4 exhausted budget.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__, bounds, exactdist, kernels, measures, minimax, verify
from .channel import DEFAULT_SEARCH_BUDGET, classify, load_channel, parse_builtin
from .errors import BudgetExceeded, NotApplicable, SingdmcError, ValidationError
from .report import dumps, to_csv

EXIT_VALIDATION = 2
EXIT_NOT_APPLICABLE = 3
EXIT_BUDGET = 4


def parse_range(text: str) -> list[int]:
    """``A``, ``A:B`` or ``A:B:STEP`` (inclusive) as a list of blocklengths."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad blocklength range {text!r}") from None
    if len(nums) == 1:
        nums = [nums[0], nums[0], 1]
    elif len(nums) == 2:
        nums.append(1)
    elif len(nums) != 3:
        raise argparse.ArgumentTypeError(f"bad blocklength range {text!r}")
    lo, hi, step = nums
    if lo < 1 or hi < lo or step < 1:
        raise argparse.ArgumentTypeError(f"need 1 <= A <= B and STEP >= 1 in {text!r}")
    return list(range(lo, hi + 1, step))


def parse_rates(text: str) -> list[float]:
    """Comma-separated rates, or ``A:B:STEP`` inclusive."""
    try:
        if ":" in text:
            lo, hi, step = (float(p) for p in text.split(":"))
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [lo + i * step for i in range(count)]
        return [float(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate grid {text!r}") from None


def _eps(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("eps must lie in (0,1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singdmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--channel", metavar="FILE", help="channel JSON file")
    src.add_argument("--builtin", metavar="SPEC", help="e.g. bec:0.5, bsc:0.11, asym_example")
    common.add_argument("--eps", type=_eps, default=0.1)
    common.add_argument("--n", type=parse_range, default=None, metavar="A[:B[:STEP]]")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--enum-budget", type=int, default=exactdist.DEFAULT_ENUM_BUDGET)
    common.add_argument("--search-budget", type=int, default=DEFAULT_SEARCH_BUDGET)
    common.add_argument("--grid", type=int, default=None, help="simplex grid resolution")
    common.add_argument("--out", metavar="PATH", default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="symmetry and singularity")
    sub.add_parser("measures", parents=[common], help="capacity, dispersions, moments")
    sub.add_parser("approx", parents=[common], help="normal approximation series")
    conv = sub.add_parser("converse", parents=[common], help="third-order converse bound")
    conv.add_argument("--net", type=int, default=None, help="ball-net ticks per axis")
    mm = sub.add_parser("minimax", parents=[common], help="minimax converse")
    mm.add_argument("--rate", choices=("proof", "optimal"), default="proof")
    ver = sub.add_parser("verify", parents=[common], help="randomised audits of the change-of-measure bound")
    ver.add_argument("--trials", type=int, default=100)
    ver.add_argument("--max-size", type=int, default=8)
    sp = sub.add_parser("spexp", parents=[common], help="sphere-packing exponent")
    sp.add_argument("--rates", type=parse_rates, default=None)
    return parser


def _channel(args):
    return load_channel(args.channel) if args.channel else parse_builtin(args.builtin)


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("format", "out")}
    return cfg


def _need_n(args) -> list[int]:
    if args.n is None:
        raise ValidationError("--n is required for this subcommand")
    return args.n


def cmd_classify(ch, args):
    return classify(ch, args.search_budget).to_json(), []


def cmd_measures(ch, args):
    return measures.moment_profile(ch, args.eps).to_json(), []


def cmd_approx(ch, args):
    rows = []
    for n in _need_n(args):
        rep = bounds.theorem1_series(ch, args.eps, n)
        rows.append({"n": n, "regime": rep.regime, "approx_nats": rep.bound_nats, **rep.terms})
    return rep.constants, rows


def cmd_converse(ch, args):
    cls = classify(ch, args.search_budget)
    if not cls.singular:
        raise NotApplicable("the third-order converse needs a singular channel")
    rows, constants = [], None
    for n in _need_n(args):
        if cls.symmetric:
            rep = bounds.prop1_converse(ch, args.eps, n)
        else:
            rep = bounds.prop2_converse(ch, args.eps, n, net=args.net, grid=args.grid)
        constants = rep.constants
        rows.append({"n": n, "bound_nats": rep.bound_nats, "trivial": rep.trivial,
                     "valid_from": rep.valid_from, "regime": rep.regime, **rep.terms})
    return {"constants": constants, "notes": rep.notes}, rows


def cmd_minimax(ch, args):
    rows = []
    for n in _need_n(args):
        rate = (minimax.optimal_rate(ch, args.eps, n, args.enum_budget)
                if args.rate == "optimal" else None)
        rows.append(minimax.np_tau_beta(ch, args.eps, n, rate, args.enum_budget).to_json())
    return {"rate_choice": args.rate}, rows


def cmd_verify(ch, args):
    rng = np.random.default_rng(args.seed)
    max_n = max(args.n) if args.n else 6
    rows = []
    for trial in range(args.trials):
        n = int(rng.integers(1, max_n + 1))
        counts = rng.multinomial(n, np.full(ch.input_size, 1.0 / ch.input_size))
        size = int(rng.integers(1, args.max_size + 1))
        cb = verify.random_cc_codebook(rng, counts, size)
        audit = verify.audit_lemma2(ch, cb, args.eps)
        rows.append({"trial": trial, "composition": counts.tolist(), **audit.to_json()})
    violations = sum(not r["holds"] for r in rows)
    return {"trials": args.trials, "violations": violations}, rows


def cmd_spexp(ch, args):
    c, _ = measures.capacity(ch)
    rates = args.rates if args.rates else [c * i / 20 for i in range(21)]
    grid = args.grid if args.grid else 20
    rows = []
    for r in rates:
        res = measures.sp_exponent(ch, r, grid=grid)
        rows.append({"rate": r, "value": res["value"], "rho": res["rho"],
                     "q": np.asarray(res["q"]).tolist()})
    return {"capacity": c, "rho_max": 100.0, "grid": grid}, rows


COMMANDS = {"classify": cmd_classify, "measures": cmd_measures, "approx": cmd_approx,
            "converse": cmd_converse, "minimax": cmd_minimax, "verify": cmd_verify,
            "spexp": cmd_spexp}


def run(args) -> tuple[int, str]:
    ch = _channel(args)
    summary, rows = COMMANDS[args.command](ch, args)
    if args.format == "csv":
        return 0, to_csv(rows if rows else [summary])
    doc = {"tool": "singdmc", "version": __version__, "backend": kernels.BACKEND_NAME,
           "command": args.command, "channel": {"sha256": ch.key, **ch.to_json()},
           "config": _config(args), "result": summary, "rows": rows}
    status = 1 if args.command == "verify" and summary["violations"] else 0
    return status, dumps(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        status, text = run(args)
    except ValidationError as exc:
        print(f"singdmc: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NotApplicable as exc:
        print(f"singdmc: not applicable: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except BudgetExceeded as exc:
        print(f"singdmc: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SingdmcError as exc:  # pragma: no cover - every subclass is mapped above
        print(f"singdmc: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"singdmc: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
