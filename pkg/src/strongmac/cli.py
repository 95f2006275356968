"""Command-line entry point: ``strongmac <subcommand> ...``.

Exit status is 0 on success, 1 on domain errors (and for a region membership
query whose point lies outside), 2 on usage errors or malformed input.
"""

import argparse
import json
import math
import platform
import sys
import time

import numpy as np

from . import __version__
from ._serialize import csv_text, document, dumps
from .bht import beta
from .bounds import BoundInputs, bound_scan, sum_rate_upper_bound
from .exceptions import DomainError, InvariantViolation
from .expurgation import CodeErrorProfile, expurgate
from .macsim import (
    Codebook,
    GaussianMacConfig,
    IcConfig,
    SCAN_HEADER,
    generate_codebook,
    phase_transition_scan,
    simulate_ic,
    simulate_mac_error,
    sizes_from_rates,
)
from .regions import (
    IcParams,
    contains,
    cover_wyner_constraints,
    hk_strong_interference_region,
    mask_from_subset,
)
from .wringing import ProductApproxInstance, quantized_code_wringing, verify_wringing, wring


class UsageError(Exception):
    """Malformed command line or input document."""


def build_id():
    return f"strongmac {__version__} (python {platform.python_version()}, numpy {np.__version__})"


# ---------------------------------------------------------------------------
# argument parsing helpers


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _read_document(path):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"input is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("input document must be a JSON object")
    return doc


def _require(doc, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise UsageError(f"input document is missing {missing}")
    return [doc[k] for k in keys]


class Output:
    """What a subcommand produced: a JSON payload or CSV rows, not yet rendered."""

    def __init__(self, payload=None, *, header=None, rows=None, path=None, status=0):
        self.payload, self.header, self.rows = payload, header, rows
        self.path, self.status = path, status

    def render(self, manifest):
        if self.header is not None:
            return csv_text(self.header, self.rows, manifest)
        return document(self.payload, manifest)


def _emit_csv(header, rows, path):
    return Output(header=header, rows=rows, path=path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_region(args):
    if args.gains is not None:
        if len(args.powers) != 2 or len(args.gains) != 2:
            raise UsageError("--gains needs exactly two powers and two gains")
        region = hk_strong_interference_region(IcParams(*args.powers, *args.gains))
        constraints = region.constraints()
        member = (lambda r: region.contains(r)) if args.rates is not None else None
    else:
        constraints = cover_wyner_constraints(args.powers)
        member = (lambda r: contains(args.powers, r)) if args.rates is not None else None
    if member is not None:
        res = member(args.rates)
        return Output(res.to_dict(), status=0 if res.inside else 1)
    rows = [(mask_from_subset(s), b) for s, b in constraints]
    return _emit_csv(("subset_bitmask", "bound_bits"), rows, args.out)


def bound_payload(n, epsilon, powers, subset):
    return sum_rate_upper_bound(BoundInputs(n, epsilon, tuple(powers), tuple(subset))).to_dict()


def cmd_bound(args):
    payload = bound_payload(args.n, args.epsilon, args.powers, args.subset)
    return Output(payload)


def log_grid(n_min, n_max, points):
    if n_min < 2 or n_max < n_min or points < 1:
        raise DomainError("need 2 <= n_min <= n_max and points >= 1")
    grid = np.logspace(math.log10(n_min), math.log10(n_max), points)
    return sorted({int(round(v)) for v in grid})


def cmd_bound_scan(args):
    subset = args.subset or list(range(1, len(args.powers) + 1))
    rows = bound_scan(args.epsilon, args.powers, subset, log_grid(args.n_min, args.n_max, args.points))
    return _emit_csv(("n", "per_symbol_bound", "second_order_gap"), rows, args.out)


def bht_payload(doc):
    p, q, delta = _require(doc, "p", "q", "delta")
    value, test = beta(delta, p, q)
    return {"beta": value, "test": test.accept_prob.tolist()}


def cmd_bht(args):
    return Output(bht_payload(_read_document(args.input)))


def _seq_indexer(alphabet):
    index = {dumps(a): i for i, a in enumerate(alphabet)}
    if len(index) != len(alphabet):
        raise UsageError("alphabet labels must be distinct")

    def convert(atoms, name):
        out = []
        try:
            for seq, mass in atoms:
                out.append((tuple(index[dumps(s)] for s in seq), float(mass)))
        except KeyError as exc:
            raise DomainError(f"{name} uses a symbol outside the alphabet: {exc.args[0]}") from exc
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{name} must be a list of [sequence, mass] pairs") from exc
        return tuple(out)

    return convert


def wring_payload(doc):
    if "codebooks" in doc:
        books, support, subset, eps, powers = _require(doc, "codebooks", "support", "subset", "epsilon", "powers")
        return quantized_code_wringing(books, support, subset, eps, powers).to_dict()
    n, alphabet, p, u, c, delta, lam = _require(doc, "n", "alphabet", "p", "u", "c", "delta", "lambda")
    convert = _seq_indexer(list(alphabet))
    inst = ProductApproxInstance(
        n, tuple(alphabet), convert(p, "p"), convert(u, "u"), float(c), float(delta), float(lam)
    )
    result = wring(inst)
    payload = result.to_dict(list(alphabet))
    payload["certificate"] = verify_wringing(inst, result).to_dict()
    return payload


def cmd_wring(args):
    return Output(wring_payload(_read_document(args.input)))


def expurgate_payload(doc, subset=None):
    sizes, eps, errors = _require(doc, "M", "epsilon", "errors")
    subset = subset or doc.get("subset") or list(range(1, len(sizes) + 1))
    return expurgate(CodeErrorProfile(tuple(sizes), errors), eps, subset).to_dict()


def cmd_expurgate(args):
    return Output(expurgate_payload(_read_document(args.input), args.subset))


def _sizes(args, n_sources):
    if args.sizes is not None:
        if len(args.sizes) != n_sources:
            raise UsageError(f"--sizes needs {n_sources} entries")
        return tuple(args.sizes)
    if len(args.rates) != n_sources:
        raise UsageError(f"--rates needs {n_sources} entries")
    return sizes_from_rates(args.n, args.rates)


SIM_HEADER = ("trials", "errors", "error_prob", "ci_lo", "ci_hi", "seed")


def simulate_payload(cfg, book, trials, seed, threads=1):
    res = simulate_mac_error(cfg, book, trials, seed, threads=threads)
    return {"n": cfg.n, "powers": list(cfg.powers), "message_sizes": list(cfg.message_sizes)} | res.to_dict()


def cmd_simulate(args):
    sizes = _sizes(args, len(args.powers))
    cfg = GaussianMacConfig(args.n, tuple(args.powers), sizes, args.tuple_cap)
    if args.codebook_in:
        book = Codebook.load(args.codebook_in)
    else:
        book = generate_codebook(cfg, args.codebook, args.seed)
    if args.codebook_out:
        book.save(args.codebook_out)
    payload = simulate_payload(cfg, book, args.trials, args.seed, args.threads)
    if args.out == "csv":
        rows = [tuple(payload[k] for k in SIM_HEADER)]
        return Output(header=SIM_HEADER, rows=rows)
    return Output(payload)


IC_HEADER = ("destination", "code", "trials", "errors", "error_prob", "ci_lo", "ci_hi", "union_bound_holds")


def cmd_ic_simulate(args):
    if len(args.powers) != 2 or len(args.gains) != 2:
        raise UsageError("ic-simulate needs two powers and two gains")
    sizes = _sizes(args, 2)
    ic = IcConfig(args.n, *args.powers, *args.gains, sizes, args.noise_corr, args.tuple_cap)
    book = generate_codebook(ic.mac_config(), args.codebook, args.seed)
    res = simulate_ic(ic, book, args.trials, args.seed, anchor_trials=args.anchor_trials)
    if args.out == "csv":
        rows = []
        for d in (1, 2):
            for code, r in (("plain", res.plain[d - 1]), ("multicast", res.multicast[d - 1])):
                rd = r.to_dict()
                rows.append(
                    (d, code, rd["trials"], rd["errors"], rd["error_prob"], rd["ci_lo"], rd["ci_hi"],
                     res.union_bound_holds(d))
                )
        return Output(header=IC_HEADER, rows=rows)
    return Output(res.to_dict())


def cmd_scan(args):
    rows = phase_transition_scan(
        args.powers,
        args.multipliers,
        args.n_list,
        args.trials,
        args.seed,
        kind=args.codebook,
        tuple_cap=args.tuple_cap,
        threads=args.threads,
    )
    return _emit_csv(SCAN_HEADER, [r.as_row() for r in rows], args.out)


# ---------------------------------------------------------------------------


def _codebook_kind(text):
    return {"iid": "iid_gauss_scaled"}.get(text, text)


def build_parser():
    parser = argparse.ArgumentParser(prog="strongmac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=build_id())
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("region", help="Cover-Wyner or strong-interference IC region")
    p.add_argument("--powers", type=_float_list, required=True)
    p.add_argument("--gains", type=_float_list, help="g12,g21: use the two-user IC region")
    p.add_argument("--rates", type=_float_list, help="membership query instead of listing constraints")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("bound", help="finite-blocklength sum-rate upper bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--powers", type=_float_list, required=True)
    p.add_argument("--subset", type=_int_list, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("bound-scan", help="bound over a log-spaced grid of n")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--powers", type=_float_list, required=True)
    p.add_argument("--subset", type=_int_list)
    p.add_argument("--n-min", type=int, default=100)
    p.add_argument("--n-max", type=int, default=10**9)
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bound_scan)

    for name, func, helptext in (
        ("bht", cmd_bht, "Neyman-Pearson beta from {p, q, delta}"),
        ("wring", cmd_wring, "wringing with certificate"),
        ("expurgate", cmd_expurgate, "max-error subcode from an error profile"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input", nargs="?", default="-", help="JSON document path (default stdin)")
        if name == "expurgate":
            p.add_argument("--subset", type=_int_list)
        p.set_defaults(func=func)

    def sim_flags(p, ic):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--powers", type=_float_list, required=True)
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--rates", type=_float_list)
        group.add_argument("--sizes", type=_int_list)
        p.add_argument("--trials", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--codebook", type=_codebook_kind, default="sphere", choices=("sphere", "iid_gauss_scaled"))
        p.add_argument("--out", choices=("csv", "json"), default="json")
        p.add_argument("--tuple-cap", type=int, default=2**20)
        p.add_argument("--threads", type=int, default=1)
        if ic:
            p.add_argument("--gains", type=_float_list, required=True, help="g12,g21")
            p.add_argument("--noise-corr", type=float, default=0.0)
            p.add_argument("--anchor-trials", type=int, default=200)
        else:
            p.add_argument("--codebook-in", help="read a MACB1 codebook instead of generating one")
            p.add_argument("--codebook-out", help="write the codebook in MACB1 format")

    p = sub.add_parser("simulate", help="Monte-Carlo MAC error under ML decoding")
    sim_flags(p, ic=False)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("ic-simulate", help="plain vs multicast IC code errors")
    sim_flags(p, ic=True)
    p.set_defaults(func=cmd_ic_simulate)

    p = sub.add_parser("scan", help="phase-transition scan over rate multipliers and n")
    p.add_argument("--powers", type=_float_list, required=True)
    p.add_argument("--multipliers", type=_float_list, required=True)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--codebook", type=_codebook_kind, default="sphere", choices=("sphere", "iid_gauss_scaled"))
    p.add_argument("--tuple-cap", type=int, default=2**20)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_scan)
    return parser


def make_manifest(args, wall_time):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "subcommand")}
    return {
        "subcommand": args.subcommand,
        "params": params,
        "seed": getattr(args, "seed", None),
        "version": build_id(),
        "wall_time_s": wall_time,
    }


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        out = args.func(args)
    except UsageError as exc:
        print(f"strongmac {args.subcommand}: {exc}", file=sys.stderr)
        return 2
    except (DomainError, InvariantViolation) as exc:
        print(f"strongmac {args.subcommand}: {exc}", file=sys.stderr)
        return 1
    except (TypeError, ValueError, KeyError) as exc:
        # Wrongly shaped input documents surface here.
        print(f"strongmac {args.subcommand}: malformed input: {exc}", file=sys.stderr)
        return 2
    text = out.render(make_manifest(args, time.perf_counter() - start))
    if out.path:
        try:
            with open(out.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"strongmac {args.subcommand}: cannot write {out.path}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return out.status


if __name__ == "__main__":
    sys.exit(main())
