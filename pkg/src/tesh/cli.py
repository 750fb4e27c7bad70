"""Command-line front end: ``tesh search | verify | table | magic``.

Exit codes: 0 success, 2 negative answer (no TE state found, verdict
false), 64 usage error, 65 malformed input data, 1 internal or solver
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import aspurity, enumlp
from .asep import DEFAULT_TOL, verify_te
from .fixtures import TE_FIXTURES, load_fixture
from .magic import HAAR_MAX_QUBITS, haar_magic_stats, magic_bound, stabilizer_renyi
from .qcore import StateFormatError, average_marginal_purity, read_state, write_state
from .tesearch import SearchParams, search_te

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_USAGE = 64
EXIT_DATA = 65

BOUNDS_FORMAT = "tesh-bounds-v1"
IMPOSSIBLE_MARGIN = 1e-6
TABLE_MIN_N = 4
TABLE_MAX_N = 9
N7_NOTE = ("n=7: plain LP value; the strengthened bound obtained with additional "
           "quantum-code constraints is not implemented")

log = logging.getLogger("tesh")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "handler")}


def _emit(doc: dict, path: str | None = None) -> None:
    text = json.dumps(doc, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _load_input(args) -> np.ndarray:
    if args.fixture:
        return load_fixture(args.fixture)
    return read_state(args.state)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _n_range(text):
    m = re.fullmatch(r"(\d+)(?:\.\.(\d+))?", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if not TABLE_MIN_N <= lo <= hi <= TABLE_MAX_N:
        raise argparse.ArgumentTypeError(
            f"n-range must lie within {TABLE_MIN_N}..{TABLE_MAX_N}, got {text!r}")
    return list(range(lo, hi + 1))


# search

def cmd_search(args) -> int:
    params = SearchParams(max_iters=args.max_iters, initial_step=args.step,
                          threshold=args.threshold, gradient=args.gradient, eps=args.eps)
    summary = search_te(args.n, args.seeds, args.master_seed, params)
    out = Path(args.output_dir) if args.output_dir else None
    runs = []
    for i, res in enumerate(summary.results):
        rec = dict(res.summary(), index=i)
        if res.verified and out is not None:
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"te_n{args.n}_seed{i}.json"
            write_state(res.state, path)
            rec["file"] = str(path)
        runs.append(rec)
    doc = {"command": "search", "flags": _flags(args), "n": args.n,
           "successes": summary.successes, "runs": runs}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _emit(doc, str(out / "summary.json"))
    _emit(doc)
    return EXIT_OK if summary.successes else EXIT_NEGATIVE


# verify

def cmd_verify(args) -> int:
    if args.tol < 0:
        raise UsageError("--tol must be nonnegative")
    psi = _load_input(args)
    report = verify_te(psi, args.tol)
    report.extra["flags"] = _flags(args)
    print(report.to_json(indent=2))
    return EXIT_OK if report.verdict else EXIT_NEGATIVE


# table

def _fixture_row(n: int):
    name = TE_FIXTURES.get(n)
    if name is None:
        return None
    psi = load_fixture(name)
    if not verify_te(psi, DEFAULT_TOL).verdict:
        return None
    return {"fixture": name, "average_purity": average_marginal_purity(psi, n // 2)}


def bounds_table(ns, level: int, max_moment_side: int = aspurity.MAX_MOMENT_SIDE,
                 max_moments: int = aspurity.MAX_MOMENTS) -> tuple[list[dict], bool]:
    """Per-n rows with LP and SDP bounds and the existence verdict."""
    ub_cache: dict[int, dict] = {}
    rows, ok = [], True
    for n in ns:
        m = n // 2
        lp = enumlp.lp_lower_bound(n)
        if m not in ub_cache:
            try:
                r = aspurity.upper_bound(m, level, max_moment_side=max_moment_side,
                                         max_moments=max_moments)
                ub_cache[m] = {"value": r.value if r.ok else None, "status": r.status,
                               "iterations": r.iterations, "seconds": r.seconds,
                               "moment_side": r.moment_side}
            except aspurity.RelaxationTooLarge as exc:
                ub_cache[m] = {"value": None, "status": "refused", "size": exc.report}
        ub = ub_cache[m]
        row = {"n": n, "m": m, "lp_lower_bound": lp.value, "lp_status": lp.status,
               "sdp_upper_bound": ub["value"], "sdp_level": level, "sdp_status": ub["status"],
               "sdp_info": ub, "lp_seconds": lp.seconds, "verdict": None, "gap_width": None,
               "fixture": None, "note": N7_NOTE if n == 7 else ""}
        fx = _fixture_row(n)
        if lp.value is None or ub["value"] is None:
            row["verdict"] = "error"
            ok = False
        else:
            row["gap_width"] = ub["value"] - lp.value
            if lp.value > ub["value"] + IMPOSSIBLE_MARGIN:
                row["verdict"] = "impossible"
                if fx is not None:
                    raise RuntimeError(f"n={n}: verified fixture contradicts the bounds")
            elif fx is not None:
                row["verdict"] = "exists-known"
                row["fixture"] = fx
            else:
                row["verdict"] = "open"
        rows.append(row)
    return rows, ok


_COLUMNS = ["n", "lp_lower_bound", "sdp_upper_bound", "sdp_level", "verdict", "gap_width",
            "fixture", "note"]


def _cell(row, key):
    v = row[key]
    if key == "fixture":
        return v["fixture"] if v else ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return "" if v is None else str(v)


def render_table(rows, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_COLUMNS)
        for r in rows:
            w.writerow([_cell(r, k) for k in _COLUMNS])
        return buf.getvalue()
    lines = ["| " + " | ".join(_COLUMNS) + " |", "|" + "---|" * len(_COLUMNS)]
    for r in rows:
        lines.append("| " + " | ".join(_cell(r, k) for k in _COLUMNS) + " |")
    return "\n".join(lines) + "\n"


def cmd_table(args) -> int:
    rows, ok = bounds_table(args.n, args.sdp_level, args.max_moment_side, args.max_moments)
    sys.stdout.write(render_table(rows, args.format))
    doc = {"format": BOUNDS_FORMAT, "flags": _flags(args), "rows": rows}
    if args.json:
        _emit(doc, args.json)
    return EXIT_OK if ok else EXIT_ERROR


# magic

def cmd_magic(args) -> int:
    if args.alpha <= 0 or args.alpha == 1:
        raise UsageError("--alpha must be positive and different from 1")
    if args.haar:
        n, samples = args.haar
        if not 1 <= n <= HAAR_MAX_QUBITS or samples < 1:
            raise UsageError(f"--haar needs 1 <= n <= {HAAR_MAX_QUBITS} and samples >= 1")
        mean, std = haar_magic_stats(n, samples, args.seed, args.alpha)
        doc = {"command": "magic", "flags": _flags(args), "n": n, "alpha": args.alpha,
               "samples": samples, "mean": mean, "std": std, "bound": magic_bound(n)}
    else:
        psi = _load_input(args)
        doc = dict(stabilizer_renyi(psi, args.alpha).to_dict(), flags=_flags(args))
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tesh", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("search", help="gradient search from Haar-random seeds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=_positive_int, default=20)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=SearchParams.max_iters)
    p.add_argument("--step", type=float, default=SearchParams.initial_step)
    p.add_argument("--threshold", type=float, default=SearchParams.threshold)
    p.add_argument("--eps", type=float, default=SearchParams.eps)
    p.add_argument("--gradient", choices=["analytic", "finite-difference"], default="analytic")
    p.add_argument("--output-dir", help="directory for found states and summary.json")
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("verify", help="certify a state as threshold entangled")
    p.add_argument("state", nargs="?", help="tesh-state-v1 file")
    p.add_argument("--fixture", help="use a bundled fixture state instead of a file")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("table", help="LP and SDP bounds with existence verdicts")
    p.add_argument("--n", type=_n_range, default=_n_range("4..9"), help="N or A..B")
    p.add_argument("--sdp-level", type=_positive_int, default=2)
    p.add_argument("--format", choices=["csv", "markdown"], default="markdown")
    p.add_argument("--json", help="write the tesh-bounds-v1 report to this file")
    p.add_argument("--max-moment-side", type=_positive_int, default=aspurity.MAX_MOMENT_SIDE)
    p.add_argument("--max-moments", type=_positive_int, default=aspurity.MAX_MOMENTS)
    p.set_defaults(handler=cmd_table)

    p = sub.add_parser("magic", help="stabilizer Renyi entropy")
    p.add_argument("state", nargs="?", help="tesh-state-v1 file")
    p.add_argument("--fixture", help="use a bundled fixture state instead of a file")
    p.add_argument("--haar", type=int, nargs=2, metavar=("N", "SAMPLES"))
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_magic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; parse errors already carry the usage code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = args.handler
    del args.handler
    try:
        if args.command in ("verify", "magic") and not getattr(args, "haar", None):
            if bool(args.state) == bool(args.fixture):
                raise UsageError("give exactly one of a state file or --fixture")
        if args.command == "search" and not 4 <= args.n <= 9:
            raise UsageError("--n must be in 4..9")
        return handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tesh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StateFormatError, OSError) as exc:
        print(f"tesh: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - report and map to the internal-error code
        log.debug("internal error", exc_info=True)
        print(f"tesh: internal error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
