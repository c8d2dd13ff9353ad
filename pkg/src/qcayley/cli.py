"""Command-line front end producing JSON/CSV reports.

Every subcommand builds a report, checks its embedded assertions and writes
the report atomically.  Exit status: 0 when every assertion passes, 1 with a
JSON diagnostic on stderr when one fails, 2 on a usage error.

Output goes to ``--out`` if given, else to ``$QCAYLEY_OUTPUT_DIR/<command>.<fmt>``
if that variable is set, else to stdout.  Reports carry no timestamps, so the
same arguments give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import cayley_model as cm
from . import ncderiv as nd
from . import shift_spectra as ss
from .fusion import FusionParams, IndexDomainError, ParameterDomainError, weight_table

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "QCAYLEY_OUTPUT_DIR"
DEFAULT_SCHEDULE = (100, 200, 400, 800, 1600)


class UsageError(ValueError):
    """Arguments parse but describe an invalid run."""


@dataclass
class Report:
    """Payload plus the assertions that decide the exit status."""

    command: str
    config: Dict[str, object]
    results: Dict[str, object]
    assertions: Dict[str, bool] = field(default_factory=dict)
    csv_header: Optional[List[str]] = None
    csv_rows: List[List[object]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def failures(self) -> List[str]:
        return [k for k, v in self.assertions.items() if not v]

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "pass": self.passed,
            "assertions": self.assertions,
            "results": self.results,
        }

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, allow_nan=True) + "\n"
        if self.csv_header is None:
            raise UsageError(f"{self.command} has no CSV form; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header)
        for row in self.csv_rows:
            w.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return v


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _params(args) -> FusionParams:
    if args.N is not None:
        delta = args.N
    elif args.delta is not None:
        delta = args.delta
    else:
        raise UsageError("one of --delta or --N is required")
    return FusionParams(delta, exact_mode=args.exact)


def _delta_str(p: FusionParams) -> str:
    return str(p.delta)


def _parse_schedule(text: str) -> List[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"schedule must be comma-separated integers, got {text!r}")
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("schedule entries must be positive")
    return out


def _parse_sign_block(text: str) -> Tuple[str, str]:
    parts = [p.strip() for p in text.replace(":", ",").split(",")]
    if len(parts) != 2 or tuple(parts) not in cm.DEFAULT_SIGNS:
        allowed = ", ".join(f"{a},{b}" for a, b in cm.DEFAULT_SIGNS)
        raise argparse.ArgumentTypeError(f"unknown block {text!r}; choose from {allowed}")
    return parts[0], parts[1]


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _load_relations(path: Optional[str], N: int) -> Tuple[Optional[List[nd.NcPoly]], str]:
    if path is None:
        return None, "orthogonality"
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read relations from {path}: {exc}")
    items = data["relations"] if isinstance(data, dict) else data
    return [nd.poly_from_json(p) for p in items], path


def _shift_for(args, n: int) -> Tuple[ss.WeightedShift, Dict[str, object]]:
    kind = args.weights
    if kind == "unit":
        return ss.WeightedShift.unit(n), {"weights": "unit"}
    if kind == "random":
        rng = np.random.default_rng(args.seed)
        return ss.WeightedShift.random(n, rng), {"weights": "random", "seed": args.seed}
    params = _params(args)
    if args.sector < 1:
        raise UsageError("FO weights need --sector >= 1")
    return ss.from_cayley(params, args.sector, n), {
        "weights": "fo",
        "delta": _delta_str(params),
        "sector": args.sector,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_weights(args) -> Report:
    params = _params(args)
    table = weight_table(params, args.sector, args.kmax)
    records = table.to_records()
    assertions = {
        "weights_in_unit_interval": all(
            0 <= table[k].s_squared <= 1 and 0 <= table[k].c_squared <= 1 for k in table.levels()
        ),
    }
    if params.exact_mode:
        assertions["c2_plus_s2_is_one_exactly"] = all(
            table[k].c_squared + table[k].s_squared == 1 for k in table.levels()
        )
    else:
        assertions["c2_plus_s2_is_one"] = all(
            abs(table[k].c_squared + table[k].s_squared - 1) <= 1e-15 for k in table.levels()
        )
    if args.sector >= 1:
        assertions["s_ll_is_one"] = table[args.sector].s_squared == 1
    else:
        assertions["s_k0_is_zero"] = all(table[k].s_squared == 0 for k in table.levels())
    return Report(
        command="weights",
        config={"delta": _delta_str(params), "sector": args.sector, "k_max": args.kmax, "exact": params.exact_mode},
        results={"weights": records},
        assertions=assertions,
        csv_header=["k", "c_squared", "s_squared", "c", "s"],
        csv_rows=[[r["k"], r["c_squared"], r["s_squared"], r["c"], r["s"]] for r in records],
    )


def cmd_theta_verify(args) -> Report:
    params = _params(args)
    spec = cm.SectorSpec(params, args.sector, args.kmax)
    signs = None
    if args.flip_sign:
        signs = dict(cm.DEFAULT_SIGNS)
        for block in args.flip_sign:
            signs[block] = -signs[block]
    report = cm.verify_identities(spec, tol=args.tol, signs=signs)
    body = report.to_json()
    config = {
        "delta": _delta_str(params),
        "sector": args.sector,
        "k_max": args.kmax,
        "tol": args.tol,
        "exact": params.exact_mode,
        "flipped_blocks": [list(b) for b in (args.flip_sign or [])],
    }
    return Report(
        command="theta-verify",
        config=config,
        results=body,
        assertions={c.name: c.passed for c in report.checks},
        csv_header=["identity", "max_deviation", "pass", "mask_depth", "mask_size"],
        csv_rows=[[c.name, c.max_deviation, c.passed, c.depth, c.mask_size] for c in report.checks],
    )


def cmd_spectrum(args) -> Report:
    n = args.n
    if args.operator == "re-theta":
        params = _params(args)
        spec = cm.SectorSpec(params.as_float(), args.sector, args.kmax)
        lam, V = cm.re_theta_spectrum(spec)
        mass = np.full(len(lam), 1.0 / len(lam))
        mu = ss.SpectralMeasure(lam, mass)
        config = {
            "operator": "re-theta",
            "delta": _delta_str(params),
            "sector": args.sector,
            "k_max": args.kmax,
            "state": "normalized trace",
        }
    else:
        shift, meta = _shift_for(args, n)
        mu = ss.spectral_measure(shift)
        config = {"operator": "re-r", "n": n, "state": "delta_0", **meta}
    lam = mu.eigenvalues
    assertions = {
        "total_mass_is_one": abs(mu.total_mass() - 1.0) <= 1e-10,
        "spectrum_in_unit_interval": bool(np.all(np.abs(lam) <= 1.0 + 1e-12)),
    }
    if args.operator == "re-r":
        assertions["spectrum_strictly_inside"] = bool(np.all(np.abs(lam) < 1.0))
    return Report(
        command="spectrum",
        config=config,
        results={"n_atoms": len(mu), **mu.to_json()},
        assertions=assertions,
        csv_header=["lambda", "mass"],
        csv_rows=[[float(a), float(m)] for a, m in zip(lam, mu.masses)],
    )


def cmd_moments(args) -> Report:
    k_max = args.kmax
    n = args.n if args.n is not None else k_max + 1
    shift, meta = _shift_for(args, n)
    dyck = ss.moments_dyck(shift, k_max)
    eig = ss.eigen_moments(shift, k_max)
    rows = []
    compared_ok = True
    dominated = True
    for k in range(k_max + 1):
        m = dyck.m(k)
        semi = ss.semicircle_moment(k)
        diff = abs(float(m) - float(eig[k]))
        in_range = k <= n - 1
        if in_range:
            compared_ok &= diff <= 1e-10
        dominated &= (m <= semi) if isinstance(m, Fraction) else (m <= float(semi) + 1e-15)
        rows.append(
            {
                "order": 2 * k,
                "dyck": float(m),
                "dyck_exact": str(m) if isinstance(m, Fraction) else None,
                "eigen": float(eig[k]),
                "abs_diff": diff,
                "semicircle": float(semi),
                "compared": in_range,
            }
        )
    return Report(
        command="moments",
        config={"k_max": k_max, "n": n, **meta},
        results={"moments": rows},
        assertions={"dyck_equals_eigen": bool(compared_ok), "dominated_by_semicircle": bool(dominated)},
        csv_header=["order", "dyck", "dyck_exact", "eigen", "abs_diff", "semicircle"],
        csv_rows=[[r["order"], r["dyck"], r["dyck_exact"] or "", r["eigen"], r["abs_diff"], r["semicircle"]] for r in rows],
    )


def cmd_detclass(args) -> Report:
    schedule = args.schedule or list(DEFAULT_SCHEDULE)
    k_series = args.kmax_moments
    n = max(max(schedule), k_series + 1)
    shift, meta = _shift_for(args, n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ss.PrecisionWarning)
        rep = ss.detclass_report(
            shift, schedule=schedule, tol=args.tol, weighted=not args.unweighted, series_k_max=k_series or None
        )
    body = rep.to_json()
    body["precision_warnings"] = [str(w.message) for w in caught if issubclass(w.category, ss.PrecisionWarning)]
    assertions = {
        "all_finite": rep.all_finite,
        "converged": rep.converged,
        "above_lower_bound": all(v >= rep.lower_bound for v in rep.values),
    }
    if rep.series is not None:
        unit_partial = rep.series.unit_partial_sum
        assertions["series_dominates_unit"] = rep.series.partial_sum >= unit_partial - 1e-12
    return Report(
        command="detclass",
        config={"schedule": schedule, "tol": args.tol, "kmax_moments": k_series, "weighted": not args.unweighted, **meta},
        results=body,
        assertions=assertions,
        csv_header=["n", "value", "range_proxy"],
        csv_rows=[[n_, v, rp] for n_, v, rp in zip(rep.schedule, rep.values, rep.range_proxy)],
    )


def cmd_derive_check(args) -> Report:
    F, source = _load_relations(args.relations, args.N)
    res = nd.closed_form_check(args.N, F)
    return Report(
        command="derive-check",
        config={"N": args.N, "relations": source},
        results=res,
        assertions={"closed_forms_match": res["pass"]},
        csv_header=["relation", "variable", "expected", "got"],
        csv_rows=[
            ["F{}_{}{}".format(*m["relation"]), "x{}{}".format(*m["variable"]), m["expected"], m["got"]]
            for m in res["mismatches"]
        ],
    )


def cmd_rank(args) -> Report:
    F, source = _load_relations(args.relations, args.N)
    expected = args.N * (args.N + 1) // 2
    ranks = nd.scalar_point_ranks(args.N, points=args.points, seed=args.seed, tol=args.tol, F=F)
    return Report(
        command="rank",
        config={"N": args.N, "points": args.points, "seed": args.seed, "tol": args.tol, "relations": source},
        results={"ranks": ranks, "expected": expected},
        assertions={"rank_equals_tangent_dimension": all(r == expected for r in ranks)},
        csv_header=["point", "rank", "expected"],
        csv_rows=[[i, r, expected] for i, r in enumerate(ranks)],
    )


COMMANDS: Dict[str, Callable[[argparse.Namespace], Report]] = {
    "weights": cmd_weights,
    "theta-verify": cmd_theta_verify,
    "spectrum": cmd_spectrum,
    "moments": cmd_moments,
    "detclass": cmd_detclass,
    "derive-check": cmd_derive_check,
    "rank": cmd_rank,
}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_delta(p: argparse.ArgumentParser, required: bool) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--delta", type=float, help="dimension parameter (>= 2)")
    g.add_argument("--N", type=int, help="integer dimension, sets delta = N")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help=f"output file ('-' for stdout); default ${OUTPUT_DIR_ENV}/<command>.<format> or stdout")


def _add_exact(p: argparse.ArgumentParser, default: bool) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="exact", action="store_true", help="rational arithmetic")
    g.add_argument("--float", dest="exact", action="store_false", help="floating point")
    p.set_defaults(exact=default)


def _add_shift(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", choices=("unit", "fo", "random"), default="fo")
    p.add_argument("--sector", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_delta(p, required=False)
    _add_exact(p, default=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcayley", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="weight table of one sector")
    _add_delta(p, required=True)
    p.add_argument("--sector", type=int, default=1)
    p.add_argument("--kmax", type=int, default=40)
    _add_exact(p, default=True)
    _add_output(p)

    p = sub.add_parser("theta-verify", help="identity checks for the reversing operator")
    _add_delta(p, required=True)
    p.add_argument("--sector", type=int, default=1)
    p.add_argument("--kmax", type=int, default=40)
    p.add_argument("--tol", type=_positive_float, default=1e-12)
    p.add_argument(
        "--flip-sign",
        type=_parse_sign_block,
        action="append",
        metavar="SRC,DST",
        help="negate one block of theta (repeatable), e.g. '++,+-'",
    )
    _add_exact(p, default=True)
    _add_output(p)

    p = sub.add_parser("spectrum", help="spectral measure of Re r or Re theta")
    p.add_argument("--operator", choices=("re-r", "re-theta"), default="re-r")
    p.add_argument("--n", type=int, default=200, help="truncation size for re-r")
    p.add_argument("--kmax", type=int, default=40, help="sector truncation for re-theta")
    _add_shift(p)
    _add_output(p)

    p = sub.add_parser("moments", help="Dyck-path versus eigenvalue moments")
    p.add_argument("--kmax", type=int, default=10, help="largest moment index k (order 2k)")
    p.add_argument("--n", type=int, default=None, help="truncation size (default kmax + 1)")
    _add_shift(p)
    _add_output(p)

    p = sub.add_parser("detclass", help="determinant-class functional along a truncation schedule")
    p.add_argument("--schedule", type=_parse_schedule, default=None, help="comma-separated sizes")
    p.add_argument("--kmax-moments", type=int, default=1000, help="series order (0 disables)")
    p.add_argument("--tol", type=_positive_float, default=1e-2)
    p.add_argument("--unweighted", action="store_true", help="drop the (1 - t^2)^-1 factor")
    _add_shift(p)
    _add_output(p)

    p = sub.add_parser("derive-check", help="closed-form check of the derivative of the orthogonality relations")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--relations", help="JSON file with a 'relations' list of polynomials")
    _add_output(p)

    p = sub.add_parser("rank", help="rank of the evaluated derivative at random SO(N) points")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--relations", help="JSON file with a 'relations' list of polynomials")
    _add_output(p)
    return parser


def _validate(args) -> None:
    for name in ("kmax", "n", "points", "kmax_moments"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 0")
    if getattr(args, "n", None) == 0:
        raise UsageError("--n must be >= 1")
    if args.command in ("derive-check", "rank") and args.N < 2:
        raise UsageError("--N must be >= 2")
    if getattr(args, "sector", 0) < 0:
        raise UsageError("--sector must be >= 0")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qcayley-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _destination(args) -> Optional[str]:
    if args.out:
        return None if args.out == "-" else args.out
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory:
        return os.path.join(directory, f"{args.command}.{args.format}")
    return None


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on malformed flags
    try:
        _validate(args)
        report = COMMANDS[args.command](args)
        text = report.render(args.format)
    except (UsageError, ParameterDomainError, IndexDomainError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2

    dest = _destination(args)
    if dest is None:
        sys.stdout.write(text)
    else:
        write_atomic(dest, text)

    if not report.passed:
        diag = {
            "schema_version": SCHEMA_VERSION,
            "command": report.command,
            "pass": False,
            "failed_assertions": report.failures(),
        }
        if report.command == "theta-verify":
            diag["deviations"] = {
                k: report.results["identities"][k]["max_deviation"] for k in report.failures()
            }
        print(json.dumps(diag, indent=2), file=sys.stderr)
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
