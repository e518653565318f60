"""Command-line interface.

Subcommands ``profile``, ``estimate``, ``simulate``, ``bounds`` and
``polyapprox`` write JSON or CSV to stdout (or ``--out``). Every output
starts with the resolved configuration: a ``"config"`` key in JSON, a
``# config:`` comment line in CSV.

Exit codes: 0 success, 1 usage or domain error, 2 numerical or convergence
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import bounds
from .errors import ConvergenceError, DiscriskError, DomainError, NumericalError
from .estimators import ESTIMATORS, applicable_estimators, estimate, fit_poisson_gamma
from .polyapprox import PolyApproxProblem, verify_appendix_bounds
from .profile import FrequencyProfile, profile_from_counts, profile_from_records, read_cell_counts, read_records
from .simulation import Family, Scenario, reproduce_tables, run_scenario, table_rows
from .smoothing import SmoothingSpec

# not echoed so that output is identical for any destination or worker count
_UNECHOED = ("out", "threads", "func")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# Serialisation ---------------------------------------------------------------


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float printed to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, int, float, np.bool_, np.integer, np.floating)):
        return _num(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [inner + dumps(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return _num(v)


def _csv(config: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _records_csv(config: dict, records: list[dict]) -> str:
    flat = [_flatten(r) for r in records]
    header: list[str] = []
    for r in flat:
        header += [k for k in r if k not in header]
    return _csv(config, header, [[r.get(k) for k in header] for r in flat])


# Subcommands -----------------------------------------------------------------
# Each returns (json_payload, csv_header, csv_rows).


def _open_input(path: str):
    return sys.stdin if path == "-" else open(path, newline="")


def _cmd_profile(args):
    with _open_input(args.input) as fh:
        if args.counts:
            prof = profile_from_counts(read_cell_counts(fh))
        else:
            keys = [c for c in args.key_cols.split(",") if c] if args.key_cols else None
            prof = profile_from_records(read_records(fh, keys))
    rows = [[i, c] for i, c in sorted(prof.z.items())]
    return prof.to_json(), ["i", "z"], rows


def _load_profile(path: str) -> FrequencyProfile:
    with _open_input(path) as fh:
        obj = json.load(fh)
    if "data" in obj and "z" not in obj:
        obj = obj["data"]
    return FrequencyProfile.from_json(obj)


def _cmd_estimate(args):
    prof = _load_profile(args.profile)
    lam = args.lam
    if args.estimator == ["all"] or args.estimator is None:
        names = applicable_estimators(lam)
    else:
        names = tuple(args.estimator)
    smoothing = {}
    if args.beta is not None:
        smoothing["poisson"] = SmoothingSpec.poisson(args.beta)
    if args.x0 is not None:
        smoothing["binomial2"] = SmoothingSpec.binomial2(args.x0, lam)
    # with "all", an estimator that cannot run on this profile is reported, not fatal
    lenient = args.estimator in (None, ["all"])
    pg_fit = pg_error = None
    if any(n in ("bethlehem", "skinner") for n in names):
        try:
            pg_fit = fit_poisson_gamma(prof, args.nbar, frame=args.pg_frame)
        except DomainError as exc:
            if not lenient:
                raise
            pg_error = exc
    reports = []
    for name in names:
        try:
            if pg_error is not None and name in ("bethlehem", "skinner"):
                raise pg_error
            rep = estimate(name, prof, lam, args.nbar, smoothing=smoothing.get(name),
                           n_nominal=args.n_nominal, theta_convention=args.theta_convention,
                           pg_frame=args.pg_frame, pg_fit=pg_fit).to_json()
        except DomainError as exc:
            if not lenient:
                raise
            rep = {"name": name, "value": None, "clamped": None, "lambda": lam, "smoothing": None,
                   "fitted": {}, "bounds": {}, "error": str(exc)}
        reports.append(rep)
    return reports, None, reports


def _cmd_simulate(args):
    workers = max(1, args.threads)
    if args.table is not None:
        reports = reproduce_tables(args.table, args.seed, args.iterations, args.scale, workers=workers)
        header, rows = table_rows(reports)
        return {"table": args.table, "header": header, "rows": rows,
                "reports": [r.to_json() for r in reports]}, header, rows
    if args.family is None or args.cells is None or args.nbar is None or args.n is None:
        raise UsageError("simulate needs --table, or all of --family --cells --nbar --n")
    sc = Scenario(Family.parse(args.family), args.cells, args.nbar, args.n, args.iterations,
                  args.seed, args.mode)
    names = None if args.estimator in (None, ["all"]) else tuple(args.estimator)
    rep = run_scenario(sc, names, workers=workers)
    header = ["estimator", "mean", "sd", "mse", "failures"]
    rows = [["true", rep.true_tau1_mean, rep.true_tau1_sd, None, None]]
    rows += [[k, s.mean, s.sd, s.mse, s.failures] for k, s in rep.estimators.items()]
    return rep.to_json(), header, rows


def _cmd_bounds(args):
    if args.lambda_steps < 1:
        raise UsageError("--lambda-steps must be positive")
    if args.lambda_steps == 1:
        lams = [args.lambda_min]
    else:
        lams = np.linspace(args.lambda_min, args.lambda_max, args.lambda_steps).tolist()
    if min(lams) < 1:
        raise DomainError("bound curves need lambda >= 1")
    curves = bounds.bound_curves(lams, args.n, args.K)
    rows = [[c.kind, lam, n, v] for c in curves for lam, n, v in c.points]
    payload = {
        "curves": [{"kind": c.kind, "constants": c.constants,
                    "points": [{"lambda": lam, "n": n, "value": v} for lam, n, v in c.points]}
                   for c in curves],
        "sup_constants": {"poisson": bounds.sup_constant("poisson"),
                          "binomial2": bounds.sup_constant("binomial2")},
    }
    return payload, ["kind", "lambda", "n", "value"], rows


def _cmd_polyapprox(args):
    if args.xi is not None:
        if args.B is None:
            raise UsageError("--xi needs --B")
        prob = PolyApproxProblem(args.xi, args.B, args.L)
    else:
        if args.n is None or args.lam is None:
            raise UsageError("polyapprox needs --n and --lambda, or --xi and --B")
        prob = PolyApproxProblem.from_model(args.n, args.lam, args.L, c0=args.c0, B=args.B)
    rep = verify_appendix_bounds(prob, zeta=args.zeta, check_rescaling=args.check_rescaling).to_json()
    return rep, ["key", "value"], [[k, v] for k, v in rep.items()]


# Parser ----------------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--out", help="output path (default stdout)")
    g.add_argument("--format", choices=("json", "csv"), help="output format")
    g.add_argument("--threads", type=int, default=1, help="worker processes for simulate")
    g.add_argument("--seed", type=_u64, default=0, help="random seed")

    ap = _Parser(prog="discrisk", description="Estimate and study sample uniques that are population uniques.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("profile", parents=[common], help="frequency-of-frequencies profile of a sample")
    p.add_argument("--in", dest="input", default="-", help="input file, '-' for stdin")
    p.add_argument("--key-cols", help="comma-separated CSV columns forming the cell key")
    p.add_argument("--counts", action="store_true", help="input is a 'cell,count' CSV")
    p.set_defaults(func=_cmd_profile, default_format="json")

    p = sub.add_parser("estimate", parents=[common], help="estimate tau_1 from a profile")
    p.add_argument("--profile", required=True, help="profile JSON file")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--nbar", type=int, help="population size for the baseline estimators")
    p.add_argument("--estimator", action="append", choices=("all",) + ESTIMATORS,
                   help="repeatable; default all applicable")
    p.add_argument("--beta", type=float, help="Poisson smoothing parameter (default optimal)")
    p.add_argument("--x0", type=int, help="Binomial truncation point (default optimal)")
    p.add_argument("--n-nominal", type=int, help="sample size used for optimal smoothing")
    p.add_argument("--theta-convention", choices=("shifted", "standard"), default="shifted")
    p.add_argument("--pg-frame", choices=("population", "sample"), default="population")
    p.set_defaults(func=_cmd_estimate, default_format="json")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo study or results table")
    p.add_argument("--table", type=int, choices=(1, 2, 3))
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--scale", type=float, default=1.0, help="shrink cells and sizes proportionally")
    p.add_argument("--family", help="zipf:<s>, uniform or dirichlet:<beta>")
    p.add_argument("--cells", type=int)
    p.add_argument("--nbar", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=("fixed", "poisson"), default="fixed")
    p.add_argument("--estimator", action="append", choices=("all",) + ESTIMATORS)
    p.set_defaults(func=_cmd_simulate, default_format="csv")

    p = sub.add_parser("bounds", parents=[common], help="risk bound curves")
    p.add_argument("--lambda-min", type=float, default=1.0)
    p.add_argument("--lambda-max", type=float, default=20.0)
    p.add_argument("--lambda-steps", type=int, default=20)
    p.add_argument("--n", type=float, action="append", required=True, help="repeatable")
    p.add_argument("--K", type=float, default=1.0, help="constant of the minimax lower bound")
    p.set_defaults(func=_cmd_bounds, default_format="csv")

    p = sub.add_parser("polyapprox", parents=[common], help="best polynomial approximation lab")
    p.add_argument("--n", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--xi", type=float)
    p.add_argument("--B", type=float)
    p.add_argument("--c0", type=float, default=1.0 / math.e)
    p.add_argument("--zeta", type=float, default=0.5)
    p.add_argument("--check-rescaling", action="store_true")
    p.set_defaults(func=_cmd_polyapprox, default_format="json")
    return ap


def _render(args, payload, header, rows) -> str:
    fmt = args.format or args.default_format
    config = {k: v for k, v in vars(args).items() if k not in _UNECHOED and k != "default_format"}
    config["format"] = fmt
    if fmt == "json":
        return dumps({"config": config, "data": payload}) + "\n"
    if header is None:
        return _records_csv(config, rows)
    return _csv(config, header, rows)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        payload, header, rows = args.func(args)
        text = _render(args, payload, header, rows)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ConvergenceError, NumericalError) as exc:
        print(f"discrisk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (DomainError, DiscriskError) as exc:
        print(f"discrisk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"discrisk: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
