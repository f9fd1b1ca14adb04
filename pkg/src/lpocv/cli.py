"""Command-line surface with stable machine-readable output.

Every verb writes one JSON result (schema_version field included) either to
stdout or atomically to --out; tabular verbs also write a CSV via --csv and
render a matplotlib figure next to it.  Errors exit nonzero with a structured
JSON object on stderr and never leave partial output files behind.
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

import numpy as np

SCHEMA_VERSION = 1


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _format_number(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f) or math.isinf(f):
        raise CliError("non-finite", f"refusing to serialize non-finite value {f}")
    return f"{f:.17g}"  # 17 significant digits: float64 round-trips exactly


def dumps_json(obj, indent: int = 0, _depth: int = 0) -> str:
    """JSON text with floats at 17 significant digits, stable key order."""
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, int, float, np.integer, np.floating)):
        return _format_number(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [dumps_json(v, indent, _depth) for v in obj]
        return "[" + ", ".join(items) + "]"
    if isinstance(obj, dict):
        items = [f"{json.dumps(str(k))}: {dumps_json(v, indent, _depth + 1)}"
                 for k, v in obj.items()]
        if indent:
            inner = " " * (indent * (_depth + 1))
            outer = " " * (indent * _depth)
            return "{\n" + inner + (",\n" + inner).join(items) + "\n" + outer + "}"
        return "{" + ", ".join(items) + "}"
    raise CliError("unserializable", f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lpocv-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def emit_result(payload: dict, out_path: str | None) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    text = dumps_json(payload, indent=2) + "\n"
    if out_path:
        atomic_write_text(out_path, text)
    else:
        sys.stdout.write(text)


def write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_number(v) if isinstance(v, (int, float, np.floating, np.integer))
                         else v for v in row])
    atomic_write_text(path, buf.getvalue())


def figure_path(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".png"


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def ingest_samples(path: str, column: str | None = None):
    """Sample from newline-delimited reals, or a CSV column; line-addressed errors."""
    from .estimator import Sample

    try:
        with open(path, "r", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError("io-error", f"cannot read {path}: {exc}")
    values = []
    if column is not None:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise CliError("parse-error", f"{path}: no column named {column!r}")
        for lineno, row in enumerate(reader, start=2):
            raw = (row.get(column) or "").strip()
            _append_value(values, raw, path, lineno)
    else:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            raw = raw.strip()
            if raw == "":
                continue
            _append_value(values, raw, path, lineno)
    if not values:
        raise CliError("empty-input", f"{path}: no observations found")
    return Sample(np.asarray(values, dtype=np.float64))


def _append_value(values, raw: str, path: str, lineno: int) -> None:
    try:
        v = float(raw)
    except ValueError:
        raise CliError("parse-error", f"{path}:{lineno}: cannot parse {raw!r} as a real")
    if not 0.0 <= v <= 1.0:
        raise CliError("out-of-range", f"{path}:{lineno}: value {v} outside [0, 1]")
    values.append(v)


def parse_model(text: str):
    from .bases import model_from_descriptor

    try:
        desc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("parse-error", f"bad model descriptor JSON: {exc}")
    try:
        return model_from_descriptor(desc)
    except ValueError as exc:
        raise CliError("bad-model", str(exc))


def parse_density(text: str):
    """Density from inline descriptor JSON or from a JSON file path."""
    from .simulation import density_from_descriptor

    raw = text
    if not text.lstrip().startswith("{"):
        try:
            with open(text) as fh:
                raw = fh.read()
        except OSError as exc:
            raise CliError("io-error", f"cannot read density file {text}: {exc}")
    try:
        desc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError("parse-error", f"bad density descriptor JSON: {exc}")
    try:
        return density_from_descriptor(desc)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError("bad-density", str(exc))


def resolve_requested_p(arg: str, n: int) -> int:
    from .selection import auto_p

    if arg == "auto":
        if n < 29:
            raise CliError("invalid-p", f"--p auto needs n >= 29, got n={n}")
        try:
            return auto_p(n)
        except ValueError as exc:
            raise CliError("no-admissible-p", str(exc))
    try:
        p = int(arg)
    except ValueError:
        raise CliError("invalid-p", f"--p must be an integer or 'auto', got {arg!r}")
    if not 1 <= p <= n - 1:
        raise CliError("invalid-p", f"--p {p} outside 1..{n - 1}")
    return p


def default_threads() -> int:
    env = os.environ.get("LPOCV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def cmd_risk(args) -> int:
    from .lpo import CapExceeded, lpo_risk_brute, lpo_risk_closed

    model = parse_model(args.model)
    sample = ingest_samples(args.input, args.column)
    p = resolve_requested_p(args.p, sample.n)
    try:
        if args.brute:
            risk = lpo_risk_brute(model, sample, p, cap=args.cap)
        else:
            risk = lpo_risk_closed(model, sample, p)
    except CapExceeded as exc:
        raise CliError("cap-exceeded", str(exc))
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc))
    emit_result({"verb": "risk", "model": model.describe(), "n": risk.n, "p": risk.p,
                 "risk": risk.value, "method": "brute" if args.brute else "closed"},
                args.out)
    return 0


def cmd_select(args) -> int:
    from .selection import build_collection, select_model

    sample = ingest_samples(args.input, args.column)
    p = resolve_requested_p(args.p, sample.n)
    try:
        collection = build_collection(args.collection, sample.n, args.phi,
                                      args.degree_bound)
        result = select_model(collection, sample, p, threads=args.threads)
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc))
    emit_result({"verb": "select", "collection": args.collection, "phi": args.phi,
                 "n": sample.n, "p": p, **result.describe()}, args.out)
    if args.csv:
        dims = [m.dim for m in collection.models]
        write_csv(args.csv, ["dimension", "lpo_risk"], zip(dims, result.risks))
        from .plots import risk_curve_figure
        risk_curve_figure(dims, result.risks, result.chosen.dim, figure_path(args.csv))
    return 0


def cmd_check(args) -> int:
    from .selection import build_collection, check_assumptions

    density = parse_density(args.density) if args.density else None
    try:
        collection = build_collection(args.collection, args.n, args.phi,
                                      args.degree_bound, max_dim=args.max_dim)
        report = check_assumptions(collection, args.n, density)
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc))
    emit_result({"verb": "check", "collection": args.collection, "n": args.n,
                 "phi": args.phi, "max_dim": collection.max_dim,
                 "models": len(collection), **report.describe()}, args.out)
    return 0


def cmd_moments(args) -> int:
    from .moments import moment_report
    from .simulation import density_moments

    model = parse_model(args.model)
    density = parse_density(args.density)
    if args.n < 2:
        raise CliError("invalid-argument", "need n >= 2")
    p = resolve_requested_p(args.p, args.n)
    try:
        report = moment_report(density_moments(density, model), args.n, p)
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc))
    emit_result({"verb": "moments", "model": model.describe(), "n": report.n,
                 "p": report.p, "mean": report.mean, "variance": report.variance,
                 "bias": report.bias}, args.out)
    return 0


def cmd_penalty_sweep(args) -> int:
    from .penalty import lpo_penalty, overpen_factor

    model = parse_model(args.model)
    sample = ingest_samples(args.input, args.column)
    n = sample.n
    if n < 2:
        raise CliError("invalid-argument", "penalty sweep needs n >= 2")
    rows = []
    for p in range(1, n):
        dec = lpo_penalty(model, sample, p)
        rows.append((p, dec.lpo_penalty, overpen_factor(n, p)))
    emit_result({"verb": "penalty-sweep", "model": model.describe(), "n": n,
                 "empirical_risk": lpo_penalty(model, sample, 1).empirical_risk,
                 "rows": [{"p": p, "penalty": pen, "overpen_factor": c}
                          for p, pen, c in rows]}, args.out)
    if args.csv:
        write_csv(args.csv, ["p", "penalty", "overpen_factor"], rows)
        from .plots import penalty_sweep_figure
        penalty_sweep_figure([r[0] for r in rows], [r[1] for r in rows],
                             [r[2] for r in rows], figure_path(args.csv))
    return 0


def cmd_density_grid(args) -> int:
    from .estimator import eval_density, fit_projection

    model = parse_model(args.model)
    sample = ingest_samples(args.input, args.column)
    est = fit_projection(model, sample)
    xs = np.linspace(0.0, 1.0, args.grid_points)
    vals = eval_density(est, xs)
    emit_result({"verb": "density-grid", "model": model.describe(), "n": sample.n,
                 "grid_points": args.grid_points, **est.describe()}, args.out)
    if args.csv:
        write_csv(args.csv, ["x", "density"], zip(xs, vals))
        from .plots import density_grid_figure
        density_grid_figure(xs, vals, figure_path(args.csv), label=model.label)
    return 0


def _load_experiment_config(path: str):
    from .simulation import ExperimentConfig, density_from_descriptor

    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise CliError("io-error", f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError("parse-error", f"{path}: {exc}")
    try:
        return ExperimentConfig(
            density=density_from_descriptor(raw["density"]),
            collection_kind=raw["collection"],
            n_grid=tuple(raw["n_grid"]),
            p_rule=raw.get("p_rule", "half"),
            replications=int(raw.get("replications", 200)),
            seed=int(raw.get("seed", 0)),
            phi=float(raw.get("phi", 1.0)),
            degree_bound=int(raw.get("degree_bound", 1)))
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError("bad-config", f"{path}: {exc}")


def cmd_simulate(args) -> int:
    import dataclasses

    from .simulation import adaptivity_slope_experiment, oracle_ratio_experiment

    config = _load_experiment_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    try:
        if args.mode == "oracle-ratio":
            report = oracle_ratio_experiment(config)
        else:
            report = adaptivity_slope_experiment(config)
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc))
    emit_result({"verb": f"simulate {args.mode}", **report}, args.out)
    if args.csv:
        rows = report["rows"]
        if args.mode == "oracle-ratio":
            write_csv(args.csv, ["n", "mean_risk", "oracle_risk", "ratio"],
                      [(r["n"], r["mean_loss"], r["oracle_risk"], r["ratio"]) for r in rows])
            from .plots import oracle_ratio_figure
            oracle_ratio_figure(rows, figure_path(args.csv))
        else:
            write_csv(args.csv, ["n", "mean_risk", "oracle_risk", "se"],
                      [(r["n"], r["mean_loss"], r["oracle_risk"], r["se_loss"]) for r in rows])
            from .plots import adaptivity_figure
            adaptivity_figure(rows, report["slope"], report["intercept"],
                              figure_path(args.csv))
    return 0


def cmd_verify(args) -> int:
    from .verify import run_verification

    results = run_verification(cases=args.cases, seed=args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        sys.stdout.write(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}\n")
    payload = {"verb": "verify",
               "results": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                           for r in results],
               "all_passed": all(r.passed for r in results)}
    if args.out:
        emit_result(payload, args.out)
    return 0 if payload["all_passed"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpocv",
        description="Closed-form leave-p-out cross-validation for projection "
                    "density estimators on [0,1].")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_io(p, csv_help="also write this CSV (a PNG lands next to it)"):
        p.add_argument("--out", help="write the JSON result here (default: stdout)")
        p.add_argument("--csv", help=csv_help)

    def add_input(p):
        p.add_argument("--input", required=True, help="sample file (newline reals or CSV)")
        p.add_argument("--column", help="CSV column holding the observations")

    p = sub.add_parser("risk", help="leave-p-out risk of one model")
    add_input(p)
    p.add_argument("--model", required=True, help="model descriptor JSON")
    p.add_argument("--p", required=True, help="test-set size, or 'auto'")
    p.add_argument("--brute", action="store_true", help="force the enumeration oracle")
    p.add_argument("--cap", type=int, default=10 ** 6, help="enumeration cap")
    p.add_argument("--out", help="write the JSON result here (default: stdout)")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("select", help="risk-minimizing model over a collection")
    add_input(p)
    p.add_argument("--collection", required=True, choices=["Pc", "Pp", "Tp"])
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--degree-bound", type=int, default=1, dest="degree_bound")
    p.add_argument("--p", required=True, help="test-set size, or 'auto'")
    p.add_argument("--threads", type=int, default=default_threads())
    add_io(p, "risk-curve CSV (dimension, risk); PNG lands next to it")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("check", help="assumption report for a collection")
    p.add_argument("--collection", required=True, choices=["Pc", "Pp", "Tp"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--degree-bound", type=int, default=1, dest="degree_bound")
    p.add_argument("--max-dim", type=int, default=None, dest="max_dim",
                   help="override the dimension cap (assumption probing)")
    p.add_argument("--density", help="density descriptor JSON (enables the (Ad) check)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("moments", help="mean/variance/bias of the risk estimator")
    p.add_argument("--model", required=True)
    p.add_argument("--density", required=True, help="density descriptor JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("penalty-sweep", help="penalty and C_over for p = 1..n-1")
    add_input(p)
    p.add_argument("--model", required=True)
    add_io(p)
    p.set_defaults(func=cmd_penalty_sweep)

    p = sub.add_parser("density-grid", help="fitted density on a uniform grid")
    add_input(p)
    p.add_argument("--model", required=True)
    p.add_argument("--grid-points", type=int, default=512, dest="grid_points")
    add_io(p)
    p.set_defaults(func=cmd_density_grid)

    p = sub.add_parser("simulate", help="Monte Carlo experiments")
    p.add_argument("mode", choices=["oracle-ratio", "adaptivity"])
    p.add_argument("--config", required=True, help="experiment config JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    add_io(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="closed-form vs brute-force verification table")
    p.add_argument("--cases", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(dumps_json({"error": {"code": exc.code, "message": str(exc)}})
                         + "\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(dumps_json({"error": {"code": "invalid-argument",
                                               "message": str(exc)}}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
