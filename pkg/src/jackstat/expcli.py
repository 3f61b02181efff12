"""Config-driven experiment runner and command-line interface.

Experiments are described by a flat JSON object (unknown keys are a hard
error), run deterministically from a base seed, and written as CSV or JSON
with fixed formatting: floats with 17 significant digits, exact rationals as
"p/q".  Identical config and seed produce byte-identical output files; the
--workers flag is an interface knob for throughput only and never changes
bytes (the current implementation runs a deterministic single stream).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import families as fam
from . import hoeffding, lstat_median
from .exact_oracle import FiniteDist, exact_var, finite_dist, two_point, uniform_atoms
from .kernels import Kernel, get_kernel, kernel_labels
from .numeric import central_derivative, derive_seed
from .ustat_engine import as_values, extend_chain, u_statistic

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "run_experiment",
    "write_rows",
    "rows_from_json",
    "rows_from_csv",
    "cli_dispatch",
    "main",
]

KINDS = ("efficiency-curve", "variance-drop", "clt", "median-study", "conjecture16")

# Column schemas per experiment kind.  Types: str, int, float, bool,
# num (float or exact fraction), num? (num or empty).
SCHEMAS: dict[str, tuple[tuple[str, str], ...]] = {
    "efficiency-curve": (
        ("kind", "str"), ("family", "str"), ("theta", "float"), ("kernel", "str"),
        ("m", "int"), ("aseff", "float"), ("cr_rate", "float"),
        ("asym_var_rate", "float"), ("eff_floor_ref", "float"),
        ("seed", "int"), ("replications", "int"),
    ),
    "variance-drop": (
        ("kind", "str"), ("family", "str"), ("theta", "float"), ("estimator", "str"),
        ("n", "int"), ("method", "str"), ("lhs", "num"), ("rhs", "num"),
        ("holds", "bool"), ("margin", "num"), ("seed", "int"), ("replications", "int"),
    ),
    "clt": (
        ("kind", "str"), ("family", "str"), ("theta", "float"), ("kernel", "str"),
        ("m", "int"), ("n", "int"), ("replications", "int"), ("seed", "int"),
        ("empirical_variance", "float"), ("predicted_variance", "float"),
        ("ratio", "float"), ("ks_statistic", "float"),
    ),
    "median-study": (
        ("kind", "str"), ("family", "str"), ("theta", "float"), ("n", "int"),
        ("replications", "int"), ("seed", "int"),
        ("mse_extended", "float"), ("mse_standard", "float"),
        ("var_extended", "float"), ("var_standard", "float"),
        ("bias_extended", "float"), ("bias_standard", "float"),
        ("var_exact_extended", "num?"), ("var_exact_standard", "num?"),
    ),
    "conjecture16": (
        ("kind", "str"), ("m", "int"), ("matches", "bool"), ("weights", "str"),
    ),
}

_CONFIG_KEYS = ("kind", "family", "thetas", "kernel", "ns", "replications",
                "seed", "out", "format")

_ESTIMATOR_ALIASES = ("median", "even-median")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    kind: str
    family: Optional[str] = None
    thetas: tuple[float, ...] = ()
    kernel: Optional[str] = None
    ns: tuple[int, ...] = ()
    replications: int = 1
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind '{self.kind}'; known: {', '.join(KINDS)}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown output format '{self.format}'")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.kind in ("efficiency-curve", "variance-drop", "clt", "median-study"):
            if self.family is None:
                raise ValueError(f"experiment '{self.kind}' needs a family")
            family = fam.get_family(self.family)
            if not self.thetas:
                raise ValueError(f"experiment '{self.kind}' needs a theta grid")
            lo, hi = family.theta_domain
            for t in self.thetas:
                if not lo < t < hi:
                    raise ValueError(f"theta={t} outside the parameter domain of '{self.family}'")
        if self.kind in ("efficiency-curve", "clt"):
            if self.kernel is None:
                raise ValueError(f"experiment '{self.kind}' needs a kernel label")
            get_kernel(self.kernel)
        if self.kind == "variance-drop":
            if self.kernel is None:
                raise ValueError("variance-drop needs a kernel or estimator label")
            if self.kernel not in _ESTIMATOR_ALIASES:
                get_kernel(self.kernel)
        if self.kind in ("variance-drop", "clt", "median-study", "conjecture16"):
            if not self.ns:
                raise ValueError(f"experiment '{self.kind}' needs an n grid")
            if any(n < 1 for n in self.ns):
                raise ValueError("n grid entries must be >= 1")
        if self.kind == "median-study" and any(n % 2 for n in self.ns):
            raise ValueError("median-study n grid must contain even sizes")


def config_from_dict(doc: dict) -> ExperimentConfig:
    unknown = set(doc) - set(_CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = dict(doc)
    if "thetas" in kwargs:
        kwargs["thetas"] = tuple(float(t) for t in kwargs["thetas"])
    if "ns" in kwargs:
        kwargs["ns"] = tuple(int(n) for n in kwargs["ns"])
    return ExperimentConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config must be a single JSON object")
    return config_from_dict(doc)


@dataclass(frozen=True)
class ResultRow:
    """One output row; data maps exactly the schema columns of its kind."""

    kind: str
    data: dict

    def __post_init__(self) -> None:
        schema = SCHEMAS[self.kind]
        expected = [name for name, _ in schema]
        if list(self.data) != expected:
            raise ValueError(
                f"row columns {list(self.data)} do not match the '{self.kind}' schema {expected}"
            )
        for (name, typ) in schema:
            value = self.data[name]
            if typ == "float" and not math.isfinite(float(value)):
                raise ValueError(f"non-finite value in column '{name}'")


# ---------------------------------------------------------------------------
# Experiment implementations


def _weights_str(lw: lstat_median.LWeights) -> str:
    return " ".join(f"{w.numerator}/{w.denominator}" for w in lw.w)


def _run_efficiency(config: ExperimentConfig) -> list[ResultRow]:
    family = fam.get_family(config.family)
    kernel = get_kernel(config.kernel)
    rows = []
    for theta in config.thetas:
        gprime = central_derivative(
            lambda t: hoeffding.kernel_mean(family, kernel, t, abs_tol=1e-12), theta)
        info = fam.fisher_info(family, theta)
        v1 = float(hoeffding.projection_variance(family, kernel, theta, 1))
        cr_rate = gprime * gprime / info
        asym = kernel.m ** 2 * v1
        rows.append(ResultRow("efficiency-curve", {
            "kind": "efficiency-curve", "family": config.family, "theta": theta,
            "kernel": config.kernel, "m": kernel.m, "aseff": cr_rate / asym,
            "cr_rate": cr_rate, "asym_var_rate": asym,
            "eff_floor_ref": 1.0 / kernel.m ** 2,
            "seed": config.seed, "replications": config.replications,
        }))
    return rows


def _variance_drop_estimator(label: str, n: int):
    if label in _ESTIMATOR_ALIASES:
        return lstat_median.median_weights(n)
    return get_kernel(label)


def _run_variance_drop(config: ExperimentConfig) -> list[ResultRow]:
    family = fam.get_family(config.family)
    exact = family.support.kind == "finite"
    rows = []
    idx = 0
    for theta in config.thetas:
        for n in config.ns:
            estimator = _variance_drop_estimator(config.kernel, n)
            report = hoeffding.variance_drop_report(
                family, estimator, n, theta,
                method="exact" if exact else "mc",
                replications=config.replications,
                seed=derive_seed(config.seed, config.kind, idx),
            )
            rows.append(ResultRow("variance-drop", {
                "kind": "variance-drop", "family": config.family, "theta": theta,
                "estimator": config.kernel, "n": n, "method": report.method,
                "lhs": report.lhs, "rhs": report.rhs, "holds": report.holds,
                "margin": report.margin, "seed": config.seed,
                "replications": config.replications,
            }))
            idx += 1
    return rows


def _run_clt(config: ExperimentConfig) -> list[ResultRow]:
    family = fam.get_family(config.family)
    kernel = get_kernel(config.kernel)
    rows = []
    idx = 0
    for theta in config.thetas:
        for n in config.ns:
            report = hoeffding.clt_diagnostic(
                family, kernel, theta, n, config.replications,
                derive_seed(config.seed, config.kind, idx))
            rows.append(ResultRow("clt", {
                "kind": "clt", "family": config.family, "theta": theta,
                "kernel": config.kernel, "m": kernel.m, "n": n,
                "replications": config.replications, "seed": config.seed,
                "empirical_variance": report.empirical_variance,
                "predicted_variance": report.predicted,
                "ratio": report.ratio, "ks_statistic": report.ks_statistic,
            }))
            idx += 1
    return rows


def _run_median_study(config: ExperimentConfig) -> list[ResultRow]:
    """Mean-squared-error comparison of the weight-extended even median
    against the plain middle order statistic on n+1 points.

    This is reported as a table with no pass/fail verdict; exact variance
    columns are filled only for finite-support families small enough to
    enumerate."""
    family = fam.get_family(config.family)
    if family.median is None:
        raise ValueError(f"family '{config.family}' has no median for the study")
    rows = []
    idx = 0
    for theta in config.thetas:
        for n in config.ns:
            seed = derive_seed(config.seed, config.kind, idx)
            rng = np.random.default_rng(seed)
            draws = np.sort(
                family.sample(theta, config.replications * (n + 1), rng)
                .reshape(config.replications, n + 1),
                axis=1,
            )
            ext_w = np.array(lstat_median.extend_weights(
                lstat_median.median_weights(n)).as_floats())
            extended = draws @ ext_w
            standard = draws[:, n // 2]
            true_med = family.median(theta)
            var_exact_ext: object = ""
            var_exact_std: object = ""
            if (family.support.kind == "finite"
                    and len(family.support.atoms) ** (n + 1) <= 100_000):
                dist = hoeffding.finite_support_dist(family, theta)
                lw = lstat_median.extend_weights(lstat_median.median_weights(n))
                var_exact_ext = exact_var(
                    lambda *xs: lstat_median.eval_lstat(lw, xs), dist, n + 1)
                var_exact_std = exact_var(
                    lambda *xs: sorted(xs)[n // 2], dist, n + 1)
            rows.append(ResultRow("median-study", {
                "kind": "median-study", "family": config.family, "theta": theta,
                "n": n, "replications": config.replications, "seed": config.seed,
                "mse_extended": float(np.mean((extended - true_med) ** 2)),
                "mse_standard": float(np.mean((standard - true_med) ** 2)),
                "var_extended": float(np.var(extended, ddof=1)),
                "var_standard": float(np.var(standard, ddof=1)),
                "bias_extended": float(np.mean(extended) - true_med),
                "bias_standard": float(np.mean(standard) - true_med),
                "var_exact_extended": var_exact_ext,
                "var_exact_standard": var_exact_std,
            }))
            idx += 1
    return rows


def _run_conjecture16(config: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for m in config.ns:
        result = lstat_median.conjecture16_check(m)
        rows.append(ResultRow("conjecture16", {
            "kind": "conjecture16", "m": m, "matches": result.matches,
            "weights": _weights_str(result.weights),
        }))
    return rows


_RUNNERS = {
    "efficiency-curve": _run_efficiency,
    "variance-drop": _run_variance_drop,
    "clt": _run_clt,
    "median-study": _run_median_study,
    "conjecture16": _run_conjecture16,
}


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Produce the deterministic result table for a config."""
    return _RUNNERS[config.kind](config)


# ---------------------------------------------------------------------------
# Serialization


def _render_cell(value, typ: str) -> str:
    if typ == "num?" and (value == "" or value is None):
        return ""
    if typ in ("num", "num?") and isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if typ in ("num", "num?", "float"):
        return format(float(value), ".17g")
    if typ == "bool":
        return "true" if value else "false"
    return str(value)


def _parse_cell(text: str, typ: str):
    if typ == "str":
        return text
    if typ == "int":
        return int(text)
    if typ == "float":
        return float(text)
    if typ == "bool":
        return text == "true"
    if typ in ("num", "num?"):
        if typ == "num?" and text == "":
            return ""
        return Fraction(text) if "/" in text else float(text)
    raise ValueError(f"unknown cell type '{typ}'")


def _json_cell(value, typ: str):
    if typ == "num?" and (value == "" or value is None):
        return None
    if typ in ("num", "num?") and isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if typ in ("num", "num?", "float"):
        return float(value)
    return value


def _json_parse_cell(value, typ: str):
    if typ in ("num", "num?"):
        if value is None:
            return ""
        if isinstance(value, str):
            return Fraction(value)
        return float(value)
    return value


def rows_to_csv_text(rows: Sequence[ResultRow]) -> str:
    if not rows:
        return ""
    schema = SCHEMAS[rows[0].kind]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([name for name, _ in schema])
    for row in rows:
        writer.writerow([_render_cell(row.data[name], typ) for name, typ in schema])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    table = list(reader)
    if not table:
        return []
    header = table[0]
    rows = []
    for record in table[1:]:
        kind = record[header.index("kind")]
        schema = dict(SCHEMAS[kind])
        data = {name: _parse_cell(cell, schema[name]) for name, cell in zip(header, record)}
        rows.append(ResultRow(kind, data))
    return rows


def rows_to_json_text(rows: Sequence[ResultRow]) -> str:
    payload = []
    for row in rows:
        schema = SCHEMAS[row.kind]
        payload.append({name: _json_cell(row.data[name], typ) for name, typ in schema})
    return json.dumps({"rows": payload}, indent=2) + "\n"


def rows_from_json(text: str) -> list[ResultRow]:
    doc = json.loads(text)
    rows = []
    for record in doc["rows"]:
        kind = record["kind"]
        schema = SCHEMAS[kind]
        data = {name: _json_parse_cell(record[name], typ) for name, typ in schema}
        rows.append(ResultRow(kind, data))
    return rows


def write_rows(rows: Sequence[ResultRow], out: Optional[str], fmt: str) -> None:
    text = rows_to_csv_text(rows) if fmt == "csv" else rows_to_json_text(rows)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Command-line interface


def _parse_data(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok != "")
    except ValueError:
        raise ValueError(f"could not parse data list '{text}'") from None
    if not values:
        raise ValueError("empty data list")
    return values


def _parse_dist(text: str) -> FiniteDist:
    """Finite-support distributions for the CLI: 'bernoulli:p' (or
    'two-point:p'), 'uniform:v1,v2,...', or explicit 'atoms:v=p,v=p,...'
    with rational probabilities like 1/3."""
    head, _, rest = text.partition(":")
    if head in ("bernoulli", "two-point"):
        return two_point(Fraction(rest))
    if head == "uniform":
        return uniform_atoms([_number(tok) for tok in rest.split(",")])
    if head == "atoms":
        pairs = []
        for tok in rest.split(","):
            v, _, p = tok.partition("=")
            pairs.append((_number(v), Fraction(p)))
        return finite_dist(pairs)
    raise ValueError(f"unknown distribution spec '{text}'")


def _number(tok: str):
    tok = tok.strip()
    if "/" in tok:
        return Fraction(tok)
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jackstat",
        description="U-statistics, jackknife extensions, and efficiency experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ustat", help="exact U-statistic of a kernel over a sample")
    p.add_argument("--kernel", required=True, help=f"one of: {', '.join(kernel_labels())}")
    p.add_argument("--data", required=True, help="comma-separated observations")

    p = sub.add_parser("extend", help="jackknife extension chain of a kernel over a sample")
    p.add_argument("--kernel", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", default="auto", choices=("auto", "literal", "identity"))

    p = sub.add_parser("median-weights", help="exact order-statistic weights of the median")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--extend", type=int, default=0, dest="extend_steps",
                   help="number of leave-one-out extension steps to apply")

    p = sub.add_parser("check-variance-drop",
                       help="exact scaled-variance comparison on a finite distribution")
    p.add_argument("--dist", required=True,
                   help="bernoulli:p | uniform:v1,v2,... | atoms:v=p,...")
    p.add_argument("--kernel", required=True,
                   help="kernel label, or 'median'/'even-median' for the size-n median")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("efficiency", help="asymptotic efficiency of a kernel chain")
    p.add_argument("--family", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--theta", required=True, help="comma-separated parameter grid")
    p.add_argument("--out")
    p.add_argument("--format", default="csv", choices=("csv", "json"))

    p = sub.add_parser("clt", help="normality diagnostic for the scaled estimator")
    p.add_argument("--family", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("experiment", help="run a config-driven experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int, default=1,
                   help="throughput knob; results are byte-identical for any value")

    return parser


def _cmd_ustat(args) -> int:
    value = u_statistic(get_kernel(args.kernel), _parse_data(args.data))
    print(repr(float(value)))
    return 0


def _cmd_extend(args) -> int:
    value = extend_chain(get_kernel(args.kernel), _parse_data(args.data), mode=args.mode)
    print(repr(float(value)))
    return 0


def _cmd_median_weights(args) -> int:
    if args.n < 1:
        raise ValueError("--n must be >= 1")
    if args.extend_steps < 0:
        raise ValueError("--extend must be >= 0")
    lw = lstat_median.median_weights(args.n)
    lw = lstat_median.chain_weights(lw, args.n + args.extend_steps)
    for w in lw.w:
        print(f"{w.numerator}/{w.denominator}\t{float(w)!r}")
    return 0


def _cmd_check_variance_drop(args) -> int:
    dist = _parse_dist(args.dist)
    estimator = _variance_drop_estimator(args.kernel, args.n)
    report = hoeffding.variance_drop_report(dist, estimator, args.n)
    def frac(x):
        x = Fraction(x)
        return f"{x.numerator}/{x.denominator}"
    print(f"holds={'true' if report.holds else 'false'} "
          f"lhs={frac(report.lhs)} rhs={frac(report.rhs)} margin={frac(report.margin)}")
    return 0


def _cmd_efficiency(args) -> int:
    config = ExperimentConfig(
        kind="efficiency-curve", family=args.family, kernel=args.kernel,
        thetas=tuple(float(t) for t in args.theta.split(",")),
    )
    write_rows(run_experiment(config), args.out, args.format)
    return 0


def _cmd_clt(args) -> int:
    family = fam.get_family(args.family)
    kernel = get_kernel(args.kernel)
    report = hoeffding.clt_diagnostic(family, kernel, args.theta, args.n,
                                      args.reps, args.seed)
    print(f"empirical_variance={report.empirical_variance!r} "
          f"predicted={report.predicted!r} ratio={report.ratio!r} "
          f"ks_statistic={report.ks_statistic!r}")
    return 0


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.format is not None:
        overrides["format"] = args.format
    if overrides:
        doc = {**config.__dict__, **overrides}
        config = ExperimentConfig(**doc)
    if args.workers < 1:
        raise ValueError("--workers must be >= 1")
    rows = run_experiment(config)
    write_rows(rows, config.out, config.format)
    return 0


_COMMANDS = {
    "ustat": _cmd_ustat,
    "extend": _cmd_extend,
    "median-weights": _cmd_median_weights,
    "check-variance-drop": _cmd_check_variance_drop,
    "efficiency": _cmd_efficiency,
    "clt": _cmd_clt,
    "experiment": _cmd_experiment,
}


def cli_dispatch(argv: Sequence[str]) -> int:
    """Parse and run one CLI invocation.

    Exit codes: 0 success, 2 usage error (bad flags, bad arguments,
    precondition violations), 1 runtime failure.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    return cli_dispatch(sys.argv[1:] if argv is None else argv)
