"""Command-line front end.

Subcommands: ``test`` a CSV series, ``nulldist`` precompute quantile caches,
``simulate`` run rejection-rate grids, ``validate`` run the numerical
checks, and ``aggregate`` turn daily data into an annual series.

Exit codes: 0 success, 1 usage or configuration error, 2 degenerate
statistic, 3 I/O or parse error.
"""

import argparse
import json
import os
from pathlib import Path
import sys

from sncusum import nulldist, simulation, stats, validation
from sncusum.blocks import as_series, make_block_config
from sncusum.errors import (
    CacheFormatError,
    CacheProvenanceError,
    ConfigurationError,
    DegenerateStatisticError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_IO = 3

CACHE_ENV = "SN_CUSUM_CACHE"

_METHOD_KINDS = {
    "simple": nulldist.SIMPLE_RATIO,
    "full-v1": nulldist.FULL_RATIO,
    "full-v2": nulldist.FULL_RATIO,
}


class _ParseError(Exception):
    """Input file could not be parsed (exit code 3)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _cache_dir(flag_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME", "~/.cache")
    return Path(base).expanduser() / "sn-cusum"


def _load_null(cache_flag: str | None, kind: str) -> nulldist.NullSample:
    path = _cache_dir(cache_flag) / f"{kind}.snq"
    if not path.exists():
        raise ConfigurationError(
            f"null cache {path} not found; precompute it with "
            f"`sn-cusum nulldist --out {path.parent}`"
        )
    return nulldist.load_sample(path, kind=kind)


def _read_series(path: str) -> list[float]:
    """One numeric column, optional header line (auto-detected)."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _ParseError(f"cannot read {path}: {exc}") from exc
    values: list[float] = []
    first_data_line = True
    for lineno, line in enumerate(raw.splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            if first_data_line:
                first_data_line = False
                continue  # header
            raise _ParseError(f"{path}:{lineno}: not a number: {text!r}") from None
        first_data_line = False
    if not values:
        raise _ParseError(f"{path}: no numeric rows found")
    return values


def cmd_test(args) -> int:
    x = as_series(_read_series(args.input))
    n = x.size
    cfg = make_block_config(n, args.block_size)

    if args.method == "lrv":
        outcome = stats.cusum_lrv_test(x, args.alpha)
    else:
        if n < 4 * cfg.n_blocks:
            raise ConfigurationError(
                f"series too short: n={n} < 4 * n_blocks={4 * cfg.n_blocks}; "
                "use a longer series or a larger --block-size"
            )
        null = _load_null(args.null_cache, _METHOD_KINDS[args.method])
        if args.method == "simple":
            outcome = stats.decide_simple(x, cfg, args.alpha, null)
        elif args.method == "full-v1":
            outcome = stats.decide_full(x, cfg, stats.TestParams.v1(args.alpha), null)
        else:
            outcome = stats.decide_full(x, cfg, stats.TestParams.v2(args.alpha), null)

    result = {
        "method": outcome.method,
        "n": n,
        "b_n": cfg.block_length,
        "statistic": outcome.statistic,
        "threshold": outcome.threshold,
        "p_value": outcome.p_value,
        "reject": outcome.reject,
    }
    print(json.dumps(result))
    return EXIT_OK


def cmd_nulldist(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for offset, kind in enumerate((nulldist.SIMPLE_RATIO, nulldist.FULL_RATIO)):
        sample = nulldist.simulate_null(
            kind,
            grid_steps=args.steps,
            replications=args.reps,
            seed=args.seed + offset,
            workers=args.workers,
        )
        path = out / f"{kind}.snq"
        nulldist.save_sample(sample, path)
        table = nulldist.QuantileTable.from_sample(sample)
        summary[kind] = {
            "path": str(path),
            "grid_steps": sample.grid_steps,
            "replications": sample.replications,
            "seed": sample.seed,
            "quantiles": {str(k): v for k, v in table.quantiles.items()},
        }
    print(json.dumps(summary))
    return EXIT_OK


def _parse_grid_spec(spec: str) -> dict:
    """Grid DSL: semicolon-separated key=v1,v2 pairs.

    Keys: mu (0..6), sigma (0..3), c (positive floats), eps (iid/ma/ar),
    n (sizes).  Omitted keys default to mu=0;sigma=0;c=1;eps=iid;n=500.
    """
    settings = {
        "mu": [0],
        "sigma": [0],
        "c": [1.0],
        "eps": ["iid"],
        "n": [500],
    }
    parsers = {
        "mu": int,
        "sigma": int,
        "c": float,
        "eps": str,
        "n": int,
    }
    if spec:
        for part in spec.split(";"):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"bad grid entry {part!r}; expected key=v1,v2,...")
            key, _, values = part.partition("=")
            key = key.strip()
            if key not in settings:
                raise ValueError(f"unknown grid key {key!r}; expected one of {sorted(settings)}")
            try:
                settings[key] = [parsers[key](v.strip()) for v in values.split(",")]
            except ValueError:
                raise ValueError(f"bad grid value(s) {values!r} for key {key!r}") from None
    return settings


def cmd_simulate(args) -> int:
    settings = _parse_grid_spec(args.grid)
    tests = tuple(t.strip() for t in args.tests.split(",")) if args.tests else simulation.ALL_TESTS
    scenarios = simulation.scenario_cells(
        settings["mu"],
        settings["sigma"],
        settings["c"],
        settings["eps"],
        settings["n"],
        replications=args.reps,
        alpha=args.alpha,
        seed=args.seed,
        block_length=args.block_size,
    )
    nulls = {}
    if stats.METHOD_SIMPLE in tests:
        nulls[nulldist.SIMPLE_RATIO] = _load_null(args.null_cache, nulldist.SIMPLE_RATIO)
    if stats.METHOD_FULL_V1 in tests or stats.METHOD_FULL_V2 in tests:
        nulls[nulldist.FULL_RATIO] = _load_null(args.null_cache, nulldist.FULL_RATIO)

    results = simulation.run_grid(scenarios, tests=tests, nulls=nulls, workers=args.workers)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    block = args.block_size if args.block_size is not None else "auto(n^0.375)"
    metadata = (
        f"sn-cusum simulate seed={args.seed} replications={args.reps} "
        f"alpha={args.alpha:g} block={block} tests={','.join(tests)}"
    )
    written = []
    cells_path = out / "cells.csv"
    simulation.write_cells_csv(results, cells_path, metadata)
    written.append(str(cells_path))

    for key in ("errors", "sigma", "c_sigma", "mean"):
        field = {"errors": "eps", "sigma": "sigma", "c_sigma": "c", "mean": "mu"}[key]
        if len(settings[field]) > 1:
            rows = simulation.aggregate_rates(results, group_keys=("n", key))
            agg_path = out / f"aggregate_{key}.csv"
            simulation.write_aggregate_csv(rows, ("n", key), agg_path, metadata)
            written.append(str(agg_path))
    print(json.dumps({"written": written}))
    return EXIT_OK


def cmd_validate(args) -> int:
    reports = validation.run_all_checks(strict=args.strict, seed=args.seed)
    print(json.dumps([r.to_dict() for r in reports], indent=2))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_USAGE


def cmd_aggregate(args) -> int:
    path = Path(args.input)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _ParseError(f"cannot read {path}: {exc}") from exc

    missing_markers = {"", "na", "nan", "null"}
    by_year: dict[int, list[float]] = {}
    missing_by_year: dict[int, int] = {}
    skipped = 0
    first_data_line = True
    for lineno, line in enumerate(raw.splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        fields = [f.strip() for f in text.split(",")]
        if len(fields) != 2:
            raise _ParseError(f"{path}:{lineno}: expected two columns (date,value)")
        date_text, value_text = fields
        if len(date_text) < 4 or not date_text[:4].isdigit():
            if first_data_line:
                first_data_line = False
                continue  # header
            raise _ParseError(f"{path}:{lineno}: bad date {date_text!r}")
        first_data_line = False
        year = int(date_text[:4])
        if value_text.lower() in missing_markers:
            skipped += 1
            missing_by_year[year] = missing_by_year.get(year, 0) + 1
            by_year.setdefault(year, [])
            continue
        try:
            value = float(value_text)
        except ValueError:
            raise _ParseError(f"{path}:{lineno}: not a number: {value_text!r}") from None
        by_year.setdefault(year, []).append(value)

    if skipped:
        print(f"skipped {skipped} row(s) with missing values", file=sys.stderr)
    lines = ["year,value"]
    for year in sorted(by_year):
        values = by_year[year]
        if not values:
            print(
                f"year {year}: all {missing_by_year.get(year, 0)} row(s) missing; omitted",
                file=sys.stderr,
            )
            continue
        lines.append(f"{year},{sum(values) / len(values):.6f}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="sn-cusum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test a univariate CSV series for a change in mean")
    p_test.add_argument("--input", required=True, help="CSV file with one numeric column")
    p_test.add_argument(
        "--method",
        required=True,
        choices=["simple", "full-v1", "full-v2", "lrv"],
        help="decision rule to apply",
    )
    p_test.add_argument("--alpha", type=float, default=0.05, help="test level (default 0.05)")
    p_test.add_argument("--block-size", type=int, default=None, help="override the block length")
    p_test.add_argument("--null-cache", default=None, help="directory with .snq quantile caches")
    p_test.set_defaults(func=cmd_test)

    p_null = sub.add_parser("nulldist", help="precompute Monte-Carlo null quantile caches")
    p_null.add_argument("--steps", type=int, default=1000, help="path grid steps (default 1000)")
    p_null.add_argument("--reps", type=int, default=100_000, help="replications (default 100000)")
    p_null.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p_null.add_argument("--out", required=True, help="output directory")
    p_null.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    p_null.set_defaults(func=cmd_nulldist)

    p_sim = sub.add_parser("simulate", help="run a rejection-rate scenario grid")
    p_sim.add_argument(
        "--grid",
        default="",
        help='grid spec, e.g. "mu=0;sigma=0,2;c=1;eps=iid,ar;n=100,500"',
    )
    p_sim.add_argument("--reps", type=int, default=1000, help="replications per cell")
    p_sim.add_argument("--seed", type=int, default=0, help="scenario seed (default 0)")
    p_sim.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    p_sim.add_argument("--out", required=True, help="output directory for CSV tables")
    p_sim.add_argument("--alpha", type=float, default=0.05, help="test level (default 0.05)")
    p_sim.add_argument(
        "--tests",
        default="",
        help="comma list from r_lrv,sn_simple,sn_full_v1,sn_full_v2 (default all)",
    )
    p_sim.add_argument("--block-size", type=int, default=None, help="override the block length")
    p_sim.add_argument("--null-cache", default=None, help="directory with .snq quantile caches")
    p_sim.set_defaults(func=cmd_simulate)

    p_val = sub.add_parser("validate", help="run the numerical validation checks")
    p_val.add_argument(
        "--strict", action="store_true", help="shrink tolerances 100-fold (expected to fail)"
    )
    p_val.add_argument("--seed", type=int, default=0, help="seed for the Monte-Carlo checks")
    p_val.set_defaults(func=cmd_validate)

    p_agg = sub.add_parser("aggregate", help="aggregate a daily date,value CSV to annual means")
    p_agg.add_argument("--input", required=True, help="CSV with date,value columns")
    p_agg.add_argument("--out", required=True, help="output CSV (year,value)")
    p_agg.set_defaults(func=cmd_aggregate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DegenerateStatisticError as exc:
        print(f"sn-cusum: degenerate statistic: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (_ParseError, CacheFormatError) as exc:
        print(f"sn-cusum: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"sn-cusum: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, CacheProvenanceError, ValueError) as exc:
        print(f"sn-cusum: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
