"""Synthetic data models and the rejection-rate simulation engine.

Series follow ``X_i = mean(i/n) + c_sigma * sigma(i/n) * eps_i`` with seven
mean shapes, four standard-deviation shapes and three stationary error
models.  Every replication draws from an RNG stream keyed by
(seed, replication index), so scenario results do not depend on the worker
count or scheduling.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import math
import time

import numpy as np
from scipy.signal import lfilter

from sncusum import stats
from sncusum.blocks import PartialSumGrid, make_block_config
from sncusum.errors import ConfigurationError, DegenerateStatisticError
from sncusum.nulldist import FULL_RATIO, SIMPLE_RATIO, NullSample, quantile

ERROR_MODELS = ("iid", "ma", "ar")
ALL_TESTS = (stats.METHOD_LRV, stats.METHOD_SIMPLE, stats.METHOD_FULL_V1, stats.METHOD_FULL_V2)

MEAN_LABELS = tuple(f"mu{i}" for i in range(7))
SIGMA_LABELS = tuple(f"sigma{i}" for i in range(4))


def mean_value(fn_id: int, x):
    """Evaluate mean function ``fn_id`` (0..6) at points in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if fn_id == 0:
        return np.zeros_like(x)
    if fn_id == 1:
        return np.sin(8 * np.pi * x) + 2 * (x - 0.25) ** 2 * (x > 0.25)
    if fn_id == 2:
        return (
            -1.0 * (x <= 0.25)
            - (1.5 * np.sin(2 * np.pi * x) + 0.5) * ((x > 0.25) & (x <= 0.75))
            + 2.0 * (x > 0.75)
        )
    if fn_id == 3:
        return (x > 0.5).astype(float)
    if fn_id == 4:
        return 0.5 - mean_value(1, x)
    if fn_id == 5:
        return 1.5 - mean_value(2, x)
    if fn_id == 6:
        return 1.0 - mean_value(3, x)
    raise ValueError(f"mean function id must be in 0..6, got {fn_id}")


def sigma_value(fn_id: int, x):
    """Evaluate standard-deviation function ``fn_id`` (0..3) at points in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if fn_id == 0:
        return np.ones_like(x)
    if fn_id == 1:
        return 0.5 + x
    if fn_id == 2:
        return 1.0 - 0.5 * np.cos(2 * np.pi * x)
    if fn_id == 3:
        return 0.5 + (x > 0.5)
    raise ValueError(f"sigma function id must be in 0..3, got {fn_id}")


def gen_errors(model: str, n: int, seed, ar_literal: bool = False) -> np.ndarray:
    """Generate n stationary errors from a seeded stream.

    * iid: standard Gaussian.
    * ma:  (2/sqrt(5)) * (eta_i + eta_{i-1}/2), exact unit variance.
    * ar:  first-order autoregression with coefficient 1/2 and innovation
      scale sqrt(3)/2, initialized from its exact stationary law (unit
      variance, long-run variance 3).  With ``ar_literal=True`` the
      coefficient moves inside the scale, eps_i = (sqrt(3)/2)(eta_i +
      eps_{i-1}/2), giving stationary variance 12/13.
    """
    if model not in ERROR_MODELS:
        raise ValueError(f"error model must be one of {ERROR_MODELS}, got {model!r}")
    rng = np.random.default_rng(seed)
    if model == "iid":
        return rng.standard_normal(n)
    if model == "ma":
        eta = rng.standard_normal(n + 1)
        return (2.0 / math.sqrt(5.0)) * (eta[1:] + 0.5 * eta[:-1])
    scale = math.sqrt(3.0) / 2.0
    coeff = scale / 2.0 if ar_literal else 0.5
    init_sd = math.sqrt(scale**2 / (1.0 - coeff**2))
    start = init_sd * rng.standard_normal()
    eta = rng.standard_normal(n)
    out, _ = lfilter([scale], [1.0, -coeff], eta, zi=[coeff * start])
    return out


@dataclass(frozen=True)
class Scenario:
    """One simulation cell: data model, sample size and replication budget."""

    mean_id: int
    sigma_id: int
    c_sigma: float
    error_model: str
    n: int
    replications: int
    alpha: float = 0.05
    seed: int = 0
    block_length: int | None = None
    ar_literal: bool = False

    def __post_init__(self):
        if not 0 <= self.mean_id <= 6:
            raise ValueError(f"mean_id must be in 0..6, got {self.mean_id}")
        if not 0 <= self.sigma_id <= 3:
            raise ValueError(f"sigma_id must be in 0..3, got {self.sigma_id}")
        if self.c_sigma <= 0:
            raise ValueError(f"c_sigma must be positive, got {self.c_sigma}")
        if self.error_model not in ERROR_MODELS:
            raise ValueError(f"unknown error model {self.error_model!r}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha={self.alpha} not in (0, 1)")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


@dataclass
class ScenarioResult:
    """Empirical rejection rates of one scenario, with degenerate draws
    counted separately (never as rejections)."""

    scenario: Scenario
    rejections: dict[str, int]
    degenerate: dict[str, int]
    wall_clock: float = 0.0
    rates: dict[str, float] = field(init=False)

    def __post_init__(self):
        reps = self.scenario.replications
        self.rates = {name: count / reps for name, count in self.rejections.items()}


def gen_series(scenario: Scenario, replication: int) -> np.ndarray:
    """Generate the series of one replication from its keyed stream."""
    eps = gen_errors(
        scenario.error_model,
        scenario.n,
        [scenario.seed, replication],
        ar_literal=scenario.ar_literal,
    )
    grid = np.arange(1, scenario.n + 1) / scenario.n
    return (
        mean_value(scenario.mean_id, grid)
        + scenario.c_sigma * sigma_value(scenario.sigma_id, grid) * eps
    )


def _check_nulls(tests, nulls) -> None:
    needed = set()
    if stats.METHOD_SIMPLE in tests:
        needed.add(SIMPLE_RATIO)
    if stats.METHOD_FULL_V1 in tests or stats.METHOD_FULL_V2 in tests:
        needed.add(FULL_RATIO)
    missing = needed - set(nulls or {})
    if missing:
        raise ConfigurationError(f"missing null sample(s) for: {sorted(missing)}")


def _scenario_chunk(scenario: Scenario, tests, nulls, start: int, stop: int):
    """Count rejections and degenerate draws over one replication range."""
    cfg = make_block_config(scenario.n, scenario.block_length)
    alpha = scenario.alpha
    thresholds = {}
    if stats.METHOD_SIMPLE in tests:
        thresholds[stats.METHOD_SIMPLE] = quantile(nulls[SIMPLE_RATIO], 1 - alpha)
    if stats.METHOD_FULL_V1 in tests:
        params = stats.TestParams.v1(alpha)
        thresholds[stats.METHOD_FULL_V1] = (
            params,
            params.threshold_factor * quantile(nulls[FULL_RATIO], 1 - alpha),
        )
    if stats.METHOD_FULL_V2 in tests:
        params = stats.TestParams.v2(alpha)
        thresholds[stats.METHOD_FULL_V2] = (
            params,
            params.threshold_factor * quantile(nulls[FULL_RATIO], 1 - alpha),
        )

    rejections = {name: 0 for name in tests}
    degenerate = {name: 0 for name in tests}
    for rep in range(start, stop):
        x = gen_series(scenario, rep)
        grid = PartialSumGrid.compute(x, cfg)
        for name in tests:
            try:
                if name == stats.METHOD_LRV:
                    rejected = stats.cusum_lrv_test(x, alpha).reject
                elif name == stats.METHOD_SIMPLE:
                    rejected = stats.simple_statistic_from_grid(grid) > thresholds[name]
                else:
                    params, threshold = thresholds[name]
                    rejected = (
                        stats.full_statistic_from_grid(grid, params.t0, params.t1) > threshold
                    )
            except DegenerateStatisticError:
                degenerate[name] += 1
                continue
            rejections[name] += int(rejected)
    return rejections, degenerate


def run_scenario(
    scenario: Scenario,
    tests=ALL_TESTS,
    nulls: dict[str, NullSample] | None = None,
    workers: int = 1,
) -> ScenarioResult:
    """Run all replications of one scenario and tally rejection rates."""
    tests = tuple(tests)
    unknown = set(tests) - set(ALL_TESTS)
    if unknown:
        raise ConfigurationError(f"unknown test identifier(s): {sorted(unknown)}")
    _check_nulls(tests, nulls)
    nulls = nulls or {}

    started = time.perf_counter()
    reps = scenario.replications
    if workers <= 1 or reps < 2 * workers:
        rejections, degenerate = _scenario_chunk(scenario, tests, nulls, 0, reps)
    else:
        chunk = max(1, -(-reps // (workers * 4)))
        bounds = list(range(0, reps, chunk)) + [reps]
        njobs = len(bounds) - 1
        rejections = {name: 0 for name in tests}
        degenerate = {name: 0 for name in tests}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _scenario_chunk,
                [scenario] * njobs,
                [tests] * njobs,
                [nulls] * njobs,
                bounds[:-1],
                bounds[1:],
            )
            for rej, deg in parts:
                for name in tests:
                    rejections[name] += rej[name]
                    degenerate[name] += deg[name]
    return ScenarioResult(
        scenario=scenario,
        rejections=rejections,
        degenerate=degenerate,
        wall_clock=time.perf_counter() - started,
    )


def run_grid(
    scenarios,
    tests=ALL_TESTS,
    nulls: dict[str, NullSample] | None = None,
    workers: int = 1,
) -> list[ScenarioResult]:
    """Run a list of scenarios; replications parallelize within each cell."""
    return [run_scenario(sc, tests=tests, nulls=nulls, workers=workers) for sc in scenarios]


_GROUP_FIELDS = {
    "mean": lambda sc: MEAN_LABELS[sc.mean_id],
    "sigma": lambda sc: SIGMA_LABELS[sc.sigma_id],
    "c_sigma": lambda sc: sc.c_sigma,
    "errors": lambda sc: sc.error_model,
    "n": lambda sc: sc.n,
}


def aggregate_rates(results, group_keys=("n",)) -> list[dict]:
    """Replication-weighted mean rejection rates, grouped by scenario fields.

    ``group_keys`` may contain "mean", "sigma", "c_sigma", "errors", "n".
    """
    for key in group_keys:
        if key not in _GROUP_FIELDS:
            raise ValueError(f"unknown group key {key!r}")
    groups: dict[tuple, list[ScenarioResult]] = {}
    for res in results:
        key = tuple(_GROUP_FIELDS[k](res.scenario) for k in group_keys)
        groups.setdefault(key, []).append(res)

    rows = []
    for key in sorted(groups, key=lambda k: tuple(map(str, k))):
        members = groups[key]
        total = sum(r.scenario.replications for r in members)
        row = dict(zip(group_keys, key))
        row["replications"] = total
        test_names = list(members[0].rejections)
        for name in test_names:
            row[name] = sum(r.rejections[name] for r in members) / total
        row["degenerate"] = sum(sum(r.degenerate.values()) for r in members)
        rows.append(row)
    return rows


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def write_cells_csv(results, path, metadata: str = "") -> None:
    """One row per scenario cell, rejection rates to 6 decimals.

    Output is byte-identical for a fixed seed regardless of worker count;
    a leading comment line carries the run metadata.
    """
    results = list(results)
    test_names = list(results[0].rejections) if results else list(ALL_TESTS)
    with open(path, "w", newline="", encoding="ascii") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["mean", "sigma", "c_sigma", "errors", "n", "replications"]
            + test_names
            + ["degenerate"]
        )
        for res in results:
            sc = res.scenario
            writer.writerow(
                [
                    MEAN_LABELS[sc.mean_id],
                    SIGMA_LABELS[sc.sigma_id],
                    _format_value(sc.c_sigma),
                    sc.error_model,
                    sc.n,
                    sc.replications,
                ]
                + [f"{res.rates[name]:.6f}" for name in test_names]
                + [sum(res.degenerate.values())]
            )


def write_aggregate_csv(rows, group_keys, path, metadata: str = "") -> None:
    """Aggregated rates from :func:`aggregate_rates` as CSV."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to aggregate")
    test_names = [
        k for k in rows[0] if k not in group_keys and k not in ("replications", "degenerate")
    ]
    with open(path, "w", newline="", encoding="ascii") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        writer = csv.writer(fh)
        writer.writerow(list(group_keys) + ["replications"] + test_names + ["degenerate"])
        for row in rows:
            writer.writerow(
                [_format_value(row[k]) for k in group_keys]
                + [row["replications"]]
                + [f"{row[name]:.6f}" for name in test_names]
                + [row["degenerate"]]
            )


def scenario_cells(
    mean_ids,
    sigma_ids,
    c_sigmas,
    error_models,
    sizes,
    replications: int,
    alpha: float = 0.05,
    seed: int = 0,
    block_length: int | None = None,
) -> list[Scenario]:
    """Cartesian product of model settings in deterministic order."""
    cells = []
    for mean_id in mean_ids:
        for sigma_id in sigma_ids:
            for c_sigma in c_sigmas:
                for model in error_models:
                    for n in sizes:
                        cells.append(
                            Scenario(
                                mean_id=mean_id,
                                sigma_id=sigma_id,
                                c_sigma=c_sigma,
                                error_model=model,
                                n=n,
                                replications=replications,
                                alpha=alpha,
                                seed=seed,
                                block_length=block_length,
                            )
                        )
    return cells
