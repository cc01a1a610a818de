"""Monte-Carlo null distributions of the pivotal limiting ratios.

Both decision rules compare against the supremum ratio of functionals of two
independent Brownian motions on [0, 1]:

* ``simple-ratio``: sup|motion| / sup|bridge of the second motion|
* ``full-ratio``:   sup|motion| / sup|second motion|

Paths are simulated as scaled Gaussian random walks on a grid of
``grid_steps`` points.  Every replication draws from its own RNG stream keyed
by (seed, replication index), so results are bit-identical for any worker
count or scheduling order.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from sncusum.errors import CacheFormatError, CacheProvenanceError

SIMPLE_RATIO = "simple-ratio"
FULL_RATIO = "full-ratio"
_KINDS = (SIMPLE_RATIO, FULL_RATIO)

_CACHE_MAGIC = "snq"
_CACHE_VERSION = "v1"


@dataclass
class NullSample:
    """Sorted Monte-Carlo draws of a pivotal ratio together with provenance."""

    kind: str
    draws: np.ndarray = field(repr=False)
    grid_steps: int
    replications: int
    seed: int


def _check_seed(seed: int) -> None:
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")


def _ratio_draw(kind: str, rng: np.random.Generator, grid_steps: int) -> float:
    z = rng.standard_normal((2, grid_steps))
    paths = np.cumsum(z, axis=1)
    paths /= math.sqrt(grid_steps)
    numerator = np.abs(paths[0]).max()
    if kind == SIMPLE_RATIO:
        grid = np.arange(1, grid_steps + 1) / grid_steps
        denominator = np.abs(paths[1] - grid * paths[1, -1]).max()
    else:
        denominator = np.abs(paths[1]).max()
    return numerator / denominator


def _simulate_chunk(kind: str, grid_steps: int, seed: int, start: int, stop: int) -> np.ndarray:
    out = np.empty(stop - start)
    for rep in range(start, stop):
        rng = np.random.default_rng([seed, rep])
        out[rep - start] = _ratio_draw(kind, rng, grid_steps)
    return out


def simulate_null(
    kind: str,
    grid_steps: int = 1000,
    replications: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> NullSample:
    """Simulate the null distribution of a pivotal ratio.

    Deterministic given (kind, grid_steps, replications, seed); the worker
    count only affects wall-clock time.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    if grid_steps < 100:
        raise ValueError(f"grid_steps must be >= 100, got {grid_steps}")
    if replications < 1000:
        raise ValueError(f"replications must be >= 1000, got {replications}")
    _check_seed(seed)

    if workers <= 1:
        draws = _simulate_chunk(kind, grid_steps, seed, 0, replications)
    else:
        chunk = max(1000, -(-replications // (workers * 4)))
        bounds = list(range(0, replications, chunk)) + [replications]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _simulate_chunk,
                [kind] * (len(bounds) - 1),
                [grid_steps] * (len(bounds) - 1),
                [seed] * (len(bounds) - 1),
                bounds[:-1],
                bounds[1:],
            )
            draws = np.concatenate(list(parts))
    draws.sort()
    return NullSample(
        kind=kind,
        draws=draws,
        grid_steps=grid_steps,
        replications=replications,
        seed=int(seed),
    )


def quantile(sample: NullSample, level: float) -> float:
    """Empirical quantile: the order statistic at rank ceil(level * N)."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    rank = math.ceil(level * sample.replications)
    return float(sample.draws[rank - 1])


def p_value(sample: NullSample, observed: float) -> float:
    """Add-one Monte-Carlo p-value: (1 + #draws >= observed) / (N + 1)."""
    count = sample.replications - np.searchsorted(sample.draws, observed, side="left")
    return float((1 + count) / (sample.replications + 1))


@dataclass(frozen=True)
class QuantileTable:
    """Quantiles at standard levels, tagged with the sample's provenance."""

    kind: str
    grid_steps: int
    replications: int
    seed: int
    quantiles: dict[float, float]

    @classmethod
    def from_sample(cls, sample: NullSample, levels=(0.90, 0.95, 0.99)) -> "QuantileTable":
        return cls(
            kind=sample.kind,
            grid_steps=sample.grid_steps,
            replications=sample.replications,
            seed=sample.seed,
            quantiles={lvl: quantile(sample, lvl) for lvl in levels},
        )


def kolmogorov_cdf(x: float) -> float:
    """CDF of the supremum of the absolute Brownian bridge.

    Evaluated as the alternating series 1 - 2*sum_k (-1)**(k-1) exp(-2 k^2 x^2),
    truncated once a term drops below 1e-12.
    """
    if x <= 0.0:
        return 0.0
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term < 1e-12:
            break
        total += -term if k % 2 == 0 else term
        k += 1
    return min(1.0, max(0.0, 1.0 - 2.0 * total))


@lru_cache(maxsize=64)
def kolmogorov_quantile(level: float) -> float:
    """Inverse of ``kolmogorov_cdf`` by bisection to absolute precision 1e-8."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    lo, hi = 0.0, 2.0
    while kolmogorov_cdf(hi) < level:
        hi *= 2.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if kolmogorov_cdf(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def save_sample(sample: NullSample, path) -> None:
    """Write a null sample as a self-describing text cache.

    Header line ``snq v1 <kind> m=<m> N=<N> seed=<seed>`` followed by the
    sorted draws, one decimal per line.  Rewriting a loaded sample reproduces
    the file byte for byte.
    """
    lines = [
        f"{_CACHE_MAGIC} {_CACHE_VERSION} {sample.kind} "
        f"m={sample.grid_steps} N={sample.replications} seed={sample.seed}"
    ]
    lines.extend(repr(float(v)) for v in sample.draws)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def load_sample(
    path,
    kind: str | None = None,
    grid_steps: int | None = None,
    replications: int | None = None,
    seed: int | None = None,
) -> NullSample:
    """Load a cached null sample, verifying the provenance header.

    Any expected value passed as a keyword must match the header exactly;
    mismatches raise CacheProvenanceError, malformed files CacheFormatError.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        fields = header.split()
        if len(fields) != 6 or fields[0] != _CACHE_MAGIC:
            raise CacheFormatError(f"not a null-sample cache: {path}")
        if fields[1] != _CACHE_VERSION:
            raise CacheFormatError(f"unknown cache version {fields[1]!r} in {path}")
        try:
            file_kind = fields[2]
            file_m = int(fields[3].removeprefix("m="))
            file_n = int(fields[4].removeprefix("N="))
            file_seed = int(fields[5].removeprefix("seed="))
        except ValueError as exc:
            raise CacheFormatError(f"malformed cache header in {path}: {header!r}") from exc
        if file_kind not in _KINDS:
            raise CacheFormatError(f"unknown ratio kind {file_kind!r} in {path}")

        for name, expected, actual in [
            ("kind", kind, file_kind),
            ("grid_steps", grid_steps, file_m),
            ("replications", replications, file_n),
            ("seed", seed, file_seed),
        ]:
            if expected is not None and expected != actual:
                raise CacheProvenanceError(
                    f"cache {path} has {name}={actual}, expected {expected}"
                )

        try:
            draws = np.loadtxt(fh, dtype=float, ndmin=1)
        except ValueError as exc:
            raise CacheFormatError(f"malformed draw records in {path}") from exc
    if draws.size != file_n:
        raise CacheFormatError(
            f"cache {path} holds {draws.size} draws, header claims {file_n}"
        )
    if np.any(np.diff(draws) < 0):
        raise CacheFormatError(f"draws in {path} are not sorted ascending")
    return NullSample(
        kind=file_kind,
        draws=draws,
        grid_steps=file_m,
        replications=file_n,
        seed=file_seed,
    )
