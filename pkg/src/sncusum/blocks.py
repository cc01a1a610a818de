"""Block-permuted bivariate partial-sum process.

The sample of length ``n`` is split into ``n_blocks`` consecutive blocks of
``block_length`` observations (plus a short remainder).  A fixed permutation
interleaves the blocks round-robin, so that the first argument ``t`` of the
bivariate process controls how many elements of every block enter the sum,
while the second argument ``s`` controls the usual sample proportion.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from sncusum.errors import ConfigurationError

# Grid-snapping guard: floor(t*n) must not lose exact grid points such as
# t = 29/100 to one-ulp float noise.
_GRID_EPS = 1e-9


def _floor_index(x: float) -> int:
    return int(math.floor(x + _GRID_EPS))


@dataclass(frozen=True)
class BlockConfig:
    """Sample size, block length and the induced block count."""

    n: int
    block_length: int
    n_blocks: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"need n >= 4, got {self.n}")
        if not 1 <= self.block_length <= self.n:
            raise ValueError(f"block_length {self.block_length} not in [1, {self.n}]")
        if self.n_blocks != self.n // self.block_length:
            raise ValueError("n_blocks must equal n // block_length")

    @property
    def n_knots(self) -> int:
        """Number of coarse time steps: the process is evaluated at
        t = k * n_blocks / n for k = 0..n_knots."""
        return self.n // self.n_blocks


def make_block_config(n: int, block_length: int | None = None) -> BlockConfig:
    """Build a block configuration, defaulting to block length floor(n**(3/8)).

    The default is clamped below at 2, which keeps at least two coarse time
    knots for every n >= 4.  An explicit ``block_length`` overrides the rule.
    """
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if block_length is None:
        block_length = max(2, int(n**0.375 + _GRID_EPS))
    elif not 1 <= block_length <= n:
        raise ValueError(f"block_length {block_length} not in [1, {n}]")
    return BlockConfig(n=n, block_length=block_length, n_blocks=n // block_length)


def permute_index(k: int, cfg: BlockConfig) -> int:
    """Map the 1-based time index ``k`` to its 1-based sample position.

    The first ``n_blocks`` indices go to the first element of each block, the
    next ``n_blocks`` to the second elements, and so on; indices beyond
    ``n_blocks * block_length`` are fixed points.
    """
    if not 1 <= k <= cfg.n:
        raise ValueError(f"index {k} not in [1, {cfg.n}]")
    b, ell = cfg.block_length, cfg.n_blocks
    if k > ell * b:
        return k
    return ((k - 1) % ell) * b + (k + ell - 1) // ell


@lru_cache(maxsize=128)
def _permutation_cached(cfg: BlockConfig) -> np.ndarray:
    b, ell = cfg.block_length, cfg.n_blocks
    k = np.arange(1, cfg.n + 1)
    perm = np.where(k <= ell * b, ((k - 1) % ell) * b + (k + ell - 1) // ell, k)
    out = perm - 1
    out.setflags(write=False)
    return out


def permutation(cfg: BlockConfig) -> np.ndarray:
    """0-based sample positions in time order: ``permutation(cfg)[i] == permute_index(i+1) - 1``.

    The returned array is cached and read-only.
    """
    return _permutation_cached(cfg)


def as_series(values, cfg: BlockConfig | None = None) -> np.ndarray:
    """Validate and convert a series to a 1-d float array (n >= 4, all finite).

    With ``cfg`` given, the length must match ``cfg.n``.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"series must be 1-dimensional, got shape {x.shape}")
    if x.size < 4:
        raise ValueError(f"series too short: n={x.size} < 4")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if cfg is not None and x.size != cfg.n:
        raise ValueError(f"series length {x.size} does not match n={cfg.n}")
    return x


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value} not in [0, 1]")


def _row_from_count(x: np.ndarray, cfg: BlockConfig, m: int) -> np.ndarray:
    """Process values over the full s-grid using the first ``m`` permuted indices.

    Returns an array ``row`` of length n+1 with ``row[j]`` the process value
    at s = j/n.
    """
    n = cfg.n
    masked = np.zeros(n)
    if m > 0:
        idx = permutation(cfg)[:m]
        masked[idx] = x[idx]
    row = np.empty(n + 1)
    row[0] = 0.0
    np.cumsum(masked, out=row[1:])
    row /= n
    return row


def _value_from_count(x: np.ndarray, cfg: BlockConfig, m: int, j: int) -> float:
    if m == 0 or j == 0:
        return 0.0
    idx = permutation(cfg)[:m]
    return float(x[idx[idx < j]].sum() / cfg.n)


def partial_sum(x, cfg: BlockConfig, t: float, s: float) -> float:
    """Bivariate partial sum: average of the observations whose time rank is
    at most floor(t*n) and whose sample position is at most floor(s*n)."""
    x = as_series(x, cfg)
    _check_unit("t", t)
    _check_unit("s", s)
    return _value_from_count(x, cfg, _floor_index(t * cfg.n), _floor_index(s * cfg.n))


def knot_of(cfg: BlockConfig, t: float) -> int:
    """Coarse time step containing ``t``: floor(t * n / n_blocks)."""
    _check_unit("t", t)
    return _floor_index(t * cfg.n) // cfg.n_blocks


def coarsened_partial_sum(x, cfg: BlockConfig, t: float, s: float) -> float:
    """Partial sum with ``t`` snapped down to the nearest coarse knot.

    Piecewise constant in ``t`` with knots at k * n_blocks / n.
    """
    x = as_series(x, cfg)
    _check_unit("s", s)
    m = knot_of(cfg, t) * cfg.n_blocks
    return _value_from_count(x, cfg, m, _floor_index(s * cfg.n))


def rescaled_time(t: float, cfg: BlockConfig) -> float:
    """Coarse time rescaled so that the first knot maps to 0 and t=1 maps to 1."""
    last = cfg.n_knots
    if last < 2:
        raise ConfigurationError(
            f"blocks too coarse: only {last} coarse step(s) for n={cfg.n}, "
            f"block_length={cfg.block_length}"
        )
    return (knot_of(cfg, t) - 1) / (last - 1)


class PartialSumGrid:
    """All coarsened partial-sum values, computed with per-block prefix sums.

    ``knot_rows[k, j]`` is the process at (t = k*n_blocks/n, s = j/n) for
    k = 0..n_knots, and ``ordinary[j]`` the plain partial-sum process at t=1.
    Building the full lattice costs O(n * n_knots) in two cumulative sums.
    """

    def __init__(self, cfg: BlockConfig, knot_rows: np.ndarray, ordinary: np.ndarray):
        self.cfg = cfg
        self.knot_rows = knot_rows
        self.ordinary = ordinary

    @classmethod
    def compute(cls, x, cfg: BlockConfig) -> "PartialSumGrid":
        x = as_series(x, cfg)
        n, ell, last = cfg.n, cfg.n_blocks, cfg.n_knots
        rank = np.empty(n, dtype=np.int64)
        rank[permutation(cfg)] = np.arange(1, n + 1)
        step = (rank + ell - 1) // ell  # first knot whose row includes each position

        contrib = np.zeros((last + 1, n))
        pos = np.flatnonzero(step <= last)
        contrib[step[pos], pos] = x[pos]
        layered = np.cumsum(contrib, axis=0)

        knot_rows = np.zeros((last + 1, n + 1))
        np.cumsum(layered, axis=1, out=knot_rows[:, 1:])
        knot_rows /= n

        ordinary = np.empty(n + 1)
        ordinary[0] = 0.0
        np.cumsum(x, out=ordinary[1:])
        ordinary /= n
        return cls(cfg, knot_rows, ordinary)

    def coarse_value(self, t: float, s: float) -> float:
        """Coarsened process at arbitrary (t, s)."""
        j = _floor_index(s * self.cfg.n)
        return float(self.knot_rows[knot_of(self.cfg, t), j])

    def knot_margins(self) -> np.ndarray:
        """Coarsened process at s=1 for every knot (the time marginal)."""
        return self.knot_rows[:, -1]
