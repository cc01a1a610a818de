import sys
from pathlib import Path

import pytest

from sncusum import nulldist

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def null_simple_small():
    """Small simple-ratio sample; quantiles are coarse but stable."""
    return nulldist.simulate_null(
        nulldist.SIMPLE_RATIO, grid_steps=300, replications=4000, seed=9001
    )


@pytest.fixture(scope="session")
def null_full_small():
    return nulldist.simulate_null(
        nulldist.FULL_RATIO, grid_steps=300, replications=4000, seed=9002
    )
