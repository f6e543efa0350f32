import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conehedge.market import TreeSpec, build_correlated
from conehedge.payoffs import outperformance_option
from conehedge.shp import shp_backward


@pytest.fixture(scope="session")
def outperformance_fixture():
    """Shared outperformance-option market (two correlated stocks, n=4)
    with its precomputed backward recursion; several suites replay the
    documented strategies on it."""
    spec = TreeSpec(kind="correlated", S0=[50.0, 45.0], sigma=[0.15, 0.2], n=4,
                    r=0.0, rho=[[1.0, 0.2], [0.2, 1.0]], lam=[0.0, 0.2, 0.1],
                    maturity=1.0, rate_convention="nominal")
    tree = build_correlated(spec)
    claim = outperformance_option(tree, 47.0)
    res = shp_backward(tree, claim, check_na=False)
    return spec, tree, claim, res
