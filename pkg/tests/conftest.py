"""
Shared fixtures: problem factories and the expensive solver outputs that
several test modules reuse.
"""
import logging
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from singular_src.services.barriers_eigen import (  # noqa: E402
    beta_weight,
    build_barriers_gamma_gt1,
    eigen_estimate,
)
from singular_src.services.states import Geometry, GridFunction, ProblemSpec  # noqa: E402

logger = logging.getLogger(__name__)

BARRIER_NODES = 401


@pytest.fixture
def make_problem():
    """Factory for problems with the lab defaults (trace operator, p = 1, unit interval)."""
    def factory(alpha: float = 0.0, gamma: float = 0.5, **kwargs) -> ProblemSpec:
        return ProblemSpec(alpha=alpha, gamma=gamma, **kwargs)
    return factory


@pytest.fixture
def make_ball_problem():
    def factory(alpha: float = 0.0, gamma: float = 0.5, dim: int = 3, **kwargs) -> ProblemSpec:
        return ProblemSpec(alpha=alpha, gamma=gamma, dim=dim, geometry=Geometry(kind="ball"), **kwargs)
    return factory


@pytest.fixture
def unit_mesh():
    def factory(nodes: int) -> np.ndarray:
        return np.linspace(0.0, 1.0, nodes)
    return factory


@pytest.fixture(scope="session")
def gt1_problem() -> ProblemSpec:
    return ProblemSpec(alpha=0.0, gamma=3.0)


@pytest.fixture(scope="session")
def gt1_barriers(gt1_problem):
    eigen_beta = eigen_estimate(gt1_problem, beta_weight(gt1_problem), nodes=BARRIER_NODES,
                                weight_label="beta")
    logger.info(f"session barriers built with lambda1={eigen_beta.lambda1:.6f}")
    return build_barriers_gamma_gt1(gt1_problem, eigen_beta)


def distance_profile(nodes: np.ndarray, power: float = 1.0, scale: float = 1.0) -> GridFunction:
    """scale * d(x)^power on the unit interval."""
    return GridFunction(nodes=nodes, values=scale * np.minimum(nodes, 1.0 - nodes) ** power)
