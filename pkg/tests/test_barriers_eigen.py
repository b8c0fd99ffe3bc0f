"""Demi-eigenvalue estimates and certified barrier pairs."""
import math

import numpy as np
import pytest

from singular_src.services.barriers_eigen import (
    barrier_residual_signs,
    beta_weight,
    build_barriers_gamma_gt1,
    build_barriers_gamma_lt1,
    check_hypotheses,
    choose_barrier_exponent,
    eigen_estimate,
    lambda_continuity_probe,
    lt1_thresholds,
    tridiagonal_oracle,
)
from singular_src.services.errors import HypothesisViolationError, ParameterError
from singular_src.services.states import ProblemSpec

EIGEN_NODES = 401
SMALL_NODES = 201


def test_oracle_matches_closed_form():
    h = 1.0 / (EIGEN_NODES - 1)
    assert tridiagonal_oracle(EIGEN_NODES) == pytest.approx(4.0 / h ** 2 * math.sin(math.pi * h / 2.0) ** 2,
                                                            rel=1e-10)


def test_laplacian_eigenvalue(make_problem):
    pair = eigen_estimate(make_problem(alpha=0.0), nodes=EIGEN_NODES)
    assert pair.lambda1 == pytest.approx(math.pi ** 2, rel=1e-2)
    assert pair.lambda1 == pytest.approx(tridiagonal_oracle(EIGEN_NODES), rel=1e-6)
    assert pair.shift == 0.0
    assert float(np.max(pair.phi.values)) == pytest.approx(1.0)
    assert pair.residual <= 1e-4


def test_constant_weight_shifts_eigenvalue(make_problem):
    problem = make_problem(alpha=0.0)
    base = eigen_estimate(problem, nodes=SMALL_NODES).lambda1
    shifted = eigen_estimate(problem, 2.0, nodes=SMALL_NODES).lambda1
    assert shifted == pytest.approx(base - 2.0, rel=1e-6)


def test_large_weight_violates_hypothesis(make_problem):
    problem = make_problem(alpha=0.0, coeff_c=15.0)
    eigen_c = eigen_estimate(problem, nodes=SMALL_NODES)
    assert eigen_c.shift > 0.0
    assert eigen_c.lambda1 == pytest.approx(tridiagonal_oracle(SMALL_NODES) - 15.0, rel=1e-5)

    eigen_beta = eigen_estimate(problem, beta_weight(problem), nodes=SMALL_NODES, weight_label="beta")
    with pytest.raises(HypothesisViolationError) as info:
        check_hypotheses(eigen_c, eigen_beta)
    assert info.value.values["lambda1_c"] < 0.0


def test_continuity_probe_approaches_limit(make_problem):
    problem = make_problem(alpha=0.0)
    values = lambda_continuity_probe(problem, [1.0 / n for n in (1, 2, 4, 8)], nodes=SMALL_NODES)
    limit = eigen_estimate(problem, nodes=SMALL_NODES).lambda1
    assert all(b > a for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(limit - 0.125, rel=1e-6)


def test_beta_weight_scaling(make_problem):
    assert beta_weight(make_problem(alpha=0.0, gamma=3.0, coeff_c=2.0)) == pytest.approx(4.0)
    assert beta_weight(make_problem(alpha=0.0, gamma=3.0, coeff_c="x")) == "(x)*(2.0)"


def test_gamma_gt1_barrier_ledger(gt1_barriers):
    constants = gt1_barriers.constants
    assert gt1_barriers.branch == "gamma_gt1"
    assert constants["t"] == pytest.approx(0.5)
    assert constants["lambda1_beta"] == pytest.approx(math.pi ** 2, rel=1e-2)
    assert constants["d2"] > 0.0
    assert constants["b1_formula"] <= constants["b2_formula"]
    assert constants["b1"] <= constants["b1_formula"]
    assert constants["b2"] >= constants["b2_formula"]
    assert np.all(gt1_barriers.sub.values <= gt1_barriers.sup.values)


def test_gamma_gt1_barrier_residual_signs(gt1_problem, gt1_barriers):
    sub_min, sup_max = barrier_residual_signs(gt1_problem, gt1_barriers)
    assert sub_min >= 0.0
    assert sup_max <= 1e-6


def test_gamma_gt1_rejects_small_gamma(make_problem):
    problem = make_problem(alpha=0.0, gamma=0.5)
    pair = eigen_estimate(problem, nodes=SMALL_NODES)
    with pytest.raises(ParameterError):
        build_barriers_gamma_gt1(problem, pair)


@pytest.fixture(scope="module")
def lt1_setup():
    problem = ProblemSpec(alpha=0.0, gamma=0.5)
    eigen_c = eigen_estimate(problem, nodes=SMALL_NODES)
    s, eigen_s = choose_barrier_exponent(problem, nodes=SMALL_NODES)
    return problem, eigen_c, s, eigen_s


def test_gamma_lt1_barriers(lt1_setup):
    problem, eigen_c, s, eigen_s = lt1_setup
    assert s == pytest.approx(0.95)
    barriers = build_barriers_gamma_lt1(problem, eigen_c, eigen_s, s=s)
    constants = barriers.constants
    assert barriers.branch == "gamma_lt1"
    assert constants["kappa"] > 0.0
    assert constants["eps"] < constants["eps0"]
    assert constants["delta0"] == pytest.approx(lt1_thresholds(problem, eigen_c)[0])

    sub_min, sup_max = barrier_residual_signs(problem, barriers)
    assert sub_min >= 0.0
    assert sup_max <= 1e-6


def test_gamma_lt1_epsilon_threshold(lt1_setup):
    problem, eigen_c, s, eigen_s = lt1_setup
    _, eps0 = lt1_thresholds(problem, eigen_c)
    with pytest.raises(ParameterError):
        build_barriers_gamma_lt1(problem, eigen_c, eigen_s, s=s, epsilon=eps0)
    with pytest.raises(ParameterError):
        build_barriers_gamma_lt1(problem.evolve(gamma=3.0), eigen_c, eigen_s, s=s)
