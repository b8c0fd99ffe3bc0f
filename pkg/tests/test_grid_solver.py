"""Frozen-step Newton solver."""
import numpy as np
import pytest

from singular_src.services.errors import ParameterError, PositivityError
from singular_src.services.grid_solver import (
    frozen_k_bound,
    frozen_operator,
    frozen_rhs,
    regularization_ladder,
    solve_frozen,
    uniform_k_bound,
)
from singular_src.services.states import FrozenStepSpec, GridFunction, OperatorSpec
from tests.conftest import distance_profile


def _constant(nodes: np.ndarray, value: float) -> GridFunction:
    values = np.full_like(nodes, value)
    values[0] = values[-1] = 0.0
    return GridFunction(nodes=nodes, values=values)


def test_poisson_step_is_exact(make_problem, unit_mesh):
    x = unit_mesh(201)
    spec = FrozenStepSpec(problem=make_problem(alpha=0.0), rhs=_constant(x, -2.0))
    w = solve_frozen(spec, distance_profile(x, scale=0.1))
    np.testing.assert_allclose(w.values, x * (1.0 - x), atol=1e-10)


def test_degenerate_step_recovers_manufactured_solution(make_problem, unit_mesh):
    x = unit_mesh(201)
    problem = make_problem(alpha=1.0)
    exact = GridFunction(nodes=x, values=np.sin(np.pi * x))
    exact = exact.with_values(np.where((x > 0.0) & (x < 1.0), exact.values, 0.0))

    probe = FrozenStepSpec(problem=problem, k_coeff=1.0, delta=0.5, rhs=exact.with_values(np.zeros_like(x)))
    rhs = exact.with_values(frozen_operator(probe, exact))
    spec = FrozenStepSpec(problem=problem, k_coeff=1.0, delta=0.5, rhs=rhs)

    w = solve_frozen(spec, exact.with_values(0.5 * exact.values))
    assert w.sup_distance(exact) <= 1e-6


def test_frozen_rhs_value(make_problem):
    problem = make_problem(alpha=0.0, gamma=1.0)
    w_prev = GridFunction(nodes=[0.0, 0.5, 1.0], values=[1.0, 1.0, 1.0])
    rhs = frozen_rhs(problem, 1.0, 0.0, w_prev)
    np.testing.assert_allclose(rhs.values, [-2.0, -2.0, -2.0])


def test_uniform_k_bound_value(make_problem, unit_mesh):
    assert uniform_k_bound(make_problem(alpha=0.0, gamma=1.0), 0.5, unit_mesh(11)) == pytest.approx(4.0)
    with pytest.raises(ParameterError):
        uniform_k_bound(make_problem(), 0.0, unit_mesh(11))


@pytest.mark.parametrize("alpha, gamma", [(0.0, 0.5), (1.0, 3.0), (-0.5, 2.0)])
def test_k_bound_makes_rhs_nonincreasing(make_problem, alpha, gamma):
    problem = make_problem(alpha=alpha, gamma=gamma)
    delta = 0.1
    u = np.linspace(0.0, 5.0, 2001)
    k = uniform_k_bound(problem, delta, np.linspace(0.0, 1.0, 257))
    values = frozen_rhs(problem, k, delta, GridFunction(nodes=np.linspace(0.0, 1.0, u.size), values=u)).values
    assert np.all(np.diff(values) <= 1e-12)


def test_nodewise_k_bound_dominates_local_derivative(make_problem, unit_mesh):
    x = unit_mesh(101)
    problem = make_problem(alpha=0.0, gamma=0.5)
    floor = distance_profile(x, scale=0.2)
    k = frozen_k_bound(problem, 0.05, floor)
    local = 0.5 / (floor.values + 0.05) ** 1.5
    assert np.all(k[1:-1] >= local[1:-1])


def test_zero_rhs_gives_trivial_solution(make_problem, unit_mesh):
    x = unit_mesh(51)
    spec = FrozenStepSpec(problem=make_problem(), rhs=_constant(x, 0.0))
    w = solve_frozen(spec, distance_profile(x))
    assert np.all(w.values == 0.0)


def test_negative_alpha_rejected(make_problem, unit_mesh):
    x = unit_mesh(51)
    spec = FrozenStepSpec(problem=make_problem(alpha=-0.5), rhs=_constant(x, -1.0))
    with pytest.raises(ParameterError):
        solve_frozen(spec, distance_profile(x))


def test_regularization_ladder():
    ladder = regularization_ladder(1.0, 1e-8)
    assert ladder[0] == pytest.approx(1e-2)
    assert ladder[-1] == 1e-8
    assert len(ladder) == 7
    assert all(b < a for a, b in zip(ladder, ladder[1:]))
    assert regularization_ladder(0.0, 1e-8) == [1e-8]


def test_nonpositive_solution_without_shift(make_problem, unit_mesh):
    x = unit_mesh(51)
    spec = FrozenStepSpec(problem=make_problem(alpha=0.0), rhs=_constant(x, 2.0))
    with pytest.raises(PositivityError):
        solve_frozen(spec, distance_profile(x))


def _manufactured_error(problem, nodes: int) -> float:
    x = np.linspace(0.0, 1.0, nodes)
    u = np.sin(np.pi * x)
    u[0] = u[-1] = 0.0
    curvature = -np.pi ** 2 * np.sin(np.pi * x)
    if problem.operator.kind == "pucci_plus":
        curvature = problem.operator.A * curvature
    rhs = GridFunction(nodes=x, values=curvature - (u + 0.5))
    spec = FrozenStepSpec(problem=problem, k_coeff=1.0, delta=0.5, rhs=rhs)
    w = solve_frozen(spec, distance_profile(x, scale=0.1))
    return float(np.max(np.abs(w.values - u)))


@pytest.mark.parametrize("operator", [OperatorSpec(), OperatorSpec(kind="pucci_plus", a=0.5, A=2.0)],
                         ids=["trace", "pucci_plus"])
def test_manufactured_error_drops_with_refinement(make_problem, operator):
    problem = make_problem(alpha=0.0, operator=operator)
    errors = [_manufactured_error(problem, n) for n in (51, 101, 201)]
    assert errors[0] / errors[1] >= 3.0
    assert errors[1] / errors[2] >= 3.0


def test_larger_rhs_gives_smaller_solution(make_problem, unit_mesh):
    rng = np.random.default_rng(7)
    x = unit_mesh(101)
    problem = make_problem(alpha=0.0, coeff_h=1.0)
    for _ in range(5):
        low = -1.0 - rng.uniform(0.0, 2.0, x.size)
        high = low + rng.uniform(0.0, 1.0, x.size)
        solutions = [
            solve_frozen(FrozenStepSpec(problem=problem, k_coeff=1.0, delta=0.5, rhs=GridFunction(nodes=x, values=f)),
                         distance_profile(x, scale=0.1))
            for f in (low, high)
        ]
        assert np.all(solutions[1].values <= solutions[0].values + 1e-10)
