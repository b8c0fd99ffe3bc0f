"""LangGraph workflows: error propagation and check battery."""
import pytest

from singular_src.agents.scheme_pipeline import initial_scheme_state
from singular_src.agents.verification_agent import initial_verification_state
from singular_src.graphs.scheme_graph import (
    create_scheme_graph,
    perturbed_node_count,
    restart_on_perturbed_mesh,
    run_scheme_pipeline,
)
from singular_src.graphs.verification_graph import create_verification_graph, run_verification
from singular_src.services.errors import HypothesisViolationError, ParameterError
from singular_src.services.radial_solver import solve_radial
from singular_src.services.states import NumericConfig

SMALL = NumericConfig(nodes=201, fit_window=(0.01, 0.1))


def test_pipeline_stores_hypothesis_error(make_problem):
    state = create_scheme_graph().invoke(initial_scheme_state(make_problem(coeff_c=15.0), SMALL))
    assert isinstance(state["error"], HypothesisViolationError)
    assert state["eigen_c"].lambda1 < 0.0
    assert state["barriers"] is None
    assert state["trace"] is None


def test_pipeline_reraises(make_problem):
    with pytest.raises(HypothesisViolationError):
        run_scheme_pipeline(make_problem(coeff_c=15.0), SMALL)
    with pytest.raises(ParameterError):
        run_scheme_pipeline(make_problem(gamma=1.0), SMALL)


def test_pipeline_gamma_below_one(make_problem):
    state = run_scheme_pipeline(make_problem(alpha=0.0, gamma=0.5), SMALL)
    assert state["barrier_s"] == pytest.approx(SMALL.barrier_s)
    assert state["barriers"].branch == "gamma_lt1"
    assert state["trace"].final_residual <= SMALL.tol


def test_verification_battery(make_problem):
    state = run_verification(make_problem(alpha=0.0, gamma=0.5), SMALL)
    names = [check.check_name for check in state["checks"]]
    assert sorted(state["solutions"]) == ["oned", "scheme"]
    assert state["reference"].solver == "oned"
    for name in ("cross_validate", "barrier_signs", "comparison", "hopf", "tau1", "holder"):
        assert name in names
    by_name = {check.check_name: check for check in state["checks"]}
    assert by_name["barrier_signs"].passed
    assert by_name["comparison"].passed
    assert by_name["tau1"].passed is None
    assert by_name["uniqueness_restart"].passed
    assert by_name["uniqueness_restart"].measured[0] <= 10.0 * SMALL.tol


def test_verification_stores_error_without_solver(make_problem):
    problem = make_problem(alpha=-0.5, gamma=1.0, coeff_c="x")
    state = create_verification_graph().invoke(initial_verification_state(problem, SMALL))
    assert state["error"] is not None
    assert state["checks"] == []


def test_ball_battery_cross_validates(make_ball_problem):
    state = run_verification(make_ball_problem(alpha=0.0, gamma=0.5, dim=3), SMALL)
    assert sorted(state["solutions"]) == ["radial", "scheme"]
    by_name = {check.check_name: check for check in state["checks"]}
    assert by_name["cross_validate"].passed
    assert by_name["cross_validate"].measured[0] <= 1e-3


def test_radial_mesh_scheme_matches_radial_solver(make_ball_problem):
    problem = make_ball_problem(alpha=0.0, gamma=0.5, dim=3)
    numeric = NumericConfig(nodes=401)
    scheme = run_scheme_pipeline(problem, numeric)["trace"].profile
    radial = solve_radial(problem, numeric.nodes).profile
    assert scheme.sup_distance(radial) <= 1e-3


def test_perturbed_node_count_follows_seed():
    first = perturbed_node_count(201, seed=3)
    assert first == perturbed_node_count(201, seed=3)
    assert 202 <= first <= 221
    assert {perturbed_node_count(201, seed) for seed in range(20)} != {first}
    assert perturbed_node_count(5, seed=0) == 6


def test_restart_uses_seeded_mesh(make_problem):
    numeric = SMALL.model_copy(update={"seed": 11})
    state = restart_on_perturbed_mesh(make_problem(alpha=0.0, gamma=0.5), numeric)
    assert state["trace"].profile.size == perturbed_node_count(201, 11)
    assert state["trace"].final_residual <= numeric.tol
