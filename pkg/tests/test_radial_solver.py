"""Radial construction: contraction, continuation, rescaling, Pucci sandwich."""

import numpy as np
import pytest

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import residual_norm
from singular_src.services.errors import ContractionViolationError, MonotonicityViolationError, ParameterError
from singular_src.services.radial_solver import (
    a_priori_radius,
    contraction_iterate,
    contraction_map,
    contraction_radius,
    continue_ode,
    energy_identity_defect,
    f_aA,
    first_iterate,
    fixed_point_defect,
    fixed_point_iterate,
    graded_mesh,
    pucci_sandwich,
    rescale_to_unit_ball,
    solve_radial,
)
from singular_src.services.states import GridFunction, OperatorSpec
from singular_src.services.verify import check_boundary_exponent

SOLVE_NODES = 1001


def test_contraction_radius_values():
    assert contraction_radius(0.0, 0.5, 2, 1.0) == pytest.approx(1.1892, abs=1e-4)
    assert contraction_radius(0.0, 0.5, 2, 0.25) == pytest.approx(0.5946, abs=1e-4)


@pytest.mark.parametrize("alpha, gamma, dim", [(0.0, 0.5, 2), (1.0, 3.0, 3), (-0.5, 0.2, 4)])
def test_contraction_radius_homogeneity(alpha, gamma, dim):
    ratio = contraction_radius(alpha, gamma, dim, 2.0 ** (2.0 + alpha)) / contraction_radius(alpha, gamma, dim, 1.0)
    assert ratio == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("alpha, dim", [(0.0, 2), (0.0, 3), (1.0, 2), (1.0, 3)])
def test_first_iterate_matches_quadrature(make_ball_problem, alpha, dim):
    problem = make_ball_problem(alpha=alpha, gamma=0.5, dim=dim)
    r = graded_mesh(0.8 * contraction_radius(alpha, 0.5, dim), 4097, alpha)
    image = contraction_map(problem, GridFunction(nodes=r, values=np.ones_like(r)))
    np.testing.assert_allclose(image.values, first_iterate(r, alpha, dim), atol=1e-6)


def test_a_priori_radius_is_zero_of_first_iterate():
    for alpha, dim in [(0.0, 2), (1.0, 3)]:
        radius = a_priori_radius(alpha, dim)
        assert radius > 1.0
        assert float(first_iterate(np.array([radius]), alpha, dim)[0]) == pytest.approx(0.0, abs=1e-12)


def test_f_aA_examples():
    assert float(f_aA(3.0, 1.0, 2.0)) == pytest.approx(1.5)
    assert float(f_aA(-3.0, 1.0, 2.0)) == pytest.approx(-3.0)


def test_rescale_examples():
    profile = GridFunction(nodes=[0.0, 1.0, 2.0], values=[1.0, 0.5, 0.0])
    rescaled = rescale_to_unit_ball(profile, 2.0, 0.0, 1.0)
    np.testing.assert_allclose(rescaled.nodes, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(rescaled.values, [0.5, 0.25, 0.0])

    unit = GridFunction(nodes=[0.0, 0.5, 1.0], values=[1.0, 0.5, 0.0])
    same = rescale_to_unit_ball(unit, 1.0, 0.7, 2.0)
    np.testing.assert_allclose(same.values, unit.values)


def test_contraction_needs_ball(make_problem):
    with pytest.raises(ParameterError):
        contraction_iterate(make_problem(), graded_mesh(0.5, 33, 0.0))


@pytest.mark.parametrize("alpha", [0.0, 1.0])
@pytest.mark.parametrize("dim", [2, 3])
def test_radial_pipeline(make_ball_problem, alpha, dim):
    problem = make_ball_problem(alpha=alpha, gamma=0.5, dim=dim)
    state = solve_radial(problem, nodes=SOLVE_NODES)

    assert state.contraction_ratio < 1.0
    assert fixed_point_defect(problem, state.fixed_point_profile) <= 2e-11
    assert state.r_handoff < state.r_bar < a_priori_radius(alpha, dim)
    assert state.rescale_C == pytest.approx(state.r_bar ** (-(2.0 + alpha) / (1.5 + alpha)))

    profile = state.profile
    assert profile.values[-1] == 0.0
    assert np.all(profile.values[:-1] > 0.0)
    assert np.all(np.diff(profile.values) <= 1e-12)
    assert residual_norm(problem, profile, settings.BOUNDARY_MARGIN) <= 1e-3


def test_zero_stable_under_tighter_tolerances(make_ball_problem):
    problem = make_ball_problem(alpha=0.0, gamma=0.5, dim=3)
    r_handoff = settings.HANDOFF_FRACTION * contraction_radius(0.0, 0.5, 3)
    run = contraction_iterate(problem, graded_mesh(r_handoff, 2049, 0.0))
    args = (problem, r_handoff, float(run.profile.values[-1]), float(run.slope[-1]),
            2.0 * a_priori_radius(0.0, 3))
    _, r_coarse = continue_ode(*args, rtol=1e-9, atol=1e-12)
    _, r_fine = continue_ode(*args, rtol=1e-11, atol=1e-14)
    assert r_coarse is not None and r_fine is not None
    assert abs(r_coarse - r_fine) <= 1e-6


def test_iterates_leave_trial_ball_beyond_contraction_radius(make_ball_problem):
    problem = make_ball_problem(alpha=0.0, gamma=0.5, dim=2)
    with pytest.raises(ContractionViolationError):
        contraction_iterate(problem, graded_mesh(3.0 * contraction_radius(0.0, 0.5, 2), 257, 0.0))


def test_equal_constants_reduce_to_trace(make_ball_problem):
    trace = solve_radial(make_ball_problem(dim=2), nodes=201).profile
    pucci = solve_radial(make_ball_problem(dim=2, operator=OperatorSpec(kind="pucci_plus", a=1.0, A=1.0)),
                         nodes=201).profile
    assert trace.sup_distance(pucci) <= 1e-8


def test_pucci_sandwich_brackets_trace(make_ball_problem):
    problem = make_ball_problem(dim=2, operator=OperatorSpec(kind="pucci_plus", a=0.5, A=2.0))
    result = pucci_sandwich(problem, nodes=201)
    assert result.min_gap >= -1e-8
    assert np.all(result.upper.values - result.trace_profile.values >= -1e-8)
    assert np.all(result.trace_profile.values - result.lower.values >= -1e-8)


def test_energy_identity_of_trace_solution(make_ball_problem):
    problem = make_ball_problem(alpha=0.0, gamma=0.5, dim=3)
    profile = solve_radial(problem, nodes=2001).profile
    assert energy_identity_defect(problem, profile) <= 1e-3
    with pytest.raises(ParameterError):
        energy_identity_defect(problem.evolve(gamma=1.0), profile)


def test_fixed_point_iterate_profile(make_ball_problem):
    problem = make_ball_problem(alpha=1.0, gamma=0.5, dim=2)
    r_stop = 0.8 * contraction_radius(1.0, 0.5, 2)
    profile = fixed_point_iterate(problem, r_stop, nodes=1025)
    assert profile.values[0] == 1.0
    assert np.all(np.diff(profile.values) <= 0.0)
    assert profile.values[-1] < 1.0
    assert np.all(np.abs(profile.values - 1.0) < 0.5)


@pytest.mark.parametrize("alpha, gamma", [(0.0, 3.0), (1.0, 4.0)])
def test_strong_singularity_radial_boundary_slope(make_ball_problem, alpha, gamma):
    problem = make_ball_problem(alpha=alpha, gamma=gamma, dim=3)
    report = check_boundary_exponent(problem, solve_radial(problem, nodes=2001).profile)
    assert report.passed, report.measured
    assert report.measured[0] == pytest.approx(0.5, rel=0.05)


def test_continuation_stops_when_profile_turns(make_ball_problem):
    # p > 0 on the unit ball, negative beyond r ~ 1.09
    problem = make_ball_problem(alpha=0.0, gamma=0.5, dim=3, coeff_p="1 - 0.5*r**8")
    with pytest.raises(MonotonicityViolationError):
        continue_ode(problem, 1.5, 10.0, -1e-3, 3.0)
