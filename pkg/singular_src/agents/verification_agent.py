"""
Verification Agent - runs the check battery on a problem: independent
solves, solver agreement, barrier certification and boundary behavior.
"""

import logging
from typing import Any, Dict

from langgraph.graph import StateGraph, START, END

from singular_src.config.settings import settings
from singular_src.graphs.scheme_graph import restart_on_perturbed_mesh, run_scheme_pipeline
from singular_src.services.elliptic_core import residual_norm
from singular_src.services.errors import PreconditionError, SingularLabError
from singular_src.services.oned_closedform import solve_interval_problem
from singular_src.services.radial_solver import solve_radial
from singular_src.services.states import NumericConfig, ProblemSpec, SolveReport, VerificationState
from singular_src.services.verify import (
    available_solvers,
    boundary_quotient,
    check_barrier_signs,
    check_boundary_exponent,
    check_comparison,
    check_gradient_blowup,
    check_holder,
    check_hopf,
    check_restart,
    check_sandwich,
    cross_validate,
    measure_tau1,
)

logger = logging.getLogger(__name__)


# =========================
# Verification Node
# =========================

class VerificationNode:
    """LangGraph node responsible for the verification battery."""

    # -------- REFERENCE SOLVES --------
    def solve_reference(self, state: VerificationState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        problem, numeric = state["problem"], state["numeric"]
        solvers = available_solvers(problem)
        logger.info(f"Reference solvers: {', '.join(solvers) or 'none'}")

        solutions = {}
        try:
            if "oned" in solvers:
                _, solutions["oned"] = solve_interval_problem(problem, numeric.nodes, numeric.quad_tol)
            if "radial" in solvers:
                solutions["radial"] = solve_radial(problem, numeric.nodes, numeric.fixed_point_tol,
                                                   numeric.rk_rtol, numeric.rk_atol).profile
            if "scheme" in solvers:
                pipeline = run_scheme_pipeline(problem, numeric)
                solutions["scheme"] = pipeline["trace"].profile
                state["barriers"] = pipeline["barriers"]

            if not solutions:
                raise PreconditionError("no solver applies to this problem")

            name = next(iter(solutions))
            profile = solutions[name]
            state["reference"] = SolveReport(
                solver=name,
                profile=profile,
                residual_max=residual_norm(problem, profile, settings.BOUNDARY_MARGIN),
            )
            state["solutions"] = solutions

        except SingularLabError as e:
            logger.exception("Reference solve failed")
            state["error"] = e

        return state

    # -------- SOLVER AGREEMENT --------
    def cross_validate(self, state: VerificationState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        solutions = state.get("solutions") or {}
        if len(solutions) < 2:
            logger.info("Single solution path; cross validation skipped")
            return state

        try:
            state["checks"].append(cross_validate(state["problem"], solutions, settings.CROSS_TOL))
        except SingularLabError as e:
            logger.exception("Cross validation failed")
            state["error"] = e

        return state

    # -------- PERTURBED-MESH RESTART --------
    def restart_scheme(self, state: VerificationState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        scheme = (state.get("solutions") or {}).get("scheme")
        if scheme is None:
            return state

        problem, numeric = state["problem"], state["numeric"]
        try:
            restarted = restart_on_perturbed_mesh(problem, numeric)["trace"].profile
            state["checks"].append(check_restart(problem, scheme, restarted, numeric.tol,
                                                 margin=settings.BOUNDARY_MARGIN))
        except SingularLabError as e:
            logger.exception("Scheme restart failed")
            state["error"] = e

        return state

    # -------- BARRIERS --------
    def check_barriers(self, state: VerificationState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        barriers = state.get("barriers")
        if barriers is None:
            return state

        problem, tol = state["problem"], state["numeric"].tol
        reference = state["reference"].profile
        try:
            state["checks"].append(check_barrier_signs(problem, barriers, tol))
            state["checks"].append(check_comparison(problem, barriers.sub, barriers.sup, tol))
        except SingularLabError as e:
            logger.exception("Barrier checks failed")
            state["error"] = e
            return state

        # the reference is only certified away from the boundary layer
        for lower, upper, label in ((barriers.sub, reference, "sub"), (reference, barriers.sup, "sup")):
            try:
                check = check_comparison(problem, lower, upper, tol, margin=settings.BOUNDARY_MARGIN)
                state["checks"].append(check.model_copy(update={"check_name": f"comparison_{label}"}))
            except PreconditionError as e:
                logger.warning(f"comparison against the {label} barrier skipped: {e}")

        return state

    # -------- BOUNDARY BEHAVIOR --------
    def check_boundary(self, state: VerificationState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        problem, numeric = state["problem"], state["numeric"]
        reference = state["reference"].profile
        radial = problem.is_radial
        checks = state["checks"]

        try:
            if problem.gamma > 1.0:
                checks.append(check_boundary_exponent(problem, reference, numeric.fit_window))
                checks.append(check_gradient_blowup(reference, problem.alpha, problem.gamma, radial))
            elif problem.gamma < 1.0:
                barriers = state.get("barriers")
                floor = boundary_quotient(barriers.sub, radial) if barriers is not None else settings.HOPF_FLOOR
                checks.append(check_hopf(reference, floor, problem.gamma, radial=radial))
                checks.append(measure_tau1(reference, numeric.fit_window, radial))
            else:
                logger.info("gamma = 1: no boundary exponent target")

            checks.append(check_holder(problem, reference))

            if radial and problem.operator.kind != "trace" and "radial" in state["solutions"]:
                checks.append(check_sandwich(problem, numeric.nodes))

        except SingularLabError as e:
            logger.exception("Boundary checks failed")
            state["error"] = e

        return state


# =========================
# Graph Builder
# =========================

class VerificationGraph:
    def __init__(self):
        self.graph = StateGraph(VerificationState)
        self.node = VerificationNode()

    def build(self):
        self.graph.add_node("solve_reference", self.node.solve_reference)
        self.graph.add_node("cross_validate", self.node.cross_validate)
        self.graph.add_node("restart_scheme", self.node.restart_scheme)
        self.graph.add_node("check_barriers", self.node.check_barriers)
        self.graph.add_node("check_boundary", self.node.check_boundary)

        self.graph.add_edge(START, "solve_reference")
        self.graph.add_edge("solve_reference", "cross_validate")
        self.graph.add_edge("cross_validate", "restart_scheme")
        self.graph.add_edge("restart_scheme", "check_barriers")
        self.graph.add_edge("check_barriers", "check_boundary")
        self.graph.add_edge("check_boundary", END)

        return self.graph.compile()


def create_verification_agent_graph():
    """Factory function"""
    return VerificationGraph().build()


def initial_verification_state(problem: ProblemSpec, numeric: NumericConfig) -> VerificationState:
    return VerificationState(problem=problem, numeric=numeric, solutions={}, reference=None,
                             barriers=None, checks=[], error=None)
