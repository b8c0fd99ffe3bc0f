"""
Scheme Pipeline Agent - existence construction as a LangGraph workflow:
eigenvalues, hypothesis check, certified barriers, delta continuation.
"""

import logging
from typing import Any, Dict

from langgraph.graph import StateGraph, START, END

from singular_src.services.barriers_eigen import (
    beta_weight,
    build_barriers_gamma_gt1,
    build_barriers_gamma_lt1,
    check_hypotheses,
    choose_barrier_exponent,
    eigen_estimate,
)
from singular_src.services.errors import ParameterError, SingularLabError
from singular_src.services.monotone_scheme import delta_continuation
from singular_src.services.states import NumericConfig, ProblemSpec, SchemeState

logger = logging.getLogger(__name__)


# =========================
# Scheme Pipeline Node
# =========================

class SchemePipelineNode:
    """LangGraph node responsible for the existence pipeline."""

    # -------- EIGENVALUES --------
    def estimate_eigen(self, state: SchemeState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        problem, numeric = state["problem"], state["numeric"]
        logger.info(f"Estimating first eigenvalues on {numeric.nodes} nodes")

        try:
            eigen_c = eigen_estimate(problem, tol=numeric.eigen_tol, nodes=numeric.nodes)
            weight = beta_weight(problem)
            if weight == problem.coeff_c:
                eigen_beta = eigen_c.model_copy(update={"weight_label": "beta"})
            else:
                eigen_beta = eigen_estimate(problem, weight, numeric.eigen_tol, numeric.nodes,
                                            weight_label="beta")
            state["eigen_c"] = eigen_c
            state["eigen_beta"] = eigen_beta

        except SingularLabError as e:
            logger.exception("Eigenvalue estimation failed")
            state["error"] = e

        return state

    # -------- HYPOTHESES --------
    def check_hypotheses(self, state: SchemeState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        try:
            check_hypotheses(state["eigen_c"], state["eigen_beta"])
        except SingularLabError as e:
            logger.exception("Eigenvalue hypothesis violated")
            state["error"] = e

        return state

    # -------- BARRIERS --------
    def build_barriers(self, state: SchemeState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        problem = state["problem"]
        try:
            if problem.gamma > 1.0:
                barriers = build_barriers_gamma_gt1(problem, state["eigen_beta"])
            elif problem.gamma < 1.0:
                numeric = state["numeric"]
                s, eigen_s = choose_barrier_exponent(problem, numeric.barrier_s, numeric.eigen_tol,
                                                     numeric.nodes)
                state["barrier_s"] = s
                state["eigen_s"] = eigen_s
                barriers = build_barriers_gamma_lt1(problem, state["eigen_c"], eigen_s, s=s)
            else:
                raise ParameterError("no explicit barrier pair is available for gamma = 1")
            logger.info(f"Barriers ({barriers.branch}): "
                        + ", ".join(f"{k}={v:.6g}" for k, v in sorted(barriers.constants.items())))
            state["barriers"] = barriers

        except SingularLabError as e:
            logger.exception("Barrier construction failed")
            state["error"] = e

        return state

    # -------- DELTA CONTINUATION --------
    def continue_delta(self, state: SchemeState) -> Dict[str, Any]:
        if state.get("error"):
            return state

        numeric = state["numeric"]
        try:
            state["trace"] = delta_continuation(
                state["problem"],
                state["barriers"],
                delta0=numeric.delta0,
                ladder_factor=numeric.ladder_factor,
                tol=numeric.tol,
                inner_tol=numeric.inner_tol,
                level_tol=numeric.level_tol,
                grad_reg=numeric.grad_reg,
            )
        except SingularLabError as e:
            logger.exception("Delta continuation failed")
            state["error"] = e

        return state


# =========================
# Graph Builder
# =========================

class SchemePipelineGraph:
    def __init__(self):
        self.graph = StateGraph(SchemeState)
        self.node = SchemePipelineNode()

    def build(self):
        self.graph.add_node("estimate_eigen", self.node.estimate_eigen)
        self.graph.add_node("check_hypotheses", self.node.check_hypotheses)
        self.graph.add_node("build_barriers", self.node.build_barriers)
        self.graph.add_node("continue_delta", self.node.continue_delta)

        self.graph.add_edge(START, "estimate_eigen")
        self.graph.add_edge("estimate_eigen", "check_hypotheses")
        self.graph.add_edge("check_hypotheses", "build_barriers")
        self.graph.add_edge("build_barriers", "continue_delta")
        self.graph.add_edge("continue_delta", END)

        return self.graph.compile()


def create_scheme_pipeline_graph():
    """Factory function"""
    return SchemePipelineGraph().build()


def initial_scheme_state(problem: ProblemSpec, numeric: NumericConfig) -> SchemeState:
    return SchemeState(problem=problem, numeric=numeric, eigen_c=None, eigen_beta=None,
                       eigen_s=None, barrier_s=None, barriers=None, trace=None, error=None)
