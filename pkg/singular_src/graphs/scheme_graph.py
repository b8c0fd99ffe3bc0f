"""
Scheme Graph - LangGraph orchestration for the existence construction.
"""
import logging

import numpy as np

from singular_src.agents.scheme_pipeline import create_scheme_pipeline_graph, initial_scheme_state
from singular_src.services.states import NumericConfig, ProblemSpec, SchemeState

logger = logging.getLogger(__name__)


def create_scheme_graph():
    """
    Create and compile the existence pipeline graph.

    Returns:
        Compiled LangGraph workflow over SchemeState
    """
    return create_scheme_pipeline_graph()


def run_scheme_pipeline(problem: ProblemSpec, numeric: NumericConfig) -> SchemeState:
    """Invoke the pipeline and re-raise the stored error, if any."""
    state = create_scheme_graph().invoke(initial_scheme_state(problem, numeric))
    if state.get("error") is not None:
        raise state["error"]
    return state


def perturbed_node_count(nodes: int, seed: int) -> int:
    """Node count of the restart mesh: nodes plus a seeded draw from [1, max(1, nodes // 10)]."""
    rng = np.random.default_rng(seed)
    return nodes + int(rng.integers(1, max(1, nodes // 10), endpoint=True))


def restart_on_perturbed_mesh(problem: ProblemSpec, numeric: NumericConfig) -> SchemeState:
    """Rerun the whole pipeline on a uniform mesh whose node count is drawn from ``numeric.seed``."""
    nodes = perturbed_node_count(numeric.nodes, numeric.seed)
    logger.info(f"Restarting the scheme on {nodes} nodes (seed {numeric.seed})")
    return run_scheme_pipeline(problem, numeric.model_copy(update={"nodes": nodes}))
