"""
Verification Graph - LangGraph orchestration for the check battery.
"""
from singular_src.agents.verification_agent import create_verification_agent_graph, initial_verification_state
from singular_src.services.states import NumericConfig, ProblemSpec, VerificationState


def create_verification_graph():
    """
    Create and compile the verification graph.

    Returns:
        Compiled LangGraph workflow over VerificationState
    """
    return create_verification_agent_graph()


def run_verification(problem: ProblemSpec, numeric: NumericConfig) -> VerificationState:
    """Invoke the battery and re-raise the stored error, if any."""
    state = create_verification_graph().invoke(initial_verification_state(problem, numeric))
    if state.get("error") is not None:
        raise state["error"]
    return state
