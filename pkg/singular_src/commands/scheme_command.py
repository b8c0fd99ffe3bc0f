"""
Scheme command - existence pipeline on the problem mesh.
"""
import logging
import os
from typing import Any, Dict

from singular_src.graphs.scheme_graph import run_scheme_pipeline
from singular_src.services.report_exporter import ReportExporter, prepare_output
from singular_src.services.states import RunConfig
from singular_src.services.verify import fingerprint

logger = logging.getLogger(__name__)


def run_scheme_command(config: RunConfig) -> Dict[str, Any]:
    """
    Eigenvalues, hypotheses, barriers and delta continuation.

    Writes profile.csv (final Z), eigen.csv (weights c and beta) and summary.json
    with the delta ladder and the barrier ledger.
    """
    problem, numeric = config.problem, config.numeric
    state = run_scheme_pipeline(problem, numeric)
    trace, barriers = state["trace"], state["barriers"]

    summary = {
        "command": "scheme",
        "fingerprint": fingerprint(problem),
        "branch": barriers.branch,
        "barrier_constants": dict(barriers.constants),
        "lambda1_c": state["eigen_c"].lambda1,
        "lambda1_beta": state["eigen_beta"].lambda1,
        "delta_ladder": list(trace.delta_ladder),
        "level_iterations": [level.iterations for level in trace.levels],
        "level_residuals": [level.residual for level in trace.levels],
        "min_margin": min(level.min_margin for level in trace.levels),
        "tol_mono": trace.tol_mono,
        "final_residual": trace.final_residual,
        "max_u": float(trace.profile.values.max()),
    }
    logger.info(f"Scheme finished after {len(trace.levels)} delta levels "
                f"(residual {trace.final_residual:.3e})")

    out = prepare_output(config.output.directory, "scheme")
    if "csv" in config.output.formats:
        ReportExporter.write_profile_csv(os.path.join(out, "profile.csv"), problem, trace.profile)
        ReportExporter.write_eigen_csv(os.path.join(out, "eigen.csv"), [state["eigen_c"], state["eigen_beta"]])
    if "json" in config.output.formats:
        ReportExporter.write_summary_json(os.path.join(out, "summary.json"), summary)
    return summary
