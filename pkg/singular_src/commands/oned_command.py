"""
1D command - quadrature solution of an interval problem.
"""
import logging
import os
from typing import Any, Dict

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import residual_norm
from singular_src.services.oned_closedform import first_integral_defect, solve_interval_problem
from singular_src.services.report_exporter import ReportExporter, prepare_output
from singular_src.services.states import RunConfig
from singular_src.services.verify import fingerprint

logger = logging.getLogger(__name__)


def run_oned_command(config: RunConfig) -> Dict[str, Any]:
    """Solve through the first integral and write profile.csv / summary.json."""
    problem, numeric = config.problem, config.numeric
    logger.info(f"1D quadrature solve: alpha={problem.alpha}, gamma={problem.gamma}, nodes={numeric.nodes}")

    sol, profile = solve_interval_problem(problem, numeric.nodes, numeric.quad_tol)

    summary = {
        "command": "oned",
        "fingerprint": fingerprint(problem),
        "midpoint_value": sol.midpoint_value,
        "energy_C": sol.energy_C,
        "boundary_derivative": sol.boundary_derivative,
        "first_integral_defect": first_integral_defect(sol, problem.alpha, problem.gamma,
                                                       settings.BOUNDARY_MARGIN),
        "residual_max": residual_norm(problem, profile, settings.BOUNDARY_MARGIN),
        "max_u": float(profile.values.max()),
    }

    out = prepare_output(config.output.directory, "oned")
    if "csv" in config.output.formats:
        ReportExporter.write_profile_csv(os.path.join(out, "profile.csv"), problem, profile)
    if "json" in config.output.formats:
        ReportExporter.write_summary_json(os.path.join(out, "summary.json"), summary)
    return summary
