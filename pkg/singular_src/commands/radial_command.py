"""
Radial command - fixed point, ODE continuation and rescaling on a ball.
"""
import logging
import os
from typing import Any, Dict

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import residual_norm
from singular_src.services.radial_solver import solve_radial
from singular_src.services.report_exporter import ReportExporter, prepare_output
from singular_src.services.states import RunConfig
from singular_src.services.verify import fingerprint

logger = logging.getLogger(__name__)


def run_radial_command(config: RunConfig) -> Dict[str, Any]:
    problem, numeric = config.problem, config.numeric
    logger.info(f"Radial solve: N={problem.dim}, operator={problem.operator.kind}, "
                f"alpha={problem.alpha}, gamma={problem.gamma}")

    state = solve_radial(problem, numeric.nodes, numeric.fixed_point_tol, numeric.rk_rtol, numeric.rk_atol)
    profile = state.profile

    summary = {
        "command": "radial",
        "fingerprint": fingerprint(problem),
        "r_o": state.r_o,
        "r_handoff": state.r_handoff,
        "r_bar": state.r_bar,
        "rescale_C": state.rescale_C,
        "contraction_ratio": state.contraction_ratio,
        "u_center": float(profile.values[0]),
        "residual_max": residual_norm(problem, profile, settings.BOUNDARY_MARGIN),
    }

    out = prepare_output(config.output.directory, "radial")
    if "csv" in config.output.formats:
        ReportExporter.write_profile_csv(os.path.join(out, "profile.csv"), problem, profile)
    if "json" in config.output.formats:
        ReportExporter.write_summary_json(os.path.join(out, "summary.json"), summary)
    return summary
