"""
Verify command - runs the check battery and writes checks.csv / checks.md.
"""
import logging
import os
from typing import Any, Dict

from singular_src.graphs.verification_graph import run_verification
from singular_src.services.report_exporter import ReportExporter, check_summary, prepare_output
from singular_src.services.states import RunConfig
from singular_src.services.verify import fingerprint

logger = logging.getLogger(__name__)


def run_verify_command(config: RunConfig) -> Dict[str, Any]:
    problem, numeric = config.problem, config.numeric
    state = run_verification(problem, numeric)
    checks, reference = state["checks"], state["reference"]

    failed = [c.check_name for c in checks if c.passed is False]
    if failed:
        logger.warning(f"Failed checks: {', '.join(failed)}")
    else:
        logger.info(f"All {len(checks)} checks passed or informational")

    summary = {
        "command": "verify",
        "fingerprint": fingerprint(problem),
        "reference_solver": reference.solver,
        "solvers": sorted(state["solutions"]),
        "residual_max": reference.residual_max,
        "checks": check_summary(checks),
        "failed": failed,
    }

    out = prepare_output(config.output.directory, "verify")
    if "csv" in config.output.formats:
        ReportExporter.write_checks_csv(os.path.join(out, "checks.csv"), checks)
        ReportExporter.write_profile_csv(os.path.join(out, "profile.csv"), problem, reference.profile)
    if "json" in config.output.formats:
        ReportExporter.write_summary_json(os.path.join(out, "summary.json"), summary)
    if "md" in config.output.formats:
        metadata = {"fingerprint": fingerprint(problem), "alpha": problem.alpha, "gamma": problem.gamma,
                    "geometry": problem.geometry.kind, "operator": problem.operator.kind,
                    "nodes": numeric.nodes}
        markdown = ReportExporter.export_checks_markdown(checks, "Verification", metadata)
        ReportExporter.write_markdown(os.path.join(out, "checks.md"), markdown)
    return summary
