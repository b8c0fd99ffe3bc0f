"""
Eigen command - first demi-eigenvalue of c and of the barrier weight beta.
"""
import logging
import os
from typing import Any, Dict

from singular_src.services.barriers_eigen import beta_weight, check_hypotheses, eigen_estimate
from singular_src.services.report_exporter import ReportExporter, prepare_output
from singular_src.services.states import RunConfig
from singular_src.services.verify import fingerprint

logger = logging.getLogger(__name__)


def run_eigen_command(config: RunConfig) -> Dict[str, Any]:
    """
    Estimates for c and beta. Outputs are written before the hypothesis check,
    so a nonpositive eigenvalue still leaves eigen.csv behind.
    """
    problem, numeric = config.problem, config.numeric
    pairs = [eigen_estimate(problem, tol=numeric.eigen_tol, nodes=numeric.nodes)]
    weight = beta_weight(problem)
    if weight != problem.coeff_c:
        pairs.append(eigen_estimate(problem, weight, numeric.eigen_tol, numeric.nodes, weight_label="beta"))

    summary = {
        "command": "eigen",
        "fingerprint": fingerprint(problem),
        "eigenvalues": {pair.weight_label: pair.lambda1 for pair in pairs},
        "iterations": {pair.weight_label: pair.iterations for pair in pairs},
        "residuals": {pair.weight_label: pair.residual for pair in pairs},
        "shifts": {pair.weight_label: pair.shift for pair in pairs},
    }

    out = prepare_output(config.output.directory, "eigen")
    if "csv" in config.output.formats:
        ReportExporter.write_eigen_csv(os.path.join(out, "eigen.csv"), pairs)
        phi = pairs[0].phi
        ReportExporter.write_csv(os.path.join(out, "eigenfunction.csv"), ["r", "phi"],
                                 list(zip(phi.nodes, phi.values)))
    if "json" in config.output.formats:
        ReportExporter.write_summary_json(os.path.join(out, "summary.json"), summary)
    check_hypotheses(pairs[0], pairs[-1])
    return summary
