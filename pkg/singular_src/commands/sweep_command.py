"""
Sweep command - one solve per parameter value, optionally in parallel worker
processes. Rows are sorted by parameter value regardless of completion order.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List

from pydantic import ValidationError

from singular_src.config.settings import settings
from singular_src.graphs.scheme_graph import run_scheme_pipeline
from singular_src.services.barriers_eigen import eigen_estimate
from singular_src.services.elliptic_core import residual_norm
from singular_src.services.errors import ConfigError, SingularLabError
from singular_src.services.oned_closedform import solve_interval_problem
from singular_src.services.radial_solver import solve_radial
from singular_src.services.report_exporter import ReportExporter, prepare_output
from singular_src.services.states import Geometry, NumericConfig, OperatorSpec, ProblemSpec, RunConfig

logger = logging.getLogger(__name__)

SWEEP_OUTPUTS = {
    "oned": ["midpoint_value", "energy_C", "residual_max"],
    "radial": ["r_bar", "rescale_C", "contraction_ratio", "u_center"],
    "eigen": ["lambda1", "iterations", "residual"],
    "scheme": ["final_residual", "levels", "max_u"],
}


def apply_parameter(problem: ProblemSpec, parameter: str, value: float) -> ProblemSpec:
    """Validated copy of ``problem`` with one swept parameter replaced."""
    if parameter in ("alpha", "gamma"):
        return problem.evolve(**{parameter: value})
    if parameter == "dim":
        return problem.evolve(dim=int(value))
    if parameter in ("a", "A"):
        operator = OperatorSpec(**{**problem.operator.model_dump(), parameter: value})
        return problem.evolve(operator=operator)
    if parameter in ("c", "p"):
        return problem.evolve(**{f"coeff_{parameter}": value})
    if parameter == "size":
        return problem.evolve(geometry=Geometry(kind=problem.geometry.kind, size=value))
    raise ConfigError(f"unknown sweep parameter '{parameter}'")


def _solve_point(command: str, problem: ProblemSpec, numeric: NumericConfig) -> Dict[str, Any]:
    if command == "oned":
        sol, profile = solve_interval_problem(problem, numeric.nodes, numeric.quad_tol)
        return {"midpoint_value": sol.midpoint_value, "energy_C": sol.energy_C,
                "residual_max": residual_norm(problem, profile, settings.BOUNDARY_MARGIN)}
    if command == "radial":
        state = solve_radial(problem, numeric.nodes, numeric.fixed_point_tol, numeric.rk_rtol, numeric.rk_atol)
        return {"r_bar": state.r_bar, "rescale_C": state.rescale_C,
                "contraction_ratio": state.contraction_ratio, "u_center": float(state.profile.values[0])}
    if command == "eigen":
        pair = eigen_estimate(problem, tol=numeric.eigen_tol, nodes=numeric.nodes)
        return {"lambda1": pair.lambda1, "iterations": pair.iterations, "residual": pair.residual}
    state = run_scheme_pipeline(problem, numeric)
    trace = state["trace"]
    return {"final_residual": trace.final_residual, "levels": len(trace.levels),
            "max_u": float(trace.profile.values.max())}


def sweep_point(command: str, problem_payload: Dict[str, Any], numeric_payload: Dict[str, Any],
                parameter: str, value: float) -> Dict[str, Any]:
    """
    One sweep row. Runs in a worker process, so inputs travel as plain dicts;
    failures are recorded in the ``status`` column instead of aborting the sweep.
    """
    row: Dict[str, Any] = {parameter: value, "status": "ok"}
    try:
        problem = apply_parameter(ProblemSpec.model_validate(problem_payload), parameter, value)
        numeric = NumericConfig.model_validate(numeric_payload)
        row.update(_solve_point(command, problem, numeric))
    except (SingularLabError, ValidationError) as e:
        logger.warning(f"sweep point {parameter}={value} failed: {e}")
        row["status"] = type(e).__name__
    return row


def run_sweep_command(config: RunConfig) -> Dict[str, Any]:
    sweep = config.numeric.sweep
    if sweep is None or not sweep.values:
        raise ConfigError("the sweep command needs numeric.sweep with a non-empty 'values' list")

    problem_payload = config.problem.model_dump()
    numeric_payload = config.numeric.model_dump(exclude={"sweep"})
    values = sorted(sweep.values)
    logger.info(f"Sweeping {sweep.parameter} over {len(values)} values with {sweep.jobs} job(s)")

    args = [(sweep.command, problem_payload, numeric_payload, sweep.parameter, v) for v in values]
    if sweep.jobs == 1:
        rows: List[Dict[str, Any]] = [sweep_point(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=sweep.jobs) as executor:
            rows = list(executor.map(sweep_point, *zip(*args)))
    rows.sort(key=lambda row: row[sweep.parameter])

    columns = [sweep.parameter, "status"] + SWEEP_OUTPUTS[sweep.command]
    summary = {
        "command": "sweep",
        "solver": sweep.command,
        "parameter": sweep.parameter,
        "rows": rows,
        "failed": sum(1 for row in rows if row["status"] != "ok"),
    }

    out = prepare_output(config.output.directory, "sweep")
    if "csv" in config.output.formats:
        table = [[row.get(column) for column in columns] for row in rows]
        ReportExporter.write_csv(os.path.join(out, "sweep.csv"), columns, table)
    if "json" in config.output.formats:
        ReportExporter.write_summary_json(os.path.join(out, "summary.json"), summary)
    return summary
