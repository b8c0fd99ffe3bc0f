"""
Monotone scheme - the existence construction on a grid: for a fixed delta the
nondecreasing sequence w_{n+1} = solve_frozen(f_delta(w_n)) started from the
sub-solution, then delta -> 0 along a geometric ladder.
"""
import logging
from typing import List, Optional

import numpy as np

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import residual_norm
from singular_src.services.errors import NonConvergenceError, ParameterError, SchemeError
from singular_src.services.grid_solver import frozen_k_bound, frozen_rhs, solve_frozen
from singular_src.services.states import (
    BarrierSet,
    DeltaLevel,
    FrozenStepSpec,
    GridFunction,
    ProblemSpec,
    SchemeTrace,
)

logger = logging.getLogger(__name__)

_STAGNATION_LEVELS = 3


def _unknowns(problem: ProblemSpec, size: int) -> np.ndarray:
    return np.arange(0 if problem.is_radial else 1, size - 1)


def run_delta_level(problem: ProblemSpec, barriers: BarrierSet, delta: float,
                    start: Optional[GridFunction] = None,
                    inner_tol: float = settings.NEWTON_TOL,
                    level_tol: float = settings.LEVEL_TOL,
                    max_iter: int = settings.LEVEL_MAX_ITER,
                    grad_reg: float = settings.GRAD_REG_TARGET,
                    continuation: bool = True) -> DeltaLevel:
    """
    Monotone iteration for one delta, from ``start`` (defaults to the sub-solution).

    Raises:
        SchemeError: if an iterate decreases by more than tol_mono or leaves the barriers
        NonConvergenceError: if ``max_iter`` iterations do not reach ``level_tol``
    """
    if not delta > 0.0:
        raise ParameterError(f"delta must be positive inside the scheme (got {delta})")
    tol_mono = 10.0 * inner_tol
    w = barriers.sub if start is None else start
    idx = _unknowns(problem, w.size)
    k = frozen_k_bound(problem, delta, w)
    sub, sup = barriers.sub.values[idx], barriers.sup.values[idx]

    min_margin = np.inf
    previous_change = np.inf
    reg_start = None if continuation else grad_reg
    for iteration in range(1, max_iter + 1):
        rhs = frozen_rhs(problem, k, delta, w)
        spec = FrozenStepSpec(problem=problem, k_coeff=k, delta=delta, rhs=rhs, grad_reg=grad_reg)
        new = solve_frozen(spec, w, tol=inner_tol, grad_reg_start=reg_start)
        reg_start = grad_reg

        step = new.values[idx] - w.values[idx]
        margin = float(np.min(step))
        min_margin = min(min_margin, margin)
        if margin < -tol_mono:
            node = int(idx[np.argmin(step)])
            raise SchemeError(f"monotonicity violated by {-margin:.3e}", node, iteration, delta)

        outside = (new.values[idx] < sub - tol_mono) | (new.values[idx] > sup + tol_mono)
        if np.any(outside):
            node = int(idx[np.flatnonzero(outside)[0]])
            raise SchemeError("iterate left the barrier interval", node, iteration, delta)

        change = float(np.max(np.abs(step)))
        w = new
        logger.debug(f"delta={delta:.3e} iteration {iteration}: change={change:.3e}")
        # stop at tolerance, or once changes sit at the round-off floor
        if change <= level_tol or (change <= 1e2 * level_tol and change >= previous_change):
            break
        previous_change = change
    else:
        raise NonConvergenceError(f"monotone iteration at delta={delta:.3e} did not settle",
                                  last_residual=change)

    residual = residual_norm(problem, w, margin=0.0)
    logger.info(f"delta={delta:.3e}: {iteration} iterations, min margin {min_margin:.2e}, "
                f"residual {residual:.3e}")
    return DeltaLevel(delta=delta, iterations=iteration, min_margin=min_margin,
                      barrier_violations=0, residual=residual, profile=w)


def monotone_solve_fixed_delta(problem: ProblemSpec, barriers: BarrierSet, delta: float,
                               tol: float = settings.LEVEL_TOL) -> GridFunction:
    """Z_delta: limit of the monotone sequence started from the sub-solution."""
    return run_delta_level(problem, barriers, delta, level_tol=tol).profile


def default_delta0(barriers: BarrierSet) -> float:
    """Largest regularization for which the sub-solution is certified."""
    if barriers.branch == "gamma_lt1":
        return 0.5 * barriers.constants["delta0"]
    return barriers.constants.get("delta0", settings.GT1_DELTA0)


def delta_continuation(problem: ProblemSpec, barriers: BarrierSet, delta0: Optional[float] = None,
                       ladder_factor: float = settings.LADDER_FACTOR, tol: float = settings.SCHEME_TOL,
                       inner_tol: float = settings.NEWTON_TOL, level_tol: float = settings.LEVEL_TOL,
                       max_levels: int = settings.MAX_LEVELS,
                       grad_reg: float = settings.GRAD_REG_TARGET) -> SchemeTrace:
    """
    Run the monotone iteration along delta_j = delta0 ladder_factor^j, each level
    warm-started from the previous Z_delta, until the unregularized residual of
    Z_delta is below ``tol``.

    Raises:
        NonConvergenceError: on residual stagnation over three levels or ladder exhaustion
    """
    if not 0.0 < ladder_factor < 1.0:
        raise ParameterError(f"ladder factor must lie in (0, 1) (got {ladder_factor})")
    certified = default_delta0(barriers)
    delta = certified if delta0 is None else delta0
    if delta > certified * (1.0 + 1e-12):
        raise ParameterError(f"delta0={delta:.3e} exceeds the certified barrier level {certified:.3e}")

    ladder: List[float] = []
    levels: List[DeltaLevel] = []
    history: List[float] = []
    start = None
    for j in range(max_levels):
        level = run_delta_level(problem, barriers, delta, start=start, inner_tol=inner_tol,
                                level_tol=level_tol, grad_reg=grad_reg, continuation=(j == 0))
        ladder.append(delta)
        levels.append(level)
        history.append(level.residual)
        if level.residual <= tol:
            break
        if len(history) > _STAGNATION_LEVELS and \
                min(history[-_STAGNATION_LEVELS:]) >= 0.99 * history[-_STAGNATION_LEVELS - 1]:
            raise NonConvergenceError(f"residual stagnated over {_STAGNATION_LEVELS} delta levels",
                                      last_residual=level.residual, history=history)
        start = level.profile
        delta *= ladder_factor
    else:
        raise NonConvergenceError(f"residual above {tol:g} after {max_levels} delta levels",
                                  last_residual=history[-1], history=history)

    logger.info(f"delta continuation finished at delta={delta:.3e} with residual {history[-1]:.3e}")
    return SchemeTrace(delta_ladder=ladder, levels=levels, profile=levels[-1].profile,
                       final_residual=history[-1], tol_mono=10.0 * inner_tol)
