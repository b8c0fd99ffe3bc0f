"""
Grid solver - damped Newton for one frozen step of the monotone scheme,

    |w'|^alpha_eps (F(w'') + h w') + c |w|^alpha w - k (w + delta)^{1+alpha} = rhs,

with zero Dirichlet data, on an interval or a radial mesh (ghost node at r = 0).
The gradient factor is smoothed as (|w'|^2 + eps^2)^{alpha/2} and eps is driven
down to its target by continuation.
"""
import logging
from typing import List, Optional, Union

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import (
    build_stencil,
    check_mesh,
    discrete_operator,
    eigen_weights,
    second_order_part,
)
from singular_src.services.errors import NonConvergenceError, ParameterError, PositivityError
from singular_src.services.states import FrozenStepSpec, GridFunction, ProblemSpec
from singular_src.utils.helpers import sample_coefficient, signed_power

logger = logging.getLogger(__name__)

KCoefficient = Union[float, np.ndarray]


# ========================
# Scheme coefficients
# ========================
def frozen_rhs(problem: ProblemSpec, k: KCoefficient, delta: float, w_prev: GridFunction) -> GridFunction:
    """f_delta(x, w) = -k (w + delta)^{1+alpha} - p (w + delta)^{-gamma}, nodewise."""
    shifted = w_prev.values + delta
    p = sample_coefficient(problem.coeff_p, w_prev.nodes)
    with np.errstate(divide="ignore"):
        values = -np.asarray(k) * shifted ** (1.0 + problem.alpha) - p * shifted ** (-problem.gamma)
    return w_prev.with_values(values)


def uniform_k_bound(problem: ProblemSpec, delta: float, nodes: np.ndarray) -> float:
    """max{gamma/(1+alpha) |p|_inf / delta^{alpha+gamma+1}, |c|_inf}."""
    if not delta > 0.0:
        raise ParameterError(f"delta must be positive (got {delta})")
    p_max = float(np.max(sample_coefficient(problem.coeff_p, nodes)))
    c_max = float(np.max(np.abs(sample_coefficient(problem.coeff_c, nodes))))
    alpha, gamma = problem.alpha, problem.gamma
    return max(gamma / (1.0 + alpha) * p_max / delta ** (alpha + gamma + 1.0), c_max)


def frozen_k_bound(problem: ProblemSpec, delta: float, floor: GridFunction, factor: float = 1.1) -> np.ndarray:
    """
    Nodewise k making f_delta decreasing in u on [floor, inf) at every node.
    Iterates of the monotone scheme never go below their starting point, so
    the bound only needs to hold there.
    """
    alpha, gamma = problem.alpha, problem.gamma
    p = sample_coefficient(problem.coeff_p, floor.nodes)
    c_max = float(np.max(np.abs(sample_coefficient(problem.coeff_c, floor.nodes))))
    base = np.maximum(floor.values, 0.0) + delta
    with np.errstate(divide="ignore"):
        local = gamma * p / ((1.0 + alpha) * base ** (alpha + gamma + 1.0))
    k = factor * np.maximum(local, c_max)
    # boundary entries do not enter the equations
    return np.where(np.isfinite(k), k, 0.0)


# ========================
# Discrete system
# ========================
def frozen_operator(spec: FrozenStepSpec, w: GridFunction, grad_reg: Optional[float] = None) -> np.ndarray:
    """Left-hand side of the frozen equation at every node (zero on the boundary)."""
    problem = spec.problem
    reg = spec.grad_reg if grad_reg is None else grad_reg
    value = discrete_operator(problem, w, grad_reg=reg if problem.alpha != 0.0 else None)
    k = np.broadcast_to(np.asarray(spec.k_coeff, dtype=float), w.nodes.shape)
    penalty = k * signed_power(w.values + spec.delta, 1.0 + problem.alpha)
    interior = build_stencil(w.values, w.nodes, problem.is_radial).interior
    return np.where(interior, value - penalty, 0.0)


def _unknowns(problem: ProblemSpec, size: int) -> np.ndarray:
    return np.arange(0 if problem.is_radial else 1, size - 1)


def _jacobian(spec: FrozenStepSpec, w: GridFunction, grad_reg: float):
    """Tridiagonal Jacobian of the frozen operator restricted to the unknowns."""
    problem = spec.problem
    alpha, radial = problem.alpha, problem.is_radial
    nodes, values = w.nodes, w.values
    n = values.size
    st = build_stencil(values, nodes, radial)
    h = st.h

    c = sample_coefficient(problem.coeff_c, nodes)
    drift = sample_coefficient(problem.coeff_h, nodes)
    k = np.broadcast_to(np.asarray(spec.k_coeff, dtype=float), nodes.shape)

    # d/d(w_{i-1}, w_i, w_{i+1}) of each ingredient
    d2 = (np.full(n, 1.0 / h ** 2), np.full(n, -2.0 / h ** 2), np.full(n, 1.0 / h ** 2))
    d0 = (np.full(n, -0.5 / h), np.zeros(n), np.full(n, 0.5 / h))

    w_second = eigen_weights(problem.operator, st.d_second)
    ops = [w_second * d2[j] for j in range(3)]
    mult = problem.dim - 1
    if radial and mult > 0:
        w_tan = eigen_weights(problem.operator, st.tangential)
        r_safe = np.where(nodes > 0.0, nodes, 1.0)
        for j in range(3):
            tangential = np.where(nodes > 0.0, d0[j] / r_safe, d2[j])
            ops[j] = ops[j] + mult * w_tan * tangential
    first = [ops[j] + drift * d0[j] for j in range(3)]

    if alpha == 0.0:
        factor = np.ones(n)
        d_factor = [np.zeros(n)] * 3
    else:
        quad_form = st.grad ** 2 + grad_reg ** 2
        factor = quad_form ** (0.5 * alpha)
        scale = 0.5 * alpha * quad_form ** (0.5 * alpha - 1.0)
        d_q = (-st.d_minus / h, (st.d_minus - st.d_plus) / h, st.d_plus / h)
        d_factor = [scale * d_q[j] for j in range(3)]

    bracket = second_order_part(problem, st) + drift * st.d_center
    rows = [d_factor[j] * bracket + factor * first[j] for j in range(3)]
    rows[1] = rows[1] + (1.0 + alpha) * (c * np.abs(values) ** alpha
                                         - k * np.abs(values + spec.delta) ** alpha)

    if radial:
        # ghost node w_{-1} = w_1 folds into the w_1 column
        rows[2][0] += rows[0][0]
        rows[0][0] = 0.0

    idx = _unknowns(problem, n)
    lower = rows[0][idx][1:]
    main = rows[1][idx]
    upper = rows[2][idx][:-1]
    return diags([lower, main, upper], [-1, 0, 1], format="csc")


def _newton(spec: FrozenStepSpec, values: np.ndarray, nodes: np.ndarray, grad_reg: float,
            tol: float, max_iter: int) -> np.ndarray:
    """
    Damped Newton. Converged once the defect is below ``tol`` or a full step is
    below 10 tol relative to |w| (the next step would be at round-off level).
    """
    problem = spec.problem
    idx = _unknowns(problem, values.size)
    history: List[float] = []

    def defect(v: np.ndarray) -> np.ndarray:
        lhs = frozen_operator(spec, GridFunction(nodes=nodes, values=v), grad_reg)
        return (lhs - spec.rhs.values)[idx]

    def negligible(step: np.ndarray, v: np.ndarray) -> bool:
        return float(np.max(np.abs(step))) <= 10.0 * tol * (1.0 + float(np.max(np.abs(v))))

    current = defect(values)
    norm = float(np.max(np.abs(current)))
    for iteration in range(max_iter):
        history.append(norm)
        if norm <= tol:
            return values
        step = np.zeros_like(values)
        step[idx] = spsolve(_jacobian(spec, GridFunction(nodes=nodes, values=values), grad_reg), -current)

        merit = float(np.linalg.norm(current))
        damping = 1.0
        for _ in range(settings.ARMIJO_MAX_HALVINGS + 1):
            trial = values + damping * step
            trial_defect = defect(trial)
            if np.all(np.isfinite(trial_defect)) and \
                    np.linalg.norm(trial_defect) <= (1.0 - 1e-4 * damping) * merit:
                break
            damping *= 0.5
        else:
            if negligible(step, values):
                return values
            raise NonConvergenceError(f"Newton damping underflow after {iteration} steps",
                                      last_residual=norm, history=history)

        values, current = trial, trial_defect
        norm = float(np.max(np.abs(current)))
        logger.debug(f"Newton step {iteration}: damping={damping:.3g}, residual={norm:.3e}")
        if damping == 1.0 and negligible(step, values):
            return values

    raise NonConvergenceError(f"Newton did not converge in {max_iter} steps",
                              last_residual=norm, history=history)


def regularization_ladder(alpha: float, target: float, start: Optional[float] = None) -> List[float]:
    """eps_g levels start, start/10, ... ending exactly at target."""
    if alpha == 0.0:
        return [target]
    eps = max(settings.GRAD_REG_START if start is None else start, target)
    levels = []
    while eps > target * (1.0 + 1e-12):
        levels.append(eps)
        eps /= 10.0
    levels.append(target)
    return levels


def solve_frozen(spec: FrozenStepSpec, init: GridFunction, tol: float = settings.NEWTON_TOL,
                 max_iter: int = settings.NEWTON_MAX_ITER, grad_reg_start: Optional[float] = None) -> GridFunction:
    """
    Solve one frozen step starting from ``init``.

    Args:
        spec: Frozen step (problem, k, delta, rhs, target eps_g)
        init: Starting iterate, positive at interior nodes
        tol: Defect tolerance; a full step below 10 tol relative to |w| also stops Newton
        max_iter: Newton steps per regularization level
        grad_reg_start: First eps_g of the continuation (defaults to settings)

    Raises:
        NonConvergenceError: on damping underflow or iteration exhaustion
        PositivityError: if delta = 0 and the solution is nonpositive inside
    """
    problem = spec.problem
    if problem.alpha < 0.0:
        raise ParameterError("the grid solver handles alpha >= 0")
    nodes = init.nodes
    check_mesh(problem, nodes)
    if spec.rhs.size != init.size:
        raise ParameterError("rhs and initial iterate live on different meshes")

    values = np.array(init.values, dtype=float)
    values[-1] = 0.0
    if not problem.is_radial:
        values[0] = 0.0

    zero = np.zeros_like(values)
    idx = _unknowns(problem, values.size)
    if not np.any((frozen_operator(spec, GridFunction(nodes=nodes, values=zero)) - spec.rhs.values)[idx]):
        logger.info("frozen step has the trivial solution w = 0")
        return init.with_values(zero)

    for eps in regularization_ladder(problem.alpha, spec.grad_reg, grad_reg_start):
        values = _newton(spec, values, nodes, eps, tol, max_iter)
        logger.debug(f"frozen step solved at eps_g={eps:.1e}")

    if spec.delta == 0.0:
        bad = np.flatnonzero(values[idx] <= 0.0)
        if bad.size:
            node = int(idx[bad[0]])
            raise PositivityError(node, float(values[node]))
    return init.with_values(values)
