"""
Radial solver - builds the radial solution of

    |u'|^alpha F(D^2 u) + p u^{-gamma} = 0  in B_R,  u = 0 on |x| = R,

by a contraction fixed point near the center, continuation of the first order
(v, w = |v'|^alpha v') system up to the first zero r_bar, and rescaling of the
ball B_{r_bar} onto B_R.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from singular_src.config.settings import settings
from singular_src.services.errors import (
    ContractionViolationError,
    MonotonicityViolationError,
    NonConvergenceError,
    ParameterError,
    SandwichViolationError,
)
from singular_src.services.elliptic_core import window_mask
from singular_src.services.states import (
    GridFunction,
    OperatorSpec,
    ProblemSpec,
    RadialSolveState,
    SandwichResult,
)
from singular_src.utils.helpers import (
    compile_expression,
    is_constant,
    negative_part,
    positive_part,
    sample_coefficient,
    uniform_nodes,
)

logger = logging.getLogger(__name__)

# Deltas below this are round-off and do not enter the contraction ratio.
_RATIO_FLOOR = 1e3 * np.finfo(float).eps


# ========================
# Closed forms
# ========================
def contraction_radius(alpha: float, gamma: float, dim: int, a: float = 1.0) -> float:
    """
    Radius below which the integral map T is a contraction of {|v - 1| < 1/2}.

    Args:
        alpha: Gradient exponent
        gamma: Singular exponent
        dim: Space dimension N
        a: Ellipticity weight (1 for the Laplacian)
    """
    one = 1.0 + alpha
    numerator = ((dim - 1) * one + 1.0) ** (1.0 / one) * (2.0 + alpha)
    denominator = (
        2.0 ** (1.0 + (abs(alpha) + 1.0) * gamma / one)
        * max(gamma, one) ** (1.0 / one)
        * one
    )
    return (numerator / denominator) ** (one / (2.0 + alpha)) * a ** (1.0 / (2.0 + alpha))


def first_iterate(r: np.ndarray, alpha: float, dim: int, weight: float = 1.0) -> np.ndarray:
    """T(1) in closed form; ``weight`` is the ellipticity weight divided by p."""
    one = 1.0 + alpha
    q = (2.0 + alpha) / one
    scale = (weight * ((dim - 1) * one + 1.0)) ** (1.0 / one) * (2.0 + alpha)
    return 1.0 - np.asarray(r, dtype=float) ** q * one ** q / scale


def a_priori_radius(alpha: float, dim: int, weight: float = 1.0) -> float:
    """Zero of T(1); the first zero of the radial solution lies below it."""
    one = 1.0 + alpha
    q = (2.0 + alpha) / one
    scale = (weight * ((dim - 1) * one + 1.0)) ** (1.0 / one) * (2.0 + alpha)
    return (scale / one ** q) ** (1.0 / q)


def f_aA(x, a: float, A: float):
    """x+/A - x-/a: inverts the Pucci weight on the radial curvature."""
    return positive_part(x) / A - negative_part(x) / a


def curvature_inverse(operator: OperatorSpec) -> Callable:
    """
    Map x = F-part of u'' onto u'' itself, given the sign-dependent weights of
    the operator (positive eigenvalues weighted by a for pucci_plus).
    """
    if operator.kind == "pucci_plus":
        return lambda x: f_aA(x, operator.A, operator.a)
    if operator.kind == "pucci_minus":
        return lambda x: f_aA(x, operator.a, operator.A)
    return lambda x: x


# ========================
# Contraction fixed point
# ========================
@dataclass(frozen=True)
class ContractionRun:
    """Fixed point of T on a mesh, with its derivative and convergence history."""
    profile: GridFunction
    slope: np.ndarray
    ratio: float
    iterations: int
    history: List[float] = field(default_factory=list)


def _check_radial(problem: ProblemSpec) -> None:
    if not problem.is_radial:
        raise ParameterError("the radial solver needs ball geometry")
    for name in ("coeff_c", "coeff_h"):
        coeff = getattr(problem, name)
        if not (is_constant(coeff) and float(sample_coefficient(coeff, np.zeros(1))[0]) == 0.0):
            raise ParameterError(f"the radial solver needs {name} = 0")


def graded_mesh(r_stop: float, nodes: int, alpha: float) -> np.ndarray:
    """Mesh r_stop (j/n)^beta, beta = max(1, 1+alpha), on which v' is smooth in j."""
    t = np.linspace(0.0, 1.0, nodes)
    return r_stop * t ** max(1.0, 1.0 + alpha)


def _product_weights(r: np.ndarray, k: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exact integrals of lambda^k against the two hat functions of every cell."""
    left, right = r[:-1], r[1:]
    m0 = (right ** (k + 1.0) - left ** (k + 1.0)) / (k + 1.0)
    m1 = (right ** (k + 2.0) - left ** (k + 2.0)) / (k + 2.0)
    width = right - left
    return (right * m0 - m1) / width, (m1 - left * m0) / width


def _apply_map(problem: ProblemSpec, r: np.ndarray, v: np.ndarray,
               load: np.ndarray, weights: Tuple[np.ndarray, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    one = 1.0 + problem.alpha
    k = one * (problem.dim - 1)
    psi = one * load * v ** (-problem.gamma)
    w_left, w_right = weights
    inner = np.concatenate([[0.0], np.cumsum(w_left * psi[:-1] + w_right * psi[1:])])

    speed = np.zeros_like(r)
    speed[1:] = (inner[1:] / r[1:] ** k) ** (1.0 / one)
    return 1.0 - cumulative_trapezoid(speed, r, initial=0.0), -speed


def _radial_load(problem: ProblemSpec, r: np.ndarray) -> np.ndarray:
    """p / sigma on the mesh."""
    return sample_coefficient(problem.coeff_p, r) / problem.negative_weight


def contraction_map(problem: ProblemSpec, v: GridFunction) -> GridFunction:
    """One application of T to a profile on a mesh starting at r = 0."""
    _check_radial(problem)
    r = v.nodes
    if r[0] != 0.0:
        raise ParameterError("the contraction mesh must start at r = 0")
    weights = _product_weights(r, (1.0 + problem.alpha) * (problem.dim - 1))
    values, _ = _apply_map(problem, r, v.values, _radial_load(problem, r), weights)
    return v.with_values(values)


def contraction_iterate(problem: ProblemSpec, r: np.ndarray, tol: float = settings.FIXED_POINT_TOL,
                        max_iter: int = settings.FIXED_POINT_MAX_ITER,
                        start: Optional[np.ndarray] = None) -> ContractionRun:
    """
    Iterate v <- T(v) from v = 1 (or ``start``) on the mesh ``r``.

    Raises:
        ContractionViolationError: if an iterate leaves {|v - 1| < 1/2}
        NonConvergenceError: if ``max_iter`` sweeps do not reach ``tol``
    """
    _check_radial(problem)
    load = _radial_load(problem, r)
    weights = _product_weights(r, (1.0 + problem.alpha) * (problem.dim - 1))

    v = np.ones_like(r) if start is None else np.array(start, dtype=float)
    history: List[float] = []
    ratios: List[float] = []
    previous = None
    slope = np.zeros_like(r)

    for iteration in range(1, max_iter + 1):
        new, slope = _apply_map(problem, r, v, load, weights)
        outside = np.flatnonzero(np.abs(new - 1.0) >= 0.5)
        if outside.size:
            node = int(outside[0])
            raise ContractionViolationError(
                f"iterate {iteration} left the trial ball at r={r[node]:.6f} (v={new[node]:.6f})"
            )
        change = float(np.max(np.abs(new - v)))
        history.append(change)
        if previous is not None and previous > _RATIO_FLOOR and change > _RATIO_FLOOR:
            ratios.append(change / previous)
        v, previous = new, change
        logger.debug(f"fixed point sweep {iteration}: change={change:.3e}")
        if change <= tol:
            break
    else:
        raise NonConvergenceError(f"fixed point not reached in {max_iter} sweeps",
                                  last_residual=history[-1], history=history)

    ratio = max(ratios) if ratios else 0.0
    logger.info(f"fixed point on [0, {r[-1]:.4f}] after {iteration} sweeps, ratio={ratio:.3f}")
    return ContractionRun(GridFunction(nodes=r, values=v), slope, ratio, iteration, history)


def fixed_point_iterate(problem: ProblemSpec, r_stop: float, tol: float = settings.FIXED_POINT_TOL,
                        max_iter: int = settings.FIXED_POINT_MAX_ITER,
                        nodes: int = settings.FIXED_POINT_NODES) -> GridFunction:
    """Fixed point of T on a graded mesh over [0, r_stop]."""
    return contraction_iterate(problem, graded_mesh(r_stop, nodes, problem.alpha), tol, max_iter).profile


def fixed_point_defect(problem: ProblemSpec, profile: GridFunction) -> float:
    """|u - T(u)| in sup norm."""
    return profile.sup_distance(contraction_map(problem, profile))


# ========================
# ODE continuation
# ========================
@dataclass(frozen=True)
class Continuation:
    """Dense ODE solution up to the event that stopped it."""
    dense: Callable[[np.ndarray], np.ndarray]
    nodes: np.ndarray
    values: np.ndarray
    r_event: float
    v_event: float
    slope_event: float
    r_bar: Optional[float]
    exponent: float


def _scalar_coefficient(coeff) -> Callable[[float], float]:
    if is_constant(coeff):
        value = float(sample_coefficient(coeff, np.zeros(1))[0])
        return lambda r: value
    func = compile_expression(coeff)
    return lambda r: float(func(r, r))


def boundary_exponent(alpha: float, gamma: float) -> float:
    """Power of the distance to the boundary that u behaves like."""
    return min(1.0, (2.0 + alpha) / (1.0 + alpha + gamma))


def _integrate(problem: ProblemSpec, start_r: float, start_u: float, start_du: float, r_max: float,
               rtol: float, atol: float, max_step: float) -> Continuation:
    if not (start_du < 0.0 and start_u > 0.0 and start_r > 0.0):
        raise ParameterError(
            f"continuation needs r > 0, u > 0, u' < 0 (got r={start_r}, u={start_u}, u'={start_du})"
        )
    alpha, gamma = problem.alpha, problem.gamma
    one = 1.0 + alpha
    spread = problem.negative_weight * (problem.dim - 1)
    curvature = curvature_inverse(problem.operator)
    p_of = _scalar_coefficient(problem.coeff_p)
    threshold = 1e-6 * start_u
    floor = 1e-3 * threshold

    def rhs(r, y):
        v, w = y
        dv = math.copysign(abs(w) ** (1.0 / one), w)
        x = -p_of(r) * max(v, floor) ** (-gamma) - spread * w / r
        return [dv, one * float(curvature(x))]

    def near_zero(r, y):
        return y[0] - threshold
    near_zero.terminal = True
    near_zero.direction = -1

    def turning(r, y):
        return y[1]
    turning.terminal = True
    turning.direction = 1

    w0 = abs(start_du) ** alpha * start_du
    sol = solve_ivp(rhs, (start_r, r_max), [start_u, w0], method="DOP853", dense_output=True,
                    events=[near_zero, turning], rtol=rtol, atol=atol, max_step=max_step)
    if sol.status == -1:
        raise NonConvergenceError(f"radial continuation failed: {sol.message}")
    if sol.t_events[1].size:
        raise MonotonicityViolationError(
            f"w reached 0 at r={sol.t_events[1][0]:.6f} before u vanished"
        )

    t = boundary_exponent(alpha, gamma)
    r_end = float(sol.t[-1])
    v_end, w_end = sol.y[0, -1], sol.y[1, -1]
    slope = abs(w_end) ** (1.0 / one)
    r_bar = None
    if sol.t_events[0].size:
        # local inverse interpolation of v ~ c (r_bar - r)^t
        r_bar = r_end + t * v_end / slope
    return Continuation(sol.sol, sol.t, sol.y[0], r_end, float(v_end), -slope, r_bar, t)


def continue_ode(problem: ProblemSpec, start_r: float, start_u: float, start_du: float, r_max: float,
                 rtol: float = settings.RK_RTOL, atol: float = settings.RK_ATOL,
                 max_step: float = np.inf) -> Tuple[GridFunction, Optional[float]]:
    """
    Integrate the (v, w) system from start_r towards r_max.

    Returns:
        The computed profile (closed by u(r_bar) = 0 when a zero was found) and
        r_bar, or None if the profile stays positive up to r_max
    """
    run = _integrate(problem, start_r, start_u, start_du, r_max, rtol, atol, max_step)
    nodes, values = run.nodes, run.values
    if run.r_bar is not None and run.r_bar > nodes[-1]:
        nodes = np.append(nodes, run.r_bar)
        values = np.append(values, 0.0)
    logger.info(f"continuation from r={start_r:.4f}: r_bar={run.r_bar}")
    return GridFunction(nodes=nodes, values=values), run.r_bar


def rescale_to_unit_ball(profile: GridFunction, r_bar: float, alpha: float, gamma: float) -> GridFunction:
    """u~(r) = C u(r_bar r) with C = r_bar^{-(2+alpha)/(gamma+alpha+1)}; u~(1) = 0."""
    scale = r_bar ** (-(2.0 + alpha) / (gamma + alpha + 1.0))
    nodes = profile.nodes / r_bar
    values = profile.values * scale
    if math.isclose(nodes[-1], 1.0, rel_tol=1e-12):
        nodes[-1] = 1.0
        values[-1] = 0.0
    return GridFunction(nodes=nodes, values=values)


# ========================
# Pipeline
# ========================
def solve_radial(problem: ProblemSpec, nodes: int = settings.DEFAULT_NODES,
                 fixed_point_tol: float = settings.FIXED_POINT_TOL,
                 rk_rtol: float = settings.RADIAL_OUTPUT_RTOL,
                 rk_atol: float = settings.RADIAL_OUTPUT_ATOL) -> RadialSolveState:
    """
    Full radial construction for constant p with the profile sampled on a
    uniform mesh of the problem ball.
    """
    _check_radial(problem)
    if not is_constant(problem.coeff_p):
        raise ParameterError("rescaling onto the problem ball needs constant p")

    alpha, gamma = problem.alpha, problem.gamma
    p = float(sample_coefficient(problem.coeff_p, np.zeros(1))[0])
    weight = problem.negative_weight / p

    r_o = contraction_radius(alpha, gamma, problem.dim, weight)
    r_handoff = settings.HANDOFF_FRACTION * r_o
    run = contraction_iterate(problem, graded_mesh(r_handoff, settings.FIXED_POINT_NODES, alpha),
                              tol=fixed_point_tol)

    r_limit = a_priori_radius(alpha, problem.dim, weight)
    cont = _integrate(problem, r_handoff, float(run.profile.values[-1]), float(run.slope[-1]),
                      2.0 * r_limit, rk_rtol, rk_atol, np.inf)
    if cont.r_bar is None:
        raise NonConvergenceError(f"no zero of the radial profile below {2.0 * r_limit:.4f}")
    r_bar = cont.r_bar
    logger.info(f"radial zero r_bar={r_bar:.10f} (a priori bound {r_limit:.6f})")

    continued = GridFunction(
        nodes=np.concatenate([run.profile.nodes, cont.nodes[1:], [r_bar]]),
        values=np.concatenate([run.profile.values, cont.values[1:], [0.0]]),
    )

    size = problem.geometry.size
    rho = uniform_nodes(size, nodes)
    physical = rho * (r_bar / size)
    values = _sample_profile(run, cont, physical, r_handoff, r_bar)
    amplitude = (r_bar / size) ** (-(2.0 + alpha) / (gamma + alpha + 1.0))

    return RadialSolveState(
        alpha=alpha,
        gamma=gamma,
        r_o=r_o,
        r_handoff=r_handoff,
        fixed_point_profile=run.profile,
        continued_profile=continued,
        r_bar=r_bar,
        rescale_C=r_bar ** (-(2.0 + alpha) / (gamma + alpha + 1.0)),
        contraction_ratio=run.ratio,
        profile=GridFunction(nodes=rho, values=amplitude * values),
    )


def _sample_profile(run: ContractionRun, cont: Continuation, r: np.ndarray,
                    r_handoff: float, r_bar: float) -> np.ndarray:
    """Unscaled profile at ``r`` from the three pieces of the construction."""
    values = np.zeros_like(r)
    inner = r <= r_handoff
    values[inner] = CubicHermiteSpline(run.profile.nodes, run.profile.values, run.slope)(r[inner])

    middle = (r > r_handoff) & (r < cont.r_event)
    values[middle] = cont.dense(r[middle])[0]

    tail = (r >= cont.r_event) & (r < r_bar)
    values[tail] = cont.v_event * ((r_bar - r[tail]) / (r_bar - cont.r_event)) ** cont.exponent
    values[-1] = 0.0
    return values


def pucci_sandwich(problem: ProblemSpec, nodes: int = settings.DEFAULT_NODES,
                   tol: float = 1e-8, with_trace: bool = True) -> SandwichResult:
    """
    Radial solutions for both Pucci operators with the constants of ``problem``,
    ordered by their values. The operator whose solution is on top is reported.

    Raises:
        SandwichViolationError: if the two profiles cross by more than ``tol``
    """
    op = problem.operator
    profiles = {}
    for kind in ("pucci_plus", "pucci_minus"):
        variant = problem.evolve(operator=OperatorSpec(kind=kind, a=op.a, A=op.A))
        profiles[kind] = solve_radial(variant, nodes=nodes).profile

    plus, minus = profiles["pucci_plus"], profiles["pucci_minus"]
    upper_operator = "pucci_minus" if np.sum(minus.values) >= np.sum(plus.values) else "pucci_plus"
    upper = profiles[upper_operator]
    lower = plus if upper_operator == "pucci_minus" else minus

    gap = upper.values - lower.values
    min_gap = float(np.min(gap))
    if min_gap < -tol:
        node = int(np.argmin(gap))
        raise SandwichViolationError(
            f"Pucci profiles cross at r={upper.nodes[node]:.6f} (gap {min_gap:.3e})"
        )
    logger.info(f"Pucci sandwich: upper operator {upper_operator}, min gap {min_gap:.3e}")

    trace_profile = None
    if with_trace:
        trace_profile = solve_radial(problem.evolve(operator=OperatorSpec()), nodes=nodes).profile
    return SandwichResult(lower=lower, upper=upper, upper_operator=upper_operator,
                          min_gap=min_gap, trace_profile=trace_profile)


def energy_identity_defect(problem: ProblemSpec, profile: GridFunction,
                           margin: float = settings.BOUNDARY_MARGIN) -> float:
    """
    Max over the window of |d/dr[H r^m] - m r^{m-1} p u^{1-gamma}/(1-gamma)|,
    H = |u'|^{2+alpha}/(2+alpha) + p u^{1-gamma}/(1-gamma), m = (N-1)(2+alpha).
    Trace operator, constant p, gamma != 1.
    """
    if problem.operator.kind != "trace" or problem.gamma == 1.0 or not is_constant(problem.coeff_p):
        raise ParameterError("the energy identity holds for the trace operator, constant p and gamma != 1")
    alpha, gamma = problem.alpha, problem.gamma
    p = float(sample_coefficient(problem.coeff_p, np.zeros(1))[0])
    r, u = profile.nodes, profile.values
    m = (problem.dim - 1) * (2.0 + alpha)

    mask = window_mask(r, radial=True, margin=margin) & (r > 0.0)
    safe = np.where(u > 0.0, u, 1.0)
    du = np.gradient(u, r, edge_order=2)
    potential = p * safe ** (1.0 - gamma) / (1.0 - gamma)
    energy = (np.abs(du) ** (2.0 + alpha) / (2.0 + alpha) + potential) * r ** m
    flux = np.gradient(energy, r, edge_order=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        source = m * r ** (m - 1.0) * potential
    return float(np.max(np.abs(flux - source)[mask]))
