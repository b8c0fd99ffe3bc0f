"""
One-dimensional closed form - quadrature solution of
|u'|^alpha u'' + u^{-gamma} = 0 on (0, 1), u(0) = u(1) = 0, through the first integral

    |u'|^{2+alpha} / (2+alpha) + E(u) = C,   E(u) = u^{1-gamma}/(1-gamma)  (log u if gamma = 1).

The midpoint value m = u(1/2) is found by bisection on the half-length
quadrature; the profile is obtained by inverting the same quadrature.
"""
import logging
import math

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import window_mask
from singular_src.services.errors import ConfigError, ParameterError
from singular_src.services.states import FirstIntegralSolution, GridFunction, ProblemSpec
from singular_src.utils.helpers import is_constant, sample_coefficient, uniform_nodes

logger = logging.getLogger(__name__)


def potential(u, gamma: float):
    """E(u)."""
    u = np.asarray(u, dtype=float)
    if gamma == 1.0:
        return np.log(u)
    return u ** (1.0 - gamma) / (1.0 - gamma)


def _potential_gap(m: float, v: float, gamma: float) -> float:
    """E(m) - E(m - v) without cancellation for small v."""
    if v >= m:
        return m ** (1.0 - gamma) / (1.0 - gamma) if gamma < 1.0 else math.inf
    ratio = math.log1p(-v / m)
    if gamma == 1.0:
        return -ratio
    return -m ** (1.0 - gamma) * math.expm1((1.0 - gamma) * ratio) / (1.0 - gamma)


def _speed(m: float, v: float, alpha: float, gamma: float) -> float:
    """|u'| at u = m - v."""
    gap = _potential_gap(m, v, gamma)
    if math.isinf(gap):
        return math.inf
    return ((2.0 + alpha) * gap) ** (1.0 / (2.0 + alpha))


def _arclength_integrand(w: float, m: float, alpha: float, gamma: float) -> float:
    """
    d(1/2 - x)/dw under the substitution u = m - w^q, q = (2+alpha)/(1+alpha).
    Bounded on [0, m^{1/q}]; its value at w = 0 is the limit q / K.
    """
    q = (2.0 + alpha) / (1.0 + alpha)
    if w <= 0.0:
        k = ((2.0 + alpha) * m ** (-gamma)) ** (1.0 / (2.0 + alpha))
        return q / k
    speed = _speed(m, w ** q, alpha, gamma)
    if math.isinf(speed):
        return 0.0
    return q * w ** (q - 1.0) / speed


def half_length(m: float, alpha: float, gamma: float, quad_tol: float = 1e-13) -> float:
    """Distance from the boundary to the maximum for midpoint value m."""
    q = (2.0 + alpha) / (1.0 + alpha)
    w_max = m ** (1.0 / q)
    value, _ = quad(_arclength_integrand, 0.0, w_max, args=(m, alpha, gamma),
                    epsabs=quad_tol, epsrel=quad_tol, limit=400)
    return value


def _initial_bracket(alpha: float, gamma: float, tol: float) -> tuple[float, float]:
    if gamma == 1.0:
        upper = 10.0 * (2.0 + alpha) + 1.0
    else:
        exponent = min(1.0 / (1.0 - gamma), 50.0) if gamma < 1.0 else 1.0 / (1.0 - gamma)
        upper = 10.0 * (2.0 + alpha) ** exponent + 1.0
    return tol, upper


def solve_one_d(alpha: float, gamma: float, tol: float = 1e-12,
                nodes: int = settings.DEFAULT_NODES, quad_tol: float = 1e-13) -> FirstIntegralSolution:
    """
    Solve the unit-interval problem with p = 1 by shooting on m = u(1/2).

    Args:
        alpha: Gradient exponent (> -1)
        gamma: Singular exponent (> 0)
        tol: Relative bisection tolerance on m
        nodes: Number of profile nodes on [0, 1]
        quad_tol: Quadrature tolerance

    Returns:
        FirstIntegralSolution with the sampled profile
    """
    if not alpha > -1.0 or not gamma > 0.0 or not tol > 0.0:
        raise ParameterError(f"invalid inputs alpha={alpha}, gamma={gamma}, tol={tol}")

    def mismatch(m: float) -> float:
        return half_length(m, alpha, gamma, quad_tol) - 0.5

    lo, hi = _initial_bracket(alpha, gamma, tol)
    tried = (lo, hi)
    for _ in range(60):
        f_lo, f_hi = mismatch(lo), mismatch(hi)
        if f_lo < 0.0 < f_hi:
            break
        if f_lo >= 0.0:
            lo *= 0.1
        if f_hi <= 0.0:
            hi *= 10.0
        tried = (lo, hi)
    else:
        raise ConfigError(f"bisection bracket failure for alpha={alpha}, gamma={gamma}; tried {tried}")

    iterations = 0
    while hi - lo > tol * hi and iterations < 200:
        mid = 0.5 * (lo + hi)
        if mismatch(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    m = 0.5 * (lo + hi)
    energy = float(potential(m, gamma))
    logger.info(f"1D shooting converged: m={m:.12f}, C={energy:.6e} after {iterations} bisections")

    profile = _invert_quadrature(m, alpha, gamma, uniform_nodes(1.0, nodes), quad_tol)

    if gamma < 1.0:
        boundary_derivative = ((2.0 + alpha) * energy) ** (1.0 / (2.0 + alpha))
    else:
        boundary_derivative = math.inf

    return FirstIntegralSolution(
        alpha=alpha,
        gamma=gamma,
        energy_C=energy,
        midpoint_value=m,
        profile=profile,
        boundary_derivative=boundary_derivative,
    )


def _invert_quadrature(m: float, alpha: float, gamma: float, x: np.ndarray, quad_tol: float) -> GridFunction:
    """Sample u on ``x`` by inverting y(w) = 1/2 - x along u = m - w^q."""
    q = (2.0 + alpha) / (1.0 + alpha)
    w_max = m ** (1.0 / q)

    arclength = solve_ivp(
        lambda w, y: [_arclength_integrand(w, m, alpha, gamma)],
        (0.0, w_max), [0.0], method="DOP853", dense_output=True,
        rtol=max(quad_tol, 1e-13), atol=1e-15,
    )
    if not arclength.success:
        raise ConfigError(f"arclength integration failed: {arclength.message}")

    def arclength_at(w: float) -> float:
        return float(arclength.sol(w)[0])

    values = np.zeros_like(x)
    offsets = np.abs(0.5 - x)
    cache: dict[float, float] = {}
    for j in range(1, x.size - 1):
        y = float(offsets[j])
        if y not in cache:
            if y == 0.0:
                cache[y] = m
            else:
                w = brentq(lambda s: arclength_at(s) - y, 0.0, w_max, xtol=1e-15, rtol=1e-15)
                cache[y] = m - w ** q
        values[j] = cache[y]
    return GridFunction(nodes=x, values=values)


def first_integral_defect(sol: FirstIntegralSolution, alpha: float, gamma: float,
                          margin: float = 0.0) -> float:
    """
    Max over interior nodes (all of them, or those at distance >= margin from the walls) of
    |E_kin + E_pot - C| with centered-difference derivatives.
    """
    nodes, values = sol.profile.nodes, sol.profile.values
    du = np.gradient(values, nodes, edge_order=2)
    mask = window_mask(nodes, radial=False, margin=margin)
    kinetic = np.abs(du[mask]) ** (2.0 + alpha) / (2.0 + alpha)
    return float(np.max(np.abs(kinetic + potential(values[mask], gamma) - sol.energy_C)))


def profile_scale(problem: ProblemSpec) -> float:
    """Amplitude factor mapping the unit problem to length L, constant p and Pucci weight."""
    p = float(sample_coefficient(problem.coeff_p, np.zeros(1))[0])
    size = problem.geometry.size
    exponent = 1.0 / (1.0 + problem.alpha + problem.gamma)
    return (p * size ** (2.0 + problem.alpha) / problem.negative_weight) ** exponent


def solve_interval_problem(problem: ProblemSpec, nodes: int = settings.DEFAULT_NODES,
                           tol: float = 1e-12) -> tuple[FirstIntegralSolution, GridFunction]:
    """
    Closed-form solution of an interval problem with c = h = 0 and constant p,
    scaled from the unit problem.
    """
    if problem.is_radial:
        raise ParameterError("the first-integral solver handles interval geometry only")
    if not (is_constant(problem.coeff_p) and _vanishes(problem.coeff_c) and _vanishes(problem.coeff_h)):
        raise ParameterError("the first-integral solver needs c = h = 0 and constant p")

    sol = solve_one_d(problem.alpha, problem.gamma, tol=tol, nodes=nodes)
    size = problem.geometry.size
    scaled = GridFunction(nodes=sol.profile.nodes * size, values=sol.profile.values * profile_scale(problem))
    return sol, scaled


def _vanishes(coeff) -> bool:
    return is_constant(coeff) and float(sample_coefficient(coeff, np.zeros(1))[0]) == 0.0
