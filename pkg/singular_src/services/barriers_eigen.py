"""
Barriers and eigenvalues - inverse power estimate of the first demi-eigenvalue
and the explicit sub/super-solution pairs built from eigenfunctions:

    gamma > 1:  b1 phi^t <= u <= b2 phi^t,    t = (2+alpha)/(1+alpha+gamma)
    gamma < 1:  eps psi1 <= u <= d psi2^s

The closed-form constants are kept in the ledger; the barrier constants are then
adjusted so that the residual signs hold for the discrete operator at every node.
"""
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import discrete_operator
from singular_src.services.errors import (
    HopfFailureError,
    HypothesisViolationError,
    NonConvergenceError,
    ParameterError,
    PositivityError,
)
from singular_src.services.grid_solver import solve_frozen
from singular_src.services.states import BarrierSet, EigenPair, FrozenStepSpec, GridFunction, ProblemSpec
from singular_src.utils.helpers import sample_coefficient, uniform_nodes

logger = logging.getLogger(__name__)

Coefficient = Union[float, str]

_MAX_SHIFTS = 20


# ========================
# Coefficient arithmetic
# ========================
def shift_coefficient(coeff: Coefficient, shift: float) -> Coefficient:
    if isinstance(coeff, str):
        return f"({coeff}) + ({shift!r})"
    return float(coeff) + shift


def scale_coefficient(coeff: Coefficient, factor: float) -> Coefficient:
    if isinstance(coeff, str):
        return f"({coeff})*({factor!r})"
    return float(coeff) * factor


def beta_weight(problem: ProblemSpec) -> Coefficient:
    """beta_{c,alpha,gamma} = (1+alpha+gamma) c / (2+alpha)."""
    return scale_coefficient(problem.coeff_c,
                             (1.0 + problem.alpha + problem.gamma) / (2.0 + problem.alpha))


# ========================
# First demi-eigenvalue
# ========================
def _interior(problem: ProblemSpec, size: int) -> np.ndarray:
    return np.arange(0 if problem.is_radial else 1, size - 1)


def _initial_shape(problem: ProblemSpec, nodes: np.ndarray) -> np.ndarray:
    size = problem.geometry.size
    if problem.is_radial:
        return 1.0 - (nodes / size) ** 2
    return 4.0 * nodes * (size - nodes) / size ** 2


def eigen_residual(problem: ProblemSpec, weight: Coefficient, lambda1: float, phi: GridFunction,
                   grad_reg: float = settings.GRAD_REG_TARGET) -> float:
    """max |G[phi] + (weight + lambda) |phi|^alpha phi| over interior nodes."""
    shifted = problem.evolve(coeff_c=shift_coefficient(weight, lambda1))
    reg = grad_reg if problem.alpha != 0.0 else None
    values = discrete_operator(shifted, phi, grad_reg=reg)
    return float(np.max(np.abs(values[_interior(problem, phi.size)])))


def _inverse_power(problem: ProblemSpec, weight: Coefficient, nodes: np.ndarray,
                   tol: float, max_iter: int) -> Tuple[float, GridFunction, int]:
    """Inverse power iteration for the weight; raises if the weight is not admissible."""
    weighted = problem.evolve(coeff_c=weight)
    phi = GridFunction(nodes=nodes, values=_initial_shape(problem, nodes))
    guess = phi
    previous = None
    last_residual = np.inf
    history: List[float] = []

    for iteration in range(1, max_iter + 1):
        rhs = phi.with_values(-np.abs(phi.values) ** (1.0 + problem.alpha))
        spec = FrozenStepSpec(problem=weighted, k_coeff=0.0, delta=0.0, rhs=rhs)
        v = solve_frozen(spec, guess)
        sup = float(np.max(np.abs(v.values)))
        estimate = sup ** (-(1.0 + problem.alpha))
        phi = v.with_values(v.values / sup)
        guess = v
        history.append(estimate)

        residual = eigen_residual(problem, weight, estimate, phi)
        logger.debug(f"inverse power {iteration}: lambda={estimate:.10f}, residual={residual:.3e}")
        if previous is not None and abs(estimate - previous) <= tol * abs(estimate):
            if residual <= tol * (1.0 + abs(estimate)) or residual >= last_residual:
                return estimate, phi, iteration
        previous, last_residual = estimate, residual

    raise NonConvergenceError(f"inverse power iteration did not settle in {max_iter} steps",
                              last_residual=last_residual, history=history)


def eigen_estimate(problem: ProblemSpec, weight: Optional[Coefficient] = None, tol: float = settings.EIGEN_TOL,
                   nodes: int = settings.DEFAULT_NODES, max_iter: int = settings.EIGEN_MAX_ITER,
                   weight_label: str = "c") -> EigenPair:
    """
    Estimate lambda_1 for the zero order weight (defaults to c) with its
    positive eigenfunction normalized to sup norm 1.

    When the weight itself is not admissible (the inner problem loses
    positivity or Newton fails) the weight is lowered by a shift s, doubled
    until the iteration succeeds, and s is subtracted from the estimate.
    """
    weight = problem.coeff_c if weight is None else weight
    mesh = uniform_nodes(problem.geometry.size, nodes)

    shift = 0.0
    for _ in range(_MAX_SHIFTS):
        try:
            estimate, phi, iterations = _inverse_power(problem, shift_coefficient(weight, -shift),
                                                       mesh, tol, max_iter)
            break
        except (PositivityError, NonConvergenceError) as e:
            c_scale = float(np.max(np.abs(sample_coefficient(weight, mesh))))
            shift = max(1.0, c_scale) if shift == 0.0 else 2.0 * shift
            logger.warning(f"inverse power failed ({e}); retrying with weight shifted by -{shift:g}")
    else:
        raise NonConvergenceError(f"no admissible weight shift found after {_MAX_SHIFTS} attempts")

    lambda1 = estimate - shift
    residual = eigen_residual(problem, weight, lambda1, phi)
    logger.info(f"lambda_1[{weight_label}] = {lambda1:.10f} after {iterations} iterations "
                f"(shift {shift:g}, residual {residual:.2e})")
    return EigenPair(lambda1=lambda1, phi=phi, weight_label=weight_label,
                     iterations=iterations, residual=residual, shift=shift)


def lambda_continuity_probe(problem: ProblemSpec, weights: Sequence[Coefficient],
                            tol: float = settings.EIGEN_TOL, nodes: int = settings.DEFAULT_NODES) -> List[float]:
    """lambda_1 along a sequence of weights converging to a limit weight."""
    values = []
    for n, weight in enumerate(weights, start=1):
        values.append(eigen_estimate(problem, weight, tol, nodes, weight_label=f"c_{n}").lambda1)
    return values


def tridiagonal_oracle(nodes: int, length: float = 1.0) -> float:
    """Smallest eigenvalue of the Dirichlet finite-difference Laplacian on (0, length)."""
    h = length / (nodes - 1)
    interior = nodes - 2
    diagonal = np.full(interior, 2.0 / h ** 2)
    off = np.full(interior - 1, -1.0 / h ** 2)
    return float(eigh_tridiagonal(diagonal, off, eigvals_only=True, select="i", select_range=(0, 0))[0])


def check_hypotheses(eigen_c: EigenPair, eigen_beta: EigenPair) -> None:
    """Both first eigenvalues must be positive for the existence construction."""
    values = {"lambda1_c": eigen_c.lambda1, "lambda1_beta": eigen_beta.lambda1}
    if eigen_c.lambda1 <= 0.0 or eigen_beta.lambda1 <= 0.0:
        raise HypothesisViolationError(
            f"eigenvalue hypothesis fails: lambda1^c={eigen_c.lambda1:.6g}, "
            f"lambda1^beta={eigen_beta.lambda1:.6g}",
            values,
        )


# ========================
# Discrete certification
# ========================
def _operator_values(problem: ProblemSpec, profile: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """D[profile] at the unknown nodes; D is (1+alpha)-homogeneous."""
    values = discrete_operator(problem, GridFunction(nodes=nodes, values=profile))
    return values[_interior(problem, nodes.size)]


def certify_sub_scale(problem: ProblemSpec, shape: np.ndarray, nodes: np.ndarray,
                      scale: float, delta: float) -> float:
    """
    Largest b <= scale with b^{1+alpha} D[shape] + p (b shape + delta)^{-gamma} >= 0
    at every unknown node, found by bisection.
    """
    idx = _interior(problem, nodes.size)
    load = -_operator_values(problem, shape, nodes)
    p = sample_coefficient(problem.coeff_p, nodes)[idx]
    s = shape[idx]
    one = 1.0 + problem.alpha

    def admissible(b: float) -> bool:
        with np.errstate(divide="ignore"):
            return bool(np.all(b ** one * load <= p * (b * s + delta) ** (-problem.gamma)))

    if admissible(scale):
        return scale
    lo, hi = 0.0, scale
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return lo


def certify_sup_scale(problem: ProblemSpec, shape: np.ndarray, nodes: np.ndarray, scale: float) -> float:
    """
    Smallest b >= scale with b^{1+alpha} D[shape] + p (b shape)^{-gamma} <= 0 at every
    unknown node (closed form per node).
    """
    idx = _interior(problem, nodes.size)
    load = -_operator_values(problem, shape, nodes)
    bad = np.flatnonzero(load <= 0.0)
    if bad.size:
        node = int(idx[bad[0]])
        raise HopfFailureError(f"super-solution shape is not strictly concave in the discrete sense at node {node}")
    p = sample_coefficient(problem.coeff_p, nodes)[idx]
    gamma = problem.gamma
    needed = (p * shape[idx] ** (-gamma) / load) ** (1.0 / (1.0 + problem.alpha + gamma))
    return max(scale, float(np.max(needed)) * (1.0 + 1e-12))


def _grad_norm(phi: GridFunction) -> np.ndarray:
    return np.abs(np.gradient(phi.values, phi.nodes, edge_order=2))


# ========================
# Barriers
# ========================
def build_barriers_gamma_gt1(problem: ProblemSpec, eigen_beta: EigenPair, tol: float = 1e-10,
                             delta: float = settings.GT1_DELTA0) -> BarrierSet:
    """
    b1 phi^t <= b2 phi^t for gamma > 1, phi the eigenfunction of the weight
    beta_{c,alpha,gamma}. ``delta`` is the largest regularization the sub must serve.

    Raises:
        HopfFailureError: if d2 <= 0
    """
    alpha, gamma = problem.alpha, problem.gamma
    if not gamma > 1.0:
        raise ParameterError(f"this barrier construction needs gamma > 1 (got {gamma})")
    phi = eigen_beta.phi
    nodes = phi.nodes
    t = (2.0 + alpha) / (1.0 + alpha + gamma)
    lam = eigen_beta.lambda1

    quantity = problem.upper_constant * (1.0 - t) * _grad_norm(phi) ** (2.0 + alpha) \
        + lam * np.abs(phi.values) ** (2.0 + alpha)
    d1, d2 = float(np.max(quantity)), float(np.min(quantity))
    if d2 <= 0.0:
        raise HopfFailureError(f"d2 = {d2:.3e} <= 0; refine the mesh near the boundary")

    p_min, p_max = (float(f(sample_coefficient(problem.coeff_p, nodes))) for f in (np.min, np.max))
    exponent = 1.0 / (1.0 + alpha + gamma)
    b1 = (p_min / (d1 * t ** (1.0 + alpha))) ** exponent
    b2 = (p_max / (d2 * t ** (1.0 + alpha))) ** exponent
    if not b1 < b2 + tol:
        raise ParameterError(f"barrier constants out of order: b1={b1:.6g}, b2={b2:.6g}")

    shape = np.abs(phi.values) ** t
    shape[-1] = 0.0
    if not problem.is_radial:
        shape[0] = 0.0
    b1_grid = certify_sub_scale(problem, shape, nodes, b1, delta)
    b2_grid = certify_sup_scale(problem, shape, nodes, b2)
    if b1_grid < b1 or b2_grid > b2:
        logger.warning(f"barrier constants adjusted for the discrete operator: "
                       f"b1 {b1:.6g} -> {b1_grid:.6g}, b2 {b2:.6g} -> {b2_grid:.6g}")

    constants = {"t": t, "b1": b1_grid, "b2": b2_grid, "b1_formula": b1, "b2_formula": b2,
                 "d1": d1, "d2": d2, "lambda1_beta": lam, "delta0": delta}
    return BarrierSet(sub=phi.with_values(b1_grid * shape), sup=phi.with_values(b2_grid * shape),
                      branch="gamma_gt1", radial=problem.is_radial, constants=constants)


def lt1_thresholds(problem: ProblemSpec, eigen_c: EigenPair) -> Tuple[float, float]:
    """(delta0, eps0) of the sub-solution eps psi1."""
    alpha, gamma = problem.alpha, problem.gamma
    p_min = float(np.min(sample_coefficient(problem.coeff_p, eigen_c.phi.nodes)))
    delta0 = 2.0 ** (-gamma / (1.0 + alpha + gamma)) * (p_min / eigen_c.lambda1) ** (1.0 / (1.0 + alpha + gamma))
    eps0 = delta0 / float(np.max(np.abs(eigen_c.phi.values)))
    return delta0, eps0


def choose_barrier_exponent(problem: ProblemSpec, s: float = settings.BARRIER_S, tol: float = settings.EIGEN_TOL,
                            nodes: int = settings.DEFAULT_NODES, max_halvings: int = 20) -> Tuple[float, EigenPair]:
    """Exponent s < 1 with lambda_1 of c s^{-(1+alpha)} positive, moving s towards 1 by halving 1 - s."""
    for _ in range(max_halvings + 1):
        weight = scale_coefficient(problem.coeff_c, s ** (-(1.0 + problem.alpha)))
        pair = eigen_estimate(problem, weight, tol, nodes, weight_label=f"c*s^-(1+alpha), s={s:g}")
        if pair.lambda1 > 0.0:
            return s, pair
        logger.warning(f"lambda_1 = {pair.lambda1:.4g} <= 0 for s={s:g}; moving s towards 1")
        s = 1.0 - 0.5 * (1.0 - s)
    raise HypothesisViolationError(f"no admissible s found (last s={s:g})", {"s": s})


def build_barriers_gamma_lt1(problem: ProblemSpec, eigen_c: EigenPair, eigen_s: EigenPair,
                             s: float = settings.BARRIER_S, tol: float = 1e-10,
                             epsilon: Optional[float] = None) -> BarrierSet:
    """
    eps psi1 <= d psi2^s for gamma < 1, psi1 the eigenfunction of c and psi2 that
    of c s^{-(1+alpha)}.

    Raises:
        ParameterError: if epsilon >= eps0 or the ordering cannot be met
        HopfFailureError: if kappa <= 0
    """
    alpha, gamma = problem.alpha, problem.gamma
    if not gamma < 1.0:
        raise ParameterError(f"this barrier construction needs gamma < 1 (got {gamma})")
    if not 0.0 < s < 1.0:
        raise ParameterError(f"s must lie in (0, 1) (got {s})")

    delta0, eps0 = lt1_thresholds(problem, eigen_c)
    eps = 0.5 * eps0 if epsilon is None else epsilon
    if not 0.0 < eps < eps0:
        raise ParameterError(f"epsilon must lie in (0, eps0={eps0:.6g}) (got {eps})")

    psi1, psi2 = eigen_c.phi, eigen_s.phi
    nodes = psi1.nodes
    scheme_delta = 0.5 * delta0
    eps_grid = certify_sub_scale(problem, np.abs(psi1.values), nodes, eps, scheme_delta)

    kappa_field = (1.0 - s) * _grad_norm(psi2) ** (2.0 + alpha) * problem.lower_constant \
        + eigen_s.lambda1 * np.abs(psi2.values) ** (2.0 + alpha)
    kappa = float(np.min(kappa_field))
    if kappa <= 0.0:
        raise HopfFailureError(f"kappa = {kappa:.3e} <= 0; refine the mesh near the boundary")

    p_max = float(np.max(sample_coefficient(problem.coeff_p, nodes)))
    top = float(np.max(np.abs(psi2.values)))
    power = -s * (gamma + 1.0) + (1.0 - s) * alpha + 2.0
    d_formula = (p_max * top ** power / (kappa * s ** (1.0 + alpha))) ** (1.0 / (alpha + gamma + 1.0))
    d = 2.0 * d_formula

    shape = np.abs(psi2.values) ** s
    shape[-1] = 0.0
    if not problem.is_radial:
        shape[0] = 0.0
    d_grid = certify_sup_scale(problem, shape, nodes, d)

    idx = _interior(problem, nodes.size)
    if np.any(shape[idx] <= 0.0):
        raise ParameterError("ordering unachievable: psi2 vanishes inside the domain")
    ordering = float(np.max(eps_grid * psi1.values[idx] / shape[idx]))
    if ordering > d_grid:
        logger.warning(f"d raised from {d_grid:.6g} to {ordering:.6g} to order the barriers")
        d_grid = ordering

    if eps_grid < eps or d_grid > d:
        logger.warning(f"barrier constants adjusted for the discrete operator: "
                       f"eps {eps:.6g} -> {eps_grid:.6g}, d {d:.6g} -> {d_grid:.6g}")

    sub_values = eps_grid * np.abs(psi1.values)
    sub_values[-1] = 0.0
    if not problem.is_radial:
        sub_values[0] = 0.0
    constants = {"eps": eps_grid, "eps_formula": eps, "eps0": eps0, "delta0": delta0, "s": s,
                 "d": d_grid, "d_formula": d_formula, "kappa": kappa,
                 "lambda1_c": eigen_c.lambda1, "lambda1_s": eigen_s.lambda1}
    return BarrierSet(sub=psi1.with_values(sub_values), sup=psi2.with_values(d_grid * shape),
                      branch="gamma_lt1", radial=problem.is_radial, constants=constants)


def barrier_residual_signs(problem: ProblemSpec, barriers: BarrierSet) -> Tuple[float, float]:
    """(min residual of sub, max residual of sup) over the unknown nodes."""
    idx = _interior(problem, barriers.sub.size)
    p = sample_coefficient(problem.coeff_p, barriers.sub.nodes)[idx]

    def full(profile: GridFunction) -> np.ndarray:
        op = discrete_operator(problem, profile)[idx]
        return op + p * profile.values[idx] ** (-problem.gamma)

    return float(np.min(full(barriers.sub))), float(np.max(full(barriers.sup)))
