"""
Verification harness - executable checks on computed profiles: comparison of
certified sub/super pairs, boundary exponents, Hopf quotients, Hoelder moduli,
Pucci ordering and solver agreement. Every check returns a CheckReport.
"""
import logging
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from singular_src.config.settings import settings
from singular_src.services.elliptic_core import distance_to_boundary, residual, window_mask
from singular_src.services.errors import (
    InsufficientDataError,
    ParameterError,
    PreconditionError,
    RegimeError,
    SandwichViolationError,
)
from singular_src.services.radial_solver import boundary_exponent, pucci_sandwich
from singular_src.services.states import BarrierSet, CheckReport, GridFunction, ProblemSpec
from singular_src.utils.helpers import is_constant, problem_fingerprint, sample_coefficient

logger = logging.getLogger(__name__)

_MIN_FIT_NODES = 8
_MAX_HOLDER_NODES = 1025


def fingerprint(problem: ProblemSpec) -> str:
    return problem_fingerprint(problem.model_dump())


# ========================
# Comparison
# ========================
def _residual_extrema(problem: ProblemSpec, u: GridFunction, margin: float) -> Tuple[float, float]:
    res = residual(problem, u)
    mask = window_mask(u.nodes, problem.is_radial, margin)
    return float(np.min(res.values[mask])), float(np.max(res.values[mask]))


def check_comparison(problem: ProblemSpec, u_sub: GridFunction, v_sup: GridFunction,
                     tol: float = settings.SCHEME_TOL, margin: float = 0.0) -> CheckReport:
    """
    Ordering u_sub <= v_sup for a certified pair.

    Raises:
        PreconditionError: if the residual signs, boundary values or positivity fail
    """
    boundary = [-1] if problem.is_radial else [0, -1]
    for name, u in (("sub", u_sub), ("sup", v_sup)):
        if any(abs(u.values[i]) > tol for i in boundary):
            raise PreconditionError(f"{name} profile does not vanish on the boundary")
        inner = u.values[:-1] if problem.is_radial else u.values[1:-1]
        if np.any(inner <= 0.0):
            raise PreconditionError(f"{name} profile is not positive inside")

    sub_min, _ = _residual_extrema(problem, u_sub, margin)
    _, sup_max = _residual_extrema(problem, v_sup, margin)
    if sub_min < -tol:
        raise PreconditionError(f"sub residual {sub_min:.3e} below -{tol:g}: not a certified sub-solution")
    if sup_max > tol:
        raise PreconditionError(f"sup residual {sup_max:.3e} above {tol:g}: not a certified super-solution")

    excess = float(np.max(u_sub.values - v_sup.values))
    gap = v_sup.values - u_sub.values
    inner_gap = gap[:-1] if problem.is_radial else gap[1:-1]
    return CheckReport(
        check_name="comparison",
        passed=excess <= tol,
        measured=[excess],
        expected=[0.0],
        tolerance=tol,
        context=fingerprint(problem),
        detail=f"min interior gap {float(np.min(inner_gap)):.3e}",
    )


def check_barrier_signs(problem: ProblemSpec, barriers: BarrierSet, tol: float = settings.SCHEME_TOL) -> CheckReport:
    """Residual of the sub-solution >= -tol and of the super-solution <= tol at every interior node."""
    sub_min, _ = _residual_extrema(problem, barriers.sub, 0.0)
    _, sup_max = _residual_extrema(problem, barriers.sup, 0.0)
    return CheckReport(
        check_name="barrier_signs",
        passed=sub_min >= -tol and sup_max <= tol,
        measured=[sub_min, sup_max],
        expected=[0.0, 0.0],
        tolerance=tol,
        context=fingerprint(problem),
        detail=f"branch {barriers.branch}",
    )


# ========================
# Boundary behavior
# ========================
def fit_boundary_exponent(u: GridFunction, window: Tuple[float, float] = settings.FIT_WINDOW,
                          radial: bool = False, min_cells: int = settings.FIT_MIN_CELLS) -> float:
    """
    Least-squares slope of log u against log(distance to the boundary) over
    nodes whose distance lies in window * domain size. Nodes closer than
    ``min_cells`` mesh cells are left out: the discrete boundary layer there
    steepens the slope of finite difference profiles.

    Raises:
        InsufficientDataError: if fewer than 8 nodes fall in the window
    """
    lo, hi = window
    if not 0.0 < lo < hi <= 0.1:
        raise ParameterError(f"fitting window must satisfy 0 < lo < hi <= 0.1 (got {window})")
    size = u.nodes[-1] - u.nodes[0]
    dist = distance_to_boundary(u.nodes, radial)
    h = float(np.min(np.diff(u.nodes)))
    mask = (dist >= max(lo * size, min_cells * h)) & (dist <= hi * size)
    if int(np.count_nonzero(mask)) < _MIN_FIT_NODES:
        raise InsufficientDataError(
            f"only {int(np.count_nonzero(mask))} nodes in the fitting window {window}; need {_MIN_FIT_NODES}"
        )
    if np.any(u.values[mask] <= 0.0):
        raise ParameterError("profile must be positive on the fitting window")
    slope, _ = np.polyfit(np.log(dist[mask]), np.log(u.values[mask]), 1)
    return float(slope)


def boundary_quotient(u: GridFunction, radial: bool = False) -> float:
    """Smallest one-sided difference quotient u(neighbor)/h at the boundary nodes."""
    h_right = u.nodes[-1] - u.nodes[-2]
    quotient = u.values[-2] / h_right
    if not radial:
        quotient = min(quotient, u.values[1] / (u.nodes[1] - u.nodes[0]))
    return float(quotient)


def coarsen(u: GridFunction) -> GridFunction:
    """Every other node; the node count must be odd."""
    if u.size % 2 == 0:
        raise ParameterError("coarsening needs an odd number of nodes")
    return GridFunction(nodes=u.nodes[::2], values=u.values[::2])


def check_hopf(u: GridFunction, kappa_floor: float, gamma: float, u_refined: Optional[GridFunction] = None,
               radial: bool = False, stability: float = 0.2) -> CheckReport:
    """
    Hopf check for gamma < 1: boundary quotients >= kappa_floor > 0 and stable
    within ``stability`` between ``u`` and a second mesh (``u_refined``, or the
    coarsening of ``u``).
    """
    if gamma >= 1.0:
        raise RegimeError(f"Hopf quotients are finite only for gamma < 1 (got {gamma})")
    if not kappa_floor > 0.0:
        raise ParameterError("kappa_floor must be positive")
    fine, other = (u_refined, u) if u_refined is not None else (u, coarsen(u))
    q_fine = boundary_quotient(fine, radial)
    q_other = boundary_quotient(other, radial)
    drift = abs(q_fine - q_other) / abs(q_fine)
    return CheckReport(
        check_name="hopf",
        passed=min(q_fine, q_other) >= kappa_floor and drift <= stability,
        measured=[q_fine, q_other],
        expected=[kappa_floor],
        tolerance=stability,
        detail=f"relative change under refinement {drift:.3f}",
    )


def check_gradient_blowup(u: GridFunction, alpha: float, gamma: float, radial: bool = False) -> CheckReport:
    """
    For gamma > 1 the boundary quotient grows under refinement like 2^{1-t}.
    Passes when the measured growth factor covers at least half of the expected excess.
    """
    if gamma <= 1.0:
        raise RegimeError(f"gradient blow-up is expected for gamma > 1 (got {gamma})")
    t = boundary_exponent(alpha, gamma)
    growth = boundary_quotient(u, radial) / boundary_quotient(coarsen(u), radial)
    expected = 2.0 ** (1.0 - t)
    return CheckReport(
        check_name="gradient_blowup",
        passed=growth >= 1.0 + 0.5 * (expected - 1.0),
        measured=[growth],
        expected=[expected],
        tolerance=0.5 * (expected - 1.0),
        detail=f"boundary exponent t={t:.4f}",
    )


# ========================
# Hoelder modulus
# ========================
def holder_exponent(problem: ProblemSpec, tau_p: float = 1.0) -> float:
    """min(1, t, (2+alpha+tau_p)/(1+alpha+gamma)), t the boundary exponent."""
    alpha, gamma = problem.alpha, problem.gamma
    return min(1.0, boundary_exponent(alpha, gamma), (2.0 + alpha + tau_p) / (1.0 + alpha + gamma))


def holder_modulus(u: GridFunction, tau: float) -> float:
    """max over node pairs of |u(x) - u(y)| / |x - y|^tau."""
    stride = max(1, int(np.ceil((u.size - 1) / (_MAX_HOLDER_NODES - 1))))
    x, v = u.nodes[::stride], u.values[::stride]
    dx = np.abs(x[:, None] - x[None, :])
    dv = np.abs(v[:, None] - v[None, :])
    off = dx > 0.0
    return float(np.max(dv[off] / dx[off] ** tau))


def check_holder(problem: ProblemSpec, u: GridFunction, tau_p: Optional[float] = None,
                 stability: float = 0.2) -> CheckReport:
    """Hoelder modulus finite and stable between u and its coarsening."""
    if tau_p is None:
        tau_p = 1.0 if is_constant(problem.coeff_p) else 0.5
    tau = holder_exponent(problem, tau_p)
    fine = holder_modulus(u, tau)
    coarse = holder_modulus(coarsen(u), tau)
    drift = abs(fine - coarse) / fine if fine > 0.0 else np.inf
    return CheckReport(
        check_name="holder",
        passed=bool(np.isfinite(fine)) and drift <= stability,
        measured=[fine, coarse],
        expected=[tau],
        tolerance=stability,
        context=fingerprint(problem),
        detail=f"exponent tau={tau:.4f}, relative change {drift:.3f}",
    )


def measure_tau1(u: GridFunction, window: Tuple[float, float] = settings.FIT_WINDOW,
                 radial: bool = False) -> CheckReport:
    """Fitted boundary exponent, reported without a verdict."""
    slope = fit_boundary_exponent(u, window, radial)
    return CheckReport(
        check_name="tau1",
        passed=None,
        measured=[slope],
        expected=[1.0],
        tolerance=0.0,
        detail="informational: the exponent has no sharp target",
    )


def check_boundary_exponent(problem: ProblemSpec, u: GridFunction, window: Tuple[float, float] = settings.FIT_WINDOW,
                            rel_tol: float = 0.05) -> CheckReport:
    """Fitted slope against (2+alpha)/(1+alpha+gamma) for gamma > 1."""
    if problem.gamma <= 1.0:
        raise RegimeError(f"the power-law boundary layer applies for gamma > 1 (got {problem.gamma})")
    target = boundary_exponent(problem.alpha, problem.gamma)
    slope = fit_boundary_exponent(u, window, problem.is_radial)
    return CheckReport(
        check_name="boundary_exponent",
        passed=abs(slope - target) <= rel_tol * target,
        measured=[slope],
        expected=[target],
        tolerance=rel_tol,
        context=fingerprint(problem),
    )


# ========================
# Cross checks
# ========================
def available_solvers(problem: ProblemSpec) -> List[str]:
    """Independent solution paths applicable to the problem."""
    zero_lower = all(
        is_constant(coeff) and float(sample_coefficient(coeff, np.zeros(1))[0]) == 0.0
        for coeff in (problem.coeff_c, problem.coeff_h)
    )
    closed = zero_lower and is_constant(problem.coeff_p)
    solvers = []
    if closed:
        solvers.append("radial" if problem.is_radial else "oned")
    if problem.alpha >= 0.0 and problem.gamma != 1.0:
        solvers.append("scheme")
    return solvers


def cross_validate(problem: ProblemSpec, solutions: Dict[str, GridFunction],
                   tol: float = settings.CROSS_TOL) -> CheckReport:
    """
    Pairwise sup-norm distances between solutions of the same problem.

    Raises:
        PreconditionError: if fewer than two solutions are supplied
    """
    if len(solutions) < 2:
        raise PreconditionError(f"cross validation needs two solutions (got {sorted(solutions)})")
    names = sorted(solutions)
    pairs = list(combinations(names, 2))
    distances = [solutions[a].sup_distance(solutions[b]) for a, b in pairs]
    logger.info("cross validation: " + ", ".join(f"{a}/{b}={d:.2e}" for (a, b), d in zip(pairs, distances)))
    return CheckReport(
        check_name="cross_validate",
        passed=max(distances) <= tol,
        measured=distances,
        expected=[0.0] * len(distances),
        tolerance=tol,
        context=fingerprint(problem),
        detail="; ".join(f"{a} vs {b}" for a, b in pairs),
    )


def check_restart(problem: ProblemSpec, original: GridFunction, restarted: GridFunction, tol: float,
                  margin: float = 0.0) -> CheckReport:
    """
    Sup distance between a scheme solution and a restart on another mesh,
    interpolated onto the original nodes; passes within 10 * tol.
    """
    values = np.interp(original.nodes, restarted.nodes, restarted.values)
    mask = window_mask(original.nodes, problem.is_radial, margin)
    if not np.any(mask):
        raise InsufficientDataError(f"no interior node left with margin {margin}")
    distance = float(np.max(np.abs(original.values[mask] - values[mask])))
    logger.info(f"restart on {restarted.size} nodes: distance {distance:.2e}")
    return CheckReport(
        check_name="uniqueness_restart",
        passed=distance <= 10.0 * tol,
        measured=[distance],
        expected=[0.0],
        tolerance=10.0 * tol,
        context=fingerprint(problem),
        detail=f"{original.size} vs {restarted.size} nodes",
    )


def check_sandwich(problem: ProblemSpec, nodes: int = settings.DEFAULT_NODES, tol: float = 1e-8) -> CheckReport:
    """Pucci profiles ordered, with the trace profile between them."""
    try:
        result = pucci_sandwich(problem, nodes=nodes, tol=tol)
    except SandwichViolationError as e:
        return CheckReport(check_name="pucci_sandwich", passed=False, measured=[np.nan], expected=[0.0],
                           tolerance=tol, context=fingerprint(problem), detail=str(e))

    measured = [result.min_gap]
    passed = result.min_gap >= -tol
    if result.trace_profile is not None:
        below = float(np.min(result.upper.values - result.trace_profile.values))
        above = float(np.min(result.trace_profile.values - result.lower.values))
        measured += [below, above]
        passed = passed and below >= -tol and above >= -tol
    return CheckReport(
        check_name="pucci_sandwich",
        passed=passed,
        measured=measured,
        expected=[0.0] * len(measured),
        tolerance=tol,
        context=fingerprint(problem),
        detail=f"upper operator {result.upper_operator}",
    )
