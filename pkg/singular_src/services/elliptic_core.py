"""
Elliptic core - Pucci algebra for radial Hessians and the pointwise residual
of |grad u|^alpha (F(D^2 u) + h . grad u) + c |u|^alpha u + p u^{-gamma}.

Pucci convention: M+(S) = a * (sum of positive eigenvalues) + A * (sum of
negative eigenvalues), M-(S) = -M+(-S). Note that a weights the positive
eigenvalues here, the reverse of the most common convention.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from singular_src.config.settings import settings
from singular_src.services.errors import InsufficientDataError, ParameterError, SingularityError
from singular_src.services.states import GridFunction, OperatorSpec, ProblemSpec, RadialHessianEigs
from singular_src.utils.helpers import sample_coefficient

logger = logging.getLogger(__name__)

Eigs = Sequence[Tuple[float, int]]


# ========================
# Pucci algebra
# ========================
def _check_constants(a: float, A: float) -> None:
    if not (0.0 < a <= A):
        raise ParameterError(f"Pucci constants must satisfy 0 < a <= A (got a={a}, A={A})")


def pucci_plus(eigs: Eigs, a: float, A: float) -> float:
    """
    Evaluate M+_{a,A} on a symmetric matrix given by its eigenvalues.

    Args:
        eigs: (eigenvalue, multiplicity) pairs
        a: Weight of the positive eigenvalues
        A: Weight of the negative eigenvalues

    Returns:
        a * sum(positive) + A * sum(negative), multiplicities counted
    """
    _check_constants(a, A)
    total = 0.0
    for value, mult in eigs:
        if mult < 1:
            raise ParameterError(f"eigenvalue multiplicity must be >= 1 (got {mult})")
        total += mult * (a * value if value > 0 else A * value)
    return total


def pucci_minus(eigs: Eigs, a: float, A: float) -> float:
    """M-_{a,A}(S) = -M+_{a,A}(-S)."""
    return -pucci_plus([(-value, mult) for value, mult in eigs], a, A)


def apply_operator(operator: OperatorSpec, eigs: Eigs) -> float:
    """F(S) for the configured operator."""
    if operator.kind == "pucci_plus":
        return pucci_plus(eigs, operator.a, operator.A)
    if operator.kind == "pucci_minus":
        return pucci_minus(eigs, operator.a, operator.A)
    return float(sum(mult * value for value, mult in eigs))


def eigen_weights(operator: OperatorSpec, values: np.ndarray) -> np.ndarray:
    """Nodewise weight multiplying each eigenvalue; also the generalized derivative."""
    if operator.kind == "pucci_plus":
        return np.where(values > 0.0, operator.a, operator.A)
    if operator.kind == "pucci_minus":
        return np.where(values > 0.0, operator.A, operator.a)
    return np.ones_like(values)


def radial_hessian_eigs(u: GridFunction, index: int) -> RadialHessianEigs:
    """Radial and tangential curvature of a radial profile at one node."""
    stencil = build_stencil(u.values, u.nodes, radial=True)
    return RadialHessianEigs(
        radial_curvature=float(stencil.d_second[index]),
        tangential_curvature=float(stencil.tangential[index]),
    )


# ========================
# Finite difference stencil
# ========================
@dataclass(frozen=True)
class Stencil:
    """Centered and one-sided differences of a profile on a uniform mesh."""
    h: float
    d_plus: np.ndarray
    d_minus: np.ndarray
    d_center: np.ndarray
    d_second: np.ndarray
    tangential: np.ndarray
    grad: np.ndarray
    interior: np.ndarray


def build_stencil(values: np.ndarray, nodes: np.ndarray, radial: bool) -> Stencil:
    """
    Differences on a uniform mesh. On a ball, node 0 is the center and uses the
    symmetric ghost value u_{-1} = u_1, so u'(0) = 0 and (N-1)u'/r -> (N-1)u''.
    """
    n = values.size
    h = float(nodes[1] - nodes[0])
    forward = np.diff(values) / h

    d_plus = np.zeros(n)
    d_minus = np.zeros(n)
    d_plus[:-1] = forward
    d_minus[1:] = forward
    if radial:
        d_minus[0] = -d_plus[0]

    d_center = 0.5 * (d_plus + d_minus)
    d_second = (d_plus - d_minus) / h
    grad = np.sqrt(0.5 * (d_plus ** 2 + d_minus ** 2))

    tangential = np.zeros(n)
    if radial:
        tangential[1:] = d_center[1:] / nodes[1:]
        tangential[0] = d_second[0]

    interior = np.zeros(n, dtype=bool)
    interior[(0 if radial else 1):-1] = True
    return Stencil(h, d_plus, d_minus, d_center, d_second, tangential, grad, interior)


def check_mesh(problem: ProblemSpec, nodes: np.ndarray) -> None:
    if nodes.size < 3:
        raise ParameterError(f"at least 3 nodes are required (got {nodes.size})")
    steps = np.diff(nodes)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ParameterError("residual evaluation requires a uniform mesh")
    if problem.is_radial and nodes[0] != 0.0:
        raise ParameterError("radial meshes must start at the center r = 0")


def gradient_factor(grad: np.ndarray, alpha: float, grad_reg: Optional[float] = None) -> np.ndarray:
    """
    |grad u|^alpha. With ``grad_reg`` the smoothed (g^2 + eps^2)^{alpha/2} is used.
    Without it a vanishing gradient gives 0 for alpha > 0, and for alpha < 0 the
    gradient is clamped at the default regularization.
    """
    if alpha == 0.0:
        return np.ones_like(grad)
    if grad_reg is not None:
        return (grad ** 2 + grad_reg ** 2) ** (0.5 * alpha)
    if alpha > 0.0:
        return grad ** alpha
    return np.maximum(grad, settings.GRAD_REG_TARGET) ** alpha


def second_order_part(problem: ProblemSpec, stencil: Stencil) -> np.ndarray:
    """F(D^2 u) from the radial/tangential eigenvalue split."""
    op = problem.operator
    mult = problem.dim - 1
    value = eigen_weights(op, stencil.d_second) * stencil.d_second
    if problem.is_radial and mult > 0:
        value = value + mult * eigen_weights(op, stencil.tangential) * stencil.tangential
    return value


def discrete_operator(problem: ProblemSpec, u: GridFunction, grad_reg: Optional[float] = None) -> np.ndarray:
    """
    The (1+alpha)-homogeneous part |grad u|^alpha (F + h u') + c |u|^alpha u at
    interior nodes (zero on boundary nodes).
    """
    stencil = build_stencil(u.values, u.nodes, problem.is_radial)
    c = sample_coefficient(problem.coeff_c, u.nodes)
    h = sample_coefficient(problem.coeff_h, u.nodes)

    factor = gradient_factor(stencil.grad, problem.alpha, grad_reg)
    value = factor * (second_order_part(problem, stencil) + h * stencil.d_center)
    # |u|^alpha blows up at the boundary zeros when alpha < 0
    inner = stencil.interior
    zero_order = np.zeros_like(u.values)
    zero_order[inner] = (np.broadcast_to(c, u.values.shape)[inner]
                         * np.abs(u.values[inner]) ** problem.alpha * u.values[inner])
    return np.where(inner, value + zero_order, 0.0)


# ========================
# Residual
# ========================
def residual(problem: ProblemSpec, u: GridFunction) -> GridFunction:
    """
    Pointwise residual of the full equation at interior nodes; boundary nodes
    carry the Dirichlet defect u - 0.

    Raises:
        SingularityError: if u is nonpositive at an interior node
    """
    check_mesh(problem, u.nodes)
    interior = build_stencil(u.values, u.nodes, problem.is_radial).interior

    bad = np.flatnonzero(interior & (u.values <= 0.0))
    if bad.size:
        raise SingularityError(int(bad[0]), float(u.values[bad[0]]))

    p = sample_coefficient(problem.coeff_p, u.nodes)
    values = discrete_operator(problem, u)
    safe = np.where(interior, u.values, 1.0)
    values = np.where(interior, values + p * safe ** (-problem.gamma), u.values)
    return u.with_values(values)


def distance_to_boundary(nodes: np.ndarray, radial: bool) -> np.ndarray:
    if radial:
        return nodes[-1] - nodes
    return np.minimum(nodes - nodes[0], nodes[-1] - nodes)


def window_mask(nodes: np.ndarray, radial: bool, margin: float,
                peak: Optional[float] = None) -> np.ndarray:
    """Interior nodes at distance >= margin * size from the boundary (and from ``peak``)."""
    size = nodes[-1] - nodes[0]
    mask = distance_to_boundary(nodes, radial) >= max(margin * size, 0.0)
    mask[-1] = False
    if not radial:
        mask[0] = False
    if peak is not None and margin > 0.0:
        mask &= np.abs(nodes - peak) >= margin * size
    return mask


def residual_norm(problem: ProblemSpec, u: GridFunction, margin: float = 0.0) -> float:
    """
    Max |residual| over interior nodes, all of them by default. With a positive
    margin, nodes within margin * size of the boundary are skipped, and when
    alpha != 0 so are nodes near the maximum of u, where the gradient degenerates.
    """
    res = residual(problem, u)
    peak = float(u.nodes[int(np.argmax(u.values))]) if problem.alpha != 0.0 else None
    mask = window_mask(u.nodes, problem.is_radial, margin, peak)
    if not np.any(mask):
        raise InsufficientDataError(f"no interior node left with margin {margin}")
    return float(np.max(np.abs(res.values[mask])))


def coefficient_extrema(coeff, nodes: np.ndarray) -> Tuple[float, float]:
    values = sample_coefficient(coeff, nodes)
    return float(values.min()), float(values.max())

