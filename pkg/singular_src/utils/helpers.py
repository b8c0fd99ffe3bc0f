"""
Utility functions for the laboratory: meshes, coefficient compilation and
small numeric helpers shared by the services.
"""
import hashlib
import json
import logging
from functools import lru_cache
from typing import Any, Callable, Union

import numpy as np
import sympy

logger = logging.getLogger(__name__)

_X, _R = sympy.symbols("x r")


@lru_cache(maxsize=128)
def compile_expression(expr: str) -> Callable[[np.ndarray, np.ndarray], Any]:
    """
    Compile a coefficient expression in ``x`` or ``r`` into a numpy callable.

    Args:
        expr: Expression text such as ``"1 + 0.5*sin(pi*x)"``

    Returns:
        Callable taking ``(x, r)`` arrays
    """
    try:
        parsed = sympy.sympify(expr)
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise ValueError(f"cannot parse coefficient expression '{expr}': {e}") from e

    unknown = parsed.free_symbols - {_X, _R}
    if unknown:
        names = sorted(str(s) for s in unknown)
        raise ValueError(f"coefficient expression '{expr}' uses unknown symbols {names}")

    return sympy.lambdify((_X, _R), parsed, "numpy")


def sample_coefficient(coeff: Union[float, str, np.ndarray], nodes: np.ndarray) -> np.ndarray:
    """Evaluate a constant, expression string or nodal array on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)

    if isinstance(coeff, np.ndarray):
        if coeff.shape != nodes.shape:
            raise ValueError(f"coefficient array has shape {coeff.shape}, mesh has {nodes.shape}")
        return coeff.astype(float)

    if isinstance(coeff, str):
        values = compile_expression(coeff)(nodes, nodes)
        return np.broadcast_to(np.asarray(values, dtype=float), nodes.shape).copy()

    return np.full(nodes.shape, float(coeff))


def is_constant(coeff: Union[float, str, np.ndarray]) -> bool:
    """True when the coefficient does not depend on position."""
    if isinstance(coeff, np.ndarray):
        return bool(np.all(coeff == coeff.flat[0]))
    if isinstance(coeff, str):
        return not sympy.sympify(coeff).free_symbols
    return True


def uniform_nodes(size: float, count: int) -> np.ndarray:
    """Uniform mesh of ``count`` nodes on ``[0, size]``."""
    if count < 3:
        raise ValueError(f"a mesh needs at least 3 nodes, got {count}")
    return np.linspace(0.0, size, count)


def positive_part(x):
    return np.maximum(x, 0.0)


def negative_part(x):
    return np.maximum(-x, 0.0)


def signed_power(x, exponent: float):
    """|x|^exponent * sign(x), the odd extension of the power map."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** exponent


def problem_fingerprint(payload: dict[str, Any]) -> str:
    """Short stable hash of a JSON-serializable problem description."""
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]

