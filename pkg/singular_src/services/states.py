"""
Models and LangGraph states shared by the solvers, graphs and commands.
"""
import math
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing_extensions import TypedDict

from singular_src.config.settings import settings
from singular_src.utils.helpers import sample_coefficient, uniform_nodes

Coefficient = Union[float, str]


def _frozen_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


# ========================
# Grid functions
# ========================
class GridFunction(BaseModel):
    """Nodal values of a scalar function on a 1D or radial mesh."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray = Field(description="Strictly increasing node coordinates")
    values: np.ndarray = Field(description="Function values at the nodes")

    @field_validator("nodes", "values", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_shape(self) -> "GridFunction":
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("nodes must be a 1D array with at least 2 entries")
        if self.values.shape != self.nodes.shape:
            raise ValueError(
                f"values length {self.values.size} differs from nodes length {self.nodes.size}"
            )
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        return self

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def spacing(self) -> float:
        """Mesh width of a uniform mesh."""
        return float(self.nodes[1] - self.nodes[0])

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(nodes=self.nodes, values=values)

    def sup_distance(self, other: "GridFunction") -> float:
        if other.size != self.size or not np.allclose(other.nodes, self.nodes, rtol=0, atol=1e-12):
            raise ValueError("grid functions live on different meshes")
        return float(np.max(np.abs(self.values - other.values)))


class RadialHessianEigs(BaseModel):
    """Eigenvalue structure of a radial Hessian."""
    radial_curvature: float = Field(description="u'' (multiplicity 1)")
    tangential_curvature: float = Field(description="u'/r (multiplicity N-1)")

    @model_validator(mode="after")
    def _finite(self) -> "RadialHessianEigs":
        if not (math.isfinite(self.radial_curvature) and math.isfinite(self.tangential_curvature)):
            raise ValueError("radial Hessian eigenvalues must be finite")
        return self

    def as_eigs(self, dim: int) -> List[Tuple[float, int]]:
        eigs = [(self.radial_curvature, 1)]
        if dim > 1:
            eigs.append((self.tangential_curvature, dim - 1))
        return eigs


# ========================
# Problem description
# ========================
class OperatorSpec(BaseModel):
    """Second order operator F: trace or a Pucci extremal operator."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["trace", "pucci_plus", "pucci_minus"] = Field(default="trace")
    a: float = Field(default=1.0, description="Lower ellipticity constant")
    A: float = Field(default=1.0, description="Upper ellipticity constant")

    @model_validator(mode="after")
    def _ordering(self) -> "OperatorSpec":
        if not (0.0 < self.a <= self.A):
            raise ValueError(f"ellipticity constants must satisfy 0 < a <= A (got a={self.a}, A={self.A})")
        return self


class Geometry(BaseModel):
    """Interval (0, L) or ball of radius R with radial symmetry."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["interval", "ball"] = Field(default="interval")
    size: float = Field(default=1.0, gt=0.0, description="Interval length L or ball radius R")


class ProblemSpec(BaseModel):
    """Full problem instance."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(description="Gradient exponent, alpha > -1")
    gamma: float = Field(description="Singular exponent, gamma > 0")
    dim: int = Field(default=1, description="Space dimension N >= 1")
    operator: OperatorSpec = Field(default_factory=OperatorSpec)
    coeff_c: Coefficient = Field(default=0.0, description="Zero order coefficient c")
    coeff_h: Coefficient = Field(default=0.0, description="Drift coefficient h (radial component)")
    coeff_p: Coefficient = Field(default=1.0, description="Singular coefficient p, bounded below by a positive constant")
    geometry: Geometry = Field(default_factory=Geometry)

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, value: float) -> float:
        if not value > -1.0:
            raise ValueError(f"alpha must be > -1 (got {value})")
        return value

    @field_validator("gamma")
    @classmethod
    def _gamma(cls, value: float) -> float:
        if not value > 0.0:
            raise ValueError(f"gamma must be > 0 (got {value})")
        return value

    @field_validator("dim")
    @classmethod
    def _dim(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"dim must be >= 1 (got {value})")
        return value

    @model_validator(mode="after")
    def _consistency(self) -> "ProblemSpec":
        if self.geometry.kind == "interval" and self.dim != 1:
            raise ValueError("interval geometry requires dim = 1")
        nodes = uniform_nodes(self.geometry.size, settings.COEFF_SAMPLE_NODES)
        p_min = float(np.min(sample_coefficient(self.coeff_p, nodes)))
        if not p_min > 0.0:
            raise ValueError(f"min of p over the sample grid must be > 0 (got {p_min})")
        return self

    @property
    def is_radial(self) -> bool:
        return self.geometry.kind == "ball"

    @property
    def negative_weight(self) -> float:
        """Ellipticity constant multiplying negative Hessian eigenvalues."""
        if self.operator.kind == "pucci_plus":
            return self.operator.A
        if self.operator.kind == "pucci_minus":
            return self.operator.a
        return 1.0

    @property
    def upper_constant(self) -> float:
        return self.operator.A if self.operator.kind != "trace" else 1.0

    @property
    def lower_constant(self) -> float:
        return self.operator.a if self.operator.kind != "trace" else 1.0

    def evolve(self, **changes: Any) -> "ProblemSpec":
        """Validated copy with some fields replaced."""
        payload = self.model_dump()
        for key, value in changes.items():
            payload[key] = value.model_dump() if isinstance(value, BaseModel) else value
        return ProblemSpec.model_validate(payload)


# ========================
# Solver results
# ========================
class FirstIntegralSolution(BaseModel):
    """Quadrature solution of the 1D problem through its first integral."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: float
    gamma: float
    energy_C: float = Field(description="First-integral constant C = E(m)")
    midpoint_value: float = Field(description="m = u(1/2)")
    profile: GridFunction
    boundary_derivative: float = Field(description="u'(0); math.inf when gamma >= 1")

    @model_validator(mode="after")
    def _shape(self) -> "FirstIntegralSolution":
        values = self.profile.values
        if not self.midpoint_value > 0.0:
            raise ValueError("midpoint value must be positive")
        if abs(values[0]) > 1e-12 or abs(values[-1]) > 1e-12:
            raise ValueError("profile must vanish at both boundary nodes")
        if np.any(values[1:-1] <= 0.0):
            raise ValueError("profile must be positive at interior nodes")
        if values.max() > self.midpoint_value * (1.0 + 1e-9):
            raise ValueError("midpoint value must be the maximum of the profile")
        return self


class RadialSolveState(BaseModel):
    """Intermediate and final quantities of the radial construction."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: float
    gamma: float
    r_o: float = Field(description="Contraction radius")
    r_handoff: float = Field(description="Radius where the ODE continuation starts")
    fixed_point_profile: GridFunction
    continued_profile: GridFunction
    r_bar: float = Field(description="First zero of the continued profile")
    rescale_C: float
    contraction_ratio: float
    profile: Optional[GridFunction] = Field(default=None, description="Rescaled profile on the problem ball")

    @model_validator(mode="after")
    def _invariants(self) -> "RadialSolveState":
        if not self.r_o > 0.0:
            raise ValueError("r_o must be positive")
        if not self.r_bar > self.r_handoff:
            raise ValueError("r_bar must lie beyond the handoff radius")
        if not self.contraction_ratio < 1.0:
            raise ValueError(f"measured contraction ratio {self.contraction_ratio:.3f} is not < 1")
        expected = self.r_bar ** (-(2.0 + self.alpha) / (self.gamma + self.alpha + 1.0))
        if not math.isclose(self.rescale_C, expected, rel_tol=1e-12):
            raise ValueError("rescale_C inconsistent with r_bar")
        return self


class SandwichResult(BaseModel):
    """Ordered pair of Pucci radial profiles."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lower: GridFunction
    upper: GridFunction
    upper_operator: Literal["pucci_plus", "pucci_minus"]
    min_gap: float = Field(description="min over nodes of upper - lower")
    trace_profile: Optional[GridFunction] = None


class EigenPair(BaseModel):
    """Estimate of the first demi-eigenvalue with its positive eigenfunction."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lambda1: float
    phi: GridFunction
    weight_label: str = Field(default="c")
    iterations: int = Field(default=0)
    residual: float = Field(default=0.0, description="max nodewise eigen-residual")
    shift: float = Field(default=0.0, description="Weight shift used by the inverse iteration")

    @model_validator(mode="after")
    def _normalized(self) -> "EigenPair":
        interior = self.phi.values[1:-1]
        if interior.size == 0:
            raise ValueError("eigenfunction needs interior nodes")
        if np.any(interior <= 0.0):
            raise ValueError("eigenfunction must be positive at interior nodes")
        if not math.isclose(float(np.max(np.abs(self.phi.values))), 1.0, rel_tol=1e-12):
            raise ValueError("eigenfunction must have sup norm 1")
        return self


class BarrierSet(BaseModel):
    """Ordered sub/super-solution pair with its constants ledger."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sub: GridFunction
    sup: GridFunction
    branch: Literal["gamma_gt1", "gamma_lt1"]
    radial: bool = Field(default=False, description="Node 0 is the ball center, not a boundary node")
    constants: Dict[str, float] = Field(default={}, description="Constants ledger")

    @model_validator(mode="after")
    def _ordered(self) -> "BarrierSet":
        if self.sub.size != self.sup.size:
            raise ValueError("sub and sup live on different meshes")
        if np.any(self.sub.values > self.sup.values + 1e-12):
            node = int(np.argmax(self.sub.values - self.sup.values))
            raise ValueError(f"sub exceeds sup at node {node}")
        boundary = [-1] if self.radial else [0, -1]
        for idx in boundary:
            if self.sub.values[idx] != 0.0 or self.sup.values[idx] != 0.0:
                raise ValueError("barriers must vanish on the boundary")
        inner = self.sub.values[:-1] if self.radial else self.sub.values[1:-1]
        if np.any(inner <= 0.0):
            raise ValueError("sub-solution must be positive at interior nodes")
        return self


class FrozenStepSpec(BaseModel):
    """One frozen step of the monotone scheme."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    problem: ProblemSpec
    k_coeff: Union[float, np.ndarray] = Field(default=0.0, description="Scheme coefficient k, scalar or nodewise")
    delta: float = Field(default=0.0, ge=0.0)
    rhs: GridFunction
    grad_reg: float = Field(default=settings.GRAD_REG_TARGET, gt=0.0)

    @field_validator("k_coeff")
    @classmethod
    def _k_nonnegative(cls, value: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        if np.any(np.asarray(value) < 0.0):
            raise ValueError("k must be nonnegative")
        return value


class DeltaLevel(BaseModel):
    """Statistics of one delta level of the monotone scheme."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    delta: float
    iterations: int
    min_margin: float = Field(description="min over nodes and steps of w_{n+1} - w_n")
    barrier_violations: int
    residual: float = Field(description="Unregularized residual of Z_delta")
    profile: GridFunction


class SchemeTrace(BaseModel):
    """History of the delta continuation."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    delta_ladder: List[float]
    levels: List[DeltaLevel]
    profile: GridFunction = Field(description="Final profile Z")
    final_residual: float
    tol_mono: float


class SolveReport(BaseModel):
    """Solution plus diagnostics, as emitted by the command line."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    solver: str
    profile: GridFunction
    residual_max: float
    diagnostics: Dict[str, float] = Field(default={})


class CheckReport(BaseModel):
    """Outcome of one verification check."""
    check_name: str
    passed: Optional[bool] = Field(description="None for informational measurements")
    measured: List[float] = Field(default=[])
    expected: List[float] = Field(default=[])
    tolerance: float = Field(default=0.0)
    context: str = Field(default="", description="Problem fingerprint")
    detail: str = Field(default="")

    @model_validator(mode="after")
    def _populated(self) -> "CheckReport":
        if not self.measured or not self.expected:
            raise ValueError(f"check '{self.check_name}' must report measured and expected values")
        return self


# ========================
# Run configuration
# ========================
class SweepConfig(BaseModel):
    """Parameter sweep definition."""
    model_config = ConfigDict(extra="forbid")

    command: Literal["oned", "radial", "eigen", "scheme"] = "oned"
    parameter: Literal["alpha", "gamma", "dim", "a", "A", "c", "p", "size"] = "gamma"
    values: List[float] = Field(default=[])
    jobs: int = Field(default=1, ge=1)


class NumericConfig(BaseModel):
    """Numeric block of a run configuration."""
    model_config = ConfigDict(extra="forbid")

    nodes: int = Field(default=settings.DEFAULT_NODES, ge=3)
    tol: float = Field(default=settings.SCHEME_TOL, gt=0.0, description="Final residual tolerance")
    inner_tol: float = Field(default=settings.NEWTON_TOL, gt=0.0)
    level_tol: float = Field(default=settings.LEVEL_TOL, gt=0.0)
    eigen_tol: float = Field(default=settings.EIGEN_TOL, gt=0.0)
    quad_tol: float = Field(default=1e-12, gt=0.0)
    grad_reg: float = Field(default=settings.GRAD_REG_TARGET, gt=0.0)
    delta0: Optional[float] = Field(default=None, gt=0.0)
    ladder_factor: float = Field(default=settings.LADDER_FACTOR, gt=0.0, lt=1.0)
    barrier_s: float = Field(default=settings.BARRIER_S, gt=0.0, lt=1.0)
    fixed_point_tol: float = Field(default=settings.FIXED_POINT_TOL, gt=0.0)
    rk_rtol: float = Field(default=settings.RADIAL_OUTPUT_RTOL, gt=0.0)
    rk_atol: float = Field(default=settings.RADIAL_OUTPUT_ATOL, gt=0.0)
    fit_window: Tuple[float, float] = Field(default=settings.FIT_WINDOW)
    seed: int = Field(default=0)
    sweep: Optional[SweepConfig] = None


class OutputConfig(BaseModel):
    """Output block of a run configuration."""
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = Field(default=None, description="Defaults to SINGULAR_OUTPUT_DIR")
    formats: List[Literal["csv", "json", "md"]] = Field(default=["csv", "json"])


class RunConfig(BaseModel):
    """Complete run configuration."""
    model_config = ConfigDict(extra="forbid")

    command: Literal["oned", "radial", "scheme", "eigen", "verify", "sweep"]
    problem: ProblemSpec
    numeric: NumericConfig = Field(default_factory=NumericConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


# ========================
# Pipeline states
# ========================
class SchemeState(TypedDict):
    """State for the existence pipeline."""
    problem: ProblemSpec
    numeric: NumericConfig
    eigen_c: Optional[EigenPair]
    eigen_beta: Optional[EigenPair]
    eigen_s: Optional[EigenPair]
    barrier_s: Optional[float]
    barriers: Optional[BarrierSet]
    trace: Optional[SchemeTrace]
    error: Optional[Exception]


class VerificationState(TypedDict):
    """State for the verification battery."""
    problem: ProblemSpec
    numeric: NumericConfig
    solutions: Dict[str, GridFunction]
    reference: Optional[SolveReport]
    barriers: Optional[BarrierSet]
    checks: List[CheckReport]
    error: Optional[Exception]
