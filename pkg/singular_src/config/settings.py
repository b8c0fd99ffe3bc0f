"""
Configuration settings for the Singular Elliptic Laboratory.
"""
import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Application settings and environment variables."""

    # Output / logging
    OUTPUT_DIR = os.getenv("SINGULAR_OUTPUT_DIR", "outputs")
    LOG_LEVEL = os.getenv("SINGULAR_LOG_LEVEL", "INFO")

    # Mesh
    DEFAULT_NODES = int(os.getenv("SINGULAR_NODES", "2001"))
    COEFF_SAMPLE_NODES = 257

    # Grid solver
    GRAD_REG_TARGET = 1e-8
    GRAD_REG_START = 1e-2
    NEWTON_TOL = 1e-10
    NEWTON_MAX_ITER = 100
    ARMIJO_MAX_HALVINGS = 40

    # Radial solver
    FIXED_POINT_NODES = 4097
    FIXED_POINT_TOL = 1e-11
    FIXED_POINT_MAX_ITER = 200
    HANDOFF_FRACTION = 0.8
    RK_RTOL = 1e-9
    RK_ATOL = 1e-12
    RADIAL_OUTPUT_RTOL = 1e-12
    RADIAL_OUTPUT_ATOL = 1e-14
    OUTPUT_REFINE = 4

    # Eigen / barriers
    EIGEN_TOL = 1e-8
    EIGEN_MAX_ITER = 200
    BARRIER_S = 0.95

    # Monotone scheme
    LADDER_FACTOR = 0.1
    GT1_DELTA0 = 1e-2
    SCHEME_TOL = 1e-3
    LEVEL_TOL = 1e-10
    LEVEL_MAX_ITER = 2000
    MAX_LEVELS = 30

    # Verification
    BOUNDARY_MARGIN = 0.05
    FIT_WINDOW = (1e-3, 1e-2)
    FIT_MIN_CELLS = 8
    CROSS_TOL = 1e-3
    HOPF_FLOOR = 1e-6

    # Commands
    COMMANDS = {
        "oned": "1D first-integral quadrature solver",
        "radial": "Radial fixed-point and ODE continuation solver",
        "scheme": "Monotone iteration with delta continuation",
        "eigen": "First demi-eigenvalue estimate",
        "verify": "Verification battery",
        "sweep": "Parameter sweep",
    }

    # Paths
    PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))

    @classmethod
    def validate(cls):
        """Validate environment-derived settings."""
        if cls.DEFAULT_NODES < 3:
            raise ValueError("SINGULAR_NODES must be at least 3.")
        if not cls.OUTPUT_DIR:
            raise ValueError("SINGULAR_OUTPUT_DIR must not be empty.")


# Initialize settings
settings = Settings()
