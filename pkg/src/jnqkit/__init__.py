"""Numerical toolkit for JNQ-type function spaces on dyadic grids.

Per-cube functionals (mean oscillation, the singular double integral ``Phi``,
its dyadic analogues), packing-supremum norms with exact optimizers, and a
property-based verification harness with frozen calibration envelopes.
"""

from .catalog import CATALOG, make_function
from .core import (
    AlignmentError,
    ConfigError,
    Cube,
    DivergenceError,
    DyadicCube,
    GridFunction,
    InvariantError,
    Packing,
    Params,
    VerificationReport,
)
from .functionals import double_diff_moment, mean_oscillation, moduli, phi, phi_dyadic, psi
from .norms import (
    NormResult,
    PackingStrategy,
    gagliardo_seminorm,
    jn_con_norm,
    jnq_dyadic_norm,
    jnq_dyadic_psi_norm,
    jnq_norm_integral,
    jnq_norm_packing,
    jnq_norm_variants,
)
from .verify import Suite, calibrate, classification_matrix, get_suite, run_suite

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "make_function", "AlignmentError", "ConfigError", "Cube", "DivergenceError",
    "DyadicCube", "GridFunction", "InvariantError", "Packing", "Params", "VerificationReport",
    "double_diff_moment", "mean_oscillation", "moduli", "phi", "phi_dyadic", "psi",
    "NormResult", "PackingStrategy", "gagliardo_seminorm", "jn_con_norm", "jnq_dyadic_norm",
    "jnq_dyadic_psi_norm", "jnq_norm_integral", "jnq_norm_packing", "jnq_norm_variants",
    "Suite", "calibrate", "classification_matrix", "get_suite", "run_suite",
]
