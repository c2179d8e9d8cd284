"""Dyadic wavelet toolkit: Q-space norms, micro-local block values, and
Riesz-transform diagnostics on finite windows of a periodic grid."""

__version__ = "0.1.0"

from .coeffs import CoefficientField, unit_field
from .dyadic import (
    BlockIndexSet,
    DyadicCube,
    WaveletIndex,
    WindowSpec,
    block_cardinality,
    children,
    enumerate_block,
    enumerate_window,
)
from .grid import GridFunction
from .microlocal import (
    MicrolocalProblem,
    MicrolocalSolution,
    brute_force_microlocal,
    feasibility,
    solve,
)
from .norms import (
    AlphaParam,
    NormReport,
    b_alpha_q,
    c_alpha_q,
    double_integral_seminorm,
    fractional_laplacian,
    h1_norm,
    q_norm,
    sobolev_norm,
)
from .wavelets import Basis, BasisSpec, build_basis
