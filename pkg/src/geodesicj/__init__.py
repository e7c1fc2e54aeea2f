"""Special geodesics in the upper half-plane and their j-invariant images.

Submodules:
  halfplane -- exact geometry: points, geodesics, matrix dictionary
  quadclass -- conjugacy classes via indefinite quadratic form reduction
  modfun    -- high-precision j, Klein's lambda, inversion, sampling
  modpoly   -- modular polynomials by isogeny products and interpolation
  znreal    -- sampled verification of the real level-N curve decompositions
  algcheck  -- numerical algebraicity verdicts for curve images
"""

from .halfplane import (
    HPoint,
    Irrational,
    Mat2Z,
    Semicircle,
    SpecialPoint,
    Vertical,
    geodesic_from_matrix,
    is_special_geodesic,
    matrix_from_geodesic,
)
from .modfun import PrecisionCtx, j, j_invert, klein_lambda
from .quadclass import enumerate_classes, pell_min

__all__ = [
    "HPoint",
    "Irrational",
    "Mat2Z",
    "Semicircle",
    "SpecialPoint",
    "Vertical",
    "PrecisionCtx",
    "enumerate_classes",
    "geodesic_from_matrix",
    "is_special_geodesic",
    "j",
    "j_invert",
    "klein_lambda",
    "matrix_from_geodesic",
    "pell_min",
]

__version__ = "0.1.0"
