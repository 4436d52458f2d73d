"""Simulation toolkit for single-shot error correction of 3D product codes.

The package builds CSS codes from three GF(2) seed matrices via the
three-fold homological product, runs noisy two-stage decoding cycles
(syndrome repair + qubit recovery), estimates thresholds from Monte Carlo
campaigns, and exhaustively verifies confinement properties on small
instances.
"""

from qec3d.gf2 import SparseBitMatrix
from qec3d.product_code import (
    ChainComplex3,
    ClassicalSeed,
    ProductCode,
    build_complex,
    build_product_code,
    derive_code,
    surface_seeds,
    table_family_seeds,
    toric_seeds,
)

__all__ = [
    "SparseBitMatrix",
    "ChainComplex3",
    "ClassicalSeed",
    "ProductCode",
    "build_complex",
    "build_product_code",
    "derive_code",
    "surface_seeds",
    "table_family_seeds",
    "toric_seeds",
]

__version__ = "0.1.0"
