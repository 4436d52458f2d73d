import numpy as np
import pytest

from qec3d import bposd, gf2
from qec3d.bposd import BpConfig, OsdConfig


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jitted kernels once so timed tests measure algorithm
    cost, not JIT cost."""
    h = gf2.SparseBitMatrix.from_dense(np.array([[1, 1, 0], [0, 1, 1]]))
    gf2.rank(h)
    gf2.kernel_basis(h)
    s = np.array([1, 0], dtype=np.uint8)
    bposd.bp_osd_decode(h, s, BpConfig(max_iters=5), OsdConfig())
    bposd.bp_decode(h, s, BpConfig(max_iters=5, variant="sum-product",
                                   schedule="serial"))
