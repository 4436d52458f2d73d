import math

import numpy as np
import pytest

from qec3d import gf2
from qec3d import product_code as pc
from qec3d.gf2 import SparseBitMatrix


def test_classical_distance_examples():
    rep3 = pc._repetition_circulant(3)
    assert pc.classical_distance(rep3) == 3
    full = pc._repetition_full_rank(3)  # checks of the [3, 1, 3] code
    assert pc.classical_distance(full) == 3
    hamming = SparseBitMatrix.from_dense(
        [[1, 0, 1, 0, 1, 0, 1],
         [0, 1, 1, 0, 0, 1, 1],
         [0, 0, 0, 1, 1, 1, 1]])
    assert pc.classical_distance(hamming) == 3


def test_seed_from_matrix():
    s = pc.ClassicalSeed.from_matrix(pc._repetition_circulant(4))
    assert (s.n, s.k, s.d) == (4, 1, 4)
    assert (s.nt, s.kt, s.dt) == (4, 1, 4)
    s2 = pc.ClassicalSeed.from_matrix(pc._repetition_full_rank(4))
    assert (s2.n, s2.k, s2.d) == (4, 1, 4)
    assert (s2.nt, s2.kt) == (3, 0)
    assert s2.dt == math.inf  # zero-dimensional transpose code


def test_chain_conditions_toric():
    cc = pc.build_complex(*pc.toric_seeds(3))
    assert gf2.is_zero(gf2.mat_mul(cc.delta1, cc.delta0))
    assert gf2.is_zero(gf2.mat_mul(cc.delta2, cc.delta1))
    assert cc.dims == (27, 81, 81, 27)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_toric_parameters(L):
    code = pc.build_product_code(*pc.toric_seeds(L))
    assert code.n == 3 * L ** 3
    assert code.k == 3
    assert code.dx == L * L
    assert code.dz == L
    assert code.dss == L
    assert code.km == 3  # second Betti number of the 3-torus


@pytest.mark.parametrize("L", [2, 3])
def test_surface_parameters(L):
    code = pc.build_product_code(*pc.surface_seeds(L))
    assert code.n == 2 * L * (L - 1) ** 2 + L ** 3
    assert code.k == 1
    assert code.dx == L * L
    assert code.dz == L
    assert code.dss == math.inf
    assert code.km == 0


def test_seed_size_errors():
    with pytest.raises(ValueError):
        pc.toric_seeds(1)
    with pytest.raises(ValueError):
        pc.surface_seeds(1)


def test_homology_generator_contracts():
    code = pc.build_product_code(*pc.toric_seeds(2))
    # lm rows kill im(hx), fm columns satisfy the metachecks, and the
    # two pair nondegenerately
    assert gf2.is_zero(gf2.mat_mul(code.lm, code.hx))
    assert gf2.is_zero(gf2.mat_mul(code.meta, code.fm))
    assert gf2.rank(gf2.mat_mul(code.lm, code.fm)) == code.km


def test_table_family_row0():
    code = pc.build_product_code(*pc.table_family_seeds(0))
    assert (code.n, code.k, code.dz) == (1336, 4, 6)


def test_table_family_index_error():
    with pytest.raises(ValueError):
        pc.table_family_seeds(3)


def test_k_formula_matches_rank_random():
    rng = np.random.default_rng(5)
    for _ in range(10):
        mats = []
        for _ in range(3):
            r, c = rng.integers(2, 5, size=2)
            mats.append(SparseBitMatrix.from_dense(
                (rng.random((r, c)) < 0.4).astype(np.uint8)))
        seeds = tuple(pc.ClassicalSeed.from_matrix(m) for m in mats)
        code = pc.build_product_code(*seeds)
        # k from homology rank equals the product formula
        a, b, c = seeds
        formula = (a.kt * b.k * c.k + a.k * b.kt * c.k + a.k * b.k * c.kt)
        assert code.k == formula
        # CSS conditions
        assert gf2.is_zero(gf2.mat_mul(code.hx, gf2.transpose(code.hz)))
        assert gf2.is_zero(gf2.mat_mul(code.meta, code.hx))


def test_distance_none_propagation():
    assert pc._dist_min(3, None) is None
    assert pc._dist_min(3, math.inf) == 3
    assert pc._dist_prod(None, 2) is None
    assert pc._dist_prod(math.inf, 2) == math.inf


def test_code_serialization_roundtrip(tmp_path):
    code = pc.build_product_code(*pc.toric_seeds(2))
    path = tmp_path / "code.json"
    pc.save_code(code, path)
    back = pc.load_code(path)
    assert back.hx == code.hx and back.hz == code.hz
    assert (back.n, back.k, back.km) == (code.n, code.k, code.km)


def test_ldpc_degree_bounds_toric():
    cc = pc.build_complex(*pc.toric_seeds(3))
    report = pc.ldpc_degree_bounds(cc, pc.toric_seeds(3))
    assert report["ok"]
    for key, got in report["measured"].items():
        assert got <= report["bounds"][key], key
