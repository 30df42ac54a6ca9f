import io
import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from magnon_bloch.basis import ChainGeometry, enumerate_basis
from magnon_bloch.hamiltonian import (ModelParams, SectorOperator, build_effective_pair_hamiltonian,
                                      build_xxz_sector_hamiltonian, split_hamiltonian)
from oracles import full_boson_hamiltonian, full_spin_hamiltonian, project_two_magnon, two_magnon_3site_open


def two_magnon(n, boundary="open"):
    return enumerate_basis(ChainGeometry.from_total_sites(n, boundary), "two-magnon")


def H2(n, delta, B, boundary="open", convention="boson"):
    return build_xxz_sector_hamiltonian(two_magnon(n, boundary), ModelParams(delta, B), convention)


def entry(H, a, b):
    basis = H.basis
    return H.dense()[basis.index_of(a), basis.index_of(b)]


def test_hopping_example():
    for delta, B in [(0, 0), (-1.5, 0.05), (5, -0.3)]:
        H = H2(5, delta, B)
        assert entry(H, (0, 2), (0, 1)) == 0.5


def test_boson_diagonal_examples():
    H = H2(5, -1.5, 0.05)
    assert entry(H, (0, 1), (0, 1)) == pytest.approx(-1.45, abs=1e-12)
    assert entry(H, (-2, 2), (-2, 2)) == pytest.approx(0.0, abs=1e-12)


def test_spin_convention_values():
    # literal spin form: each magnon loses Delta/2 per bond of its site
    H = H2(5, -1.5, 0.05, convention="spin")
    assert entry(H, (0, 1), (0, 1)) == pytest.approx(1.55, abs=1e-12)
    assert entry(H, (-2, 2), (-2, 2)) == pytest.approx(1.5, abs=1e-12)


@pytest.mark.parametrize("n", [5, 7])
@pytest.mark.parametrize("delta", [0.0, 1.5, -1.5, 5.0, -5.0])
@pytest.mark.parametrize("B", [0.0, 0.05])
def test_matches_kronecker_oracles(n, delta, B):
    np.testing.assert_allclose(H2(n, delta, B, convention="spin").dense(),
                               project_two_magnon(full_spin_hamiltonian(n, delta, B), n), rtol=0, atol=1e-12)
    np.testing.assert_allclose(H2(n, delta, B).dense(),
                               project_two_magnon(full_boson_hamiltonian(n, delta, B), n), rtol=0, atol=1e-12)


@pytest.mark.parametrize("delta", [-1.5, 5.0])
def test_periodic_matches_oracle(delta):
    for conv, full in [("spin", full_spin_hamiltonian), ("boson", full_boson_hamiltonian)]:
        np.testing.assert_allclose(H2(7, delta, 0.0, "periodic", conv).dense(),
                                   project_two_magnon(full(7, delta, 0.0, periodic=True), 7), atol=1e-12)


def test_three_site_hand_matrix():
    np.testing.assert_array_equal(H2(3, -5, 0).dense(), two_magnon_3site_open(-5))


def test_one_magnon_sector():
    basis = enumerate_basis(ChainGeometry.from_total_sites(5), "one-magnon")
    H = build_xxz_sector_hamiltonian(basis, ModelParams(-1.5, 0.1)).dense()
    np.testing.assert_allclose(np.diag(H), 0.1 * np.arange(-2, 3))
    np.testing.assert_allclose(np.diag(H, 1), 0.5)


@pytest.mark.parametrize("n", [3, 5, 9, 21])
@pytest.mark.parametrize("delta,B", [(-1.5, 0.05), (5, 0.0), (0, -0.2)])
def test_hermitian_and_real(n, delta, B):
    H = H2(n, delta, B)
    assert H.is_hermitian(atol=0.0)
    assert not np.iscomplexobj(H.matrix.data)


@pytest.mark.parametrize("n", [5, 9, 15])
def test_field_sign_is_reflection(n):
    basis = two_magnon(n)
    perm = np.array([basis.index_of((-b, -a)) for a, b in basis.labels()])
    P = sp.csr_matrix((np.ones(basis.dimension), (perm, np.arange(basis.dimension))))
    Hp = build_xxz_sector_hamiltonian(basis, ModelParams(-1.5, 0.05)).matrix
    Hm = build_xxz_sector_hamiltonian(basis, ModelParams(-1.5, -0.05)).matrix
    np.testing.assert_array_equal((P @ Hp @ P.T).toarray(), Hm.toarray())


def test_split_parts():
    basis = two_magnon(7)
    params = ModelParams(-1.5, 0.05)
    hop, inter = split_hamiltonian(basis, params)
    assert np.all(hop.diagonal() == 0)
    off = inter.dense() - np.diag(inter.diagonal())
    assert np.all(off == 0)
    np.testing.assert_array_equal((hop + inter).dense(), build_xxz_sector_hamiltonian(basis, params).dense())


def test_sector_dimension_is_kept():
    H = H2(9, -1.5, 0.05)
    assert H.matrix.shape == (36, 36)


def test_rejections():
    with pytest.raises(ValueError, match="J"):
        ModelParams(1.0, 0.0, J=2.0)
    with pytest.raises(ValueError, match="periodic"):
        H2(5, 1.0, 0.05, "periodic")
    with pytest.raises(ValueError, match="convention"):
        H2(5, 1.0, 0.0, convention="xyz")
    with pytest.raises(ValueError, match="Bloch period"):
        ModelParams(1.0, 0.0).bloch_period
    pair = enumerate_basis(ChainGeometry.from_total_sites(5), "bound-pair")
    with pytest.raises(ValueError, match="bound pairs"):
        build_xxz_sector_hamiltonian(pair, ModelParams(1.0))


def test_effective_pair_examples():
    geom = ChainGeometry.from_total_sites(9)
    H = build_effective_pair_hamiltonian(geom, ModelParams(-5, 0.05))
    dense = H.dense()
    m = H.basis.left_sites
    np.testing.assert_array_equal(m, np.arange(-4, 4))
    assert dense[0, 1] == pytest.approx(-0.05)
    assert dense[list(m).index(3), list(m).index(3)] == pytest.approx(0.3)
    assert H.is_hermitian(atol=0.0)
    assert np.count_nonzero(np.diag(dense, 2)) == 0


def test_effective_pair_ring_closes():
    H = build_effective_pair_hamiltonian(ChainGeometry.from_total_sites(7, "periodic"), ModelParams(2.0))
    dense = H.dense()
    assert dense[0, -1] == pytest.approx(1 / 8)
    np.testing.assert_allclose(dense.sum(axis=1), 2 / 8)


def test_effective_rejects_zero_delta():
    with pytest.raises(ValueError):
        build_effective_pair_hamiltonian(ChainGeometry.from_total_sites(7), ModelParams(0.0, 0.05))


def test_text_round_trip():
    H = H2(7, -1.5, 0.05)
    buf = io.StringIO()
    H.write_text(buf)
    buf.seek(0)
    back = SectorOperator.read_text(buf)
    np.testing.assert_array_equal(back.dense(), H.dense())
    rows, cols, _ = H.triples()
    keys = list(zip(rows, cols))
    assert keys == sorted(keys)


def test_norm_bounds_spectrum():
    H = H2(9, -5, 0.1)
    assert np.max(np.abs(np.linalg.eigvalsh(H.dense()))) <= H.norm() + 1e-12


@pytest.mark.parametrize("periodic", [False, True])
def test_direct_oracle_agrees_with_kronecker_oracle(periodic):
    from oracles import two_magnon_direct

    B = 0.0 if periodic else 0.05
    np.testing.assert_allclose(two_magnon_direct(7, -1.5, B, periodic),
                               project_two_magnon(full_boson_hamiltonian(7, -1.5, B, periodic), 7), atol=1e-14)
