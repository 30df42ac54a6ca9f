import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magnon_bloch.basis import ChainGeometry, SectorState, enumerate_basis, make_initial_state
from magnon_bloch.hamiltonian import ModelParams, SectorOperator, build_xxz_sector_hamiltonian
from magnon_bloch.observables import fidelity
from magnon_bloch.propagator import (KrylovConvergenceError, TimeGrid, diagonalize, evolve, evolve_krylov,
                                     evolve_spectral)
import scipy.sparse as sp


def setup(n=21, delta=-1.5, B=0.1, positions=(-1, 0), sector="two-magnon"):
    basis = enumerate_basis(ChainGeometry.from_total_sites(n), sector)
    H = build_xxz_sector_hamiltonian(basis, ModelParams(delta, B))
    return H, make_initial_state(basis, positions)


def test_time_grid():
    grid = TimeGrid.bloch_periods(0.05, 4, 256)
    assert grid.num_samples == 1025
    assert grid.t_max == pytest.approx(4 * 2 * np.pi / 0.05)
    assert np.all(np.diff(grid.times) > 0)
    np.testing.assert_allclose(np.diff(grid.times), grid.dt, rtol=1e-12)
    assert grid.times[0] == 0


@pytest.mark.parametrize("args", [(0.0, 1, 256), (0.05, 0, 256), (0.05, 1, 0)])
def test_time_grid_rejects(args):
    with pytest.raises(ValueError):
        TimeGrid.bloch_periods(*args)


def test_one_magnon_three_sites():
    H, _ = setup(3, 0.7, 0.0, positions=(0,), sector="one-magnon")
    np.testing.assert_allclose(diagonalize(H).eigenvalues, [-np.sqrt(2) / 2, 0, np.sqrt(2) / 2], atol=1e-14)


def test_two_magnon_three_sites_characteristic_polynomial():
    H, _ = setup(3, -5.0, 0.0)
    # det(E - H) = (E + 5) (E^2 + 5E - 1/2), expanded by hand
    coeffs = np.polymul([1, 5], [1, 5, -0.5])
    expected = np.sort(np.roots(coeffs).real)
    np.testing.assert_allclose(diagonalize(H).eigenvalues, expected, atol=1e-13)
    np.testing.assert_allclose(expected, [-5.0 / 2 - np.sqrt(27) / 2, -5.0, -5.0 / 2 + np.sqrt(27) / 2])


@pytest.mark.parametrize("n,delta,B", [(9, -1.5, 0.05), (15, 5.0, 0.1), (21, 0.0, 0.2)])
def test_decomposition_quality(n, delta, B):
    H, _ = setup(n, delta, B)
    eig = diagonalize(H)
    V, E = eig.eigenvectors, eig.eigenvalues
    resid = np.linalg.norm(H.matrix @ V - V * E, axis=0)
    assert np.max(resid) <= 1e-10 * H.norm()
    np.testing.assert_allclose(V.T @ V, np.eye(H.dimension), atol=1e-10)
    assert E.sum() == pytest.approx(H.diagonal().sum(), abs=1e-10)
    assert np.all(np.diff(E) >= 0)


def test_diagonalize_rejects_non_hermitian():
    basis = enumerate_basis(ChainGeometry.from_total_sites(3), "one-magnon")
    A = SectorOperator(basis, sp.csr_matrix(np.triu(np.ones((3, 3)))))
    with pytest.raises(ValueError, match="Hermitian"):
        diagonalize(A)


def test_spectral_initial_sample_exact():
    H, psi = setup()
    traj = evolve_spectral(psi, diagonalize(H), TimeGrid.bloch_periods(0.1, 1, 64))
    np.testing.assert_array_equal(traj.amplitudes[0], psi.amplitudes)


def test_eigenstate_stays_put():
    H, _ = setup(11)
    eig = diagonalize(H)
    psi = SectorState.normalized(H.basis, eig.eigenvectors[:, 3])
    traj = evolve_spectral(psi, eig, TimeGrid(50.0, 40))
    np.testing.assert_allclose(fidelity(traj, psi), 1.0, atol=1e-12)


@pytest.mark.parametrize("delta", [0.0, -1.5, -5.0])
def test_krylov_matches_spectral(delta):
    H, psi = setup(21, delta, 0.1)
    grid = TimeGrid.bloch_periods(0.1, 1, 128)
    a = evolve_spectral(psi, diagonalize(H), grid).amplitudes
    b = evolve_krylov(psi, H, grid, tol=1e-9).amplitudes
    assert np.max(np.linalg.norm(a - b, axis=1)) <= 1e-8


def test_conservation():
    H, psi = setup(21, -1.5, 0.1)
    grid = TimeGrid.bloch_periods(0.1, 1, 128)
    for method in ("spectral", "krylov"):
        traj = evolve(psi, H, grid, method)
        assert np.max(np.abs(traj.norms - 1)) <= 1e-10
        energy = np.einsum("ti,ti->t", traj.amplitudes.conj(), (H.matrix @ traj.amplitudes.T).T).real
        assert np.max(np.abs(energy - energy[0])) <= 1e-9 * H.norm()


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 30.0), st.floats(0.1, 30.0))
def test_time_composition(t1, t2):
    H, psi = setup(11, -1.5, 0.2)
    eig = diagonalize(H)
    direct = evolve_spectral(psi, eig, TimeGrid(t1 + t2, 2))[1]
    mid = evolve_spectral(psi, eig, TimeGrid(t1, 2))[1]
    mid = SectorState.normalized(H.basis, mid.amplitudes)
    two_step = evolve_spectral(mid, eig, TimeGrid(t2, 2))[1]
    assert np.linalg.norm(direct.amplitudes - two_step.amplitudes) <= 1e-9


def test_zero_hamiltonian_is_static():
    basis = enumerate_basis(ChainGeometry.from_total_sites(7), "two-magnon")
    Z = SectorOperator(basis, sp.csr_matrix((basis.dimension, basis.dimension)))
    psi = make_initial_state(basis, (-1, 0))
    for method in ("spectral", "krylov"):
        traj = evolve(psi, Z, TimeGrid(10.0, 11), method)
        np.testing.assert_allclose(traj.amplitudes, np.tile(psi.amplitudes, (11, 1)), atol=1e-14)


def test_krylov_reports_non_convergence():
    H, psi = setup(31, -1.5, 0.1)
    with pytest.raises(KrylovConvergenceError) as info:
        evolve_krylov(psi, H, TimeGrid(200.0, 3), tol=1e-12, max_dim=4)
    assert info.value.step == 1 and info.value.max_dim == 4


def test_krylov_rejects_bad_tol():
    H, psi = setup(7)
    with pytest.raises(ValueError):
        evolve_krylov(psi, H, TimeGrid(1.0, 3), tol=0)


def test_trajectory_indexing():
    H, psi = setup(9)
    traj = evolve(psi, H, TimeGrid(3.0, 4))
    assert len(traj) == 4
    assert [s.basis for s in traj] == [H.basis] * 4
    with pytest.raises(ValueError):
        evolve(psi, H, TimeGrid(3.0, 4), method="rk4")
