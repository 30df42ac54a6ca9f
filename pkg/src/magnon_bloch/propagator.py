"""Time evolution of sector states under time-independent sector Hamiltonians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.linalg as sla

from .basis import SectorBasis, SectorState
from .hamiltonian import SectorOperator

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k * t_max / (num_samples - 1)``, ``k = 0 ... num_samples - 1``."""

    t_max: float
    num_samples: int

    def __post_init__(self):
        if self.num_samples < 2:
            raise ValueError(f"a time grid needs at least 2 samples, got {self.num_samples}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @classmethod
    def bloch_periods(cls, B: float, periods: float, samples_per_period: int) -> "TimeGrid":
        """Grid spanning ``periods`` Bloch periods ``2 pi / |B|``, endpoint included."""
        if B == 0:
            raise ValueError("time in Bloch periods needs B != 0")
        n_steps = int(round(periods * samples_per_period))
        if n_steps < 1:
            raise ValueError("the time grid has zero length")
        return cls(periods * 2 * np.pi / abs(B), n_steps + 1)

    @property
    def dt(self) -> float:
        return self.t_max / (self.num_samples - 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_samples) * self.dt


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States sampled on a time grid; ``amplitudes`` has shape ``(num_samples, dim)``.

    Indexing yields :class:`SectorState` objects.
    """

    basis: SectorBasis
    times: np.ndarray
    amplitudes: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.times.shape[0]

    def __getitem__(self, k: int) -> SectorState:
        return SectorState(self.basis, self.amplitudes[k])

    def __iter__(self) -> Iterator[SectorState]:
        for k in range(len(self)):
            yield self[k]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.amplitudes, axis=1)


class KrylovConvergenceError(RuntimeError):
    def __init__(self, step: int, time: float, error: float, max_dim: int):
        self.step, self.time, self.error, self.max_dim = step, time, error, max_dim
        super().__init__(
            f"Krylov step {step} (t = {time:.6g}) did not converge within {max_dim} "
            f"Lanczos vectors (error estimate {error:.3e})"
        )


def diagonalize(H: SectorOperator) -> EigenDecomposition:
    """Full eigendecomposition, ascending eigenvalues.

    Real symmetric input is solved in real arithmetic.
    """
    if not H.is_hermitian():
        raise ValueError("diagonalize requires a Hermitian operator")
    dense = H.dense()
    if np.iscomplexobj(dense) and not np.any(dense.imag):
        dense = dense.real
    log.debug("dense eigensolve of dimension %d", dense.shape[0])
    evals, evecs = sla.eigh(dense, driver="evd", overwrite_a=True, check_finite=False)
    return EigenDecomposition(evals, evecs)


def _initial_vector(state: SectorState, dim: int) -> np.ndarray:
    psi0 = np.asarray(state.amplitudes, dtype=complex)
    if psi0.shape != (dim,):
        raise ValueError(f"state dimension {psi0.shape[0]} does not match operator dimension {dim}")
    return psi0


def evolve_spectral(state: SectorState, eig: EigenDecomposition, grid: TimeGrid) -> Trajectory:
    """``psi(t) = V exp(-i E t) V^dagger psi(0)`` at every grid time."""
    psi0 = _initial_vector(state, eig.dimension)
    V = eig.eigenvectors
    coeff = V.conj().T @ psi0
    times = grid.times
    phased = np.exp(-1j * np.outer(times, eig.eigenvalues)) * coeff
    if np.isrealobj(V):
        # one contiguous real product instead of strided .real/.imag views
        n_t = times.shape[0]
        stacked = np.concatenate([phased.real, phased.imag]) @ V.T
        amps = stacked[:n_t] + 1j * stacked[n_t:]
    else:
        amps = phased @ V.T
    amps[0] = psi0
    return Trajectory(state.basis, times, amps)


def _lanczos_expm(matvec, v: np.ndarray, tau: float, tol: float, max_dim: int):
    """Approximate ``exp(-i tau H) v`` in a Lanczos space grown until the error estimate < ``tol``.

    Returns ``(result, krylov_dim, error_estimate)``; ``result`` is None on failure.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return np.zeros_like(v), 0, 0.0
    n = v.shape[0]
    max_dim = min(max_dim, n)
    Q = np.empty((max_dim + 1, n), dtype=complex)
    Q[0] = v / beta0
    alpha = np.empty(max_dim)
    beta = np.empty(max_dim)
    err = np.inf
    for j in range(max_dim):
        w = matvec(Q[j])
        alpha[j] = np.vdot(Q[j], w).real
        # full reorthogonalization keeps the basis orthonormal to rounding
        w = w - Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
        w = w - Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        m = j + 1
        if m == 1:
            theta, S = alpha[:1].copy(), np.ones((1, 1))
        else:
            theta, S = sla.eigh_tridiagonal(alpha[:m], beta[: m - 1])
        y = S @ (np.exp(-1j * tau * theta) * S[0])
        # residual of the projected problem drives the a posteriori estimate
        err = beta0 * beta[j] * abs(y[-1])
        if err < tol or beta[j] <= 1e-14 * max(1.0, abs(alpha[j])):
            return beta0 * (Q[:m].T @ y), m, err
        Q[m] = w / beta[j]
    return None, max_dim, err


def evolve_krylov(state: SectorState, H: SectorOperator, grid: TimeGrid,
                  tol: float = 1e-9, max_dim: int = 60) -> Trajectory:
    """Lanczos propagation from grid point to grid point.

    ``tol`` bounds the accumulated error over the whole grid: each of the
    ``num_samples - 1`` steps is held to ``tol / (num_samples - 1)``. Raises
    :class:`KrylovConvergenceError` if a step needs more than ``max_dim``
    Lanczos vectors.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    psi = _initial_vector(state, H.dimension)
    mat = H.matrix
    matvec = mat.dot
    n_steps = grid.num_samples - 1
    step_tol = tol / n_steps
    times = grid.times
    amps = np.empty((grid.num_samples, H.dimension), dtype=complex)
    amps[0] = psi
    dims = []
    for k in range(n_steps):
        nxt, m, err = _lanczos_expm(matvec, psi, grid.dt, step_tol, max_dim)
        if nxt is None:
            raise KrylovConvergenceError(k + 1, times[k + 1], err, max_dim)
        dims.append(m)
        psi = nxt
        amps[k + 1] = psi
    if dims:
        log.debug("Krylov dimensions: min %d, max %d", min(dims), max(dims))
    return Trajectory(state.basis, times, amps)


def evolve(state: SectorState, H: SectorOperator, grid: TimeGrid, method: str = "spectral",
           tol: float = 1e-9, eig: EigenDecomposition | None = None) -> Trajectory:
    if method == "spectral":
        return evolve_spectral(state, eig if eig is not None else diagonalize(H), grid)
    if method == "krylov":
        return evolve_krylov(state, H, grid, tol)
    raise ValueError(f"unknown propagator {method!r}")
