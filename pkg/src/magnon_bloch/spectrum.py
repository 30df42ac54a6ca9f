"""Momentum-resolved two-magnon spectrum of the field-free periodic chain.

On a ring of odd length ``L_t`` no two-magnon configuration is invariant under
a non-trivial translation, so the ``L_t (L_t - 1) / 2`` configurations split
into ``L`` translation orbits of length ``L_t``, represented by ``(0, r)`` with
``r = 1 ... L`` (offsets). Each quasi-momentum ``K = 2 pi alpha / L_t`` block is
therefore ``L``-dimensional.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .basis import ChainGeometry, Sector, SectorBasis, SectorState, enumerate_basis
from .hamiltonian import ModelParams, build_xxz_sector_hamiltonian


def translation_operator(basis: SectorBasis) -> sp.csr_matrix:
    """Permutation matrix of the shift ``l -> l + 1`` (periodic) on a sector basis."""
    if not basis.geometry.periodic:
        raise ValueError("translations need a periodic chain")
    n = basis.geometry.total_sites
    shifted = np.sort((basis.configs + 1) % n, axis=1)
    target = np.array([basis._lookup[tuple(int(x) for x in row)] for row in shifted])
    dim = basis.dimension
    return sp.csr_matrix((np.ones(dim), (target, np.arange(dim))), shape=(dim, dim))


@lru_cache(maxsize=8)
def _orbit_rows(basis: SectorBasis) -> np.ndarray:
    """Basis index of ``T^j |(0, r)>``, shape ``(L, L_t)``; row ``r - 1``, column ``j``."""
    n, L = basis.geometry.total_sites, basis.geometry.half_length
    j = np.arange(n)
    rows = np.empty((L, n), dtype=np.int64)
    for r in range(1, L + 1):
        pairs = np.sort(np.column_stack([j % n, (j + r) % n]), axis=1)
        rows[r - 1] = [basis._lookup[(int(a), int(b))] for a, b in pairs]
    return rows


def momentum_basis(basis: SectorBasis, alpha: int) -> sp.csr_matrix:
    """Columns ``|K, r> = L_t^{-1/2} sum_j exp(i K j) T^j |(0, r)>``, ``K = 2 pi alpha / L_t``.

    Each column is an eigenvector of the translation ``T`` with eigenvalue ``exp(-i K)``.
    """
    if basis.sector is not Sector.TWO_MAGNON:
        raise ValueError("momentum blocks are built for the two-magnon sector")
    if not basis.geometry.periodic:
        raise ValueError("momentum blocks need a periodic chain")
    n, L = basis.geometry.total_sites, basis.geometry.half_length
    K = 2 * np.pi * alpha / n
    rows = _orbit_rows(basis)
    phase = np.exp(1j * K * np.arange(n)) / np.sqrt(n)
    cols = np.repeat(np.arange(L), n)
    vals = np.tile(phase, L)
    return sp.csr_matrix((vals, (rows.ravel(), cols)), shape=(basis.dimension, L))


def continuum_edge(K) -> np.ndarray:
    """Half-width ``2 |cos(K/2)|`` of the free two-magnon continuum at momentum ``K``."""
    return 2 * np.abs(np.cos(np.asarray(K) / 2))


def classify_bound(energy, K, tol: float) -> np.ndarray:
    """True where ``energy`` lies outside ``[-2|cos K/2|, 2|cos K/2|]`` by more than ``tol``."""
    edge = continuum_edge(K)
    return np.abs(np.asarray(energy)) > edge + tol


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenpairs of all momentum blocks, ordered by ``alpha`` then ascending ``E``.

    Eigenvectors are kept block-wise (``L x L`` per momentum) and expanded to
    the two-magnon basis on request by :meth:`eigenvector`.
    """

    basis: SectorBasis
    delta: float
    alpha: np.ndarray
    K: np.ndarray
    energies: np.ndarray
    bound: np.ndarray
    block_vectors: dict = field(repr=False)
    overlaps: np.ndarray | None = None
    bound_tol: float = 0.0

    def __len__(self) -> int:
        return self.energies.shape[0]

    @property
    def alphas(self) -> np.ndarray:
        return np.unique(self.alpha)

    def _block_position(self, index: int) -> tuple[int, int]:
        a = int(self.alpha[index])
        first = int(np.searchsorted(self.alpha, a))
        return a, index - first

    def eigenvector(self, index: int) -> np.ndarray:
        a, k = self._block_position(index)
        return momentum_basis(self.basis, a) @ self.block_vectors[a][:, k]

    def eigenvectors_of(self, alpha: int) -> np.ndarray:
        """All eigenvectors of one momentum block as columns in the two-magnon basis."""
        return (momentum_basis(self.basis, alpha) @ self.block_vectors[alpha])

    def block(self, alpha: int) -> np.ndarray:
        return np.flatnonzero(self.alpha == alpha)

    @property
    def bound_fraction(self) -> float:
        if self.overlaps is None:
            raise ValueError("overlaps have not been computed")
        return float(self.overlaps[self.bound].sum())

    def reclassify(self, tol: float) -> "SpectrumResult":
        return replace(self, bound=classify_bound(self.energies, self.K, tol), bound_tol=tol)

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "K", "E", "bound_flag", "P"])
        P = self.overlaps if self.overlaps is not None else np.full(len(self), np.nan)
        for a, k, e, b, p in zip(self.alpha, self.K, self.energies, self.bound, P):
            writer.writerow([int(a), repr(float(k)), repr(float(e)), int(b), repr(float(p))])


def two_magnon_spectrum(geometry: ChainGeometry, delta: float, bound_tol: float | None = None) -> SpectrumResult:
    """Diagonalize the field-free periodic two-magnon Hamiltonian block by block in ``K``.

    ``bound_tol`` defaults to the finite-size margin ``5 / L_t``.
    """
    if not geometry.periodic:
        raise ValueError("the momentum-resolved spectrum needs a periodic chain")
    basis = enumerate_basis(geometry, Sector.TWO_MAGNON)
    H = build_xxz_sector_hamiltonian(basis, ModelParams(delta, 0.0)).matrix
    n, L = geometry.total_sites, geometry.half_length
    if bound_tol is None:
        bound_tol = 5.0 / n
    alphas, Ks, energies, vectors = [], [], [], {}
    for a in range(-L, L + 1):
        U = momentum_basis(basis, a)
        HK = (U.conj().T @ (H @ U)).toarray()
        HK = 0.5 * (HK + HK.conj().T)
        e, w = np.linalg.eigh(HK)
        vectors[a] = w
        alphas.append(np.full(L, a))
        Ks.append(np.full(L, 2 * np.pi * a / n))
        energies.append(e)
    alpha = np.concatenate(alphas)
    K = np.concatenate(Ks)
    E = np.concatenate(energies)
    return SpectrumResult(basis, float(delta), alpha, K, E, classify_bound(E, K, bound_tol),
                          vectors, None, bound_tol)


def overlaps(result: SpectrumResult, initial: SectorState) -> SpectrumResult:
    """Attach ``P = |<psi_{K,r}|psi(0)>|^2`` for every eigenstate."""
    psi = np.asarray(initial.amplitudes)
    if psi.shape[0] != result.basis.dimension:
        raise ValueError(f"state dimension {psi.shape[0]} does not match basis {result.basis.dimension}")
    P = np.empty(len(result))
    for a in result.alphas:
        proj = momentum_basis(result.basis, int(a)).conj().T @ psi
        P[result.block(a)] = np.abs(result.block_vectors[int(a)].conj().T @ proj) ** 2
    return replace(result, overlaps=P)


def relative_coordinate_spectrum(alpha: int, delta: float, total_sites: int) -> np.ndarray:
    """Eigenvalues of the relative-coordinate equation at ``K = 2 pi alpha / L_t``.

    ``E phi(r) = cos(K/2) (phi(r-1) + phi(r+1)) + Delta delta_{r,+-1} phi(r)`` with
    ``phi(0) = 0`` and the twisted condition ``phi(L_t - r) = exp(i K L_t / 2) phi(r)``,
    reduced to ``r = 1 ... L``.
    """
    L = (total_sites - 1) // 2
    K = 2 * np.pi * alpha / total_sites
    c = np.cos(K / 2)
    twist = (-1.0) ** alpha  # exp(i K L_t / 2)
    M = np.diag(np.full(L - 1, c), 1) + np.diag(np.full(L - 1, c), -1)
    M[0, 0] += delta
    M[L - 1, L - 1] += twist * c
    return np.linalg.eigvalsh(M)


@dataclass(frozen=True)
class RelativeCheck:
    residual: float
    phi0: float
    symmetry_residual: float


def relative_coordinate_check(result: SpectrumResult, index: int) -> RelativeCheck:
    """Residuals of one eigenvector against the relative-coordinate equation.

    ``phi(r) = exp(-i K r / 2) Psi(0, r)`` for ``r = 1 ... L_t - 1``. ``phi0`` is the
    value of ``phi(0)`` implied by the equation at ``r = 1``, which the hard-core
    constraint forces to zero.
    """
    basis = result.basis
    n = basis.geometry.total_sites
    K = float(result.K[index])
    E = float(result.energies[index])
    psi = result.eigenvector(index)
    r = np.arange(1, n)
    idx = np.array([basis._lookup[(0, int(x))] for x in r])
    phi = np.exp(-1j * K * r / 2) * psi[idx]
    phi = phi / np.linalg.norm(phi)
    padded = np.concatenate([[0.0], phi, [0.0]])
    c = np.cos(K / 2)
    lhs = E * phi
    rhs = c * (padded[:-2] + padded[2:])
    rhs[0] += result.delta * phi[0]
    rhs[-1] += result.delta * phi[-1]
    residual = float(np.max(np.abs(lhs - rhs)))
    phi0 = abs((E - result.delta) * phi[0] / c - phi[1])
    twist = np.exp(1j * K * n / 2)
    sym = float(np.max(np.abs(phi[::-1] - twist * phi)))
    return RelativeCheck(residual, float(phi0), sym)


def band_gaps(result: SpectrumResult) -> np.ndarray:
    """Per-``K`` distance from the flagged bound states to the interval spanned by the scattering states.

    Negative where a bound state falls inside that interval; ``nan`` for momenta
    without bound or without scattering states. Ordered by ``alpha``.
    """
    gaps = []
    for a in result.alphas:
        idx = result.block(a)
        E, flag = result.energies[idx], result.bound[idx]
        if not flag.any() or flag.all():
            gaps.append(np.nan)
            continue
        lo, hi = E[~flag].min(), E[~flag].max()
        eb = E[flag]
        gaps.append(float(np.min(np.maximum(lo - eb, eb - hi))))
    return np.array(gaps)
