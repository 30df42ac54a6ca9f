"""Observables of sector states.

Every function accepts a :class:`~magnon_bloch.basis.SectorState` or a
:class:`~magnon_bloch.propagator.Trajectory`; for a trajectory the result gains
a leading time axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Sector

# correlation matrices are accumulated over this many samples at a time
_CHUNK = 64


def _probabilities(state) -> np.ndarray:
    return np.abs(np.asarray(state.amplitudes)) ** 2


def _require_pairs(state) -> None:
    if state.basis.sector is Sector.ONE_MAGNON:
        raise ValueError("pair observables need a two-magnon or bound-pair basis")


def spin_distribution(state) -> np.ndarray:
    """``<S^z_l>`` for every site, ordered by physical label ``-L ... L``."""
    return _probabilities(state) @ state.basis.occupation - 0.5


def longitudinal_correlation(state) -> np.ndarray:
    """``C[l', l''] = <S^z_l' S^z_l''>`` from the diagonal expectation over configurations."""
    _require_pairs(state)
    spins = state.basis.occupation - 0.5
    p = _probabilities(state)
    n = spins.shape[1]
    if p.ndim == 1:
        out = (spins.T * p) @ spins
    else:
        out = np.empty((p.shape[0], n, n))
        for start in range(0, p.shape[0], _CHUNK):
            block = p[start:start + _CHUNK]
            weighted = block[:, :, None] * spins[None, :, :]
            out[start:start + _CHUNK] = np.einsum("tcl,cm->tlm", weighted, spins, optimize=True)
    # (S^z)^2 = 1/4 identically; pin the diagonal and the symmetry against rounding
    out = 0.5 * (out + np.swapaxes(out, -1, -2))
    idx = np.arange(n)
    out[..., idx, idx] = 0.25
    return out


def two_magnon_correlation(state) -> np.ndarray:
    """``Gamma[l', l'']``: probability of magnons at both sites; zero diagonal, symmetric."""
    _require_pairs(state)
    basis = state.basis
    n = basis.geometry.total_sites
    p = _probabilities(state)
    a, b = basis.configs[:, 0], basis.configs[:, 1]
    gamma = np.zeros(p.shape[:-1] + (n, n))
    gamma[..., a, b] = p
    gamma[..., b, a] = p
    return gamma


def con7_correlation(gamma: np.ndarray, sz: np.ndarray) -> np.ndarray:
    """Right-hand side ``Gamma - Sz'/2 - Sz''/2 - 1/4`` of the C/Gamma identity, diagonal set to 1/4."""
    c = gamma - 0.5 * sz[..., :, None] - 0.5 * sz[..., None, :] - 0.25
    idx = np.arange(sz.shape[-1])
    c[..., idx, idx] = 0.25
    return c


def fidelity(state_t, state_0) -> np.ndarray | float:
    """Return probability ``|<psi(0)|psi(t)>|^2``."""
    a0 = np.asarray(state_0.amplitudes)
    at = np.asarray(state_t.amplitudes)
    if at.shape[-1] != a0.shape[-1]:
        raise ValueError(f"dimension mismatch: {at.shape[-1]} vs {a0.shape[-1]}")
    overlap = at @ a0.conj()
    f = np.abs(overlap) ** 2
    return float(f) if np.ndim(f) == 0 else f


@dataclass(frozen=True)
class DeviationSample:
    centroid: np.ndarray | float
    deviation: np.ndarray | float
    exponent: float


def generalized_deviation(distribution: np.ndarray, sites: np.ndarray, x: float = 0.5) -> DeviationSample:
    """Centroid ``l_c`` and spread ``D^x = sqrt(sum_l w_l |l - l_c|^x)`` with ``w_l = <S^z_l> + 1/2``.

    The weights are not normalized by the magnon number. ``distribution`` may
    carry a leading time axis.
    """
    if not x > 0:
        raise ValueError(f"exponent x must be positive, got {x}")
    w = np.asarray(distribution, dtype=float) + 0.5
    total = w.sum(axis=-1)
    if np.any(total <= 0):
        raise ValueError("spin distribution carries no excitation weight")
    sites = np.asarray(sites, dtype=float)
    lc = (w @ sites) / total
    spread = np.abs(sites - np.asarray(lc)[..., None]) ** x
    dx = np.sqrt((w * spread).sum(axis=-1))
    if np.ndim(lc) == 0:
        return DeviationSample(float(lc), float(dx), x)
    return DeviationSample(lc, dx, x)


def weight_outside(distribution: np.ndarray, sites: np.ndarray, radius) -> np.ndarray:
    """Excitation weight ``sum (S^z_l + 1/2)`` on sites with ``|l| > radius``.

    ``radius`` may be a scalar or one value per time sample.
    """
    w = np.asarray(distribution) + 0.5
    outside = np.abs(np.asarray(sites))[None, :] > np.atleast_1d(radius)[:, None]
    res = (np.atleast_2d(w) * outside).sum(axis=-1)
    return res if w.ndim > 1 else res[0]
