"""Sector Hamiltonians of the XXZ chain in a gradient field.

Two energy conventions are supported for the full model:

``"boson"``
    The hard-core boson form ``sum_l (J/2)(a+_l a_{l+1} + h.c.) + Delta n_l n_{l+1} + B l n_l``.
    This is the default and the one used for all dynamics.
``"spin"``
    The spin Hamiltonian ``sum_l (J/2)(S+_l S-_{l+1} + h.c.) + Delta Sz_l Sz_{l+1} + B l Sz_l``
    restricted to the sector, minus the energy of the all-down state. It differs
    from the boson form by ``-Delta`` per magnon plus ``+Delta/2`` for a magnon on
    an open-chain end site.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .basis import ChainGeometry, Sector, SectorBasis, enumerate_basis

HOPPING = 0.5  # J/2 with J = 1
CONVENTIONS = ("boson", "spin")


@dataclass(frozen=True)
class ModelParams:
    """Couplings in units of the exchange energy ``J = 1``."""

    delta: float
    B: float = 0.0
    J: float = 1.0

    def __post_init__(self):
        if self.J != 1.0:
            raise ValueError("J is the unit of energy and must equal 1")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "B", float(self.B))

    @property
    def bloch_period(self) -> float:
        if self.B == 0:
            raise ValueError("the Bloch period is undefined for B = 0")
        return 2 * np.pi / abs(self.B)


@dataclass(frozen=True, eq=False)
class SectorOperator:
    """Real symmetric sparse operator on a sector basis."""

    basis: SectorBasis
    matrix: sp.csr_matrix = field(repr=False)
    params: ModelParams | None = None
    label: str = ""

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        n = self.basis.dimension
        if m.shape != (n, n):
            raise ValueError(f"operator shape {m.shape} does not match basis dimension {n}")
        m.sum_duplicates()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def is_hermitian(self, atol: float = 0.0) -> bool:
        diff = self.matrix - self.matrix.conj().T
        return diff.nnz == 0 or float(abs(diff).max()) <= atol

    def norm(self) -> float:
        """Induced 1-norm, an upper bound of the spectral norm."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(abs(self.matrix).sum(axis=0).max())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        if other.basis is not self.basis:
            raise ValueError("operators live on different bases")
        return SectorOperator(self.basis, self.matrix + other.matrix, self.params, self.label)

    def __matmul__(self, vec):
        return self.matrix @ vec

    def triples(self):
        """``(row, col, value)`` entries in row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def write_text(self, fh: TextIO) -> None:
        """Debug dump: one JSON header line, then ``row col value`` lines."""
        geom = self.basis.geometry
        header = {
            "dimension": self.dimension,
            "sector": self.basis.sector.value,
            "total_sites": geom.total_sites,
            "boundary": geom.boundary.value,
            "label": self.label,
            "params": None if self.params is None else {"Delta": self.params.delta, "B": self.params.B},
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for r, c, v in zip(*self.triples()):
            fh.write(f"{r} {c} {float(np.real(v))!r}\n")

    @classmethod
    def read_text(cls, fh: TextIO) -> "SectorOperator":
        header = json.loads(fh.readline())
        geom = ChainGeometry.from_total_sites(header["total_sites"], header["boundary"])
        basis = enumerate_basis(geom, header["sector"])
        rows, cols, vals = [], [], []
        for line in fh:
            if not line.strip():
                continue
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
        n = header["dimension"]
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        p = header["params"]
        params = None if p is None else ModelParams(p["Delta"], p["B"])
        return cls(basis, mat, params, header.get("label", ""))


def _check_full_model(basis: SectorBasis, params: ModelParams, convention: str) -> None:
    if basis.sector is Sector.BOUND_PAIR:
        raise ValueError("the full model is built on one- or two-magnon bases; "
                         "use build_effective_pair_hamiltonian for bound pairs")
    if basis.geometry.periodic and params.B != 0:
        raise ValueError("a linear gradient field is incompatible with a periodic chain")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def _hopping_matrix(basis: SectorBasis) -> sp.csr_matrix:
    geom = basis.geometry
    neighbours = [[] for _ in range(geom.total_sites)]
    for a, b in geom.bonds():
        neighbours[a].append(b)
        neighbours[b].append(a)
    rows, cols = [], []
    for i, cfg in enumerate(basis.configs):
        occupied = set(int(x) for x in cfg)
        for pos, site in enumerate(cfg):
            for nb in neighbours[site]:
                if nb in occupied:
                    continue
                new = list(int(x) for x in cfg)
                new[pos] = nb
                j = basis._lookup[tuple(sorted(new))]
                rows.append(i)
                cols.append(j)
    n = basis.dimension
    return sp.csr_matrix((np.full(len(rows), HOPPING), (rows, cols)), shape=(n, n))


def _interaction_diagonal(basis: SectorBasis, params: ModelParams, convention: str) -> np.ndarray:
    geom = basis.geometry
    cfg = basis.configs
    diag = params.B * (cfg - geom.half_length).sum(axis=1).astype(float)
    if cfg.shape[1] == 2:
        adjacent = np.array([geom.adjacent(a, b) for a, b in cfg], dtype=float)
        diag += params.delta * adjacent
    if convention == "spin":
        coordination = np.zeros(geom.total_sites)
        for a, b in geom.bonds():
            coordination[a] += 1
            coordination[b] += 1
        diag -= 0.5 * params.delta * coordination[cfg].sum(axis=1)
    return diag


def split_hamiltonian(basis: SectorBasis, params: ModelParams, convention: str = "boson"):
    """Return ``(H_hop, H_int)``: the exchange part and the interaction-plus-field part."""
    _check_full_model(basis, params, convention)
    hop = SectorOperator(basis, _hopping_matrix(basis), params, "hopping")
    diag = _interaction_diagonal(basis, params, convention)
    interaction = SectorOperator(basis, sp.diags(diag, format="csr"), params, "interaction+field")
    return hop, interaction


def build_xxz_sector_hamiltonian(basis: SectorBasis, params: ModelParams,
                                 convention: str = "boson") -> SectorOperator:
    """XXZ + gradient-field Hamiltonian restricted to a one- or two-magnon sector.

    Energies are measured from the all-down state. Raises ``ValueError`` for the
    bound-pair sector and for ``B != 0`` on a periodic chain.
    """
    hop, interaction = split_hamiltonian(basis, params, convention)
    return SectorOperator(basis, hop.matrix + interaction.matrix, params, f"xxz[{convention}]")


def build_effective_pair_hamiltonian(geometry: ChainGeometry, params: ModelParams) -> SectorOperator:
    """Second-order effective Hamiltonian for a tightly bound magnon pair.

    Pair ``m`` occupies sites ``(m, m + 1)``; it hops to ``m +/- 1`` with amplitude
    ``1/(4 Delta)`` and has on-site energy ``2 B m``. The constant ``Delta`` offset
    is dropped. On an open chain ``m`` runs over ``-L ... L - 1``.
    """
    if params.delta == 0:
        raise ValueError("the effective pair model needs Delta != 0")
    if geometry.periodic and params.B != 0:
        raise ValueError("a linear gradient field is incompatible with a periodic chain")
    basis = enumerate_basis(geometry, Sector.BOUND_PAIR)
    m = basis.left_sites
    n = basis.dimension
    hop = 1.0 / (4.0 * params.delta)
    index = {int(v): i for i, v in enumerate(m)}
    rows, cols, vals = list(range(n)), list(range(n)), list(2.0 * params.B * m)
    for i, site in enumerate(m):
        nxt = int(site) + 1
        if geometry.periodic and nxt > geometry.half_length:
            nxt = -geometry.half_length
        j = index.get(nxt)
        if j is None or j == i:
            continue
        rows += [i, j]
        cols += [j, i]
        vals += [hop, hop]
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return SectorOperator(basis, mat, params, "effective-pair")
