"""Configuration spaces of the magnon sectors of a spin-1/2 chain.

Sites carry physical labels ``-L ... L``; internally every configuration is
stored as offsets ``0 ... L_t - 1`` (``offset = label + L``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class Sector(str, Enum):
    ONE_MAGNON = "one-magnon"
    TWO_MAGNON = "two-magnon"
    BOUND_PAIR = "bound-pair"


class MagnonPair(NamedTuple):
    """Two flipped spins at physical sites ``l1 < l2``."""

    l1: int
    l2: int


@dataclass(frozen=True)
class ChainGeometry:
    """Chain of ``L_t = 2L + 1`` sites labelled ``-L ... L``.

    Only odd chain lengths exist by construction, so the chain always has a
    centre site at ``l = 0``.
    """

    half_length: int
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if isinstance(self.half_length, bool) or int(self.half_length) != self.half_length:
            raise ValueError(f"half_length must be an integer, got {self.half_length!r}")
        if self.half_length < 1:
            raise ValueError(f"half_length must be >= 1, got {self.half_length}")
        object.__setattr__(self, "half_length", int(self.half_length))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def from_total_sites(cls, total_sites: int, boundary: Boundary | str = Boundary.OPEN):
        if total_sites % 2 == 0:
            raise ValueError(f"total number of sites must be odd, got {total_sites}")
        return cls((total_sites - 1) // 2, Boundary(boundary))

    @property
    def total_sites(self) -> int:
        return 2 * self.half_length + 1

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def sites(self) -> np.ndarray:
        """Physical site labels in ascending order."""
        return np.arange(-self.half_length, self.half_length + 1)

    def offset(self, site: int) -> int:
        if not -self.half_length <= site <= self.half_length:
            raise ValueError(
                f"site {site} outside chain [-{self.half_length}, {self.half_length}]"
            )
        return int(site) + self.half_length

    def label(self, offset: int) -> int:
        return int(offset) - self.half_length

    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour bonds as offset pairs; includes the wrap bond if periodic."""
        n = self.total_sites
        out = [(i, i + 1) for i in range(n - 1)]
        if self.periodic and n > 2:
            out.append((n - 1, 0))
        return out

    def adjacent(self, a: int, b: int) -> bool:
        """Whether offsets ``a`` and ``b`` share a bond."""
        d = abs(a - b)
        return d == 1 or (self.periodic and self.total_sites > 2 and d == self.total_sites - 1)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Ordered configuration list of one magnon sector.

    ``configs`` holds offsets: shape ``(dim, 1)`` for the one-magnon sector and
    ``(dim, 2)`` (ascending within a row) for the pair sectors. Ordering is
    lexicographic on the offsets, which equals lexicographic order on labels.
    """

    geometry: ChainGeometry
    sector: Sector
    configs: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.configs.shape[0]

    @property
    def num_magnons(self) -> int:
        return 1 if self.sector is Sector.ONE_MAGNON else 2

    @cached_property
    def _lookup(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(x) for x in row): i for i, row in enumerate(self.configs)}

    @cached_property
    def occupation(self) -> np.ndarray:
        """0/1 matrix of shape ``(dim, L_t)``: which sites are flipped in each configuration."""
        occ = np.zeros((self.dimension, self.geometry.total_sites))
        rows = np.repeat(np.arange(self.dimension), self.configs.shape[1])
        occ[rows, self.configs.ravel()] = 1.0
        return occ

    def index_of(self, config: MagnonPair | Sequence[int] | int) -> int:
        """Index of a configuration given in physical labels."""
        labels = (config,) if np.isscalar(config) else tuple(config)
        if len(labels) != self.configs.shape[1]:
            raise ValueError(f"{self.sector.value} configurations have {self.configs.shape[1]} sites")
        if len(labels) == 2 and not labels[0] < labels[1]:
            raise ValueError(f"pair sites must satisfy l1 < l2, got {labels}")
        key = tuple(self.geometry.offset(s) for s in labels)
        try:
            return self._lookup[key]
        except KeyError:
            raise ValueError(f"configuration {labels} is not in the {self.sector.value} basis") from None

    def pair_of(self, index: int) -> MagnonPair:
        if self.sector is Sector.ONE_MAGNON:
            raise ValueError("one-magnon configurations are single sites; use site_of")
        a, b = self._row(index)
        return MagnonPair(self.geometry.label(a), self.geometry.label(b))

    def site_of(self, index: int) -> int:
        if self.sector is not Sector.ONE_MAGNON:
            raise ValueError("site_of only applies to the one-magnon sector")
        return self.geometry.label(self._row(index)[0])

    def _row(self, index: int) -> np.ndarray:
        if not 0 <= index < self.dimension:
            raise IndexError(f"index {index} out of range for dimension {self.dimension}")
        return self.configs[index]

    @cached_property
    def left_sites(self) -> np.ndarray:
        """Physical left site ``m`` of each bound pair ``(m, m + 1)``."""
        if self.sector is not Sector.BOUND_PAIR:
            raise ValueError("left_sites only applies to the bound-pair sector")
        left = self.configs[:, 0].copy()
        wrap = self.configs[:, 1] - self.configs[:, 0] > 1
        left[wrap] = self.configs[wrap, 1]
        return left - self.geometry.half_length

    def labels(self) -> np.ndarray:
        """Configurations in physical labels, same shape as ``configs``."""
        return self.configs - self.geometry.half_length


def enumerate_basis(geometry: ChainGeometry, sector: Sector | str) -> SectorBasis:
    """Enumerate the configurations of ``sector`` on ``geometry`` in lexicographic order."""
    sector = Sector(sector)
    n = geometry.total_sites
    if sector is Sector.ONE_MAGNON:
        configs = np.arange(n).reshape(-1, 1)
    elif sector is Sector.TWO_MAGNON:
        a, b = np.triu_indices(n, k=1)
        configs = np.column_stack([a, b])
    else:
        # bound pair ordered by its left site m, occupying (m, m + 1); the
        # periodic wrap pair (L, -L) comes last
        left = np.arange(n - 1)
        configs = np.column_stack([left, left + 1])
        if geometry.periodic:
            configs = np.vstack([configs, [0, n - 1]])
    return SectorBasis(geometry, sector, np.ascontiguousarray(configs, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class SectorState:
    """Normalized complex amplitude vector over a sector basis."""

    basis: SectorBasis
    amplitudes: np.ndarray = field(repr=False)

    NORM_TOL = 1e-12

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({self.basis.dimension},)"
            )
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > self.NORM_TOL:
            raise ValueError(f"state is not normalized: squared norm {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, basis: SectorBasis, amplitudes) -> "SectorState":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(basis, amps / np.linalg.norm(amps))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def make_initial_state(basis: SectorBasis, positions: Iterable[int]) -> SectorState:
    """Product state with spins flipped at ``positions`` (physical labels).

    For the bound-pair sector ``positions`` is the two adjacent sites of the pair.
    """
    positions = [int(p) for p in positions]
    if len(set(positions)) != len(positions):
        raise ValueError(f"duplicate positions {positions}: a site holds at most one magnon")
    if len(positions) != basis.num_magnons:
        raise ValueError(
            f"{basis.sector.value} sector needs {basis.num_magnons} positions, got {len(positions)}"
        )
    config = sorted(positions)
    if basis.sector is Sector.BOUND_PAIR and basis.geometry.periodic:
        lo, hi = config
        if not basis.geometry.adjacent(basis.geometry.offset(lo), basis.geometry.offset(hi)):
            raise ValueError(f"bound-pair positions must be adjacent, got {positions}")
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index_of(config)] = 1.0
    return SectorState(basis, amps)
