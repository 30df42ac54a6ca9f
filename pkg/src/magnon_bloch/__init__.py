"""Exact two-magnon dynamics of a spin-1/2 XXZ chain in a gradient magnetic field.

The package builds the one- and two-magnon sectors (and an effective model for
tightly bound magnon pairs), propagates states exactly, evaluates spin
observables, resolves the field-free two-magnon spectrum by quasi-momentum and
extracts oscillation frequencies from time series.
"""

from .analysis import (FrequencySpectrum, GradientEstimate, Peak, PeakSet, SymmetryReport, dft_spectrum,
                       dynamical_symmetry_check, estimate_gradient, find_peaks, parseval_power)
from .basis import (Boundary, ChainGeometry, MagnonPair, Sector, SectorBasis, SectorState, enumerate_basis,
                    make_initial_state)
from .config import ConfigError, RunConfig, load_config, parse_config
from .hamiltonian import (ModelParams, SectorOperator, build_effective_pair_hamiltonian,
                          build_xxz_sector_hamiltonian, split_hamiltonian)
from .observables import (DeviationSample, con7_correlation, fidelity, generalized_deviation,
                          longitudinal_correlation, spin_distribution, two_magnon_correlation, weight_outside)
from .propagator import (EigenDecomposition, KrylovConvergenceError, TimeGrid, Trajectory, diagonalize, evolve,
                         evolve_krylov, evolve_spectral)
from .spectrum import (SpectrumResult, band_gaps, classify_bound, continuum_edge, momentum_basis, overlaps,
                       relative_coordinate_check, relative_coordinate_spectrum, translation_operator,
                       two_magnon_spectrum)
from .workflows import Simulation, simulate

__version__ = "0.1.0"
