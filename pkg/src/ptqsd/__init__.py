"""Simulation and analysis of PT-symmetric state discrimination for qubit pairs."""

from .pt_core import (
    Eigensystem,
    ExceptionalPointError,
    PTParams,
    Regime,
    eigensystem,
    hamiltonian_diss,
    hamiltonian_pt,
    make_pt_params,
    propagator_diss,
    propagator_pt,
)
from .states import StatePair, bloch, candidate_pair, evolve, populations, y_population_protocol
from .geometry import Bounds, ConicKind, ConicLocus, bounds, conic_params, locus_residual
from .orthogonality import OrthResult, OrthStatus, RegionMap, SolverOpts, orth_time, overlap_angle, region_map
from .brachistochrone import BrachResult, BrachOpts, brach_curve, optimal_a
from .lindblad import LindbladModel, build_ca40_model, compare_two_level, effective_gamma, integrate, lind_populations

__version__ = "0.1.0"
