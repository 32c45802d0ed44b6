"""Hitting times of continuous-time quantum walks under Poisson-timed measurement."""

from .errors import ContractViolation, GraphParseError, NumericalContractError
from .graph_model import (
    FIXTURES,
    Graph,
    complement,
    complement_witness,
    connected_components,
    hamiltonian,
    parse_edge_list,
)
from .hitting import (
    DarkSubspace,
    HittingReport,
    dark_subspace,
    detect_infinite,
    fit_asymptotics,
    hitting_matrices,
    hitting_time,
    lambda_sweep,
    pencil_eigenvalues,
    pure_density,
)
from .oracles import TrajectoryStats, master_equation_estimate, mc_estimate, weak_limit_check
from .spectral import Spectrum, eigendecompose, evolve
from .superop import MeasurementSetup, build_L, build_N, devectorize, vectorize

__version__ = "0.1.0"
