"""Quantum search with spontaneously decaying qubits.

The decay of every qubit toward H|0> preserves bit-swap symmetry of the
search problem, so the steady state of the 2^q-dimensional master equation
is fixed by (q+1)(q+2)(q+3)/6 numbers labelled by bit-pair counts.  This
package solves that reduced problem up to q = 36 and cross-checks it
against a dense full-space model for small q.
"""

from .analysis import (
    HammingDistribution,
    amplification,
    hamming_distribution,
    heuristic_inverse_q_fit,
    majority_bound,
    majority_exact,
    population_of_solution,
    required_repetitions,
    two_level_projection,
)
from .fullspace import SearchParams, evolve_full, master_rhs_full
from .indexing import (
    MAX_QUBITS,
    PairCounts,
    binomial,
    class_table,
    distances,
    pair_counts,
    rank,
    state_space_size,
    unrank,
)
from .integrate import IntegrationError, Trajectory
from .reduced import SolverError, SteadyState, evolve_reduced, initial_uniform, sigma_dot, steady_state

__all__ = [
    "HammingDistribution",
    "IntegrationError",
    "MAX_QUBITS",
    "PairCounts",
    "SearchParams",
    "SolverError",
    "SteadyState",
    "Trajectory",
    "amplification",
    "binomial",
    "class_table",
    "distances",
    "evolve_full",
    "evolve_reduced",
    "hamming_distribution",
    "heuristic_inverse_q_fit",
    "initial_uniform",
    "majority_bound",
    "majority_exact",
    "master_rhs_full",
    "pair_counts",
    "population_of_solution",
    "rank",
    "required_repetitions",
    "sigma_dot",
    "state_space_size",
    "steady_state",
    "two_level_projection",
    "unrank",
]
