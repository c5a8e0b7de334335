"""Cross-checks of the reduced engine against the dense full-space model."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .fullspace import (
    DIRECT_SOLVE_MAX_QUBITS,
    ORACLE_MAX_QUBITS,
    SearchParams,
    evolve_full,
    lift_reduced_to_full,
    master_rhs_full,
    permute_qubits,
    propagate_full,
    project_full_to_reduced,
    shift_conjugate,
    symmetrize,
    uniform_state,
)
from .reduced import evolve_reduced, initial_uniform, invariant_defects, sigma_dot, steady_state

DEFAULT_SEED = 20070101

ReducedRHS = Callable[[np.ndarray, SearchParams], np.ndarray]


@dataclass
class Check:
    name: str
    passed: bool
    metric: float
    tolerance: float
    detail: dict = field(default_factory=dict)


def random_density_matrix(q: int, rng: np.random.Generator, pure: bool = False) -> np.ndarray:
    n = 1 << q
    k = 1 if pure else n
    a = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_symmetric_state(q: int, rng: np.random.Generator) -> np.ndarray:
    """Bit-swap symmetric (about w = 0) Hermitian unit-trace matrix."""
    return symmetrize(random_density_matrix(q, rng))


def check_oracle_equivalence(
    q_values,
    rng: np.random.Generator,
    samples: int = 100,
    tol: float = 1e-10,
    reduced_rhs: ReducedRHS = sigma_dot,
) -> Check:
    worst = 0.0
    for q in q_values:
        for _ in range(samples):
            rho = random_symmetric_state(q, rng)
            params = SearchParams(q, float(rng.uniform(0.0, 2.0)))
            projected, _ = project_full_to_reduced(master_rhs_full(rho, params))
            sigma, _ = project_full_to_reduced(rho)
            worst = max(worst, float(np.max(np.abs(projected - reduced_rhs(sigma, params)))))
    return Check("oracle_equivalence", worst <= tol, worst, tol, {"q": list(q_values), "samples": samples})


def check_shift_equivariance(q_values, rng: np.random.Generator, samples: int = 5, tol: float = 1e-12) -> Check:
    worst = 0.0
    for q in q_values:
        for _ in range(samples):
            w = int(rng.integers(1 << q))
            rho = random_density_matrix(q, rng)
            gamma = float(rng.uniform(0.0, 2.0))
            lhs = master_rhs_full(shift_conjugate(rho, w), SearchParams(q, gamma, 0))
            rhs = shift_conjugate(master_rhs_full(rho, SearchParams(q, gamma, w)), w)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return Check("shift_equivariance", worst <= tol, worst, tol, {"q": list(q_values)})


def check_permutation_symmetry(q_values, rng: np.random.Generator, samples: int = 5, tol: float = 1e-12) -> Check:
    worst = 0.0
    for q in q_values:
        for _ in range(samples):
            perm = rng.permutation(q)
            rho = random_density_matrix(q, rng)
            params = SearchParams(q, float(rng.uniform(0.0, 2.0)))
            lhs = master_rhs_full(permute_qubits(rho, perm, q), params)
            rhs = permute_qubits(master_rhs_full(rho, params), perm, q)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return Check("permutation_symmetry", worst <= tol, worst, tol, {"q": list(q_values)})


def check_symmetry_emergence(
    q: int, rng: np.random.Generator, gamma: float = 0.25, tol: float = 1e-6, step: float = 0.5
) -> Check:
    """A random pure state acquires bit-swap symmetry as it reaches the steady state.

    The trajectory is propagated exactly with the matrix exponential of the
    dense Liouvillian, so q is limited to the direct-solve range.
    """
    params = SearchParams(q, gamma)
    target = lift_reduced_to_full(steady_state(params).sigma, q)
    n_steps = math.ceil(40.0 / gamma / step)
    states = propagate_full(random_density_matrix(q, rng, pure=True), params, step, n_steps)
    times = step * np.arange(n_steps + 1)
    residual = np.array([project_full_to_reduced(s)[1] for s in states])
    distance = np.max(np.abs(states - target), axis=(1, 2))
    t_sym = float(times[np.argmax(residual < tol)]) if residual[-1] < tol else math.inf
    t_ss = float(times[np.argmax(distance < tol)]) if distance[-1] < tol else math.inf
    ratio = t_sym / t_ss if math.isfinite(t_ss) and t_ss > 0 else math.inf
    passed = residual[-1] < tol and distance[-1] < tol and 0.5 <= ratio <= 2.0
    return Check(
        "symmetry_emergence",
        bool(passed),
        float(residual[-1]),
        tol,
        {"q": q, "gamma": gamma, "t_symmetric": t_sym, "t_steady": t_ss, "time_ratio": ratio},
    )


def check_trajectory_invariants(q: int, gamma: float = 0.03, t_max: float | None = None, tol: float = 1e-10) -> Check:
    """RK4 runs of both engines from |s> keep trace and Hermiticity and agree.

    The default horizon is two search periods, 2 pi 2^(q/2).
    """
    if t_max is None:
        t_max = 2.0 * math.pi * 2.0 ** (q / 2)
    params = SearchParams(q, gamma)
    full = evolve_full(uniform_state(q), params, t_max, sample_every=20, keep_states=True)
    worst_trace = max(abs(np.trace(s) - 1.0) for s in full.states)
    worst_herm = max(float(np.max(np.abs(s - s.conj().T))) for s in full.states)
    red = evolve_reduced(initial_uniform(q), params, t_max, sample_every=20, keep_states=True)
    worst_red = max(max(invariant_defects(s, q)[k] for k in ("trace", "hermiticity")) for s in red.states)
    gap = float(np.max(np.abs(full.solution_population - red.solution_population)))
    metric = float(max(worst_trace, worst_herm, worst_red))
    return Check(
        "trajectory_invariants",
        metric <= tol and gap <= 1e-8,
        metric,
        tol,
        {"q": q, "full_vs_reduced_max_gap": gap},
    )


def run_suite(q_max: int = 6, seed: int = DEFAULT_SEED, samples: int = 100) -> dict:
    if not 2 <= q_max <= ORACLE_MAX_QUBITS:
        raise ValueError(f"q_max must lie in [2, {ORACLE_MAX_QUBITS}]")
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    small = list(range(2, min(q_max, 5) + 1))
    checks = [
        check_oracle_equivalence(range(2, q_max + 1), rng, samples=samples),
        check_shift_equivariance(small, rng),
        check_permutation_symmetry(small, rng),
        check_symmetry_emergence(min(q_max, DIRECT_SOLVE_MAX_QUBITS), rng),
        check_trajectory_invariants(min(q_max, 6)),
    ]
    return {
        "seed": seed,
        "q_max": q_max,
        "passed": all(c.passed for c in checks),
        "wall_time_seconds": time.perf_counter() - start,
        "checks": [asdict(c) for c in checks],
    }
