"""Dense reference model in the full 2^q-dimensional Hilbert space.

This is the brute-force oracle for the reduced engine.  Qubit i is bit i of a
basis-state label (qubit 0 is the least significant bit).  The master
equation is

    drho/dt = i[rho, H_w] + (gamma/2) sum_i (2 c_i rho c_i^+ - c_i^+ c_i rho - rho c_i^+ c_i)

with H_w = |w><w| + |s><s| and c_i the Hadamard-rotated lowering operator on
qubit i, so every qubit relaxes toward (|0> + |1>)/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .indexing import class_table, check_qubits
from .integrate import IntegrationError, Trajectory, integrate

ORACLE_MAX_QUBITS = 8
DIRECT_SOLVE_MAX_QUBITS = 4

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
LOWERING = np.array([[0.0, 1.0], [0.0, 0.0]])
# H d- H = (1/2) [[1, -1], [1, -1]]
DECAY_OP = HADAMARD @ LOWERING @ HADAMARD


@dataclass(frozen=True)
class SearchParams:
    q: int
    gamma: float
    w: int = 0

    def __post_init__(self):
        check_qubits(self.q)
        if self.gamma < 0:
            raise ValueError("decay rate must be non-negative")
        if not 0 <= self.w < 1 << self.q:
            raise ValueError(f"marked item w={self.w} is not a {self.q}-bit string")

    @property
    def dim(self) -> int:
        return 1 << self.q

    @property
    def scaled_gamma(self) -> float:
        return 2.0 ** (self.q / 2) * self.gamma


def _oracle_qubits(q: int) -> int:
    return check_qubits(q, ORACLE_MAX_QUBITS)


def uniform_vector(q: int) -> np.ndarray:
    n = 1 << q
    return np.full(n, 1.0 / math.sqrt(n), dtype=complex)


def uniform_state(q: int) -> np.ndarray:
    """|s><s| as a dense density matrix."""
    s = uniform_vector(q)
    return np.outer(s, s.conj())


def basis_state(x: int, q: int) -> np.ndarray:
    rho = np.zeros((1 << q, 1 << q), dtype=complex)
    rho[x, x] = 1.0
    return rho


def build_hamiltonian(params: SearchParams) -> np.ndarray:
    q = _oracle_qubits(params.q)
    h = np.full((1 << q, 1 << q), 2.0**-q, dtype=complex)
    h[params.w, params.w] += 1.0
    return h


def _embed(op: np.ndarray, i: int, q: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(1 << (q - 1 - i)), op), np.eye(1 << i))


def build_collapse_ops(q: int) -> list[np.ndarray]:
    """Dense c_i for i = 0..q-1; c_i acts on bit i of the basis label."""
    q = _oracle_qubits(q)
    return [_embed(DECAY_OP, i, q).astype(complex) for i in range(q)]


def _apply_rows(op: np.ndarray, t: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, t, axes=([1], [axis])), 0, axis)


def dissipator(rho: np.ndarray, q: int) -> np.ndarray:
    """sum_i (2 c_i rho c_i^+ - c_i^+ c_i rho - rho c_i^+ c_i), without the gamma/2.

    Uses c = (1/2)(|0> + |1>)(<0| - <1|) directly on a reshaped view instead of
    dense operator products.
    """
    n = 1 << q
    out = np.zeros((n, n), dtype=complex)
    for i in range(q):
        a, b = 1 << (q - 1 - i), 1 << i
        t = rho.reshape(a, 2, b, a, 2, b)
        o = out.reshape(a, 2, b, a, 2, b)
        half_dr = 0.5 * (t[:, 0] - t[:, 1])  # (c^+ c rho) on the bit-0 rows
        half_dc = 0.5 * (t[:, :, :, :, 0] - t[:, :, :, :, 1])
        # 2 c rho c^+ = (1/2) (<0|-<1|) rho (|0>-|1>) on every bit combination
        o += (half_dr[:, :, :, 0] - half_dr[:, :, :, 1])[:, None, :, :, None, :]
        o[:, 0] -= half_dr
        o[:, 1] += half_dr
        o[:, :, :, :, 0] -= half_dc
        o[:, :, :, :, 1] += half_dc
    return out


def _commutator_term(rho: np.ndarray, q: int, w: int) -> np.ndarray:
    # i [rho, H_w] with H_w = |w><w| + |s><s|, kept rank-2.
    s = uniform_vector(q)
    rho_h = np.outer(rho @ s, s.conj())
    h_rho = np.outer(s, s.conj() @ rho)
    rho_h[:, w] += rho[:, w]
    h_rho[w, :] += rho[w, :]
    return 1j * (rho_h - h_rho)


def master_rhs_full(rho: np.ndarray, params: SearchParams) -> np.ndarray:
    q = _oracle_qubits(params.q)
    out = _commutator_term(rho, q, params.w)
    if params.gamma:
        out += 0.5 * params.gamma * dissipator(rho, q)
    return out


def default_dt(q: int, gamma: float) -> float:
    dt = min(0.1, math.pi * 2.0 ** (q / 2) / 200.0)
    if gamma > 0:
        dt = min(dt, 0.05 / gamma)
    return dt


def _full_invariant_check(tol: float):
    def check(rho, t):
        tr = np.trace(rho)
        herm = np.max(np.abs(rho - rho.conj().T))
        if not (abs(tr - 1.0) <= tol and herm <= tol):  # also catches NaN
            raise IntegrationError(
                f"full-space invariants violated at t={t:.6g}: "
                f"|tr-1|={abs(tr - 1.0):.3e}, hermiticity defect={herm:.3e}"
            )

    return check


def evolve_full(
    rho0: np.ndarray,
    params: SearchParams,
    t_max: float,
    dt: float | None = None,
    sample_every: int = 1,
    keep_states: bool = False,
    tol: float = 1e-9,
) -> Trajectory:
    """RK4 trajectory of the full master equation, sampling rho_ww."""
    q = _oracle_qubits(params.q)
    if rho0.shape != (1 << q, 1 << q):
        raise ValueError("initial state has the wrong dimension")
    w = params.w
    return integrate(
        lambda r: master_rhs_full(r, params),
        rho0,
        t_max,
        dt if dt is not None else default_dt(q, params.gamma),
        observe=lambda r: float(r[w, w].real),
        check=_full_invariant_check(tol),
        sample_every=sample_every,
        keep_states=keep_states,
    )


def grover_operator(params: SearchParams) -> np.ndarray:
    """G_w = (2|s><s| - I)(I - 2|w><w|)."""
    q = _oracle_qubits(params.q)
    n = 1 << q
    diffusion = 2.0 * uniform_state(q) - np.eye(n)
    oracle = np.eye(n, dtype=complex)
    oracle[params.w, params.w] = -1.0
    return diffusion @ oracle


def decay_channel(rho: np.ndarray, q: int, gamma: float, tau: float) -> np.ndarray:
    """Exact solution of the decay-only master equation over an interval tau.

    The single-qubit dissipators commute, so the evolution is a product of
    amplitude-damping channels written in the Hadamard basis.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0 or gamma == 0:
        return rho.copy()
    keep = math.exp(-gamma * tau)
    k0 = HADAMARD @ np.diag([1.0, math.sqrt(keep)]) @ HADAMARD
    k1 = HADAMARD @ (math.sqrt(1.0 - keep) * LOWERING) @ HADAMARD
    n = 1 << q
    t = rho.reshape((2,) * (2 * q))
    for i in range(q):
        row, col = q - 1 - i, 2 * q - 1 - i
        t = sum(_apply_rows(k.conj(), _apply_rows(k, t, row), col) for k in (k0, k1))
    return t.reshape(n, n)


def grover_iterate_with_decay(rho: np.ndarray, params: SearchParams, tau: float) -> np.ndarray:
    """One search iteration G_w rho G_w^+ followed by decay for a time tau."""
    q = _oracle_qubits(params.q)
    g = grover_operator(params)
    return decay_channel(g @ rho @ g.conj().T, q, params.gamma, tau)


def grover_sequence(rho0: np.ndarray, params: SearchParams, tau: float, iterations: int) -> np.ndarray:
    """rho_ww after 0, 1, ..., iterations steps of :func:`grover_iterate_with_decay`."""
    out = [rho0[params.w, params.w].real]
    rho = rho0
    for _ in range(iterations):
        rho = grover_iterate_with_decay(rho, params, tau)
        out.append(rho[params.w, params.w].real)
    return np.array(out)


def _xor_permutation(w: int, n: int) -> np.ndarray:
    return np.arange(n) ^ w


def shift_conjugate(m: np.ndarray, w: int) -> np.ndarray:
    """S_w m S_w^+ where S_w|x> = |x XOR w>."""
    perm = _xor_permutation(w, m.shape[0])
    return m[np.ix_(perm, perm)]


def permute_qubits(m: np.ndarray, perm: list[int] | np.ndarray, q: int) -> np.ndarray:
    """P m P^+ for the qubit permutation that moves bit i to bit perm[i]."""
    x = np.arange(1 << q)
    target = np.zeros_like(x)
    for i, j in enumerate(perm):
        target |= ((x >> i) & 1) << j
    p = np.zeros((1 << q, 1 << q))
    p[target, x] = 1.0
    return p @ m @ p.T


@lru_cache(maxsize=None)
def _class_of_pairs(q: int) -> np.ndarray:
    """(2^q, 2^q) array of flat reduced indices of every (x, y)."""
    x = np.arange(1 << q)[:, None]
    y = np.arange(1 << q)[None, :]
    mask = (1 << q) - 1
    pc = np.vectorize(lambda v: bin(int(v)).count("1"), otypes=[np.int64])
    n11 = pc(x & y)
    n10 = pc(x & (~y & mask))
    n01 = pc((~x & mask) & y)
    n00 = q - n01 - n10 - n11
    out = class_table(q).flat(n00, n01, n10, n11)
    out.flags.writeable = False
    return out


def project_full_to_reduced(rho: np.ndarray, w: int = 0) -> tuple[np.ndarray, float]:
    """Class-averaged sigma of S_w rho S_w^+, and the largest within-class deviation."""
    q = _oracle_qubits(int(round(math.log2(rho.shape[0]))))
    shifted = shift_conjugate(rho, w) if w else rho
    cls = _class_of_pairs(q).ravel()
    m = class_table(q).size
    counts = np.bincount(cls, minlength=m)
    flat = shifted.ravel()
    sigma = np.bincount(cls, weights=flat.real, minlength=m) + 1j * np.bincount(
        cls, weights=flat.imag, minlength=m
    )
    sigma /= counts
    residual = float(np.max(np.abs(flat - sigma[cls]))) if flat.size else 0.0
    return sigma, residual


def lift_reduced_to_full(sigma: np.ndarray, q: int, w: int = 0) -> np.ndarray:
    """Dense rho with rho[x, y] = sigma[class(x XOR w, y XOR w)]."""
    q = _oracle_qubits(q)
    rho = np.asarray(sigma)[_class_of_pairs(q)].astype(complex)
    return shift_conjugate(rho, w) if w else rho


def symmetrize(rho: np.ndarray, w: int = 0) -> np.ndarray:
    """Average over simultaneous qubit permutations (about the marked item w)."""
    q = int(round(math.log2(rho.shape[0])))
    sigma, _ = project_full_to_reduced(rho, w)
    return lift_reduced_to_full(sigma, q, w)


def liouvillian_full(params: SearchParams) -> np.ndarray:
    """Dense 4^q superoperator acting on row-major vec(rho); only for q <= 4."""
    q = check_qubits(params.q, DIRECT_SOLVE_MAX_QUBITS)
    n = 1 << q
    cols = []
    for k in range(n * n):
        e = np.zeros(n * n, dtype=complex)
        e[k] = 1.0
        cols.append(master_rhs_full(e.reshape(n, n), params).ravel())
    return np.array(cols).T


def propagate_full(rho0: np.ndarray, params: SearchParams, step: float, n_steps: int) -> np.ndarray:
    """Exact states at t = 0, step, ..., n_steps*step via the matrix exponential (q <= 4)."""
    n = 1 << check_qubits(params.q, DIRECT_SOLVE_MAX_QUBITS)
    if rho0.shape != (n, n):
        raise ValueError("initial state has the wrong dimension")
    prop = scipy.linalg.expm(step * liouvillian_full(params))
    out = np.empty((n_steps + 1, n * n), dtype=complex)
    out[0] = rho0.ravel()
    for k in range(n_steps):
        out[k + 1] = prop @ out[k]
    return out.reshape(n_steps + 1, n, n)


def steady_state_full(params: SearchParams) -> np.ndarray:
    """Unit-trace null vector of the full Liouvillian (q <= 4, gamma > 0)."""
    if params.gamma <= 0:
        raise ValueError("steady state is unique only for gamma > 0")
    n = 1 << params.q
    lv = liouvillian_full(params)
    trace_row = np.eye(n).ravel().astype(complex)
    a = np.vstack([lv, trace_row])
    b = np.zeros(n * n + 1, dtype=complex)
    b[-1] = 1.0
    vec, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = vec.reshape(n, n)
    return 0.5 * (rho + rho.conj().T)
