"""Master equation in the bit-pair-count representation.

For w = 0 and a bit-swap symmetric state, rho[x, y] = sigma[n00, n01, n10, n11].
The generator then acts on a vector of length binomial(q+3, 3):

    dsigma/dt = 2^-q i (R - C)
              + i (delta(d_y0 = 0) - delta(d_x0 = 0)) sigma
              + (gamma/4) [ local decay couplings between neighbouring tuples ]

R and C are the multiplicity-weighted row and column sums of rho.  They
depend on a class only through d_x0 (rows) or d_y0 (columns), so each of the
q + 1 distinct sums is one ``bincount``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fullspace import SearchParams, default_dt
from .indexing import ClassTable, binomial_row, class_table, check_qubits, state_space_size
from .integrate import IntegrationError, Trajectory, integrate

log = logging.getLogger(__name__)

DEFAULT_MAX_NNZ = 50_000_000


@dataclass(frozen=True)
class _Structure:
    """Index tables for one q, shared by sigma_dot and the sparse assembly."""

    table: ClassTable
    row_weight: np.ndarray  # multiplicity of each class in its row sum
    col_weight: np.ndarray
    d_x0: np.ndarray
    d_y0: np.ndarray
    marked: np.ndarray  # delta(d_y0 = 0) - delta(d_x0 = 0)
    # decay: sum_k coef[k] * sigma[target[k]], in units of gamma/4
    decay_coef: np.ndarray = field(repr=False)
    decay_target: np.ndarray = field(repr=False)
    decay_diag: np.ndarray = field(repr=False)


@lru_cache(maxsize=16)
def structure(q: int) -> _Structure:
    t = class_table(q)
    n00, n01, n10, n11 = t.n00, t.n01, t.n10, t.n11
    f = t.flat
    # (prefactor, shifted tuple) for every off-diagonal decay coupling
    couplings = [
        (n00, f(n00 - 1, n01, n10, n11 + 1)),
        (n11, f(n00 + 1, n01, n10, n11 - 1)),
        (2 * n01, f(n00, n01 - 1, n10, n11 + 1)),
        (2 * n01, f(n00 + 1, n01 - 1, n10, n11)),
        (-n01, f(n00, n01 - 1, n10 + 1, n11)),
        (2 * n10, f(n00, n01, n10 - 1, n11 + 1)),
        (2 * n10, f(n00 + 1, n01, n10 - 1, n11)),
        (-n10, f(n00, n01 + 1, n10 - 1, n11)),
    ]
    coef = np.array([c for c, _ in couplings], dtype=float)
    target = np.array([g for _, g in couplings])
    # A shift leaves the valid range exactly when its prefactor count is zero.
    assert np.all((target >= 0) | (coef == 0)), "decay coupling to an invalid tuple"
    target = np.where(target >= 0, target, 0)

    d_x0, d_y0 = t.d_x0, t.d_y0
    row_weight = _binom(d_x0, n11) * _binom(n00 + n01, n00)
    col_weight = _binom(d_y0, n11) * _binom(n00 + n10, n00)
    marked = (d_y0 == 0).astype(float) - (d_x0 == 0).astype(float)
    diag = -(n00 + n11 + 3 * n01 + 3 * n10).astype(float)
    for arr in (row_weight, col_weight, marked, coef, target, diag):
        arr.flags.writeable = False
    return _Structure(t, row_weight, col_weight, d_x0, d_y0, marked, coef, target, diag)


def _binom(n: np.ndarray, k: np.ndarray) -> np.ndarray:
    out = np.empty(len(n))
    for i, (a, b) in enumerate(zip(n.tolist(), k.tolist())):
        out[i] = binomial_row(a)[b]
    return out


def _bincount_complex(idx: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(idx, weights=values.real, minlength=size) + 1j * np.bincount(
        idx, weights=values.imag, minlength=size
    )


def row_column_sums(sigma: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """R[d] and C[d] for d = 0..q (row sums of rows at distance d, columns likewise)."""
    st = structure(q)
    r = _bincount_complex(st.d_x0, st.row_weight * sigma, q + 1)
    c = _bincount_complex(st.d_y0, st.col_weight * sigma, q + 1)
    return r, c


def search_term(sigma: np.ndarray, q: int) -> np.ndarray:
    """Contribution of the |s><s| part of the Hamiltonian."""
    st = structure(q)
    r, c = row_column_sums(sigma, q)
    return 1j * 2.0**-q * (r[st.d_x0] - c[st.d_y0])


def marked_term(sigma: np.ndarray, q: int) -> np.ndarray:
    """Contribution of the |0><0| part of the Hamiltonian."""
    return 1j * structure(q).marked * sigma


def decay_term(sigma: np.ndarray, q: int) -> np.ndarray:
    """Decay couplings without the gamma/4 prefactor."""
    st = structure(q)
    return st.decay_diag * sigma + np.sum(st.decay_coef * sigma[st.decay_target], axis=0)


def sigma_dot(sigma: np.ndarray, params: SearchParams) -> np.ndarray:
    """Time derivative of the reduced density matrix (matrix-free)."""
    q = params.q
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (state_space_size(q),):
        raise ValueError(f"sigma must have length {state_space_size(q)} for q={q}")
    out = search_term(sigma, q) + marked_term(sigma, q)
    if params.gamma:
        out += 0.25 * params.gamma * decay_term(sigma, q)
    return out


def initial_uniform(q: int) -> np.ndarray:
    """Reduced form of |s><s|: every class equals 2^-q."""
    check_qubits(q)
    return np.full(state_space_size(q), 2.0**-q, dtype=complex)


def weighted_trace(sigma: np.ndarray, q: int) -> complex:
    """Tr rho = sum_d binomial(q, d) sigma[q - d, 0, 0, d]."""
    return complex(np.dot(binomial_row(q), np.asarray(sigma)[class_table(q).diagonal_indices()]))


def invariant_defects(sigma: np.ndarray, q: int) -> dict[str, float]:
    """Deviations from unit trace, the conjugate-swap image, and real non-negative populations."""
    t = class_table(q)
    sigma = np.asarray(sigma)
    diag = sigma[t.diagonal_indices()]
    return {
        "trace": abs(weighted_trace(sigma, q) - 1.0),
        "hermiticity": float(np.max(np.abs(sigma - sigma[t.swapped_indices()].conj()))),
        "diagonal_imag": float(np.max(np.abs(diag.imag))),
        "negative_population": float(max(0.0, -np.min(diag.real))),
    }


def estimate_nnz(q: int) -> int:
    """Upper bound on the structural non-zeros of the assembled Liouvillian."""
    # classes sharing one d_x0 (or d_y0): (d + 1)(q - d + 1)
    block = sum(((d + 1) * (q - d + 1)) ** 2 for d in range(q + 1))
    return 2 * block + 9 * state_space_size(q)


def augmented_nnz(q: int) -> int:
    """Upper bound on the non-zeros of :func:`augmented_system`."""
    m = state_space_size(q)
    return 13 * m + 2 * (q + 1) + q + 1


def assemble_liouvillian(params: SearchParams, max_nnz: int = DEFAULT_MAX_NNZ) -> sp.csr_matrix:
    """Sparse L with L @ sigma == sigma_dot(sigma, params)."""
    q = check_qubits(params.q)
    nnz = estimate_nnz(q)
    if nnz > max_nnz:
        raise MemoryError(f"Liouvillian for q={q} needs ~{nnz} non-zeros (cap {max_nnz})")
    st = structure(q)
    m = st.table.size
    rows, cols, vals = [], [], []

    pref = 1j * 2.0**-q
    for dist, weight, sign in ((st.d_x0, st.row_weight, 1.0), (st.d_y0, st.col_weight, -1.0)):
        order = np.argsort(dist, kind="stable")
        bounds = np.searchsorted(dist[order], np.arange(q + 2))
        for d in range(q + 1):
            members = order[bounds[d] : bounds[d + 1]]
            rows.append(np.repeat(members, len(members)))
            cols.append(np.tile(members, len(members)))
            vals.append(np.tile(sign * pref * weight[members], len(members)))

    idx = np.arange(m)
    diag = 1j * st.marked + 0.25 * params.gamma * st.decay_diag
    rows.append(idx)
    cols.append(idx)
    vals.append(diag.astype(complex))
    if params.gamma:
        for coef, target in zip(st.decay_coef, st.decay_target):
            keep = coef != 0
            rows.append(idx[keep])
            cols.append(target[keep])
            vals.append((0.25 * params.gamma * coef[keep]).astype(complex))

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    )
    return mat.tocsr()


class SolverError(RuntimeError):
    """The steady-state system could not be solved to the required residual."""


@dataclass
class SteadyState:
    q: int
    gamma: float
    sigma: np.ndarray
    condition_estimate: float
    replaced_row_residual: float
    method: str


REPLACED_ROW = 0  # rank of (q, 0, 0, 0)
RESIDUAL_TOL = 1e-8
DENSE_FALLBACK_MAX = 4000


def trace_row(q: int) -> np.ndarray:
    row = np.zeros(state_space_size(q), dtype=complex)
    row[class_table(q).diagonal_indices()] = binomial_row(q)
    return row


def augmented_system(params: SearchParams) -> sp.csc_matrix:
    """Sparse system for the steady state with the row/column sums as extra unknowns.

    Unknowns are sigma (M entries) followed by r[d] = 2^-q R[d] and
    c[d] = 2^-q C[d], d = 0..q.  Each sigma row couples to one r and one c
    instead of to O(q^2) sigma entries, which keeps the LU fill-in down.  The
    first row is the unit-trace condition.
    """
    q = check_qubits(params.q)
    st = structure(q)
    m = st.table.size
    idx = np.arange(m)
    aux = np.arange(m, m + 2 * (q + 1))
    scale = 2.0**-q
    rows = [idx, idx, idx, st.d_x0 + m, st.d_y0 + m + q + 1, aux]
    cols = [idx, st.d_x0 + m, st.d_y0 + m + q + 1, idx, idx, aux]
    vals = [
        1j * st.marked + 0.25 * params.gamma * st.decay_diag,
        np.full(m, 1j),
        np.full(m, -1j),
        -scale * st.row_weight,
        -scale * st.col_weight,
        np.ones(len(aux)),
    ]
    if params.gamma:
        for coef, target in zip(st.decay_coef, st.decay_target):
            keep = coef != 0
            rows.append(idx[keep])
            cols.append(target[keep])
            vals.append(0.25 * params.gamma * coef[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate([np.asarray(v, dtype=complex) for v in vals])
    drop = rows == REPLACED_ROW
    tr = trace_row(q)
    nz = np.flatnonzero(tr)
    rows = np.concatenate([rows[~drop], np.full(len(nz), REPLACED_ROW)])
    cols = np.concatenate([cols[~drop], nz])
    vals = np.concatenate([vals[~drop], tr[nz]])
    n = m + 2 * (q + 1)
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


def direct_system(params: SearchParams, max_nnz: int = DEFAULT_MAX_NNZ) -> sp.csc_matrix:
    """The assembled Liouvillian with its (q,0,0,0) row replaced by the trace row."""
    a = assemble_liouvillian(params, max_nnz=max_nnz).tolil()
    a[REPLACED_ROW, :] = trace_row(params.q)
    return a.tocsc()


def _condition_1norm(a: sp.csc_matrix, lu) -> float:
    n = a.shape[0]
    if n <= 200:
        return float(np.real(np.linalg.cond(a.toarray(), 1)))
    inv = spla.LinearOperator(
        (n, n), matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="H"), dtype=complex
    )
    return float(spla.onenormest(a) * spla.onenormest(inv))


def replaced_row_residual(sigma: np.ndarray, params: SearchParams) -> float:
    """|(L sigma)| at (q,0,0,0), the equation swapped out for the trace condition."""
    return float(abs(sigma_dot(sigma, params)[REPLACED_ROW]))


def _lstsq_fallback(params: SearchParams, max_nnz: int) -> tuple[np.ndarray, float]:
    q = params.q
    lv = assemble_liouvillian(params, max_nnz=max_nnz)
    rhs = np.zeros(lv.shape[0] + 1, dtype=complex)
    rhs[-1] = 1.0
    if lv.shape[0] <= DENSE_FALLBACK_MAX:
        dense = np.vstack([lv.toarray(), trace_row(q)])
        sigma, _, _, sv = scipy.linalg.lstsq(dense, rhs)
        return sigma, float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    stacked = sp.vstack([lv, sp.csr_matrix(trace_row(q))]).tocsr()
    res = spla.lsqr(stacked, rhs, atol=1e-14, btol=1e-14, iter_lim=100_000)
    return res[0], float(res[6])


def steady_state(
    params: SearchParams,
    method: str = "augmented",
    max_nnz: int = DEFAULT_MAX_NNZ,
) -> SteadyState:
    """Solve sigma_dot = 0 with the (q,0,0,0) equation replaced by Tr rho = 1.

    ``method`` selects the sparse LU formulation: ``"augmented"`` (row and
    column sums as auxiliary unknowns) or ``"direct"`` (the assembled
    Liouvillian).  If LU fails or leaves a residual above 1e-8 in the
    replaced equation, a minimum-norm least-squares solve is tried.
    """
    if params.gamma <= 0:
        raise ValueError("the steady state is unique only for gamma > 0")
    q = check_qubits(params.q)
    m = state_space_size(q)
    if method == "augmented":
        if augmented_nnz(q) > max_nnz:
            raise MemoryError(f"steady-state system for q={q} exceeds the non-zero cap {max_nnz}")
        a = augmented_system(params)
    elif method == "direct":
        a = direct_system(params, max_nnz=max_nnz)
    else:
        raise ValueError(f"unknown solve method {method!r}")
    b = np.zeros(a.shape[0], dtype=complex)
    b[REPLACED_ROW] = 1.0

    sigma, cond, residual = None, math.inf, math.inf
    try:
        lu = spla.splu(a, permc_spec="COLAMD")
        sigma = lu.solve(b)[:m]
        cond = _condition_1norm(a, lu)
        residual = replaced_row_residual(sigma, params) if np.all(np.isfinite(sigma)) else math.inf
    except RuntimeError as exc:
        log.warning("sparse LU failed for q=%d gamma=%g: %s", q, params.gamma, exc)
    if residual <= RESIDUAL_TOL:
        return SteadyState(q, params.gamma, sigma, cond, residual, f"lu-{method}")

    log.warning(
        "LU solve unusable for q=%d gamma=%g (residual %.3g, condition estimate %.3g); "
        "falling back to least squares",
        q, params.gamma, residual, cond,
    )
    sigma, cond = _lstsq_fallback(params, max_nnz)
    residual = replaced_row_residual(sigma, params)
    if not residual <= RESIDUAL_TOL:
        raise SolverError(
            f"steady state for q={q} gamma={params.gamma:g} failed: residual {residual:.3g}, "
            f"condition estimate {cond:.3g}"
        )
    return SteadyState(q, params.gamma, sigma, cond, residual, "lstsq")


def _reduced_invariant_check(q: int, tol: float):
    rows = trace_row(q)
    t = class_table(q)
    swapped = t.swapped_indices()

    def check(sigma, time):
        tr = abs(np.dot(rows, sigma) - 1.0)
        herm = np.max(np.abs(sigma - sigma[swapped].conj()))
        if not (tr <= tol and herm <= tol):  # also catches NaN
            raise IntegrationError(
                f"reduced invariants violated at t={time:.6g}: |tr-1|={tr:.3e}, "
                f"conjugate-swap defect={herm:.3e}"
            )

    return check


def evolve_reduced(
    sigma0: np.ndarray,
    params: SearchParams,
    t_max: float,
    dt: float | None = None,
    sample_every: int = 1,
    keep_states: bool = False,
    tol: float = 1e-8,
    matrix_free: bool = False,
) -> Trajectory:
    """RK4 trajectory of the reduced equation, sampling sigma at (q,0,0,0).

    By default the assembled Liouvillian is used for the products; pass
    ``matrix_free=True`` to call :func:`sigma_dot` directly.
    """
    q = check_qubits(params.q)
    sigma0 = np.asarray(sigma0, dtype=complex)
    defects = invariant_defects(sigma0, q)
    if defects["trace"] > tol or defects["hermiticity"] > tol:
        raise ValueError(f"initial sigma violates the reduced invariants: {defects}")
    if matrix_free:
        rhs = lambda s: sigma_dot(s, params)  # noqa: E731
    else:
        lv = assemble_liouvillian(params)
        rhs = lv.dot
    return integrate(
        rhs,
        sigma0,
        t_max,
        dt if dt is not None else default_dt(q, params.gamma),
        observe=lambda s: float(s[0].real),
        check=_reduced_invariant_check(q, tol),
        sample_every=sample_every,
        keep_states=keep_states,
    )
