"""Observables of a reduced state and the majority-vote repetition calculus."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .indexing import binomial_row, class_table
from .reduced import row_column_sums, structure

IMAG_TOL = 1e-10
NORM_TOL = 1e-8


@dataclass(frozen=True)
class HammingDistribution:
    """Steady-state population per Hamming distance d = 0..q from the solution."""

    p: np.ndarray
    mean_d: float

    @property
    def q(self) -> int:
        return len(self.p) - 1

    @property
    def bit_error_rate(self) -> float:
        return self.mean_d / self.q


def _q_of(sigma: np.ndarray) -> int:
    m = len(sigma)
    q = 0
    while (q + 1) * (q + 2) * (q + 3) // 6 < m:
        q += 1
    if (q + 1) * (q + 2) * (q + 3) // 6 != m:
        raise ValueError(f"length {m} is not a reduced state size")
    return q


def population_of_solution(sigma: np.ndarray) -> float:
    """rho_00 = sigma at (q, 0, 0, 0)."""
    value = complex(sigma[0])
    if abs(value.imag) > IMAG_TOL:
        raise ValueError(f"solution population has imaginary part {value.imag:.3e}")
    return value.real


def amplification(sigma: np.ndarray) -> float:
    """2^q rho_00, the gain over a fully randomised register."""
    return 2.0 ** _q_of(sigma) * population_of_solution(sigma)


def hamming_distribution(sigma: np.ndarray) -> HammingDistribution:
    q = _q_of(sigma)
    diag = np.asarray(sigma)[class_table(q).diagonal_indices()]
    if np.max(np.abs(diag.imag)) > IMAG_TOL:
        raise ValueError("populations have a non-negligible imaginary part")
    p = binomial_row(q) * diag.real
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"Hamming distribution sums to {total!r}, not 1")
    return HammingDistribution(p, float(np.dot(np.arange(q + 1), p)))


def overlaps_with_uniform(sigma: np.ndarray) -> tuple[complex, complex]:
    """(<s|rho|s>, <0|rho|s>) from multiplicity-weighted class sums."""
    q = _q_of(sigma)
    st = structure(q)
    sigma = np.asarray(sigma)
    # pairs (x, y) in a class: binomial(q, d_x0) rows times row_weight entries each
    multiplicity = binomial_row(q)[st.d_x0] * st.row_weight
    ss = 2.0**-q * complex(np.dot(multiplicity, sigma))
    r, _ = row_column_sums(sigma, q)
    zs = 2.0 ** (-q / 2) * complex(r[0])
    return ss, zs


def two_level_projection(sigma: np.ndarray) -> tuple[float, float]:
    """Populations of |0> and of the |s> ray after projecting onto span{|0>, |s>}.

    The pair is orthonormalised with |0> kept first, e = (|s> - a|0>)/sqrt(1 - a^2)
    where a = <0|s> = 2^(-q/2); the returned values are the diagonal of the
    projected 2x2 matrix in the basis {|0>, e}.
    """
    q = _q_of(sigma)
    a = 2.0 ** (-q / 2)
    zz = population_of_solution(sigma)
    ss, zs = overlaps_with_uniform(sigma)
    ee = (ss - 2.0 * a * zs.real + a * a * zz) / (1.0 - a * a)
    return zz, float(ee.real)


def _check_xi_r(xi: float, r: int) -> None:
    if r < 1 or r % 2 == 0 or int(r) != r:
        raise ValueError(f"R must be an odd positive integer, got {r}")
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must be a probability, got {xi}")


def majority_bound(xi: float, r: int) -> float:
    """Large-R upper bound on the per-bit error after an R-fold majority vote."""
    _check_xi_r(xi, r)
    if xi >= 0.5:
        raise ValueError("the majority-vote bound requires xi < 0.5")
    return (2.0 * math.sqrt(xi - xi * xi)) ** (r + 1) / ((1.0 - 2.0 * xi) * math.sqrt(2.0 * math.pi * r))


LOG_DOMAIN_ABOVE = 60


def majority_exact(xi: float, r: int) -> float:
    """P(at least (R+1)/2 of R independent readouts of a bit are wrong)."""
    _check_xi_r(xi, r)
    k0 = (r + 1) // 2
    if xi in (0.0, 1.0):
        return float(xi)
    if r <= LOG_DOMAIN_ABOVE:
        return sum(math.comb(r, n) * xi**n * (1.0 - xi) ** (r - n) for n in range(k0, r + 1))
    lx, l1x = math.log(xi), math.log1p(-xi)
    terms = np.array(
        [
            math.lgamma(r + 1) - math.lgamma(n + 1) - math.lgamma(r - n + 1) + n * lx + (r - n) * l1x
            for n in range(k0, r + 1)
        ]
    )
    top = terms.max()
    return float(math.exp(top) * np.exp(terms - top).sum())


def required_repetitions(
    q: int,
    xi: float,
    epsilon: float,
    mode: Literal["bound", "exact"] = "bound",
    r_max: int = 100_001,
) -> int:
    """Smallest odd R with q * xi_R < epsilon."""
    table = repetition_table(q, xi, epsilon, mode, r_max)
    return table[-1][0]


def repetition_table(
    q: int,
    xi: float,
    epsilon: float,
    mode: Literal["bound", "exact"] = "bound",
    r_max: int = 100_001,
) -> list[tuple[int, float]]:
    """(R, q * xi_R) for R = 1, 3, ... up to the first R that meets epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 <= xi < 0.5:
        raise ValueError("xi must lie in [0, 0.5)")
    fn = {"bound": majority_bound, "exact": majority_exact}[mode]
    rows = []
    for r in range(1, r_max + 1, 2):
        rows.append((r, q * fn(xi, r)))
        if rows[-1][1] < epsilon:
            return rows
    raise ValueError(f"no odd R <= {r_max} reaches q*xi_R < {epsilon}")


@dataclass(frozen=True)
class InverseQFit:
    slope: float
    intercept: float
    r_squared: float
    q_zero_crossing: float


def heuristic_inverse_q_fit(points: Iterable[tuple[float, float]]) -> InverseQFit:
    """Least-squares line rho_00 = slope / q + intercept, and where it reaches zero."""
    pts = np.array(list(points), dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (q, rho00) points")
    x = 1.0 / pts[:, 0]
    y = pts[:, 1]
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: all points share one q")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    crossing = -slope / intercept if intercept != 0 else math.inf
    return InverseQFit(float(slope), float(intercept), float(r2), float(crossing))
