"""Parameter sweeps over (q, gamma) and machine-readable table output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from . import analysis
from .fullspace import SearchParams, evolve_full, grover_sequence, uniform_state
from .indexing import MAX_QUBITS
from .reduced import evolve_reduced, initial_uniform, steady_state

GAMMA_SWEEP_QUBITS = (6, 8, 10, 12, 16, 20, 24, 28)
WEAK_DECAY_QUBITS = (6, 12, 18, 24, 30, 36)
WEAK_DECAY_SCALED_GAMMA = 0.005
DEFAULT_GRID = (1e-3, 1e2, 26)


@dataclass
class ResultRow:
    q: int
    gamma: float
    scaled_gamma: float
    rho00: float = math.nan
    amplification: float = math.nan
    mean_d: float = math.nan
    bit_error_rate: float = math.nan
    pop_w_projected: float = math.nan
    pop_s_projected: float = math.nan
    condition_estimate: float = math.nan
    wall_time_seconds: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


RESULT_FIELDS = [f.name for f in fields(ResultRow)]


def scaled_to_gamma(q: int, scaled: float) -> float:
    return scaled * 2.0 ** (-q / 2)


def log_grid(start: float, stop: float, points: int) -> np.ndarray:
    if points < 1:
        raise ValueError("a grid needs at least one point")
    if points > 1 and not start < stop:
        raise ValueError("grid start must be below its end")
    if start <= 0:
        raise ValueError("log grid bounds must be positive")
    return np.logspace(math.log10(start), math.log10(stop), points)


def steady_row(q: int, gamma: float, method: str = "augmented", keep_sigma: bool = False):
    """Solve one steady state and summarise it; failures are captured in ``error``."""
    row = ResultRow(q=q, gamma=gamma, scaled_gamma=2.0 ** (q / 2) * gamma)
    t0 = time.perf_counter()
    sigma = None
    try:
        ss = steady_state(SearchParams(q, gamma), method=method)
        sigma = ss.sigma
        dist = analysis.hamming_distribution(sigma)
        pop_w, pop_s = analysis.two_level_projection(sigma)
        row.rho00 = analysis.population_of_solution(sigma)
        row.amplification = analysis.amplification(sigma)
        row.mean_d = dist.mean_d
        row.bit_error_rate = dist.bit_error_rate
        row.pop_w_projected = pop_w
        row.pop_s_projected = pop_s
        row.condition_estimate = ss.condition_estimate
    except (ValueError, ArithmeticError, MemoryError, RuntimeError) as exc:
        sigma = None
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time_seconds = time.perf_counter() - t0
    return (row, sigma) if keep_sigma else row


def _steady_job(args):
    return steady_row(*args)


def _steady_job_with_sigma(args):
    return steady_row(*args, keep_sigma=True)


def run_points(
    points: Sequence[tuple[int, float]],
    jobs: int | None = None,
    method: str = "augmented",
    keep_sigma: bool = False,
):
    """Steady rows for (q, gamma) points, returned in input order."""
    jobs = jobs or os.cpu_count() or 1
    args = [(q, g, method) for q, g in points]
    fn = _steady_job_with_sigma if keep_sigma else _steady_job
    if jobs == 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args))


def sweep_gamma(
    qubits: Iterable[int] = GAMMA_SWEEP_QUBITS,
    grid: Iterable[float] | None = None,
    scaled: bool = True,
    jobs: int | None = None,
) -> list[ResultRow]:
    """One steady row per (q, gamma); the grid is in units of 2^(q/2) gamma unless ``scaled`` is False."""
    grid = log_grid(*DEFAULT_GRID) if grid is None else np.asarray(list(grid), dtype=float)
    points = [
        (q, scaled_to_gamma(q, g) if scaled else float(g)) for q in qubits for g in grid
    ]
    return run_points(points, jobs=jobs)


def sweep_q(
    qubits: Iterable[int] = WEAK_DECAY_QUBITS,
    scaled_gamma: float = WEAK_DECAY_SCALED_GAMMA,
    jobs: int | None = None,
) -> tuple[list[ResultRow], list[dict]]:
    """Weak-decay rows per q plus the long-format Hamming distribution table."""
    qubits = list(qubits)
    results = run_points(
        [(q, scaled_to_gamma(q, scaled_gamma)) for q in qubits], jobs=jobs, keep_sigma=True
    )
    rows, dist_rows = [], []
    for row, sigma in results:
        rows.append(row)
        if sigma is None:
            continue
        p = analysis.hamming_distribution(sigma).p
        dist_rows.extend(
            {"q": row.q, "gamma": row.gamma, "scaled_gamma": row.scaled_gamma, "d": d, "p": float(v)}
            for d, v in enumerate(p)
        )
    return rows, dist_rows


def evolve_table(
    q: int,
    gamma: float,
    t_max: float,
    dt: float | None = None,
    engine: str = "reduced",
    sample_every: int = 1,
) -> tuple[list[dict], float]:
    """rho_ww(t) from |s>; with engine='both' also the pointwise deviation.

    Returns the table and the maximum full/reduced deviation (0 unless both ran).
    """
    params = SearchParams(q, gamma)
    if engine not in ("full", "reduced", "both"):
        raise ValueError(f"unknown engine {engine!r}")
    out: dict[str, np.ndarray] = {}
    times = None
    if engine in ("full", "both"):
        tr = evolve_full(uniform_state(q), params, t_max, dt, sample_every=sample_every)
        times, out["rho_ww_full"] = tr.times, tr.solution_population
    if engine in ("reduced", "both"):
        tr = evolve_reduced(initial_uniform(q), params, t_max, dt, sample_every=sample_every)
        times, out["rho_ww_reduced"] = tr.times, tr.solution_population
    deviation = 0.0
    if engine == "both":
        dev = np.abs(out["rho_ww_full"] - out["rho_ww_reduced"])
        out["deviation"] = dev
        deviation = float(dev.max())
    if engine != "both":
        out = {"rho_ww": next(iter(out.values()))}
    rows = [
        {"t": float(t), **{k: float(v[i]) for k, v in out.items()}} for i, t in enumerate(times)
    ]
    return rows, deviation


def iterative_table(q: int, gamma: float, tau: float, iterations: int) -> list[dict]:
    """rho_ww after each Grover iteration interleaved with decay intervals of length tau."""
    params = SearchParams(q, gamma)
    seq = grover_sequence(uniform_state(q), params, tau, iterations)
    return [{"iteration": k, "t": k * tau, "rho_ww": float(v)} for k, v in enumerate(seq)]


def repetitions(q: int, xi: float, epsilon: float, mode: str = "bound") -> tuple[int, list[dict]]:
    table = analysis.repetition_table(q, xi, epsilon, mode)
    return table[-1][0], [{"R": r, "q_xi_R": v} for r, v in table]


# --- output -----------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _as_dicts(rows) -> list[dict]:
    return [asdict(r) if isinstance(r, ResultRow) else dict(r) for r in rows]


def to_csv(rows, columns: Sequence[str] | None = None) -> str:
    dicts = _as_dicts(rows)
    if columns is None:
        columns = RESULT_FIELDS if rows and isinstance(rows[0], ResultRow) else list(dicts[0]) if dicts else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for d in dicts:
        writer.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(v) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def to_json(rows) -> str:
    dicts = [{k: _json_value(v) for k, v in d.items()} for d in _as_dicts(rows)]
    return json.dumps(dicts, indent=1) + "\n"


def render(rows, fmt: str = "csv") -> str:
    if fmt == "csv":
        return to_csv(rows)
    if fmt == "json":
        return to_json(rows)
    raise ValueError(f"unknown format {fmt!r}")


def read_csv(text: str) -> list[dict]:
    """Parse a table written by :func:`to_csv`; numeric fields come back as int or float."""

    def parse(v: str):
        for cast in (int, float):
            try:
                return cast(v)
            except ValueError:
                pass
        return v

    return [{k: parse(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


def read_result_rows(text: str) -> list[ResultRow]:
    out = []
    for d in read_csv(text):
        d["error"] = "" if d["error"] == "" else str(d["error"])
        d["q"] = int(d["q"])
        for k in RESULT_FIELDS[1:-1]:
            d[k] = float(d[k])
        out.append(ResultRow(**d))
    return out


def check_qubit_list(qubits: Iterable[int]) -> list[int]:
    qs = list(qubits)
    if not qs:
        raise ValueError("no qubit counts given")
    for q in qs:
        if not 1 <= q <= MAX_QUBITS:
            raise ValueError(f"q={q} outside [1, {MAX_QUBITS}]")
    return qs
