"""Shared, session-cached weak-decay steady states.

Each (q, scaled gamma) point is solved once per session in a fresh
interpreter, so the recorded wall time and peak resident memory describe that
solve alone.
"""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

SOLVE_SCRIPT = """
import json, resource, sys, time
import numpy as np
from robust_search.fullspace import SearchParams
from robust_search.reduced import steady_state
q, scaled, out = int(sys.argv[1]), float(sys.argv[2]), sys.argv[3]
t0 = time.perf_counter()
ss = steady_state(SearchParams(q, scaled * 2.0 ** (-q / 2)))
seconds = time.perf_counter() - t0
np.save(out + ".npy", ss.sigma)
rss_kib = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
json.dump({"seconds": seconds, "peak_rss_bytes": rss_kib * 1024, "condition_estimate": ss.condition_estimate,
           "residual": ss.replaced_row_residual, "method": ss.method}, open(out + ".json", "w"))
"""


class SteadyCache:
    def __init__(self, root: Path):
        self.root = root
        self._mem = {}

    def solve(self, q: int, scaled_gamma: float = 0.005) -> dict:
        key = (q, scaled_gamma)
        if key not in self._mem:
            stem = str(self.root / f"steady_q{q}_g{scaled_gamma:g}")
            subprocess.run([sys.executable, "-c", SOLVE_SCRIPT, str(q), repr(scaled_gamma), stem], check=True)
            info = json.loads(Path(stem + ".json").read_text())
            info["sigma"] = np.load(stem + ".npy")
            self._mem[key] = info
        return self._mem[key]

    def sigma(self, q: int, scaled_gamma: float = 0.005) -> np.ndarray:
        return self.solve(q, scaled_gamma)["sigma"]


@pytest.fixture(scope="session")
def steady_cache(tmp_path_factory) -> SteadyCache:
    return SteadyCache(tmp_path_factory.mktemp("steady"))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(n, title, passed, detail)`` records one PASS/FAIL line, then asserts."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
