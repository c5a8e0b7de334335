"""Command-line driver.

Subcommands: steady, sweep-gamma, sweep-q, evolve, distribution, repetitions,
verify.  Options may also come from a flat ``key = value`` file given with
``--config``; keys are long option names (``scaled-gamma = 0.005``) and
command-line flags take precedence over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import sweeps
from .fullspace import ORACLE_MAX_QUBITS
from .verify import DEFAULT_SEED, run_suite

log = logging.getLogger("robust_search")


def int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_gamma(p: argparse.ArgumentParser, default_scaled=None) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float_list, help="absolute decay rate(s)")
    g.add_argument(
        "--scaled-gamma", type=float_list, default=default_scaled, help="decay rate(s) in units of 2^(-q/2)"
    )


def _add_jobs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", "-j", type=int, default=None, help="worker processes (default: CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-search", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", help="steady state for each (q, gamma)")
    p.add_argument("--qubits", "-q", type=int_list, required=False, default=None)
    _add_gamma(p)
    _add_jobs(p)
    _add_output(p)

    p = sub.add_parser("sweep-gamma", help="steady rho_00 over a log grid of decay rates")
    p.add_argument("--qubits", "-q", type=int_list, default=list(sweeps.GAMMA_SWEEP_QUBITS))
    p.add_argument("--from", dest="grid_from", type=float, default=sweeps.DEFAULT_GRID[0])
    p.add_argument("--to", dest="grid_to", type=float, default=sweeps.DEFAULT_GRID[1])
    p.add_argument("--points", type=int, default=sweeps.DEFAULT_GRID[2])
    p.add_argument("--absolute", action="store_true", help="grid holds absolute gamma, not 2^(q/2) gamma")
    _add_jobs(p)
    _add_output(p)

    for name, help_text in (
        ("sweep-q", "weak-decay amplification and bit error rate per q"),
        ("distribution", "Hamming-distance distribution p(d) per q"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--qubits", "-q", type=int_list, default=list(sweeps.WEAK_DECAY_QUBITS))
        p.add_argument("--scaled-gamma", type=float, default=sweeps.WEAK_DECAY_SCALED_GAMMA)
        if name == "sweep-q":
            p.add_argument("--dist-output", help="also write the long-format p(d) table here")
        _add_jobs(p)
        _add_output(p)

    p = sub.add_parser("evolve", help="rho_ww(t) starting from |s>")
    p.add_argument("--qubits", "-q", type=int, default=6)
    p.add_argument("--gamma", type=float, default=0.03)
    p.add_argument("--tmax", type=float, default=120.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--engine", choices=("full", "reduced", "both", "iterative"), default="reduced")
    p.add_argument("--tau", type=float, default=2.0, help="decay interval per Grover iteration (iterative engine)")
    p.add_argument("--sample-every", type=int, default=1)
    _add_output(p)

    p = sub.add_parser("repetitions", help="majority-vote repetitions for an error budget")
    p.add_argument("--qubits", "-q", type=int, default=29)
    p.add_argument("--xi", type=float, default=0.28)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--mode", choices=("bound", "exact"), default="bound")
    _add_output(p)

    p = sub.add_parser("verify", help="full-space oracle cross-checks")
    p.add_argument("--qmax", type=int, default=6)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--output", "-o", help="JSON report file (default: stdout)")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _gammas_for(q: int, args) -> list[float]:
    if getattr(args, "gamma", None):
        return list(args.gamma)
    return [sweeps.scaled_to_gamma(q, g) for g in args.scaled_gamma]


def _cmd_steady(args) -> int:
    if not args.qubits:
        raise SystemExit("steady: --qubits is required")
    if not args.gamma and not args.scaled_gamma:
        raise SystemExit("steady: give --gamma or --scaled-gamma")
    qs = sweeps.check_qubit_list(args.qubits)
    points = [(q, g) for q in qs for g in _gammas_for(q, args)]
    if any(g <= 0 for _, g in points):
        raise SystemExit("steady: decay rates must be positive")
    rows = sweeps.run_points(points, jobs=args.jobs)
    return _finish_rows(rows, args)


def _finish_rows(rows, args) -> int:
    _emit(sweeps.render(rows, args.format), args.output)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"error: q={r.q} gamma={r.gamma:.17g} failed: {r.error}", file=sys.stderr)
    return 1 if failed else 0


def _cmd_sweep_gamma(args) -> int:
    qs = sweeps.check_qubit_list(args.qubits)
    grid = sweeps.log_grid(args.grid_from, args.grid_to, args.points)
    rows = sweeps.sweep_gamma(qs, grid, scaled=not args.absolute, jobs=args.jobs)
    return _finish_rows(rows, args)


def _cmd_sweep_q(args) -> int:
    qs = sweeps.check_qubit_list(args.qubits)
    rows, dist = sweeps.sweep_q(qs, args.scaled_gamma, jobs=args.jobs)
    if args.command == "distribution":
        _emit(sweeps.render(dist, args.format), args.output)
        return 0 if all(r.ok for r in rows) else 1
    if args.dist_output:
        Path(args.dist_output).write_text(sweeps.render(dist, args.format))
    return _finish_rows(rows, args)


def _cmd_evolve(args) -> int:
    if args.engine in ("full", "both") and args.qubits > ORACLE_MAX_QUBITS:
        raise SystemExit(f"evolve: the full engine is limited to q <= {ORACLE_MAX_QUBITS}")
    if args.engine == "iterative":
        iterations = max(1, round(args.tmax / args.tau)) if args.tau > 0 else int(args.tmax)
        rows = sweeps.iterative_table(args.qubits, args.gamma, args.tau, iterations)
        _emit(sweeps.render(rows, args.format), args.output)
        return 0
    rows, deviation = sweeps.evolve_table(
        args.qubits, args.gamma, args.tmax, args.dt, args.engine, args.sample_every
    )
    _emit(sweeps.render(rows, args.format), args.output)
    if args.engine == "both":
        print(f"max |full - reduced| = {deviation:.3e}", file=sys.stderr)
    return 0


def _cmd_repetitions(args) -> int:
    if not 0.0 <= args.xi < 0.5:
        raise SystemExit("repetitions: --xi must lie in [0, 0.5)")
    r, table = sweeps.repetitions(args.qubits, args.xi, args.epsilon, args.mode)
    print(f"R = {r}", file=sys.stderr if not args.output else sys.stdout)
    _emit(sweeps.render(table, args.format), args.output)
    return 0


def _cmd_verify(args) -> int:
    report = run_suite(args.qmax, args.seed, args.samples)
    _emit(json.dumps(report, indent=1, default=float) + "\n", args.output)
    return 0 if report["passed"] else 1


COMMANDS = {
    "steady": _cmd_steady,
    "sweep-gamma": _cmd_sweep_gamma,
    "sweep-q": _cmd_sweep_q,
    "distribution": _cmd_sweep_q,
    "evolve": _cmd_evolve,
    "repetitions": _cmd_repetitions,
    "verify": _cmd_verify,
}


def parse_args(argv=None) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` become defaults so flags still win.

    String defaults pass through each option's ``type`` in argparse, so the
    config values get the same conversion as typed flags.
    """
    parser = build_parser()
    argv_list = list(sys.argv[1:] if argv is None else argv)
    pre, _ = parser.parse_known_args(argv_list)
    if pre.config:
        config = read_config(pre.config)
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))  # noqa: SLF001
        for sub in subparsers.choices.values():
            actions = {
                opt.lstrip("-").replace("-", "_"): a
                for a in sub._actions  # noqa: SLF001
                for opt in a.option_strings
                if opt.startswith("--")
            }
            defaults = {}
            for key, value in config.items():
                action = actions.get(key)
                if action is None:
                    continue
                if isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
                    value = value.lower() in ("1", "true", "yes", "on")
                defaults[action.dest] = value
            sub.set_defaults(**defaults)
    return parser.parse_args(argv_list)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
