#!/usr/bin/env python3
"""
posetcap CLI - Command Line Interface
Computes feedback-capacity upper bounds, runs alpha sweeps and relaxation
experiments, and drives the mixing, symmetry and oracle checks.
"""

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from .channel import Dist
from .config import DEFAULT_MAX_ITERS, DEFAULT_TOL, get_output_dir, get_thread_count
from .errors import BadParameter, Infeasible, PosetCapError, ScaleTooLarge
from .mixing import contraction_coeff, contraction_envelope, hausdorff, reachable_sets, verify_tv_contraction
from .oracle import (average_joints, d_eps_membership, grid_search_line,
                     random_policies, rollout_line, stationary_rollout)
from .poset_dag import (BUILTIN_FAMILIES, DagFamily, equiv_classes,
                        get_family, validate_approx_symmetry)
from .result_io import fmt, write_json, write_jsonl, write_sweep_csv
from .solver import (finite_n_relaxation, myopic_bound, single_letter_bound,
                     trivial_equivalence)
from .zoo import get_channel, load

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_SCALE = 3


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors map to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise BadParameter(message)


def setup_logging(verbose: bool = False):
    """Set up logging for CLI operations."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(levelname)s: %(message)s'
    )
    return logging.getLogger(__name__)


# Shared argument handling --------------------------------------------------

def add_channel_args(p: argparse.ArgumentParser, alpha: bool = True) -> None:
    p.add_argument("--channel", help="zoo channel name or file:<path>")
    p.add_argument("--file", help="channel file (.chan.json)")
    if alpha:
        p.add_argument("--alpha", type=float, help="channel parameter in [0, 1]")


def resolve_kernel(args, alpha: Optional[float] = None):
    if getattr(args, "file", None):
        return load(args.file)
    if not args.channel:
        raise BadParameter("one of --channel or --file is required")
    return get_channel(args.channel, alpha if alpha is not None else getattr(args, "alpha", None))


def default_family(d: int) -> Optional[DagFamily]:
    if d == 1:
        return DagFamily.line()
    if d == 2:
        return DagFamily.grid2d()
    return None


def resolve_equivalence(args, k):
    selector = getattr(args, "family", None)
    family = get_family(selector) if selector else default_family(k.d)
    if family is None:
        return trivial_equivalence(k.d)
    return equiv_classes(family)


def parse_dist(text: Optional[str]) -> Optional[Dist]:
    if not text:
        return None
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise BadParameter(f"bad distribution {text!r}: {e}") from e
    return Dist(values)


def alpha_grid(start: float, stop: float, step: float) -> List[float]:
    if step <= 0 or start > stop or not (0.0 <= start and stop <= 1.0):
        raise BadParameter(f"bad alpha grid start={start} stop={stop} step={step}")
    count = int(math.floor((stop - start) / step + 1e-6)) + 1
    return [round(start + i * step, 12) for i in range(count)]


# Commands -------------------------------------------------------------------

def bound_command(args, logger) -> int:
    """Handle bound command."""
    k = resolve_kernel(args)
    eq = resolve_equivalence(args, k)
    logger.info(f"Computing single-letter bound for {k.name or args.file}")
    report = single_letter_bound(k, eq, tol=args.tol, max_iters=args.max_iters, variant=args.variant)
    print(f"{report.value:.9f}")
    print(f"fw_gap: {report.fw_gap:.3e}")
    print(f"iterations: {report.iterations}")
    print(f"converged: {report.converged}")
    if args.myopic:
        print(f"myopic: {myopic_bound(k):.9f}")
    return EXIT_OK


def _sweep_row(args, alpha: float) -> Dict:
    k = get_channel(args.channel, alpha)
    eq = resolve_equivalence(args, k)
    started = time.perf_counter()
    report = single_letter_bound(k, eq, tol=args.tol, max_iters=args.max_iters)
    myopic = myopic_bound(k)
    elapsed = (time.perf_counter() - started) * 1000.0
    return {
        "alpha": alpha,
        "bound_bits": report.value,
        "myopic_bits": myopic,
        "fw_gap": report.fw_gap,
        "iterations": report.iterations,
        "wall_time_ms": elapsed,
    }


def sweep_command(args, logger) -> int:
    """Handle sweep command."""
    if not args.channel:
        raise BadParameter("sweep needs --channel")
    alphas = alpha_grid(args.start, args.stop, args.step)
    logger.info(f"Sweeping {args.channel} over {len(alphas)} alpha values")
    if args.parallel:
        with ThreadPoolExecutor(max_workers=get_thread_count()) as pool:
            rows = list(pool.map(lambda a: _sweep_row(args, a), alphas))
    else:
        rows = [_sweep_row(args, a) for a in alphas]
    rows.sort(key=lambda r: r["alpha"])
    for row in rows:
        if row["bound_bits"] > row["myopic_bits"] + 1e-6:
            logger.warning(f"alpha={row['alpha']}: bound exceeds myopic value")

    output = args.output or os.path.join(
        get_output_dir(), f"sweep_{args.channel}.{args.format}"
    )
    if args.format == "csv":
        write_sweep_csv(output, rows)
    else:
        write_json(output, {"channel": args.channel, "rows": rows})
    print(f"✅ Wrote {len(rows)} rows to {output}")
    return EXIT_OK


def relax_command(args, logger, console: Console) -> int:
    """Handle relax command."""
    k = resolve_kernel(args)
    family = get_family(args.family) if args.family else default_family(k.d)
    if family is None:
        raise BadParameter(f"no default family for d={k.d}; pass --family")
    p0 = parse_dist(args.p0)
    table = Table(title=f"finite-n relaxation: {k.name} on {family.name}")
    table.add_column("n", justify="right")
    table.add_column("value (bits)", justify="right")
    table.add_column("fw_gap", justify="right")
    records = []
    for n in args.n:
        report = finite_n_relaxation(family, k, n, p0, tol=args.tol, max_iters=args.max_iters)
        records.append({"n": n, **report.as_dict()})
        table.add_row(str(n), f"{report.value:.9f}", f"{report.fw_gap:.2e}")
        print(f"n={n} value={report.value:.9f} gap={report.fw_gap:.3e}")
    console.print(table)
    if args.output:
        write_jsonl(args.output, records)
        logger.info(f"Wrote relaxation results to {args.output}")
    return EXIT_OK


def mixing_command(args, logger) -> int:
    """Handle mixing command."""
    k = resolve_kernel(args)
    gamma, alpha = contraction_coeff(k)
    worst = verify_tv_contraction(k, args.trials, args.seed)
    print(f"gamma: {fmt(gamma)}")
    print(f"alpha: {fmt(alpha)}")
    print(f"max_ratio: {fmt(worst)}")
    if args.steps > 0:
        y_size = k.alphabet.y_size
        p = Dist.point(y_size, 0)
        q = Dist.point(y_size, y_size - 1)
        a = reachable_sets(k, p, args.steps, args.num_policies, args.seed)
        b = reachable_sets(k, q, args.steps, args.num_policies, args.seed)
        bounds = contraction_envelope(a, b, alpha)
        for t, (sa, sb, bound) in enumerate(zip(a, b, bounds)):
            print(f"step {t}: hausdorff={fmt(hausdorff(sa, sb))} bound={fmt(bound)}")
    return EXIT_OK


def validate_command(args, logger, console: Console) -> int:
    """Handle validate command."""
    family = get_family(args.family)
    kernel = resolve_kernel(args) if (args.channel or args.file) else None
    report = validate_approx_symmetry(family, args.n_max, kernel)
    table = Table(title=f"approximate symmetry: {family.name}")
    table.add_column("n", justify="right")
    table.add_column("in-degrees")
    table.add_column("boundary fraction", justify="right")
    for s in report.scales:
        table.add_row(str(s.n), str(s.in_degree_histogram), f"{s.boundary_fraction:.6f}")
    console.print(table)
    print(f"trend: {report.trend}")
    print(f"in_degree_ok: {report.in_degree_ok}")
    print(f"cayley_ok: {report.cayley_ok}")
    if kernel is not None:
        print(f"kernel_d_ok: {report.kernel_d_ok}")
        print(f"kernel_positive: {report.kernel_positive}")
    return EXIT_OK


def oracle_command(args, logger) -> int:
    """Handle oracle subcommands."""
    k = resolve_kernel(args)
    if args.oracle_command == "rollout":
        report = single_letter_bound(k, trivial_equivalence(k.d), tol=args.tol)
        trace = stationary_rollout(k, report.argmax, args.n)
        drift = max(abs(v - report.value) for v in trace.step_info)
        print(f"single_letter: {report.value:.9f}")
        print(f"max_step_drift: {drift:.3e}")
    elif args.oracle_command == "grid":
        value = grid_search_line(k, args.n, args.resolution, parse_dist(args.p0))
        print(f"grid_value: {value:.9f}")
    else:
        rng = np.random.default_rng(args.seed)
        p0 = Dist(rng.dirichlet(np.ones(k.alphabet.y_size)))
        trace = rollout_line(k, random_policies(k, args.n, rng), p0)
        report = d_eps_membership(average_joints(trace.joints), k)
        print(f"deviation: {fmt(report.epsilon)}")
        print(f"bound: {fmt(1.0 / args.n)}")
        print(f"member: {report.member(1.0 / args.n)}")
    return EXIT_OK


def families_command(args, logger, console: Console) -> int:
    """Handle families command."""
    table = Table(title="built-in DAG families")
    table.add_column("name")
    table.add_column("d", justify="right")
    table.add_column("generators")
    table.add_column("subset classes")
    for name, make in BUILTIN_FAMILIES.items():
        family = make()
        classes = equiv_classes(family)
        rendered = "; ".join(
            "{" + ", ".join(str(s) for s in sorted(c, key=lambda s: (len(s), s))) + "}"
            for c in classes.classes
        )
        table.add_row(name, str(family.d), str(list(family.generators)), rendered)
        print(f"{name}: d={family.d} generators={list(family.generators)} classes={rendered}")
    console.print(table)
    return EXIT_OK


# Entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="posetcap", description="Poset-channel feedback-capacity bounds")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    def solver_args(p):
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Frank-Wolfe gap tolerance (bits)")
        p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS, help="Iteration cap")

    # Bound command
    bound_parser = subparsers.add_parser("bound", help="Single-letter upper bound")
    add_channel_args(bound_parser)
    bound_parser.add_argument("--family", help="family for subset equivalence (default by d)")
    bound_parser.add_argument("--variant", choices=["away", "vanilla"], default="away")
    bound_parser.add_argument("--myopic", action="store_true", help="Also print the myopic bound")
    solver_args(bound_parser)

    # Sweep command
    sweep_parser = subparsers.add_parser("sweep", help="Bound and myopic bound over an alpha grid")
    sweep_parser.add_argument("--channel", required=True, help="zoo channel name")
    sweep_parser.add_argument("--family", help="family for subset equivalence (default by d)")
    sweep_parser.add_argument("--start", type=float, default=0.0)
    sweep_parser.add_argument("--stop", type=float, default=1.0)
    sweep_parser.add_argument("--step", type=float, default=0.02)
    sweep_parser.add_argument("--output", help="Output file")
    sweep_parser.add_argument("--format", choices=["csv", "json"], default="csv")
    sweep_parser.add_argument("--parallel", action="store_true", help="Solve grid points in parallel")
    solver_args(sweep_parser)

    # Relax command
    relax_parser = subparsers.add_parser("relax", help="Finite-n relaxation values")
    add_channel_args(relax_parser)
    relax_parser.add_argument("--family", help="line, grid2d, binary-tree or file:<path>")
    relax_parser.add_argument("--n", type=int, nargs="+", default=[1, 2, 4, 8])
    relax_parser.add_argument("--p0", help="initial distribution, comma separated")
    relax_parser.add_argument("--output", help="JSONL output file")
    solver_args(relax_parser)

    # Mixing command
    mixing_parser = subparsers.add_parser("mixing", help="Contraction checks")
    add_channel_args(mixing_parser)
    mixing_parser.add_argument("--trials", type=int, default=1000)
    mixing_parser.add_argument("--seed", type=int, default=0)
    mixing_parser.add_argument("--steps", type=int, default=0, help="Reachable-set steps")
    mixing_parser.add_argument("--num-policies", type=int, default=16)

    # Validate command
    validate_parser = subparsers.add_parser("validate", help="Approximate-symmetry report")
    validate_parser.add_argument("--family", required=True)
    validate_parser.add_argument("--n-max", type=int, default=8)
    add_channel_args(validate_parser)

    # Oracle command
    oracle_parser = subparsers.add_parser("oracle", help="Solver-independent checks on the line")
    oracle_sub = oracle_parser.add_subparsers(dest="oracle_command")
    rollout_parser = oracle_sub.add_parser("rollout", help="Stationary rollout of the optimizer")
    add_channel_args(rollout_parser)
    rollout_parser.add_argument("--n", type=int, default=64)
    rollout_parser.add_argument("--tol", type=float, default=DEFAULT_TOL)
    grid_parser = oracle_sub.add_parser("grid", help="Grid-search maximizer (n <= 2)")
    add_channel_args(grid_parser)
    grid_parser.add_argument("--n", type=int, default=1)
    grid_parser.add_argument("--resolution", type=int, default=21)
    grid_parser.add_argument("--p0", help="fixed initial distribution (default: searched)")
    avg_parser = oracle_sub.add_parser("avg", help="Averaged random rollout deviation")
    add_channel_args(avg_parser)
    avg_parser.add_argument("--n", type=int, default=10)
    avg_parser.add_argument("--seed", type=int, default=0)

    subparsers.add_parser("families", help="List built-in DAG families")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    console = Console()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except BadParameter:
        return EXIT_USAGE

    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    if args.command == "oracle" and not args.oracle_command:
        parser.print_help()
        return EXIT_USAGE

    logger = setup_logging(args.verbose)

    try:
        if args.command == "bound":
            return bound_command(args, logger)
        elif args.command == "sweep":
            return sweep_command(args, logger)
        elif args.command == "relax":
            return relax_command(args, logger, console)
        elif args.command == "mixing":
            return mixing_command(args, logger)
        elif args.command == "validate":
            return validate_command(args, logger, console)
        elif args.command == "oracle":
            return oracle_command(args, logger)
        else:
            return families_command(args, logger, console)
    except Infeasible as e:
        logger.error(f"❌ Infeasible: {e}")
        return EXIT_INFEASIBLE
    except ScaleTooLarge as e:
        logger.error(f"❌ Scale too large: {e}")
        return EXIT_SCALE
    except (PosetCapError, ValueError) as e:
        logger.error(f"❌ Error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
