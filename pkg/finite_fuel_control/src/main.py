#!/usr/bin/env python3
"""
Finite-Fuel Control Solver
Command-line front end for regime classification, boundary solves, value
evaluation, verification, the grid oracle, Monte Carlo and phase diagrams.

Data artifacts go to --out (standard output by default); progress goes to
standard error.
"""

import os
import sys
import argparse
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

# Import logging filter from root directory
sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import (ProblemParams, FuelControlError, ParameterError, UnsupportedRegimeError,
                   classify, compute_constants)
from solver_config import SolverSettings, resolve_run_config
from boundaries import C_START, solve_boundaries
from valuefn import PiecewiseValue
from verify import VerificationGrid, run_battery
from transform import Obstacle, ScaleMap, TransformedObstacle
from oneshot import solve_one_shot
from oracle import GridConfig, solve_dp, extract_boundaries, compare_with_candidate
from simulate import SimConfig, mc_estimate
from exporters import STDOUT, write_table, write_json, write_jsonl, write_workbook

load_dotenv()

logger = setup_solver_logging('fuel_control_main')

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_UNSUPPORTED = 0, 1, 2, 3


@dataclass
class RunSpec:
    command: str
    params: ProblemParams
    settings: SolverSettings
    out: str = STDOUT
    fmt: str = 'csv'
    extras: Dict[str, Any] = field(default_factory=dict)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--alpha', type=float, help='discount rate')
    common.add_argument('--delta', type=float, help='terminal-cost coefficient')
    common.add_argument('--lambda', dest='lam', type=float, help='running-cost coefficient')
    common.add_argument('--config', help='JSON file with lambda/alpha/delta and optional grid/simulation blocks')
    common.add_argument('--out', default=STDOUT, help="output path ('-' for standard output)")
    common.add_argument('--format', dest='fmt', choices=('csv', 'json'), default='csv', help='table format')
    common.add_argument('--dx', type=float, help='grid step (default FUELCTRL_DX or 0.01)')
    common.add_argument('--dt', type=float, help='simulation time step (default FUELCTRL_DT or 1e-4)')
    common.add_argument('--paths', type=int, help='Monte Carlo paths (default FUELCTRL_PATHS or 10000)')
    common.add_argument('--seed', type=int, help='random seed (default FUELCTRL_SEED or 20240601)')
    common.add_argument('--cmax', type=float, help='largest fuel level')
    common.add_argument('--xmax', type=float, help='largest state')
    common.add_argument('--tol', type=float, help='oracle convergence tolerance (default 1e-10)')

    parser = argparse.ArgumentParser(prog='fuelctl', description='Finite-fuel control with discretionary stopping')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('regimes', parents=[common], help='print regime constants')
    sub.add_parser('boundaries', parents=[common], help='solve the moving boundaries')
    value = sub.add_parser('value', parents=[common], help='evaluate the value function on a grid')
    value.add_argument('--coefficients', help='optional JSON with A, B, A_tilde, B_tilde sampled in c')
    oneshot = sub.add_parser('oneshot', parents=[common], help='obstacle trace and one-shot minorant at one fuel level')
    oneshot.add_argument('--fuel', type=float, required=True, help='fuel level c >= 0')
    oneshot.add_argument('--minorant-out', help='optional JSON with the minorant pieces')
    verify = sub.add_parser('verify', parents=[common], help='run the verification battery')
    verify.add_argument('--nx', type=int, default=400, help='x nodes of the verification grid')
    verify.add_argument('--nc', type=int, default=200, help='fuel rows of the verification grid')
    oracle = sub.add_parser('oracle', parents=[common], help='grid dynamic programming and comparison')
    oracle.add_argument('--grid-out', help='optional dump of the grid solution')
    simulate = sub.add_parser('simulate', parents=[common], help='Monte Carlo at start states')
    simulate.add_argument('--point', nargs=2, type=float, action='append', metavar=('X', 'C'),
                          help='start state; repeat for several')
    simulate.add_argument('--events', help='optional JSON-lines event log')
    simulate.add_argument('--mirrored', action='store_true', help='negate the driving noise')
    phase = sub.add_parser('phase-diagram', parents=[common], help='boundary curves with region labels')
    phase.add_argument('--regions-out', help='optional region-label table')
    phase.add_argument('--xlsx', help='optional Excel workbook with every table')
    return parser


def parse_spec(argv: Optional[List[str]] = None) -> RunSpec:
    """
    Parse flags into a RunSpec; invalid flags exit with status 2.

    Args:
        argv: Argument list (sys.argv[1:] by default)

    Returns:
        RunSpec with validated parameters
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {'lambda': args.lam, 'alpha': args.alpha, 'delta': args.delta, 'dx': args.dx, 'dt': args.dt,
             'paths': args.paths, 'seed': args.seed, 'c_max': args.cmax, 'x_max': args.xmax, 'tol': args.tol}
    try:
        run_config = resolve_run_config(flags, args.config)
    except ParameterError as e:
        parser.error(str(e))
    extras = {k: v for k, v in vars(args).items()
              if k in ('nx', 'nc', 'grid_out', 'point', 'events', 'mirrored', 'regions_out', 'xlsx',
                       'coefficients', 'fuel', 'minorant_out')}
    if extras.get('fuel') is not None and extras['fuel'] < 0:
        parser.error('--fuel must be nonnegative')
    if args.command == 'simulate' and not extras.get('point'):
        parser.error('simulate needs at least one --point X C')
    output_dir = run_config.settings.output_dir
    for key in ('grid_out', 'events', 'regions_out', 'xlsx', 'coefficients', 'minorant_out'):
        if extras.get(key):
            extras[key] = _artifact_path(extras[key], output_dir)
    return RunSpec(args.command, run_config.params, run_config.settings,
                   _artifact_path(args.out, output_dir), args.fmt, extras)


def _artifact_path(path: str, output_dir: str) -> str:
    """Relative artifact paths land in FUELCTRL_OUTPUT_DIR"""
    if path == STDOUT or os.path.isabs(path) or output_dir in ('', '.'):
        return path
    return os.path.join(output_dir, path)


def _default_x_max(p: ProblemParams, c_max: float) -> float:
    constants = compute_constants(p)
    anchor = constants.f0 if constants.f0 is not None else p.x_half_delta
    return max(anchor, p.x_half_lambda) + c_max + 2.0 / p.sqrt2a


def _solve_value(spec: RunSpec) -> PiecewiseValue:
    logger.info("Step 1: Solving boundaries...")
    solution = solve_boundaries(spec.params, c_max=spec.settings.c_max)
    for warning in solution.warnings:
        logger.warning(f"⚠️ {warning}")
    if solution.levels is not None:
        logger.info(f"c_bar={solution.levels.c_bar}, c0={solution.levels.c0}, c_I={solution.levels.c_I}")
    logger.info("✅ Boundaries solved")
    return PiecewiseValue(solution)


def _fuel_top(pv: PiecewiseValue, requested: Optional[float]) -> float:
    if requested is not None:
        return requested if pv.high_cost else min(requested, pv.c_max)
    return 1.0 if pv.high_cost else pv.c_max


def cmd_regimes(spec: RunSpec) -> int:
    classification = classify(spec.params)
    record = compute_constants(spec.params).to_record()
    record.update(params=spec.params.to_dict(), chain=classification.chain,
                  boundary_warning=classification.boundary_warning)
    write_json(record, spec.out)
    logger.info(f"✅ Regime {record['regime']}")
    return EXIT_OK


def cmd_boundaries(spec: RunSpec) -> int:
    pv = _solve_value(spec)
    logger.info("Step 2: Sampling boundary curves...")
    top = _fuel_top(pv, spec.settings.c_max)
    n = int(round(top / spec.settings.dx)) + 1
    frame = pv.solution.phase_frame(np.linspace(C_START, top, max(n, 2)))
    if spec.fmt == 'json':
        write_json({'levels': pv.levels.to_record() if pv.levels else None,
                    'warnings': pv.solution.warnings,
                    'curves': frame.to_dict(orient='records')}, spec.out)
    else:
        write_table(frame, spec.out, 'csv')
    return EXIT_OK


def cmd_value(spec: RunSpec) -> int:
    pv = _solve_value(spec)
    logger.info("Step 2: Evaluating the value function...")
    dx = spec.settings.dx
    c_top = _fuel_top(pv, spec.settings.c_max)
    x_top = spec.settings.x_max or _default_x_max(spec.params, c_top)
    x_grid = np.linspace(0.0, x_top, int(round(x_top / dx)) + 1)
    c_grid = np.linspace(0.0, c_top, int(round(c_top / dx)) + 1)
    frame = pv.surface_frame(x_grid, c_grid)
    write_table(frame, spec.out, spec.fmt)
    logger.info(f"✅ Evaluated {len(frame)} nodes")
    if spec.extras.get('coefficients'):
        if pv.high_cost:
            logger.warning("⚠️ HighCost has no waiting region; coefficient summary skipped")
        else:
            write_json(pv.coefficient_summary(c_grid[1:]), spec.extras['coefficients'])
    return EXIT_OK


def cmd_oneshot(spec: RunSpec) -> int:
    p = spec.params
    c = spec.extras['fuel']
    logger.info(f"Step 1: Solving the one-shot problem at c={c}...")
    solution = solve_one_shot(c, p)
    logger.info(f"✅ {len(solution.pieces)} minorant pieces ({solution.method})")

    logger.info("Step 2: Tracing the transformed obstacle...")
    x_top = spec.settings.x_max or _default_x_max(p, c)
    x_grid = np.linspace(0.0, x_top, int(round(x_top / spec.settings.dx)) + 1)
    obstacle = TransformedObstacle(Obstacle('combined', p, c) if c > 0 else Obstacle('left', p))
    trace = obstacle.trace(ScaleMap(p.alpha).psi(x_grid))
    trace.insert(0, 'x', x_grid)
    trace['W'] = [solution.W(float(y)) for y in trace['y']]
    trace['value'] = [solution.value(float(x)) for x in x_grid]
    write_table(trace, spec.out, spec.fmt)
    if spec.extras.get('minorant_out'):
        write_json({'c': c, 'method': solution.method, 'params': p.to_dict(),
                    'pieces': solution.to_records(), 'stopping_set': solution.stopping_set},
                   spec.extras['minorant_out'])
    return EXIT_OK


def cmd_verify(spec: RunSpec) -> int:
    pv = _solve_value(spec)
    logger.info("Step 2: Running the verification battery...")
    grid = VerificationGrid(nx=spec.extras.get('nx') or 400, nc=spec.extras.get('nc') or 200,
                            x_max=spec.settings.x_max, c_max=spec.settings.c_max)
    report = run_battery(pv, grid)
    write_json(report.to_record(), spec.out)
    failures = report.failures()
    for check in failures:
        logger.error(f"❌ {check.name}: worst {check.worst} at {check.location}")
    logger.info(f"{len(report.checks) - len(failures)}/{len(report.checks)} checks passed")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_oracle(spec: RunSpec) -> int:
    pv = _solve_value(spec)
    logger.info("Step 2: Solving the grid dynamic program...")
    settings = spec.settings
    c_top = _fuel_top(pv, settings.c_max)
    cfg = GridConfig.from_dict(settings.grid)
    cfg = GridConfig(dx=settings.dx, x_max=settings.x_max or cfg.x_max, c_max=c_top,
                     tol=settings.tol, max_iter=cfg.max_iter, jacobi=cfg.jacobi)
    grid = solve_dp(spec.params, cfg)
    if spec.extras.get('grid_out'):
        write_table(grid.to_frame(), spec.extras['grid_out'], 'csv')

    logger.info("Step 3: Comparing with the analytic value...")
    rows = extract_boundaries(grid)
    ambiguous = sum(1 for row in rows if row.ambiguous)
    comparison = compare_with_candidate(grid, pv, rows)
    record = comparison.to_record()
    record['ambiguous_rows'] = ambiguous
    if spec.fmt == 'json':
        write_json(record, spec.out)
    else:
        flat = {k: v for k, v in record.items() if k not in ('boundary_gaps', 'location')}
        flat['x_worst'], flat['c_worst'] = comparison.location
        for label, gap in sorted(comparison.boundary_gaps.items()):
            flat[f'gap_{label}'] = gap
        write_table(pd.DataFrame([flat]), spec.out, 'csv')
    return EXIT_OK


def cmd_simulate(spec: RunSpec) -> int:
    pv = _solve_value(spec)
    settings = spec.settings
    cfg = SimConfig.from_settings(settings, mirrored=spec.extras.get('mirrored') or None,
                                  record_events=bool(spec.extras.get('events')) or None)
    rows, events = [], []
    for step, (x, c) in enumerate(spec.extras['point'], start=2):
        logger.info(f"Step {step}: Monte Carlo at x={x}, c={c}...")
        estimate = mc_estimate(x, c, pv, cfg)
        record = estimate.to_record()
        record['value'] = pv.value(x, c)
        rows.append(record)
        events.extend(e.to_record() for e in estimate.events)
    frame = pd.DataFrame(rows, columns=['x', 'c', 'mean', 'stderr', 'n', 'dt', 'bias_budget', 'truncated', 'value'])
    write_table(frame, spec.out, spec.fmt)
    if spec.extras.get('events'):
        write_jsonl(events, spec.extras['events'])
    return EXIT_OK


def region_labels(pv: PiecewiseValue, x_grid: np.ndarray, c_grid: np.ndarray) -> pd.DataFrame:
    rows = []
    for c in c_grid:
        for x in x_grid:
            tag = pv.classify_region(float(x), float(c))
            rows.append({'x': float(x), 'c': float(c), 'region': tag.region, 'zeta': tag.zeta})
    return pd.DataFrame(rows, columns=['x', 'c', 'region', 'zeta'])


def cmd_phase_diagram(spec: RunSpec) -> int:
    pv = _solve_value(spec)
    logger.info("Step 2: Sampling curves and labelling regions...")
    dx = spec.settings.dx
    c_top = _fuel_top(pv, spec.settings.c_max)
    x_top = spec.settings.x_max or _default_x_max(spec.params, c_top)
    curves = pv.solution.phase_frame(np.linspace(C_START, c_top, int(round(c_top / dx)) + 1))
    labels = region_labels(pv, np.linspace(0.0, x_top, int(round(x_top / dx)) + 1),
                           np.linspace(dx, c_top, max(int(round(c_top / dx)), 1)))
    write_table(curves, spec.out, spec.fmt)
    if spec.extras.get('regions_out'):
        write_table(labels, spec.extras['regions_out'], spec.fmt)
    if spec.extras.get('xlsx'):
        notes = dict(spec.params.to_dict(), regime=pv.regime.value)
        if pv.levels is not None:
            notes.update({k: v for k, v in pv.levels.to_record().items()})
        write_workbook({'boundaries': curves, 'regions': labels}, spec.extras['xlsx'], notes)
    return EXIT_OK


HANDLERS = {
    'regimes': cmd_regimes,
    'boundaries': cmd_boundaries,
    'value': cmd_value,
    'verify': cmd_verify,
    'oracle': cmd_oracle,
    'simulate': cmd_simulate,
    'phase-diagram': cmd_phase_diagram,
    'oneshot': cmd_oneshot,
}


def run(spec: RunSpec) -> int:
    """
    Execute one command.

    Args:
        spec: Parsed run specification

    Returns:
        Exit code: 0 success, 1 failure, 3 unsupported regime
    """
    logger.info("=" * 60)
    logger.info(f"FINITE-FUEL CONTROL: {spec.command.upper()}")
    logger.info(f"Parameters: {spec.params.to_dict()}")
    logger.info(f"Execution time: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    logger.info("=" * 60)
    try:
        code = HANDLERS[spec.command](spec)
    except UnsupportedRegimeError as e:
        logger.error(f"❌ {str(e)}")
        return EXIT_UNSUPPORTED
    except FuelControlError as e:
        logger.error(f"❌ {spec.command} failed: {str(e)}")
        return EXIT_FAILURE

    logger.info("=" * 60)
    logger.info(f"{'✅' if code == EXIT_OK else '❌'} {spec.command.upper()} FINISHED (exit {code})")
    logger.info("=" * 60)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    spec = parse_spec(argv)
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
