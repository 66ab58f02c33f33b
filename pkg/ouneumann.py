#!/usr/bin/env python3

import sys
import argparse
from pathlib import Path

# Add engine to path
sys.path.insert(0, str(Path(__file__).parent / "engine"))

from app import __version__
from app.commands.config import COMMANDS, load_config, serialize
from app.events import print_event, subscribe
from app.errors import ConfigError
from app.main import EXIT_CONFIG, EXIT_SOLVER, run


def parse_dims(text: str) -> list[int]:
    """'1..5' or '1,2,4'"""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip()]


def parse_point(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Gaussian-weighted Neumann problems for the Ornstein-Uhlenbeck operator on convex domains'
    )
    parser.add_argument('command', choices=COMMANDS + ('config',), help='Workflow to run (config prints the merged TOML)')
    parser.add_argument('-c', '--config', help='Path to a TOML experiment file')
    parser.add_argument('-o', '--out', help='Output directory for report files')
    parser.add_argument('--lambda', dest='lam', type=float, help='Resolvent parameter lambda > 0')
    parser.add_argument('--resolution', type=int, help='Quadrature panels and grid nodes per unit length')
    parser.add_argument('--seed', type=int, help='Oracle seed')
    parser.add_argument('--dims', type=parse_dims, help='Sweep dimensions, e.g. 1..5')
    parser.add_argument('--format', choices=('csv', 'json'), help='Tabular output format')
    parser.add_argument('--dt', type=float, help='Oracle time step')
    parser.add_argument('--n-paths', type=int, help='Oracle path count')
    parser.add_argument('--t-max', type=float, help='Oracle horizon')
    parser.add_argument('--x0', type=parse_point, help='Oracle start point, comma separated')
    parser.add_argument('--antithetic', action='store_true', default=None, help='Use antithetic path pairs')
    parser.add_argument('--workers', type=int, help='Worker threads for sweeps, batteries and paths')
    parser.add_argument('--quiet', action='store_true', help='Suppress progress lines')
    parser.add_argument('--no-ledger', action='store_true', help='Do not record the run in the ledger')
    parser.add_argument('--bundle', action='store_true', default=None, help='Zip the artifacts after the run')
    return parser


def overrides_from_args(args) -> dict:
    """Flags that were given, as a nested config table."""
    out: dict = {}

    def put(section, key, value):
        if value is None:
            return
        if section is None:
            out[key] = value
        else:
            out.setdefault(section, {})[key] = value

    if args.command != 'config':
        put(None, 'command', args.command)
    put(None, 'lambda', args.lam)
    put(None, 'workers', args.workers)
    put(None, 'bundle', args.bundle)
    if args.no_ledger:
        put(None, 'ledger', False)
    put('output', 'out_dir', args.out)
    put('output', 'format', args.format)
    if args.resolution is not None:
        put('quadrature', 'resolution', args.resolution)
        put('grid', 'spacing', 1.0 / args.resolution)
    put('oracle', 'seed', args.seed)
    put('oracle', 'dt', args.dt)
    put('oracle', 'n_paths', args.n_paths)
    put('oracle', 't_max', args.t_max)
    put('oracle', 'x0', args.x0)
    put('oracle', 'antithetic', args.antithetic)
    put('sweep', 'dims', args.dims)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args.config, overrides_from_args(args))
    except ConfigError as e:
        print(f'❌ Config error: {e}')
        return EXIT_CONFIG

    if args.command == 'config':
        print(serialize(config), end='')
        return 0

    if not args.quiet:
        subscribe(print_event)
        print(f'📝 ouneumann {__version__}: {config.command}')
        print(f'📁 Output directory: {Path(config.output.out_dir).resolve()}\n')

    try:
        outcome = run(config)
    except Exception as e:
        print(f'❌ {config.command} failed: {type(e).__name__}: {e}')
        return EXIT_SOLVER

    if outcome.exit_status == 0:
        print(f'✅ {config.command} passed ({len(outcome.files)} artifact(s))')
    elif outcome.exit_status == 1:
        print(f'❌ {len(outcome.failures)} check(s) failed:')
        for name in outcome.failures:
            print(f'   - {name}')
    else:
        print(f'⚠️  {config.command} stopped with status {outcome.exit_status}: {", ".join(outcome.failures)}')
    if outcome.bundle:
        print(f'📦 Bundle: {outcome.bundle}')
    return outcome.exit_status


if __name__ == '__main__':
    sys.exit(main())
