""" Command-line runner """

import argparse
import os
import sys
from typing import Any, Dict, List, Optional

from loguru import logger as log

from . import __version__
from .errors import ConfigError
from .experiment import run, run_sweep
from .models.enums.all import Activation, Aggregation, LossSecondTerm, Mode, OptimizerKind, SweepAxis
from .models.pd.configuration import resolve_config

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# flag dest -> (section, key) in ExperimentConfig
FLAG_MAP = {
    'mode': (None, 'mode'),
    'seed': (None, 'seed'),
    'transport': (None, 'transport'),
    'output': (None, 'output_dir'),
    'save_checkpoints': (None, 'save_checkpoints'),
    'rho': ('dataset', 'rho'),
    'test_rho': ('dataset', 'test_rho'),
    'window': ('dataset', 'window'),
    'stride': ('dataset', 'stride'),
    'channels': ('dataset', 'channels'),
    'clients': ('dataset', 'clients'),
    'train_windows': ('dataset', 'train_windows'),
    'test_windows': ('dataset', 'test_windows'),
    'label_rule': ('dataset', 'label_rule'),
    'rounds': ('rounds', 'rounds'),
    'epochs': ('rounds', 'epochs'),
    'batch_size': ('rounds', 'batch_size'),
    'optimizer': ('rounds', 'optimizer'),
    'lr': ('rounds', 'lr'),
    'momentum': ('rounds', 'momentum'),
    'aggregation': ('rounds', 'aggregation'),
    'parallel': ('rounds', 'parallel'),
    'activation': ('model', 'activation'),
    'dropout': ('model', 'dropout_rate'),
}
LOSS_FLAGS = {'lam': 'lam', 'tau': 'tau', 'gamma': 'gamma', 'loss': 'second_term'}


def _choices(enum) -> List[str]:
    return [item.value for item in enum]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='protofed', description='Federated prototype learning experiments')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--mode', choices=_choices(Mode))
    parser.add_argument('--preset', default='desk', help='desk | full (default: desk)')
    parser.add_argument('--config', help='YAML key/value file merged over the preset')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--transport', help='inproc | tcp | tcp:HOST:PORT')
    parser.add_argument('--output', help='Run directory')
    parser.add_argument('--save-checkpoints', action='store_true', default=None)
    parser.add_argument('--log-level', default=os.environ.get('PROTOFED_LOG_LEVEL', 'INFO'))

    data = parser.add_argument_group('dataset')
    data.add_argument('--rho', type=int)
    data.add_argument('--test-rho', type=int)
    data.add_argument('--window', type=int)
    data.add_argument('--stride', type=int)
    data.add_argument('--channels', type=int)
    data.add_argument('--clients', type=int)
    data.add_argument('--train-windows', type=int)
    data.add_argument('--test-windows', type=int)
    data.add_argument('--label-rule', choices=['any', 'majority'])

    rounds = parser.add_argument_group('training')
    rounds.add_argument('--rounds', type=int)
    rounds.add_argument('--epochs', type=int)
    rounds.add_argument('--batch-size', type=int)
    rounds.add_argument('--optimizer', choices=_choices(OptimizerKind))
    rounds.add_argument('--lr', type=float)
    rounds.add_argument('--momentum', type=float)
    rounds.add_argument('--aggregation', choices=_choices(Aggregation))
    rounds.add_argument('--parallel', action='store_true', default=None)
    rounds.add_argument('--lambda', dest='lam', type=float)
    rounds.add_argument('--tau', type=float)
    rounds.add_argument('--gamma', type=float)
    rounds.add_argument('--loss', choices=_choices(LossSecondTerm), help='Second loss term')
    rounds.add_argument('--activation', choices=_choices(Activation))
    rounds.add_argument('--dropout', type=float)

    sweep = parser.add_argument_group('sweep')
    sweep.add_argument('--sweep', choices=_choices(SweepAxis))
    sweep.add_argument('--sweep-values', help='Comma-separated values (defaults per axis)')
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for dest, (section, key) in FLAG_MAP.items():
        value = getattr(args, dest)
        if value is None:
            continue
        if section is None:
            overrides[key] = value
        else:
            overrides.setdefault(section, {})[key] = value
    for dest, key in LOSS_FLAGS.items():
        value = getattr(args, dest)
        if value is not None:
            overrides.setdefault('rounds', {}).setdefault('loss', {})[key] = value
    return overrides


def parse_sweep_values(axis: SweepAxis, text: Optional[str]) -> Optional[list]:
    if not text:
        return None
    cast = float if axis == SweepAxis.LAMBDA else int
    try:
        return [cast(item) for item in text.split(',') if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"Invalid --sweep-values {text!r}: {exc}") from exc


def setup_logging(level: str):
    log.remove()
    log.add(sys.stderr, level=level.upper(),
            format='<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}')


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging(args.log_level)
    except ValueError as exc:
        print(f"protofed: invalid log level: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = resolve_config(args.preset, args.config, overrides_from_args(args))
        if args.sweep:
            axis = SweepAxis(args.sweep)
            rows = run_sweep(config, axis, parse_sweep_values(axis, args.sweep_values))
            failed = [row for row in rows if row['status'] != 'ok']
            if failed:
                log.warning("{} of {} sweep runs failed", len(failed), len(rows))
        else:
            run(config)
    except ConfigError as exc:
        log.error("Configuration error: {}", exc)
        return EXIT_CONFIG
    except Exception:  # pylint: disable=W0703
        log.exception("Experiment failed")
        return EXIT_FAILURE
    return EXIT_OK
