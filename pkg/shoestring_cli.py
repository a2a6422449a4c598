#!/usr/bin/env python3
"""
Shoestring command line

Usage:
    python shoestring_cli.py run --config experiments/cora.env --methods gcn,igcn_rnm --labels-per-class 1,2
    python shoestring_cli.py report --results results/results.csv
    python shoestring_cli.py export-embeddings --method gcn --shoestring true --output z.csv
    python shoestring_cli.py gen-sbm --out-dir data/sbm

Exit codes: 0 success, 1 a grid run failed, 2 configuration or input error.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Any, Dict

from dotenv import load_dotenv

from citation_data import sbm_generate, write_citation
from experiment_config import ExperimentConfig, TrainConfig
from experiment_runner import (RESULTS_CSV, aggregate, export_model_embeddings, load_results_csv, report_table,
                               run_grid)
from shoestring_errors import ConfigurationError, DataFormatError, InputError, ShoestringError

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_CONFIG_ERROR = 2

GRID_FLAGS = {
    'dataset': 'cora, citeseer, pubmed or sbm',
    'data_dir': 'Dataset root (default: $SHOESTRING_DATA_DIR or ./data)',
    'methods': 'Comma separated: gcn,igcn_rnm,igcn_ar,lp,glp_rnm,glp_ar',
    'modes': 'baseline, shoestring or both',
    'metrics': 'Comma separated: cos,l1,l2',
    'labels_per_class': 'Comma separated label budgets, e.g. 1,2,3,4,5,20',
    'seeds': 'Number of seeded runs per cell',
    'base_seed': 'First run seed (runs use base_seed + run_index)',
    'out_dir': 'Directory for results.csv and summary.json',
    'jobs': 'Concurrent runs',
    'row_normalize': 'Row-normalize citation features (true/false)',
}

SBM_FLAGS = {
    'sbm_n': 'SBM node count',
    'sbm_classes': 'SBM blocks',
    'sbm_p_in': 'SBM intra-block edge probability',
    'sbm_p_out': 'SBM inter-block edge probability',
    'sbm_feature_dim': 'SBM feature columns',
    'sbm_noise': 'SBM feature noise amplitude',
    'sbm_seed': 'SBM generator seed',
}


def _flag(name: str) -> str:
    return '--' + name.replace('_', '-')


def _add_settings(parser: argparse.ArgumentParser, names: Dict[str, str]):
    for name, help_text in names.items():
        parser.add_argument(_flag(name), dest=name, default=None, help=help_text)


def _add_train_settings(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('training')
    for f in dataclasses.fields(TrainConfig):
        flags = [_flag(f.name)] + (['--lambda'] if f.name == 'lam' else [])
        group.add_argument(*flags, dest=f.name, default=None,
                           help=f"TrainConfig.{f.name} (default: {f.default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Shoestring graph semi-supervised learning experiments')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')
    commands = parser.add_subparsers(dest='command', required=True)

    settings = argparse.ArgumentParser(add_help=False)
    settings.add_argument('--config', help='Flat key = value config file')
    _add_settings(settings, GRID_FLAGS)
    _add_settings(settings, SBM_FLAGS)
    _add_train_settings(settings)

    commands.add_parser('run', parents=[settings], help='Run an experiment grid')

    report = commands.add_parser('report', help='Print the mean(std) table of a results CSV')
    report.add_argument('--results', default=str(Path('results') / RESULTS_CSV), help='results.csv to read')
    report.add_argument('--seconds', action='store_true', help='Report mean wall-clock seconds instead')

    export = commands.add_parser('export-embeddings', parents=[settings],
                                 help='Train one configuration and write its node embeddings')
    export.add_argument('--output', required=True, help='CSV path for the embeddings')

    sbm = commands.add_parser('gen-sbm', help='Write a stochastic block model dataset as content/cites')
    sbm.add_argument('--config', help='Flat key = value config file')
    _add_settings(sbm, SBM_FLAGS)
    sbm.add_argument('--out-dir', dest='out_dir', default='data/sbm', help='Output directory')
    return parser


def _overrides(args: argparse.Namespace, names) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    names = list(GRID_FLAGS) + list(SBM_FLAGS) + [f.name for f in dataclasses.fields(TrainConfig)]
    return ExperimentConfig.from_config(args.config, _overrides(args, names))


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    print("🚀 Shoestring experiment grid")
    print("=" * 50)
    print(f"Dataset: {config.dataset}")
    print(f"Methods: {', '.join(config.methods)} ({config.modes})")
    print(f"Budgets: {config.labels_per_class} x {config.seeds} seeds")
    print("=" * 50)

    results = run_grid(config=config)
    print()
    print(report_table(results))
    failed = sum(len(r.failures) for r in results)
    if failed:
        print(f"\n❌ {failed} run(s) failed; details in {Path(config.out_dir) / 'summary.json'}")
        return EXIT_RUN_FAILED
    print(f"\n✅ Results written to {config.out_dir}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.results)
    if not path.is_file():
        raise ConfigurationError(f"Results file not found: {path}")
    results = aggregate(load_results_csv(path))
    if not results:
        raise InputError(f"{path} holds no runs")
    print(report_table(results, value='seconds' if args.seconds else 'accuracy'))
    return EXIT_OK


def cmd_export_embeddings(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    budget = config.labels_per_class[0]
    path = export_model_embeddings(config, budget, config.train.seed, args.output)
    print(f"✅ Embeddings written to {path}")
    return EXIT_OK


def cmd_gen_sbm(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_config(args.config, _overrides(args, SBM_FLAGS))
    dataset = sbm_generate(config.sbm_n, config.sbm_classes, config.sbm_p_in, config.sbm_p_out,
                           config.sbm_feature_dim, config.sbm_noise, config.sbm_seed)
    content_path, cites_path = write_citation(dataset, args.out_dir)
    print(f"✅ SBM dataset written to {content_path} and {cites_path}")
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'report': cmd_report,
    'export-embeddings': cmd_export_embeddings,
    'gen-sbm': cmd_gen_sbm,
}


def main(argv=None) -> int:
    """Main function for command line usage"""
    load_dotenv('.env.local')
    load_dotenv()

    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, InputError, DataFormatError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except ShoestringError as e:
        logger.error(f"❌ {e}", exc_info=args.verbose)
        return EXIT_RUN_FAILED


if __name__ == '__main__':
    exit_code = main()
    sys.exit(exit_code)
