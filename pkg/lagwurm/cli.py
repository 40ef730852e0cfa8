"""Command-line interface: ``lagwurm discover|generate|bench|null-table``.

Exit codes are 0 on success, 2 for configuration and usage errors and 3
for errors while running.
"""

import argparse
import json
import logging
from pathlib import Path
import sys

from . import __version__
from .bench import (
    PRESETS, ExperimentConfig, generate_ensemble, preset, run_experiment,
    score_against_truth)
from .dataset import load_csv
from .errors import ConfigError, LagwurmError
from .nulltable import build_gpdc_null_table
from .pcmci import AIC_GRID, DiscoveryConfig
from .registry import (
    METHOD_REGISTRY, TEST_REGISTRY, make_test, method_for)
from .synthgen import MODES, POOLS, GroundTruthGraph

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def alpha_pc_arg(text):
    if text == 'aic':
        return AIC_GRID
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f'expected a level or "aic", got {text!r}') from None


def px_arg(text):
    if text == 'all':
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f'expected an integer or "all", got {text!r}') from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog='lagwurm',
        description='Causal discovery in multivariate time series.')
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='more log output, repeatable')
    parser.add_argument('-q', '--quiet', action='store_true',
                        help='only log errors')
    parser.add_argument('--no-timing', action='store_true',
                        help='write null for all wall-clock fields')
    commands = parser.add_subparsers(dest='command', required=True)

    discover = commands.add_parser(
        'discover', help='estimate the graph of a CSV dataset')
    discover.add_argument('data', type=Path)
    discover.add_argument('--out', type=Path,
                          help='graph JSON file, default stdout')
    discover.add_argument('--method', default='pcmci',
                          choices=sorted(METHOD_REGISTRY))
    discover.add_argument('--test', default='parcorr',
                          choices=sorted(TEST_REGISTRY))
    discover.add_argument('--tau-max', type=int, default=5)
    discover.add_argument('--alpha-pc', type=alpha_pc_arg, default=0.2)
    discover.add_argument('--alpha-mci', type=float, default=0.05)
    discover.add_argument('--px', type=px_arg, default=None)
    discover.add_argument('--q-max', type=int, default=1)
    discover.add_argument('--fdr', action='store_true')
    discover.add_argument('--contemporaneous', action='store_true')
    discover.add_argument('--seed', type=int, default=0)
    discover.add_argument('--workers', type=int, default=1)
    discover.add_argument('--no-standardize', action='store_true')
    discover.add_argument('--null-cache', type=Path,
                          help='directory of GPDC null distribution files')
    discover.add_argument('--truth', type=Path,
                          help='ground truth JSON to score the result')
    discover.set_defaults(func=cmd_discover)

    generate = commands.add_parser(
        'generate', help='write random models and simulated datasets')
    generate.add_argument('--config', type=Path)
    generate.add_argument('--N', type=int, default=5)
    generate.add_argument('--L', type=int)
    generate.add_argument('--c', type=float, default=0.287)
    generate.add_argument('--T', type=int, default=150)
    generate.add_argument('--mode', choices=MODES, default='linear')
    generate.add_argument('--pool', choices=POOLS, default='mixed')
    generate.add_argument('--sigma', type=float, default=0.0)
    generate.add_argument('--networks', type=int, default=1)
    generate.add_argument('--realizations', type=int, default=1)
    generate.add_argument('--seed', type=int, default=0)
    generate.add_argument('--out', type=Path, default=Path('.'))
    generate.set_defaults(func=cmd_generate)

    bench = commands.add_parser(
        'bench', help='run a benchmark experiment')
    source = bench.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', type=Path)
    source.add_argument('--preset', choices=sorted(PRESETS))
    bench.add_argument('--out', type=Path, required=True)
    bench.add_argument('--workers', type=int)
    bench.add_argument('--seed', type=int)
    bench.add_argument('--networks', type=int)
    bench.add_argument('--realizations', type=int)
    bench.set_defaults(func=cmd_bench)

    null_table = commands.add_parser(
        'null-table', help='precompute GPDC null distributions')
    null_table.add_argument('--sizes', type=int, nargs='+', required=True)
    null_table.add_argument('--b-null', type=int, default=1000)
    null_table.add_argument('--seed', type=int, default=0)
    null_table.add_argument('--cache-dir', type=Path, required=True)
    null_table.set_defaults(func=cmd_null_table)
    return parser


def _write_text(text, path):
    if path is None:
        sys.stdout.write(text + '\n')
    else:
        path.write_text(text + '\n', encoding='utf-8')


def _fmt(rate):
    return 'n/a' if rate is None else f'{rate:.3f}'


def cmd_discover(args):
    cfg = DiscoveryConfig(
        tau_max=args.tau_max, alpha_pc=args.alpha_pc,
        alpha_mci=args.alpha_mci, p_x=args.px, q_max=args.q_max,
        fdr=args.fdr, contemporaneous=args.contemporaneous,
        seed=args.seed, workers=args.workers)
    registered = method_for(args.method)
    test = None
    if registered.needs_test:
        params = {'seed': args.seed}
        if args.test == 'gpdc' and args.null_cache is not None:
            params['cache_dir'] = args.null_cache
        test = make_test(args.test, **params)
    truth = None
    if args.truth is not None:
        truth = GroundTruthGraph.from_json(
            args.truth.read_text(encoding='utf-8'))
    ds = load_csv(args.data, standardize=not args.no_standardize)
    graph = registered.run(ds, cfg, test)
    _write_text(graph.to_json(timing=not args.no_timing), args.out)
    if truth is not None:
        scores = score_against_truth(graph, truth)
        sys.stderr.write(
            f'TP={scores.count("TP")} FP={scores.count("FP")} '
            f'TN={scores.count("TN")} FN={scores.count("FN")} '
            f'TPR={_fmt(scores.tpr)} FPR={_fmt(scores.fpr)}\n')
    return EXIT_OK


def cmd_generate(args):
    if args.config is not None:
        cfg = ExperimentConfig.from_json(
            args.config.read_text(encoding='utf-8'))
    else:
        cfg = ExperimentConfig(
            N=args.N, L=args.L, c=args.c, T=args.T, mode=args.mode,
            pool=args.pool, obs_noise_sd=args.sigma,
            networks=args.networks, realizations=args.realizations,
            seed=args.seed)
    generate_ensemble(cfg, args.out)
    return EXIT_OK


def cmd_bench(args):
    overrides = {key: getattr(args, key)
                 for key in ('workers', 'seed', 'networks', 'realizations')
                 if getattr(args, key) is not None}
    if args.preset is not None:
        cfg = preset(args.preset, **overrides)
    else:
        try:
            doc = json.loads(args.config.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ConfigError(f'{args.config} is not valid JSON: {e}') \
                from e
        if not isinstance(doc, dict):
            raise ConfigError(f'{args.config} must hold a JSON object')
        cfg = ExperimentConfig.from_dict({**doc, **overrides})
    metrics = run_experiment(cfg, args.out, timing=not args.no_timing)
    failed = sum(sum(by_setting.values())
                 for by_setting in metrics['failures'].values())
    logger.info('wrote results to %s, %d failed runs', args.out, failed)
    return EXIT_OK


def cmd_null_table(args):
    table = build_gpdc_null_table(args.sizes, B_null=args.b_null,
                                  seed=args.seed, cache_dir=args.cache_dir)
    logger.info('null distributions for %s in %s', table.sizes(),
                args.cache_dir)
    return EXIT_OK


def setup_logging(verbose, quiet):
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format='%(levelname)s %(name)s: %(message)s')


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    setup_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error('configuration error: %s', e)
        return EXIT_CONFIG
    except (LagwurmError, OSError) as e:
        logger.error('%s: %s', type(e).__name__, e)
        return EXIT_RUNTIME
