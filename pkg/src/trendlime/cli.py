# -*- coding: utf-8 -*-
"""
Línea de comandos de trendlime.

Códigos de salida: 0 éxito, 1 error fatal, 2 experimento con celdas fallidas.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ARCHS, FEATURE_SETS, ExperimentConfig, load_config
from .errors import TrendLimeError
from .experiment import (
    RunReport, explain_model, load_corpus, prepare_instances, run_experiment, split_chronological,
)
from .explain import write_attributions
from .featurize import build_instances, score_tweets, write_matrices
from .fixture import generate_fixture
from .models import load_model, save_model
from .reports import emit_reports, importance_table, load_report
from .trainer import evaluate, grid_search, train

logger = logging.getLogger('trendlime')

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _config(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, 'seed', None) is not None:
        config = config.replace(seed=args.seed)
    return config


def _ticker(args, config):
    return (args.ticker or config.tickers[0]).upper()


def _splits(config, ticker, feature_set, arch):
    corpus, history = load_corpus(config, ticker)
    instances = build_instances(corpus, history, feature_set, config.pipeline)
    return split_chronological(prepare_instances(instances, arch), config.split)


def cmd_fixture(args):
    outdir = Path(args.out or 'fixture')
    manifest = generate_fixture(args.seed if args.seed is not None else 0, args.days, outdir, ticker=args.ticker)
    print(json.dumps({'out': str(outdir), 'planted_days': len(manifest['planted_days']),
                      'tweets': manifest['n_tweets']}))
    return EXIT_OK


def cmd_build_features(args):
    config = _config(args)
    outdir = Path(args.out or 'features')
    for ticker in config.tickers:
        corpus, history = load_corpus(config, ticker)
        scored = score_tweets(corpus, history, config.pipeline)
        for feature_set in config.feature_sets:
            instances = build_instances(corpus, history, feature_set, config.pipeline, scored)
            path = write_matrices(instances, outdir / ('%s_%s.jsonl' % (ticker, feature_set)))
            logger.info('%s %s: %d matrices -> %s', ticker, feature_set, len(instances), path)
    return EXIT_OK


def cmd_train(args):
    config = _config(args)
    ticker = _ticker(args, config)
    train_set, val_set, _ = _splits(config, ticker, args.feature_set, args.arch)
    base = config.model.replace(arch=args.arch, seed=config.seed)
    best, _ = grid_search(train_set, val_set, base)
    model = train(train_set, val_set, best)
    path = save_model(model, Path(args.out or 'model') / ('%s_%s_%s.json' % (ticker, args.feature_set, args.arch)))
    print(json.dumps({'model': str(path), 'l2': best.l2, 'best_epoch': model.best_epoch,
                      'val_acc': 100.0 * evaluate(model, val_set)}))
    return EXIT_OK


def cmd_evaluate(args):
    config = _config(args)
    model = load_model(args.model)
    ticker = _ticker(args, config)
    parts = _splits(config, ticker, args.feature_set, model.arch)
    result = {name: 100.0 * evaluate(model, part) for name, part in zip(('train', 'val', 'test'), parts)}
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_explain(args):
    config = _config(args)
    model = load_model(args.model)
    ticker = _ticker(args, config)
    train_set, _, test_set = _splits(config, ticker, args.feature_set, model.arch)
    explanation = explain_model(model, train_set, test_set, config.lime.replace(seed=config.seed),
                                ticker=ticker, feature_set=args.feature_set)
    outdir = Path(args.out or 'explain')
    write_attributions(explanation.attributions, outdir / ('attributions_%s.jsonl' % ticker))
    report = RunReport(explanations=[explanation])
    for axis in ('feature', 'time'):
        frame = importance_table(report, axis, args.feature_set)
        if frame is not None:
            frame.to_csv(outdir / ('%s_importance.csv' % axis))
    return EXIT_OK


def cmd_report(args):
    if args.from_json:
        report = load_report(args.from_json)
    else:
        report = run_experiment(_config(args))
    emit_reports(report, Path(args.out or 'reports'))
    if report.failed_cells:
        for cell in report.failed_cells:
            logger.error('cell %s failed: %s', '/'.join(cell.key), cell.error)
        return EXIT_PARTIAL
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog='trendlime', description=__doc__.strip().splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON config file')
    common.add_argument('--seed', type=int, help='base seed')
    common.add_argument('--out', help='output directory')
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('fixture', parents=[common], help='write a synthetic planted-signal corpus')
    p.add_argument('--days', type=int, default=400)
    p.add_argument('--ticker', default='AAPL')
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser('build-features', parents=[common], help='write feature matrices as line-JSON')
    p.set_defaults(func=cmd_build_features)

    for name, func, helptext in (
        ('train', cmd_train, 'grid-search and train one model'),
        ('evaluate', cmd_evaluate, 'accuracy of a saved model on each split'),
        ('explain', cmd_explain, 'attribute test predictions of a saved model'),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument('--ticker')
        p.add_argument('--feature-set', default='proposed', choices=FEATURE_SETS)
        if name == 'train':
            p.add_argument('--arch', default='cnn', choices=ARCHS)
        else:
            p.add_argument('--model', required=True, help='checkpoint written by train')
        p.set_defaults(func=func)

    p = sub.add_parser('report', parents=[common], help='run the experiment grid and write reports')
    p.add_argument('--from', dest='from_json', help='re-emit files from a saved report.json')
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
    )
    try:
        return args.func(args)
    except TrendLimeError as exc:
        logger.error('%s', exc)
        return EXIT_FATAL


if __name__ == '__main__':
    sys.exit(main())
