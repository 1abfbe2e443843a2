# -*- coding: utf-8 -*-
"""
Emisión de reportes: tablas de accuracy, importancia por feature y por
intervalo horario, series por instancia y gráficos SVG.
"""
import json
import logging
import math
from pathlib import Path

import pandas as pd
from genshi.builder import tag

from .config import ARCH_LABELS, FEATURE_SETS, ROW_TIMES, TABLE_ROWS, row_label
from .errors import OutputError
from .featurize import feature_columns

logger = logging.getLogger(__name__)

SVG_NS = 'http://www.w3.org/2000/svg'
PALETTE = (
    '#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd', '#8c564b', '#e377c2', '#7f7f7f',
    '#bcbd22', '#17becf', '#393b79', '#637939', '#8c6d31', '#843c39', '#7b4173', '#3182bd',
)


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ''
    return '%.2f' % value


def accuracy_table(report, split='test'):
    """One row per feature set (benchmark rows included), one column per ticker and architecture."""
    tickers = []
    archs = []
    for cell in report.cells:
        if cell.ticker not in tickers:
            tickers.append(cell.ticker)
        if cell.arch not in archs:
            archs.append(cell.arch)
    columns = ['%s %s' % (t, ARCH_LABELS.get(a, a)) for t in tickers for a in archs]
    by_key = {c.key: c for c in report.cells}
    rows = []
    for key, title in TABLE_ROWS:
        row = [title]
        for t in tickers:
            for a in archs:
                if key not in FEATURE_SETS:
                    row.append('n/a')
                    continue
                cell = by_key.get((t, key, a))
                if cell is None:
                    row.append('')
                elif cell.failed:
                    row.append('failed')
                else:
                    row.append(_fmt(cell.mean(split)))
        rows.append(row)
    return pd.DataFrame(rows, columns=['feature_set'] + columns)


def _explanation_label(explanation, report):
    if sum(1 for e in report.explanations if e.ticker == explanation.ticker) > 1:
        return '%s %s %s' % (explanation.ticker, explanation.feature_set, ARCH_LABELS.get(explanation.arch))
    return explanation.ticker


def importance_table(report, axis, feature_set='proposed'):
    """
    Feature-wise (one row per matrix column of ``feature_set``) or time-wise
    (12 rows) importance, one column per explained model of that feature set.
    """
    explained = [e for e in report.explanations if e.feature_set == feature_set]
    if not explained:
        return None
    keys = feature_columns(feature_set) if axis == 'feature' else ROW_TIMES
    index = list(keys) if axis == 'feature' else [row_label(k) for k in keys]
    frame = pd.DataFrame(index=pd.Index(index, name=axis))
    for explanation in explained:
        table = explanation.feature_table if axis == 'feature' else explanation.time_table
        values = table.as_dict()
        frame[_explanation_label(explanation, report)] = [
            '%.4f' % values[k] if k in values else '' for k in keys
        ]
    return frame


def series_svg(series, title='', width=800, height=400, margin=40):
    """Line plot with one polyline per feature column."""
    days = list(series.index)
    peak = float(series.values.max()) if len(days) and series.size else 1.0
    peak = peak if peak > 0 else 1.0
    span_x = width - 2 * margin
    span_y = height - 2 * margin
    step = span_x / max(1, len(days) - 1)

    lines = []
    legend = []
    for k, column in enumerate(series.columns):
        color = PALETTE[k % len(PALETTE)]
        points = ' '.join(
            '%.2f,%.2f' % (margin + i * step, height - margin - span_y * float(v) / peak)
            for i, v in enumerate(series[column].tolist())
        )
        lines.append(tag.polyline(points=points, fill='none', stroke=color,
                                  **{'stroke-width': '1.5', 'data-feature': column}))
        legend.append(tag.text(column, x=str(width - margin + 4), y=str(margin + 12 * k),
                               fill=color, **{'font-size': '9'}))

    axes = tag.g(
        tag.line(x1=str(margin), y1=str(height - margin), x2=str(width - margin), y2=str(height - margin),
                 stroke='#000'),
        tag.line(x1=str(margin), y1=str(margin), x2=str(margin), y2=str(height - margin), stroke='#000'),
        tag.text(days[0] if days else '', x=str(margin), y=str(height - margin + 16), **{'font-size': '10'}),
        tag.text(days[-1] if days else '', x=str(width - margin), y=str(height - margin + 16),
                 **{'font-size': '10', 'text-anchor': 'end'}),
        tag.text('%.4g' % peak, x=str(margin - 4), y=str(margin), **{'font-size': '10', 'text-anchor': 'end'}),
        class_='axes',
    )
    svg = tag.svg(
        tag.title(title),
        axes,
        tag.g(*lines, class_='series'),
        tag.g(*legend, class_='legend'),
        xmlns=SVG_NS, width=str(width + 80), height=str(height),
        viewBox='0 0 %d %d' % (width + 80, height),
    )
    return svg.generate().render('xml', encoding=None)


def _write(path, writer):
    try:
        writer(path)
    except OSError as exc:
        raise OutputError('cannot write %s: %s' % (path, exc))
    logger.info('wrote %s', path)
    return path


def emit_reports(report, outdir):
    """Write every report file under ``outdir`` and return the written paths."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError('cannot create report directory %s: %s' % (outdir, exc))
    written = []
    for split in ('test', 'val', 'train'):
        frame = accuracy_table(report, split)
        written.append(_write(outdir / ('accuracy_%s.csv' % split), lambda p: frame.to_csv(p, index=False)))

    explained_sets = {e.feature_set for e in report.explanations}
    for feature_set in (fs for fs in FEATURE_SETS if fs in explained_sets):
        suffix = '' if feature_set == 'proposed' else '_' + feature_set
        for axis in ('feature', 'time'):
            frame = importance_table(report, axis, feature_set)
            name = '%s_importance%s.csv' % (axis, suffix)
            written.append(_write(outdir / name, lambda p: frame.to_csv(p)))

    for explanation in report.explanations:
        if explanation.feature_set != 'proposed':
            continue
        stem = 'instance_series_%s' % explanation.ticker
        if explanation.arch != 'cnn':
            stem += '_%s' % explanation.arch
        series = explanation.series
        written.append(_write(outdir / (stem + '.csv'), lambda p: series.to_csv(p)))
        svg = series_svg(series, title='%s feature importance per correct prediction' % explanation.ticker)
        written.append(_write(outdir / (stem + '.svg'), lambda p: p.write_text(svg, encoding='utf-8')))

    payload = json.dumps(report.to_dict(), indent=1, sort_keys=True)
    written.append(_write(outdir / 'report.json', lambda p: p.write_text(payload, encoding='utf-8')))
    return written


def load_report(path):
    from .experiment import RunReport
    return RunReport.from_dict(json.loads(Path(path).read_text(encoding='utf-8')))
