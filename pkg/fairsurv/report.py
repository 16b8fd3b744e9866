"""
Report
======

Stakeholder outputs built from precision reports:

- plot series: the prediction instability plot (each individual's true risk
  against their uncertainty interval, with LOWESS curves through the lower and
  upper bounds), the classification instability plot (misclassification
  probability against true risk) and the expected net-benefit loss plot;
- subgroup summaries for fairness checks;
- summary tables in the "mean (min, median, max)" layout;
- deterministic CSV, JSON and SVG writers.
"""

import json
import logging
import math
import os
from collections import namedtuple

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import utils
from fairsurv.precision import misclass_column
from fairsurv.precision import nb_loss_column


logger = logging.getLogger(__name__)

PREDICTION_INSTABILITY = 'prediction_instability'
CLASSIFICATION_INSTABILITY = 'classification_instability'
NB_LOSS = 'nb_loss'

LOWESS_CHUNK_CELLS = 4000000
LOW_N = 2
SUMMARY_STATISTICS = ('mean', 'min', 'median', 'max')


PlotSeries = namedtuple('PlotSeries', [
    'kind', 'name', 'x', 'lower', 'upper', 'y', 'smooth_lower',
    'smooth_upper', 'smooth_y', 'thresholds'])


def lowess(x, y, bandwidth=consts.LOWESS_BANDWIDTH):
    """Locally weighted linear regression evaluated at every x.

    Each point is fitted with tricube weights over its ⌈bandwidth·n⌉ nearest
    neighbours (one pass, no robustness iterations).

    Args:
        x (array): Abscissae.
        y (array): Ordinates.
        bandwidth (float): Fraction of the points in each neighbourhood.
    Return:
        numpy.ndarray: Smoothed y at each x.
    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if y.size != n:
        raise exceptions.InvalidArgumentError(
            'x and y should have the same length.')
    if n < consts.LOWESS_MIN_POINTS:
        raise exceptions.InvalidArgumentError(
            'LOWESS needs at least {} points.'.format(
                consts.LOWESS_MIN_POINTS))
    if not 0 < bandwidth <= 1:
        raise exceptions.InvalidArgumentError(
            'The bandwidth should be in (0, 1].')

    r = min(n, max(int(math.ceil(bandwidth * n)), 3))
    chunk = max(1, LOWESS_CHUNK_CELLS // n)
    smoothed = np.empty(n)

    for start in range(0, n, chunk):
        centres = x[start:start + chunk]
        distances = np.abs(centres[:, None] - x[None, :])
        radius = np.partition(distances, r - 1, axis=1)[:, r - 1]
        radius = np.maximum(radius, 1e-12 * max(1.0, float(np.abs(x).max())))
        weights = np.clip(distances / radius[:, None], 0.0, 1.0)
        weights = (1.0 - weights ** 3) ** 3

        total = weights.sum(axis=1)
        x_mean = (weights @ x) / total
        y_mean = (weights @ y) / total
        dx = x[None, :] - x_mean[:, None]
        sxx = np.sum(weights * dx ** 2, axis=1)
        sxy = np.sum(weights * dx * (y[None, :] - y_mean[:, None]), axis=1)
        # A neighbourhood with a single distinct x falls back to its mean.
        flat = sxx <= 1e-14 * np.maximum(np.sum(weights * x ** 2, axis=1), 1e-300)
        slope = np.where(flat, 0.0, sxy / np.where(flat, 1.0, sxx))
        smoothed[start:start + chunk] = y_mean + slope * (centres - x_mean)

    return smoothed


def prediction_series(report, name=None, bandwidth=consts.LOWESS_BANDWIDTH):
    frame = report.individuals
    x = frame['true_risk'].to_numpy()
    lower = frame['lower'].to_numpy()
    upper = frame['upper'].to_numpy()
    smooth_lower = lowess(x, lower, bandwidth)
    # Local linear weights can be negative at the edges.
    smooth_upper = np.maximum(lowess(x, upper, bandwidth), smooth_lower)
    return PlotSeries(
        kind=PREDICTION_INSTABILITY, name=name or PREDICTION_INSTABILITY,
        x=x, lower=lower, upper=upper, y=None, smooth_lower=smooth_lower,
        smooth_upper=smooth_upper, smooth_y=None,
        thresholds=list(report.thresholds))


def classification_series(
        report, threshold, name=None, bandwidth=consts.LOWESS_BANDWIDTH):
    return _metric_series(
        report, CLASSIFICATION_INSTABILITY, misclass_column(threshold),
        threshold, name, bandwidth)


def nb_loss_series(
        report, threshold, name=None, bandwidth=consts.LOWESS_BANDWIDTH):
    return _metric_series(
        report, NB_LOSS, nb_loss_column(threshold), threshold, name,
        bandwidth)


def _metric_series(report, kind, column, threshold, name, bandwidth):
    frame = report.individuals
    x = frame['true_risk'].to_numpy()
    y = frame[column].to_numpy()
    return PlotSeries(
        kind=kind, name=name or kind, x=x, lower=None, upper=None, y=y,
        smooth_lower=None, smooth_upper=None,
        smooth_y=lowess(x, y, bandwidth), thresholds=[threshold])


def report_series(
        report, suffix='', groups=(), bandwidth=consts.LOWESS_BANDWIDTH):
    """Every plot series of a precision report.

    Files are named ``<kind>[@threshold][__n=N][__group=level]``; the
    threshold only appears when several thresholds are used.
    """

    def stem(kind, threshold=None):
        name = kind
        if threshold is not None and len(report.thresholds) > 1:
            name += '@{:g}'.format(threshold)
        return name + suffix

    def build(target, extra=''):
        series = [prediction_series(
            target, stem(PREDICTION_INSTABILITY) + extra, bandwidth)]
        for threshold in target.thresholds:
            series.append(classification_series(
                target, threshold,
                stem(CLASSIFICATION_INSTABILITY, threshold) + extra,
                bandwidth))
            series.append(nb_loss_series(
                target, threshold, stem(NB_LOSS, threshold) + extra,
                bandwidth))
        return series

    series = build(report)
    for group in groups:
        labels = report.group_labels[group]
        for level in np.unique(labels):
            subset = report.subset(labels == level)
            if len(subset) < consts.LOWESS_MIN_POINTS:
                logger.warning(
                    'Group %s=%s has %d individuals: no plot.', group, level,
                    len(subset))
                continue
            series += build(subset, '__{}={}'.format(group, level))
    return series


def subgroup_summary(report, group, fairness_factor=consts.FAIRNESS_FACTOR):
    """Per-level aggregates of a fairness group.

    A level is flagged for every metric whose mean exceeds the overall mean by
    the fairness factor; levels with fewer than two individuals are flagged
    low-n.

    Return:
        DataFrame: One row per level, then an ``(all)`` row.
    """

    if group not in report.group_labels:
        raise exceptions.InvalidArgumentError(
            'Unknown group "{}".'.format(group))

    labels = report.group_labels[group]
    overall = report.aggregate()
    rows = []
    for level in np.unique(labels):
        aggregate = report.aggregate(labels == level)
        flagged = [
            metric for metric in report.metrics
            if aggregate[metric]['mean'] >
            fairness_factor * overall[metric]['mean']]
        rows.append(_summary_row(
            report, group, str(level), aggregate,
            low_n=aggregate['count'] < LOW_N, flagged=flagged))
    rows.append(_summary_row(
        report, group, '(all)', overall, low_n=False, flagged=[]))
    return pd.DataFrame(rows)


def _summary_row(report, group, level, aggregate, low_n, flagged):
    row = dict(n=report.n, group=group, level=level, count=aggregate['count'])
    for metric in report.metrics:
        for statistic, value in aggregate[metric].items():
            row['{}_{}'.format(metric, statistic)] = value
    row['low_n'] = low_n
    row['flagged'] = ';'.join(flagged)
    return row


def range_summary(report, max_true_risk=None, min_true_risk=None):
    """Aggregates over individuals whose true risk is within a range."""

    risk = report.individuals['true_risk'].to_numpy()
    mask = np.ones(risk.size, dtype=bool)
    if max_true_risk is not None:
        mask &= risk <= max_true_risk
    if min_true_risk is not None:
        mask &= risk >= min_true_risk
    return report.aggregate(mask)


def format_summary(values):
    return '{:.2g} ({:.2g}, {:.2g}, {:.2g})'.format(
        *[values[statistic] for statistic in SUMMARY_STATISTICS])


def table_rows(reports, ranges=()):
    """Summary table: one row per (n, scope, metric).

    Args:
        reports (list): PrecisionReport per sample size.
        ranges (list): Optional maximum true risks for extra scopes.
    Return:
        DataFrame
    """

    rows = []
    for report in reports:
        scopes = [('all', report.aggregate())]
        for limit in ranges:
            try:
                scopes.append((
                    'true_risk<={:g}'.format(limit),
                    range_summary(report, max_true_risk=limit)))
            except exceptions.EmptyScopeError:
                logger.warning(
                    'No individual with true risk ≤ %g at n=%d.', limit,
                    report.n)

        for scope, aggregate in scopes:
            for metric in report.metrics:
                values = aggregate[metric]
                row = dict(
                    n=report.n, scope=scope, metric=metric,
                    count=aggregate['count'], summary=format_summary(values))
                row.update({
                    statistic: values[statistic]
                    for statistic in SUMMARY_STATISTICS})
                row['sum'] = values.get('sum')
                rows.append(row)
    return pd.DataFrame(rows)


def series_frame(series):
    columns = dict(true_risk=series.x)
    if series.kind == PREDICTION_INSTABILITY:
        columns.update(
            lower=series.lower, upper=series.upper,
            smooth_lower=series.smooth_lower,
            smooth_upper=series.smooth_upper)
    else:
        columns.update(value=series.y, smooth_value=series.smooth_y)
    return pd.DataFrame(columns)


def render_svg(series, path):
    """Static SVG of one series; identical inputs give identical bytes."""

    order = np.argsort(series.x, kind='stable')
    figure = Figure(figsize=(6.0, 4.5))
    axes = figure.subplots()

    if series.kind == PREDICTION_INSTABILITY:
        axes.vlines(
            series.x, series.lower, series.upper, colors='0.6',
            linewidth=0.5)
        axes.plot(
            series.x[order], series.smooth_lower[order], color='C0',
            label='smoothed lower bound')
        axes.plot(
            series.x[order], series.smooth_upper[order], color='C1',
            label='smoothed upper bound')
        axes.set_ylabel('Uncertainty interval for risk')
        axes.set_ylim(0.0, 1.0)
    else:
        axes.scatter(series.x, series.y, s=4, color='0.5')
        axes.plot(
            series.x[order], series.smooth_y[order], color='C0',
            label='smoothed')
        axes.set_ylabel(
            'Misclassification probability'
            if series.kind == CLASSIFICATION_INSTABILITY
            else 'Expected loss in net benefit')

    for threshold in series.thresholds:
        axes.axvline(threshold, color='C3', linestyle='--', linewidth=0.8)
    axes.set_xlabel('True risk')
    axes.set_xlim(0.0, 1.0)
    axes.set_title(series.name)
    axes.legend(loc='upper left', fontsize='small')

    with matplotlib.rc_context({'svg.hashsalt': consts.SVG_HASH_SALT}):
        figure.savefig(path, format='svg', metadata={'Date': None})


def emit_plots(series, out_dir):
    """Write ``<name>.csv`` and ``<name>.svg`` for every series.

    Return:
        list: Paths written.
    """

    for item in series:
        if len(item.x) == 0:
            raise exceptions.InvalidArgumentError(
                'Cannot plot an empty cohort ({}).'.format(item.name))

    ensure_directory(out_dir)
    written = []
    for item in series:
        csv_path = os.path.join(out_dir, item.name + '.csv')
        svg_path = os.path.join(out_dir, item.name + '.svg')
        write_csv(series_frame(item), csv_path)
        try:
            render_svg(item, svg_path)
        except OSError as e:
            raise exceptions.OutputError(
                'Cannot write "{}": {}.'.format(svg_path, e))
        written += [csv_path, svg_path]
    logger.info('Wrote %d plot files to %s.', len(written), out_dir)
    return written


def ensure_directory(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise exceptions.OutputError(
            'Cannot create directory "{}": {}.'.format(path, e))


def write_csv(frame, path):
    try:
        frame.to_csv(
            path, index=False, float_format='%.10g', lineterminator='\n')
    except OSError as e:
        raise exceptions.OutputError('Cannot write "{}": {}.'.format(path, e))
    logger.debug('Wrote %s.', path)


def write_json(data, path):
    try:
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(
                utils.to_builtin(data), handle, indent=2, sort_keys=True,
                ensure_ascii=False)
            handle.write('\n')
    except OSError as e:
        raise exceptions.OutputError('Cannot write "{}": {}.'.format(path, e))
    logger.debug('Wrote %s.', path)
