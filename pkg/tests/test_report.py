import json
import os

import numpy as np
import pandas as pd
import pytest

from fairsurv import exceptions
from fairsurv import fisher
from fairsurv import precision
from fairsurv import report
from fairsurv import synth
from fairsurv.precision import PrecisionReport
from tests.fixtures import cohorts


@pytest.fixture(scope='module')
def profile():
    table = cohorts.gbsg_like_table(n=400)
    model = cohorts.gbsg_like_model(table)
    followup = synth.simulate_followup(
        model, table, cohorts.GBSG_CENSORING, seed=560)
    info = fisher.unit_information(model, table, followup)
    return precision.precision_profile(
        model, table, n=355, thresholds=[0.2], info=info, draws=50)


def handmade_report():
    width = np.array([0.5, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1])
    individuals = pd.DataFrame(dict(
        mu=np.zeros(7), se_mu=np.ones(7),
        true_risk=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
        lower=np.zeros(7), upper=width, width=width, mape=width / 4,
        rmspe=width / 3))
    labels = np.array(['a', 'a', 'a', 'b', 'b', 'b', 'c'])
    return PrecisionReport(
        individuals, 100, 5.0, 0.95, [], group_labels=dict(group=labels))


def test_lowess_reproduces_lines():
    x = np.linspace(0, 1, 40)
    np.testing.assert_allclose(report.lowess(x, 2 * x + 1), 2 * x + 1)
    np.testing.assert_allclose(report.lowess(x, np.full(40, 0.3)), 0.3)


def test_lowess_smooths_noise():
    rng = np.random.default_rng(0)
    x = np.sort(rng.random(2000))
    y = np.sin(3 * x) + rng.normal(scale=0.1, size=2000)
    smoothed = report.lowess(x, y, bandwidth=0.1)
    inner = (x > 0.1) & (x < 0.9)
    assert np.abs(smoothed - np.sin(3 * x))[inner].max() < 0.06


def test_lowess_order_does_not_matter():
    rng = np.random.default_rng(1)
    x = rng.random(50)
    y = rng.random(50)
    order = np.argsort(x)
    np.testing.assert_allclose(
        report.lowess(x, y)[order], report.lowess(x[order], y[order]))


def test_lowess_repeated_x():
    x = np.array([0.2] * 6 + [0.8] * 6)
    y = np.array([1.0] * 6 + [3.0] * 6)
    smoothed = report.lowess(x, y, bandwidth=0.5)
    np.testing.assert_allclose(smoothed[:6], 1.0)
    np.testing.assert_allclose(smoothed[6:], 3.0)


def test_lowess_errors():
    with pytest.raises(exceptions.InvalidArgumentError):
        report.lowess([1, 2, 3, 4, 5], [1, 2, 3, 4])
    with pytest.raises(exceptions.InvalidArgumentError):
        report.lowess([1, 2, 3, 4], [1, 2, 3, 4])
    for bandwidth in (0, 1.5):
        with pytest.raises(exceptions.InvalidArgumentError):
            report.lowess(np.arange(10), np.arange(10), bandwidth=bandwidth)


def test_prediction_series(profile):
    series = report.prediction_series(profile)
    assert series.kind == report.PREDICTION_INSTABILITY
    assert series.name == report.PREDICTION_INSTABILITY
    assert series.thresholds == [0.2]
    assert (series.smooth_upper >= series.smooth_lower).all()
    np.testing.assert_array_equal(
        series.x, profile.individuals['true_risk'])


def test_classification_series(profile):
    series = report.classification_series(profile, 0.2, name='c')
    assert series.name == 'c'
    np.testing.assert_array_equal(
        series.y, profile.individuals['misclass@0.2'])
    assert series.thresholds == [0.2]
    assert series.smooth_y.shape == series.y.shape


def test_report_series_names(profile):
    names = [
        series.name for series in report.report_series(
            profile, suffix='__n=355', groups=['meno'])]
    assert names == [
        'prediction_instability__n=355',
        'classification_instability__n=355',
        'nb_loss__n=355',
        'prediction_instability__n=355__meno=0',
        'classification_instability__n=355__meno=0',
        'nb_loss__n=355__meno=0',
        'prediction_instability__n=355__meno=1',
        'classification_instability__n=355__meno=1',
        'nb_loss__n=355__meno=1',
    ]


def test_report_series_several_thresholds(profile):
    two = PrecisionReport(
        profile.individuals.assign(**{
            'misclass@0.1': 0.0, 'nb_loss@0.1': 0.0}),
        profile.n, profile.horizon, profile.level, [0.1, 0.2])
    names = [series.name for series in report.report_series(two)]
    assert 'classification_instability@0.1' in names
    assert 'nb_loss@0.2' in names


def test_report_series_skips_small_groups():
    handmade = handmade_report()
    names = [
        series.name for series in report.report_series(
            handmade, groups=['group'])]
    assert names == ['prediction_instability']


def test_subgroup_summary():
    frame = report.subgroup_summary(handmade_report(), 'group')

    assert list(frame['level']) == ['a', 'b', 'c', '(all)']
    assert list(frame['count']) == [3, 3, 1, 7]
    assert list(frame['low_n']) == [False, False, True, False]
    assert frame['flagged'].iloc[0] == 'width;mape;rmspe'
    assert frame['flagged'].iloc[1] == ''
    assert frame['width_mean'].iloc[0] == pytest.approx(0.5)
    assert frame['width_mean'].iloc[3] == pytest.approx(1.9 / 7)
    assert (frame['n'] == 100).all()

    relaxed = report.subgroup_summary(
        handmade_report(), 'group', fairness_factor=2)
    assert relaxed['flagged'].iloc[0] == ''

    with pytest.raises(exceptions.InvalidArgumentError):
        report.subgroup_summary(handmade_report(), 'meno')


def test_subgroup_summary_partitions_the_cohort(profile):
    frame = report.subgroup_summary(profile, 'meno')
    levels = frame.loc[frame['level'] != '(all)']
    assert levels['count'].sum() == len(profile)
    weighted = (levels['width_mean'] * levels['count']).sum() / len(profile)
    assert weighted == pytest.approx(
        frame.loc[frame['level'] == '(all)', 'width_mean'].iloc[0])


def test_range_summary(profile):
    summary = report.range_summary(profile, max_true_risk=0.3)
    risk = profile.individuals['true_risk']
    assert summary['count'] == int((risk <= 0.3).sum())
    with pytest.raises(exceptions.EmptyScopeError):
        report.range_summary(profile, max_true_risk=0.0)


def test_format_summary():
    values = dict(mean=0.23, min=0.048, median=0.22, max=0.49)
    assert report.format_summary(values) == '0.23 (0.048, 0.22, 0.49)'


def test_table_rows(profile):
    frame = report.table_rows([profile], ranges=[0.3, 0.0])
    assert list(frame.columns) == [
        'n', 'scope', 'metric', 'count', 'summary', 'mean', 'min', 'median',
        'max', 'sum']
    # The empty range is skipped.
    assert set(frame['scope']) == {'all', 'true_risk<=0.3'}
    assert len(frame) == 2 * len(profile.metrics)

    row = frame.loc[(frame['scope'] == 'all') & (frame['metric'] == 'width')]
    assert row['mean'].iloc[0] == pytest.approx(
        profile.individuals['width'].mean())
    nb_loss = frame.loc[frame['metric'] == 'nb_loss@0.2', 'sum']
    assert nb_loss.notna().all()


def test_emit_plots(profile, tmp_path):
    series = report.report_series(profile, suffix='__n=355')
    first = report.emit_plots(series, str(tmp_path / 'first'))
    second = report.emit_plots(series, str(tmp_path / 'second'))

    assert len(first) == 2 * len(series)
    for one, two in zip(first, second):
        assert os.path.basename(one) == os.path.basename(two)
        with open(one, 'rb') as a, open(two, 'rb') as b:
            assert a.read() == b.read()

    data = pd.read_csv(str(tmp_path / 'first' /
                           'prediction_instability__n=355.csv'))
    assert list(data.columns) == [
        'true_risk', 'lower', 'upper', 'smooth_lower', 'smooth_upper']
    assert len(data) == len(profile)

    data = pd.read_csv(str(tmp_path / 'first' / 'nb_loss__n=355.csv'))
    assert list(data.columns) == ['true_risk', 'value', 'smooth_value']

    with open(str(tmp_path / 'first' / 'nb_loss__n=355.svg')) as handle:
        assert handle.read().lstrip().startswith('<?xml')


def test_emit_plots_empty_series(tmp_path):
    empty = report.PlotSeries(
        kind=report.NB_LOSS, name='empty', x=np.array([]), lower=None,
        upper=None, y=np.array([]), smooth_lower=None, smooth_upper=None,
        smooth_y=np.array([]), thresholds=[0.2])
    with pytest.raises(exceptions.InvalidArgumentError):
        report.emit_plots([empty], str(tmp_path))
    assert os.listdir(str(tmp_path)) == []


def test_writers(tmp_path):
    path = str(tmp_path / 'data.json')
    report.write_json(dict(b=np.float64(1.5), a=np.arange(2), c=np.nan), path)
    with open(path) as handle:
        assert json.load(handle) == dict(a=[0, 1], b=1.5, c=None)

    path = str(tmp_path / 'data.csv')
    report.write_csv(pd.DataFrame(dict(x=[1 / 3, 2.0])), path)
    with open(path, 'rb') as handle:
        assert handle.read() == b'x\n0.3333333333\n2\n'

    target = tmp_path / 'file'
    target.write_text('')
    with pytest.raises(exceptions.OutputError):
        report.ensure_directory(str(target / 'nested'))
    with pytest.raises(exceptions.OutputError):
        report.write_json({}, str(tmp_path / 'missing' / 'data.json'))


def test_lowess_bandwidth_trades_bias():
    rng = np.random.default_rng(4)
    x = np.sort(rng.uniform(-1, 1, 500))
    truth = 4 * x ** 2
    y = truth + rng.normal(scale=0.2, size=500)

    def rmse(bandwidth):
        smoothed = report.lowess(x, y, bandwidth=bandwidth)
        return np.sqrt(np.mean((smoothed - truth) ** 2))

    assert rmse(0.3) < rmse(0.9)


def test_gbsg_subgroups_and_plots(tmp_path):
    table, followup = cohorts.load_gbsg()
    model = cohorts.gbsg_model(table)
    info = fisher.unit_information(model, table, followup)

    profile = precision.precision_profile(
        model, table, n=920, thresholds=[0.2], info=info)
    frame = report.subgroup_summary(profile, 'meno').set_index('level')
    # meno is 0 before and 1 after menopause.
    assert frame.loc['0', 'mape_mean'] == pytest.approx(0.032, abs=0.003)
    assert frame.loc['1', 'mape_mean'] == pytest.approx(0.027, abs=0.003)
    assert frame.loc['0', 'misclass@0.2_mean'] == pytest.approx(
        0.059, abs=0.005)
    assert frame.loc['1', 'misclass@0.2_mean'] == pytest.approx(
        0.030, abs=0.005)

    profile = precision.precision_profile(
        model, table, n=355, thresholds=[0.2], info=info)
    series = report.classification_series(profile, 0.2)
    peak = series.x[np.argmax(series.smooth_y)]
    assert abs(peak - 0.2) <= 0.05
    assert report.emit_plots([series], str(tmp_path))
