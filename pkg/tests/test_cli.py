import json
import os

import numpy as np
import pandas as pd
import pytest

from fairsurv import cli
from fairsurv import config
from fairsurv import consts
from fairsurv import exceptions
from fairsurv import ingest
from fairsurv import synth
from fairsurv.core_model import CoreModel
from tests.fixtures import cohorts
from tests.fixtures import configs


@pytest.fixture
def csv_config(tmp_path):
    table = cohorts.two_predictor_table(n=300, seed=8)
    model = CoreModel(-2.0, 1.0, [0.5, -0.7], horizon=5)
    followup = synth.simulate_followup(
        model, table,
        synth.CensoringSpec(consts.CENSORING_EXPONENTIAL, rate=0.05), seed=8)
    path = str(tmp_path / 'cohort.csv')
    ingest.write_cohort(table, followup, path)

    document = configs.config(configs.CSV_CONFIG)
    document['data']['csv']['path'] = path
    return configs.write(tmp_path, document)


def read(path):
    with open(path, 'rb') as handle:
        return handle.read()


def settings_of(document):
    return config.validate(document).message


def test_run(tmp_path):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    out = str(tmp_path / 'out')

    assert cli.main(['run', path, '--out', out]) == consts.EXIT_OK

    for name in (
            'individuals.csv', 'summary.csv', 'subgroups.csv',
            'sample_size.csv', 'report.json', 'manifest.json'):
        assert os.path.exists(os.path.join(out, name))
    assert os.path.exists(os.path.join(
        out, 'plots', 'prediction_instability__n=355.svg'))
    assert os.path.exists(os.path.join(
        out, 'plots', 'classification_instability__n=920__meno=1.csv'))

    individuals = pd.read_csv(os.path.join(out, 'individuals.csv'))
    assert len(individuals) == 2 * 400
    assert list(individuals.columns[:3]) == ['id', 'n', 'meno']
    assert set(individuals['n']) == {355, 920}

    with open(os.path.join(out, 'report.json')) as handle:
        document = json.load(handle)
    assert document['followup_source'] == 'simulated'
    assert [profile['n'] for profile in document['profiles']] == [355, 920]
    assert document['sample_size']['n_star'] >= 1
    assert document['core_model']['alpha'] == -2.2
    assert '0.3' in document['profiles'][0]['ranges']

    with open(os.path.join(out, 'manifest.json')) as handle:
        manifest = json.load(handle)
    assert manifest['seeds']['simulation'] == consts.SEED_SIMULATION
    assert manifest['counts']['individuals'] == 400
    assert manifest['counts']['parameters'] == 7
    assert 'report.json' in manifest['files']
    assert 'plots/nb_loss__n=355.svg' in manifest['files']
    for name in ('prediction_instability', 'classification_instability'):
        for extension in ('csv', 'svg'):
            relative = 'plots/{}.{}'.format(name, extension)
            assert relative in manifest['files']
            assert os.path.exists(os.path.join(out, relative))
    assert read(os.path.join(out, 'plots', 'prediction_instability.csv')) \
        == read(os.path.join(
            out, 'plots', 'prediction_instability__n=355.csv'))
    assert manifest['config_sha256'] == config.config_hash(
        manifest['config'])


def test_run_is_reproducible(tmp_path):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    first = str(tmp_path / 'first')
    second = str(tmp_path / 'second')
    assert cli.main(['run', path, '--out', first]) == consts.EXIT_OK
    assert cli.main(['run', path, '--out', second]) == consts.EXIT_OK

    for directory, _, files in os.walk(first):
        for name in files:
            relative = os.path.relpath(os.path.join(directory, name), first)
            assert read(os.path.join(first, relative)) == read(
                os.path.join(second, relative)), relative


def test_run_with_overrides(tmp_path):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    out = str(tmp_path / 'out')
    assert cli.main([
        'run', path, '--out', out, '--set', 'sample_sizes=[100]',
        '--set', 'report.plots=false', '--set', 'precision_targets=null',
    ]) == consts.EXIT_OK

    assert not os.path.exists(os.path.join(out, 'plots'))
    assert not os.path.exists(os.path.join(out, 'sample_size.csv'))
    summary = pd.read_csv(os.path.join(out, 'summary.csv'))
    assert set(summary['n']) == {100}


def test_run_with_observed_followup(tmp_path, csv_config):
    out = str(tmp_path / 'out')
    assert cli.main(['run', csv_config, '--out', out]) == consts.EXIT_OK
    with open(os.path.join(out, 'report.json')) as handle:
        document = json.load(handle)
    assert document['followup_source'] == 'observed'
    assert document['followup']['n'] == 300


def test_calibrate(tmp_path, capsys):
    path = configs.write(tmp_path, configs.config())
    out = str(tmp_path / 'out')
    assert cli.main(['calibrate', path, '--out', out]) == consts.EXIT_OK

    with open(os.path.join(out, 'core_model.json')) as handle:
        model = json.load(handle)
    assert abs(model['calibration']['c_index'] - 0.70) <= 0.005
    assert model['calibration']['converged'] is True
    assert json.loads(capsys.readouterr().out) == model


def test_synth_export(tmp_path):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    target = str(tmp_path / 'cohort.csv')
    assert cli.main(['synth', 'export', path, target]) == consts.EXIT_OK

    frame = pd.read_csv(target)
    assert len(frame) == 400
    assert {'age', 'grade2', 'grade3', 'meno', 'time', 'event'} <= set(
        frame.columns)
    assert frame['time'].max() <= 7.28

    alias = str(tmp_path / 'alias.csv')
    assert cli.main(['synth-export', path, alias]) == consts.EXIT_OK
    assert read(alias) == read(target)


def test_fisher_export(tmp_path, capsys):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    target = str(tmp_path / 'info.json')
    assert cli.main(['fisher', 'export', path, target]) == consts.EXIT_OK

    with open(target) as handle:
        data = json.load(handle)
    matrix = np.array(data['unit_information']['matrix'])
    assert matrix.shape == (7, 7)
    np.testing.assert_allclose(matrix, matrix.T)
    assert data['followup_source'] == 'simulated'

    capsys.readouterr()
    assert cli.main(['export-info', path]) == consts.EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(
        printed['unit_information']['matrix'], matrix)


def test_compare(tmp_path, csv_config):
    out = str(tmp_path / 'out')
    assert cli.main(['compare', csv_config, '--out', out]) == consts.EXIT_OK

    frame = pd.read_csv(os.path.join(out, 'compare.csv'))
    assert len(frame) == 300
    assert {'width_exp', 'width_wei', 'unreliable', 'clamped'} <= set(
        frame.columns)
    with open(os.path.join(out, 'compare.json')) as handle:
        document = json.load(handle)
    assert document['scale'] == consts.SCALE_RISK
    assert document['aggregates']['count'] == 300


def test_compare_needs_observed_followup(tmp_path):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    assert cli.main([
        'compare', path, '--out', str(tmp_path / 'out')]) == consts.EXIT_CONFIG


def test_size_grid(tmp_path, capsys):
    path = configs.write(tmp_path, configs.config(configs.DIRECT_CONFIG))
    out = str(tmp_path / 'out')
    assert cli.main([
        'size-grid', path, '--out', out, '--sizes', '800', '100', '400',
    ]) == consts.EXIT_OK

    frame = pd.read_csv(os.path.join(out, 'size_grid.csv'))
    assert list(frame['n']) == [100, 400, 800]
    assert frame['mean_width'].is_monotonic_decreasing
    assert 'mean_misclass@0.2' in frame.columns
    np.testing.assert_allclose(
        frame['mean_se_mu'] * np.sqrt(frame['n']),
        frame['mean_se_mu'].iloc[0] * 10)


def test_size_grid_without_sizes(tmp_path):
    pipeline = cli.Pipeline(settings_of(
        configs.config(configs.DIRECT_CONFIG, sample_sizes=[])))
    with pytest.raises(exceptions.ConfigError):
        cli.size_grid(pipeline, [])


def test_resolve_weights():
    table = cohorts.two_predictor_table(n=5)
    np.testing.assert_array_equal(
        cli.resolve_weights([1, 2], table, '/beta'), [1.0, 2.0])
    np.testing.assert_array_equal(
        cli.resolve_weights(dict(flag=3), table, '/beta'), [0.0, 3.0])

    with pytest.raises(exceptions.ConfigError) as error:
        cli.resolve_weights([1], table, '/beta')
    assert '/beta' in error.value.errors
    with pytest.raises(exceptions.ConfigError):
        cli.resolve_weights(dict(age=1), table, '/beta')


def test_pipeline_equal_standardized_weights():
    document = configs.config(core_model=dict(
        overall_risk=0.39, c_index=0.65,
        equal_standardized_weights=dict(
            age=-1, size=1, nodes=1, meno=1, grade2=1, grade3=1)))
    pipeline = cli.Pipeline(settings_of(document))
    np.testing.assert_array_equal(
        pipeline.model.beta, [-1, 1, 1, 1, 1, 1])
    assert abs(pipeline.model.calibration.c_index - 0.65) <= 0.005


def test_pipeline_stages_are_computed_once():
    pipeline = cli.Pipeline(settings_of(configs.config(configs.DIRECT_CONFIG)))
    assert pipeline.model is pipeline.model
    assert pipeline.followup is pipeline.followup
    assert pipeline.info is pipeline.info
    assert pipeline.followup_source == 'simulated'
    assert pipeline.table.n_individuals == 400


def test_exit_codes(tmp_path):
    invalid = configs.write(
        tmp_path, configs.config(horizon=-1), name='invalid.json')
    assert cli.main(['run', invalid]) == consts.EXIT_CONFIG
    assert cli.main(['run', str(tmp_path / 'missing.json')]) == \
        consts.EXIT_CONFIG

    document = configs.config(configs.CSV_CONFIG)
    document['data']['csv']['path'] = str(tmp_path / 'missing.csv')
    missing_data = configs.write(tmp_path, document, name='data.json')
    assert cli.main(['run', missing_data]) == consts.EXIT_DATA

    binary = tmp_path / 'binary.csv'
    binary.write_bytes(b'\xff\xfe\x00x\x00,\x00')
    document['data']['csv']['path'] = str(binary)
    binary_data = configs.write(tmp_path, document, name='binary.json')
    assert cli.main(['run', binary_data]) == consts.EXIT_DATA
    assert cli.main(['run', str(tmp_path)]) == consts.EXIT_CONFIG

    empty_scope = configs.write(tmp_path, configs.config(
        configs.DIRECT_CONFIG, precision_targets=dict(
            bins=[dict(risk=0.3, max_width=0.2)],
            scope=dict(max_true_risk=1e-9))), name='scope.json')
    assert cli.main([
        'run', empty_scope, '--out', str(tmp_path / 'out'),
    ]) == consts.EXIT_INFEASIBLE


def test_parser():
    parser = cli.build_parser()
    args = parser.parse_args(['-v', 'run', 'config.json', '--set', 'a=1'])
    assert args.verbose and args.overrides == ['a=1']
    assert args.handler is cli.command_run

    args = parser.parse_args(['fisher', 'export', 'config.json'])
    assert args.target is None
    assert args.handler is cli.command_fisher_export

    with pytest.raises(SystemExit):
        parser.parse_args(['synth', 'export', 'config.json'])
    with pytest.raises(SystemExit):
        parser.parse_args([])
