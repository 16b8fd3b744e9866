import copy
import os

import pytest

from fairsurv import config
from fairsurv import consts
from fairsurv import exceptions
from tests.fixtures import configs


CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'configs')


def errors_of(document):
    resp = config.validate(document)
    assert not resp
    return resp.errors.get('message')


def test_valid_config():
    resp = config.validate(configs.config())
    assert resp

    settings = resp.message
    assert settings['level'] == consts.DEFAULT_LEVEL
    assert settings['seed'] == dict(
        calibration=consts.SEED_CALIBRATION,
        simulation=consts.SEED_SIMULATION, mape=consts.SEED_MAPE)
    assert settings['core_model']['tolerance_c'] == consts.DEFAULT_TOLERANCE_C
    assert settings['core_model']['alpha'] is None
    assert settings['censoring']['administrative_max'] is None
    assert settings['report']['fairness_factor'] == consts.FAIRNESS_FACTOR
    assert settings['report']['plots'] is True
    assert settings['compare']['scale'] == consts.SCALE_RISK
    assert settings['precision_targets']['bins'][0] == dict(
        risk=0.3, max_width=0.2)
    assert settings['data']['synth']['predictors'][3]['group'] is True
    assert settings['output'] == 'out'


def test_valid_direct_and_csv_configs():
    assert config.validate(configs.config(configs.DIRECT_CONFIG))
    resp = config.validate(configs.config(configs.CSV_CONFIG))
    assert resp
    assert resp.message['data']['csv']['time_scale_divisor'] == 1.0
    assert resp.message['censoring']['variant'] == consts.CENSORING_NONE


def test_every_error_is_reported():
    document = configs.config(
        horizon=-1, level=1.5, thresholds=[0.2, 2], mape_draws=0,
        unknown=True)
    document['core_model']['c_index'] = 1.2
    document['data']['synth']['n'] = 0

    errors = errors_of(document)
    assert set(errors) == {
        '/horizon', '/level', '/thresholds', '/mape_draws', '/unknown',
        '/core_model/c_index', '/data/synth/n'}
    assert errors['/unknown'] == exceptions.FIELD_UNKNOWN.args[0]
    assert errors['/thresholds'].startswith('Item 1')


def test_required_fields():
    errors = errors_of(dict())
    assert set(errors) == {'/data', '/core_model', '/horizon'}
    assert errors['/horizon'] == exceptions.FIELD_REQUIRED.args[0]


def test_nested_list_pointers():
    document = configs.config()
    document['data']['synth']['predictors'][1]['distribution'] = dict(
        type='lognormal', log_mean=3.2)
    document['precision_targets']['bins'].append(dict(risk=0.1))

    errors = errors_of(document)
    assert set(errors) == {
        '/data/synth/predictors/1/distribution',
        '/precision_targets/bins/1/max_width'}
    assert 'log_sd' in errors['/data/synth/predictors/1/distribution']


def test_exclusive_data_source():
    document = configs.config()
    document['data']['csv'] = copy.deepcopy(configs.CSV_CONFIG['data']['csv'])
    assert errors_of(document) == {
        '/data': exceptions.FIELD_EXCLUSIVE.args[0]}

    document = configs.config(data=dict(standardize=[]))
    assert set(errors_of(document)) == {'/data'}


def test_core_model_modes():
    for core_model in (
            dict(alpha=-2.0, delta=0.2),
            dict(alpha=-2.0, delta=0.2, beta=[1], overall_risk=0.39),
            dict(overall_risk=0.39, beta_relative=[1]),
            dict(overall_risk=0.39, c_index=0.7),
            dict(overall_risk=0.39, c_index=0.7, beta_relative=[1],
                 equal_standardized_weights=[1])):
        errors = errors_of(configs.config(core_model=core_model))
        assert set(errors) == {'/core_model'}

    errors = errors_of(configs.config(core_model=dict(
        overall_risk=0.39, c_index=0.7, beta_relative=[1, 'a'])))
    assert set(errors) == {'/core_model/beta_relative'}

    errors = errors_of(configs.config(core_model=dict(
        alpha=-2, delta=0.2, beta=dict(age=True))))
    assert set(errors) == {'/core_model/beta'}


def test_censoring_checks():
    errors = errors_of(configs.config(censoring=dict(variant='exponential')))
    assert set(errors) == {'/censoring'}

    errors = errors_of(configs.config(censoring=dict(
        variant='delayed_uniform', no_censor_before=5, uniform_until=3)))
    assert set(errors) == {'/censoring'}

    errors = errors_of(configs.config(censoring=dict(variant='weekly')))
    assert set(errors) == {'/censoring/variant'}

    assert config.validate(configs.config(
        censoring=dict(variant='exponential', rate=0.1)))


def test_precision_targets_checks():
    errors = errors_of(configs.config(precision_targets=dict(bins=[
        dict(risk=0.3, max_width=0.2), dict(risk=0.1, max_width=0.1)])))
    assert set(errors) == {'/precision_targets/bins'}

    errors = errors_of(configs.config(precision_targets=dict(
        bins=[dict(risk=0.3, max_width=1.2)])))
    assert set(errors) == {'/precision_targets/bins/0/max_width'}

    errors = errors_of(configs.config(precision_targets=dict(
        bins=[dict(risk=0.3, max_width=0.2)],
        scope=dict(group=dict(level=1)))))
    assert set(errors) == {'/precision_targets/scope/group/column'}


def test_something_to_compute():
    document = configs.config(sample_sizes=[])
    del document['precision_targets']
    assert set(errors_of(document)) == {'/'}


def test_known_groups():
    errors = errors_of(configs.config(report=dict(groups=['grade'])))
    assert set(errors) == {'/report'}
    assert 'grade' in errors['/report']

    errors = errors_of(configs.config(
        configs.CSV_CONFIG, report=dict(groups=['x'])))
    assert set(errors) == {'/report'}


def test_predictor_columns():
    document = configs.config(configs.CSV_CONFIG)
    document['data']['csv']['predictors'][0]['reference_level'] = 1
    assert set(errors_of(document)) == {
        '/data/csv/predictors/0/reference_level'}

    document = configs.config(configs.CSV_CONFIG)
    del document['data']['csv']['event_column']
    assert set(errors_of(document)) == {'/data/csv/time_column'}


def test_apply_overrides():
    document = configs.config()
    config.apply_overrides(document, [
        'core_model.c_index=0.75', 'thresholds.1=0.1', 'seed.mape=7',
        'output=results'])
    assert document['core_model']['c_index'] == 0.75
    assert document['thresholds'] == [0.2, 0.1]
    assert document['seed'] == dict(mape=7)
    assert document['output'] == 'results'

    with pytest.raises(exceptions.ConfigError):
        config.apply_overrides(document, ['horizon'])
    with pytest.raises(exceptions.ConfigError):
        config.apply_overrides(document, ['thresholds.5=0.1'])


def test_load_config(tmp_path):
    path = configs.write(tmp_path, configs.config())
    settings = config.load_config(path, ['horizon=3'])
    assert settings['horizon'] == 3

    with pytest.raises(exceptions.ConfigError) as error:
        config.load_config(path, ['horizon=-3', 'level=2'])
    assert set(error.value.errors) == {'/horizon', '/level'}
    assert error.value.exit_code == consts.EXIT_CONFIG


@pytest.mark.parametrize('name', [
    'gbsg_direct.json', 'gbsg_calibrated.json',
    'gbsg_alternative_weights.json', 'synthetic.json'])
def test_shipped_configs_are_valid(name):
    path = os.path.join(CONFIG_DIR, name)
    settings = config.load_config(path)
    assert settings['horizon'] == 5
    assert settings['report']['groups'] == ['meno']


def test_load_config_unreadable(tmp_path):
    with pytest.raises(exceptions.ConfigError) as error:
        config.load_config(str(tmp_path / 'missing.json'))
    assert '/' in error.value.errors

    path = tmp_path / 'broken.json'
    path.write_text('{"horizon": ')
    with pytest.raises(exceptions.ConfigError):
        config.load_config(str(path))

    with pytest.raises(exceptions.ConfigError):
        config.load_config(str(tmp_path))

    path = tmp_path / 'latin1.json'
    path.write_bytes(b'{"output": "\xe9"}')
    with pytest.raises(exceptions.ConfigError):
        config.load_config(str(path))


def test_config_hash():
    settings = config.validate(configs.config()).message
    same = config.validate(configs.config()).message
    assert config.config_hash(settings) == config.config_hash(same)

    other = config.validate(configs.config(horizon=4)).message
    assert config.config_hash(settings) != config.config_hash(other)
