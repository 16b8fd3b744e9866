"""
Run configuration
=================

A run is described by one JSON document. The document is validated by the
schemas below; every error is reported at once with its JSON pointer. Any
field can be overridden from the command line with ``--set path=value``
before validation (``--set core_model.c_index=0.75``).

See ``docs/config.md`` for the full layout.
"""

import json
import logging

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import utils
from fairsurv import validators as v
from fairsurv.fields import NUMBER
from fairsurv.fields import Field
from fairsurv.schema import Schema


logger = logging.getLogger(__name__)


def exclusive(values, *names):
    return sum(values.get(name) is not None for name in names) == 1


PREDICTOR_COLUMN = Schema(
    name=Field(v.NotEmpty(), required=True),
    kind=Field(v.In(*consts.COLUMN_KINDS), required=True),
    reference_level=Field(basetype=(str, int, float)),
    levels=Field(
        v.NotEmpty(), v.Each(basetype=(str, int, float)), basetype=list))


@PREDICTOR_COLUMN.check('reference_level')
def reference_is_categorical(values):
    if values['reference_level'] is not None and (
            values['kind'] != consts.CATEGORICAL):
        raise exceptions.FieldException(
            'Only categorical predictors have a reference level.')


GROUP = Schema(
    column=Field(v.NotEmpty(), required=True),
    level=Field(basetype=(str, int, float), required=True))

CSV = Schema(
    path=Field(v.NotEmpty(), required=True),
    predictors=Field(
        v.NotEmpty(), basetype=list, required=True, schema=PREDICTOR_COLUMN,
        many=True),
    time_column=Field(),
    event_column=Field(),
    time_scale_divisor=Field(
        v.Finite(), v.GreaterThan(0), basetype=NUMBER, default=1.0),
    group_columns=Field(v.Each(basetype=str), basetype=list, default=[]))


@CSV.check('time_column')
def time_with_event(values):
    if (values['time_column'] is None) != (values['event_column'] is None):
        raise exceptions.FieldException(
            'time_column and event_column go together.')


DISTRIBUTION = Schema(
    type=Field(v.In(*consts.DISTRIBUTIONS), required=True),
    mean=Field(v.Finite(), basetype=NUMBER),
    sd=Field(v.Finite(), v.GreaterThan(0), basetype=NUMBER),
    log_mean=Field(v.Finite(), basetype=NUMBER),
    log_sd=Field(v.Finite(), v.GreaterThan(0), basetype=NUMBER),
    p=Field(v.AtLeast(0), v.AtMost(1), basetype=NUMBER),
    levels=Field(
        v.NotEmpty(), v.Each(basetype=(str, int, float)), basetype=list),
    probabilities=Field(
        v.NotEmpty(), v.Each(v.AtLeast(0), basetype=NUMBER), basetype=list))

DISTRIBUTION_PARAMETERS = {
    consts.NORMAL: ('sd',),
    consts.LOGNORMAL: ('log_sd',),
    consts.BERNOULLI: ('p',),
    consts.CATEGORICAL: ('levels', 'probabilities'),
}


@DISTRIBUTION.check('')
def distribution_parameters(values):
    missing = [
        name for name in DISTRIBUTION_PARAMETERS[values['type']]
        if values[name] is None]
    if missing:
        raise exceptions.FieldException(
            'A {} distribution needs {}.'.format(
                values['type'], ', '.join(missing)))


SYNTH_PREDICTOR = Schema(
    name=Field(v.NotEmpty(), required=True),
    distribution=Field(basetype=dict, required=True, schema=DISTRIBUTION),
    group=Field(basetype=bool, default=False))

SYNTH = Schema(
    n=Field(v.AtLeast(1), basetype=int, required=True),
    predictors=Field(
        v.NotEmpty(), basetype=list, required=True, schema=SYNTH_PREDICTOR,
        many=True))

DATA = Schema(
    csv=Field(basetype=dict, schema=CSV),
    synth=Field(basetype=dict, schema=SYNTH),
    standardize=Field(v.Each(basetype=str), basetype=list, default=[]))


@DATA.check('')
def one_data_source(values):
    if not exclusive(values, 'csv', 'synth'):
        raise exceptions.FIELD_EXCLUSIVE


CORE_MODEL = Schema(
    alpha=Field(v.Finite(), basetype=NUMBER),
    delta=Field(v.Finite(), basetype=NUMBER),
    beta=Field(basetype=(list, dict)),
    overall_risk=Field(v.Between(0, 1), basetype=NUMBER),
    c_index=Field(v.AtLeast(0.5), v.SmallerThan(1), basetype=NUMBER),
    beta_relative=Field(basetype=(list, dict)),
    equal_standardized_weights=Field(basetype=(list, dict)),
    tolerance_risk=Field(
        v.GreaterThan(0), basetype=NUMBER,
        default=consts.DEFAULT_TOLERANCE_RISK),
    tolerance_c=Field(
        v.GreaterThan(0), basetype=NUMBER, default=consts.DEFAULT_TOLERANCE_C),
    max_iterations=Field(
        v.AtLeast(1), basetype=int, default=consts.DEFAULT_MAX_ITERATIONS),
    censoring_free_c=Field(basetype=bool, default=False),
    simulation_size=Field(v.AtLeast(2), basetype=int))

DIRECT = ('alpha', 'delta', 'beta')
CALIBRATED = ('overall_risk', 'c_index')
WEIGHTS = ('beta_relative', 'equal_standardized_weights')


@CORE_MODEL.check('')
def one_core_model_mode(values):
    direct = [name for name in DIRECT if values[name] is not None]
    calibrated = [
        name for name in CALIBRATED + WEIGHTS if values[name] is not None]

    if direct and calibrated:
        raise exceptions.FieldException(
            'Either alpha/delta/beta or calibration targets, not both.')
    if direct:
        if len(direct) != len(DIRECT):
            raise exceptions.FieldException(
                'A direct core model needs alpha, delta and beta.')
        return

    if not all(values[name] is not None for name in CALIBRATED):
        raise exceptions.FieldException(
            'A core model needs alpha/delta/beta or overall_risk and c_index.')
    if not exclusive(values, *WEIGHTS):
        raise exceptions.FieldException(
            'Exactly one of beta_relative or equal_standardized_weights '
            'should be provided.')


def numeric_weights(name):
    def check(values):
        weights = values[name]
        if weights is None:
            return
        items = weights.values() if isinstance(weights, dict) else weights
        if not items or any(
                isinstance(item, bool) or not isinstance(item, NUMBER)
                for item in items):
            raise exceptions.FieldException(
                'Weights should be a list of numbers or a mapping of '
                'predictor names to numbers.')
    return check


for weights_name in DIRECT[2:] + WEIGHTS:
    CORE_MODEL.check(weights_name)(numeric_weights(weights_name))


CENSORING = Schema(
    variant=Field(
        v.In(*consts.CENSORING_VARIANTS), default=consts.CENSORING_NONE),
    rate=Field(v.GreaterThan(0), basetype=NUMBER),
    no_censor_before=Field(v.AtLeast(0), basetype=NUMBER),
    uniform_until=Field(v.GreaterThan(0), basetype=NUMBER),
    administrative_max=Field(v.GreaterThan(0), basetype=NUMBER))


@CENSORING.check('')
def censoring_parameters(values):
    if values['variant'] == consts.CENSORING_EXPONENTIAL and (
            values['rate'] is None):
        raise exceptions.FieldException('Exponential censoring needs a rate.')
    if values['variant'] == consts.CENSORING_DELAYED_UNIFORM:
        a, b = values['no_censor_before'], values['uniform_until']
        cap = values['administrative_max'] if (
            values['administrative_max'] is not None) else b
        if a is None or b is None or not a < b <= cap:
            raise exceptions.FieldException(
                'Delayed-uniform censoring needs no_censor_before < '
                'uniform_until ≤ administrative_max.')


TARGET = Schema(
    risk=Field(v.Between(0, 1), basetype=NUMBER, required=True),
    max_width=Field(v.Between(0, 1), basetype=NUMBER, required=True))

SCOPE = Schema(
    max_true_risk=Field(v.Between(0, 1), basetype=NUMBER),
    min_true_risk=Field(v.Between(0, 1), basetype=NUMBER),
    group=Field(basetype=dict, schema=GROUP))

PRECISION_TARGETS = Schema(
    bins=Field(
        v.NotEmpty(), basetype=list, required=True, schema=TARGET, many=True),
    scope=Field(basetype=dict, default={}, schema=SCOPE))


@PRECISION_TARGETS.check('bins')
def increasing_risks(values):
    v.StrictlyIncreasing()([item['risk'] for item in values['bins']])


SEED = Schema(
    calibration=Field(
        v.AtLeast(0), basetype=int, default=consts.SEED_CALIBRATION),
    simulation=Field(
        v.AtLeast(0), basetype=int, default=consts.SEED_SIMULATION),
    mape=Field(v.AtLeast(0), basetype=int, default=consts.SEED_MAPE))

REPORT = Schema(
    groups=Field(v.Each(basetype=str), basetype=list, default=[]),
    fairness_factor=Field(
        v.GreaterThan(0), basetype=NUMBER, default=consts.FAIRNESS_FACTOR),
    lowess_bandwidth=Field(
        v.GreaterThan(0), v.AtMost(1), basetype=NUMBER,
        default=consts.LOWESS_BANDWIDTH),
    risk_ranges=Field(
        v.Each(v.Between(0, 1), basetype=NUMBER), basetype=list, default=[]),
    plots=Field(basetype=bool, default=True))

COMPARE = Schema(
    scale=Field(
        v.In(consts.SCALE_RISK, consts.SCALE_LOGLOG),
        default=consts.SCALE_RISK),
    fixed_shape=Field(v.GreaterThan(0), basetype=NUMBER))

RUN = Schema(
    data=Field(basetype=dict, required=True, schema=DATA),
    core_model=Field(basetype=dict, required=True, schema=CORE_MODEL),
    horizon=Field(v.Finite(), v.GreaterThan(0), basetype=NUMBER, required=True),
    censoring=Field(basetype=dict, default={}, schema=CENSORING),
    sample_sizes=Field(
        v.Each(v.AtLeast(1), basetype=int), basetype=list, default=[]),
    precision_targets=Field(basetype=dict, schema=PRECISION_TARGETS),
    thresholds=Field(
        v.Each(v.Between(0, 1), basetype=NUMBER), basetype=list, default=[]),
    level=Field(
        v.Between(0, 1), basetype=NUMBER, default=consts.DEFAULT_LEVEL),
    z_multiplier=Field(v.GreaterThan(0), basetype=NUMBER),
    mape_draws=Field(
        v.AtLeast(1), basetype=int, default=consts.DEFAULT_MAPE_DRAWS),
    seed=Field(basetype=dict, default={}, schema=SEED),
    report=Field(basetype=dict, default={}, schema=REPORT),
    compare=Field(basetype=dict, default={}, schema=COMPARE),
    output=Field(v.NotEmpty(), default='out'))


@RUN.check('')
def something_to_compute(values):
    if not values['sample_sizes'] and values['precision_targets'] is None:
        raise exceptions.FieldException(
            'At least one of sample_sizes or precision_targets is required.')


@RUN.check('report')
def known_groups(values):
    data = values['data']
    if data['csv'] is not None:
        available = data['csv']['group_columns']
    else:
        available = [
            item['name'] for item in data['synth']['predictors']
            if item['group']]
    unknown = [name for name in values['report']['groups']
               if name not in available]
    if unknown:
        raise exceptions.FieldException(
            'Unknown group columns: {}.'.format(', '.join(unknown)))


def validate(document, schema=RUN):
    """Validate a run config.

    Return:
        Response: The cleaned config (defaults filled) on success.
    """

    return schema.validate(document)


def apply_overrides(document, overrides):
    for expression in overrides or []:
        try:
            path, value = utils.parse_override(expression)
            utils.set_path(document, path, value)
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise exceptions.ConfigError(
                'Invalid override "{}": {}'.format(expression, e),
                errors={'/': str(e)})
    return document


def read_document(path):
    try:
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise exceptions.ConfigError(
            'Config file "{}" does not exist.'.format(path),
            errors={'/': 'File not found.'})
    except IsADirectoryError:
        raise exceptions.ConfigError(
            'Config path "{}" is a directory.'.format(path),
            errors={'/': 'Not a file.'})
    except UnicodeDecodeError as e:
        raise exceptions.ConfigError(
            'Config file "{}" is not UTF-8: {}'.format(path, e),
            errors={'/': str(e)})
    except json.JSONDecodeError as e:
        raise exceptions.ConfigError(
            'Config file "{}" is not valid JSON: {}'.format(path, e),
            errors={'/': str(e)})


def load_config(path, overrides=None):
    """Read, override and validate a run config.

    Args:
        path (str): JSON file.
        overrides (list): ``path=value`` expressions.
    Return:
        dict: The cleaned config.
    Exception:
        ConfigError: With every validation error keyed by JSON pointer.
    """

    document = apply_overrides(read_document(path), overrides)
    resp = validate(document)
    if not resp:
        errors = resp.errors.get('message')
        raise exceptions.ConfigError(
            'The config "{}" has {} error(s).'.format(path, len(errors)),
            errors=errors)

    logger.debug('Loaded config %s.', path)
    return resp.message


def config_hash(config):
    return utils.sha256(config)
